mod common;

use std::collections::BTreeSet;

use eqsym::algebra::{compose, invert_permutation, SemigroupTable};
use eqsym::conv::{
    classical_group_conv, conv_operator, equivariant_operator_basis, group_like_conv,
    integral_operator, kernel_invariance_iff_equivariance, symmetry_enumeration, ConvKernel,
    GSpace, TransitionKernel,
};
use eqsym::linalg::DEFAULT_TOL;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_perm(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

fn power(p: &[usize], k: usize) -> Vec<usize> {
    (0..k).fold((0..p.len()).collect(), |acc, _| compose(p, &acc))
}

fn order_of(p: &[usize]) -> usize {
    let id: Vec<usize> = (0..p.len()).collect();
    (1..).find(|&k| power(p, k) == id).unwrap()
}

/// `copies` free orbits of `t` acting by left multiplication.
fn free_space(t: &SemigroupTable, copies: usize) -> GSpace {
    let n = t.order();
    let action = (0..n)
        .map(|g| {
            (0..copies * n)
                .map(|x| (x / n) * n + t.mul(g, x % n))
                .collect()
        })
        .collect();
    GSpace::new(t.clone(), action, None).unwrap()
}

fn tables() -> Vec<SemigroupTable> {
    vec![
        SemigroupTable::cyclic(2),
        SemigroupTable::cyclic(3),
        SemigroupTable::cyclic(4),
        common::s3().0,
    ]
}

/// Random kernel, averaged over the cyclic group of `(tx, ty)` when `invariant`.
fn random_kernel(
    rng: &mut ChaCha8Rng,
    tx: &[usize],
    ty: &[usize],
    invariant: bool,
) -> DMatrix<f64> {
    let (nx, ny) = (tx.len(), ty.len());
    let k = DMatrix::from_fn(ny, nx, |_, _| rng.random_range(-1.0..1.0));
    if !invariant {
        return k;
    }
    let m = order_of(tx) * order_of(ty);
    let mut avg = DMatrix::zeros(ny, nx);
    for j in 0..m {
        let (px, py) = (power(tx, j), power(ty, j));
        // kappa[ty^j y][tx^j x] = kappa[y][x]
        for y in 0..ny {
            for x in 0..nx {
                avg[(py[y], px[x])] += k[(y, x)] / m as f64;
            }
        }
    }
    avg
}

/// Kernel invariance and operator equivariance agree on 200 draws.
#[test]
fn kernel_invariance_agrees_with_equivariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(46);
    let mut seen = BTreeSet::new();
    for draw in 0..200 {
        let (nx, ny) = (rng.random_range(1..=6), rng.random_range(1..=6));
        let (tx, ty) = (random_perm(&mut rng, nx), random_perm(&mut rng, ny));
        let invariant = draw % 2 == 0;
        let kappa = random_kernel(&mut rng, &tx, &ty, invariant);
        let r = kernel_invariance_iff_equivariance(&TransitionKernel { kappa }, &tx, &ty, 1e-12)
            .unwrap();
        assert_eq!(r.kernel_invariant, r.operator_equivariant);
        if invariant {
            assert!(r.kernel_invariant);
        }
        seen.insert(r.kernel_invariant);
    }
    assert_eq!(seen.len(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Equivariant integral operators have invariant kernel functions.
    #[test]
    fn integral_operator_equivariance_gives_kernel_invariance(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (nx, ny) = (rng.random_range(1..=6), rng.random_range(1..=6));
        let (tx, ty) = (random_perm(&mut rng, nx), random_perm(&mut rng, ny));
        // mu constant on tx cycles
        let cycle_weight: Vec<f64> = (0..nx).map(|_| rng.random_range(0.1..2.0)).collect();
        let mut mu = vec![0.0; nx];
        for x in 0..nx {
            let orbit_min = (0..order_of(&tx)).map(|j| power(&tx, j)[x]).min().unwrap();
            mu[x] = cycle_weight[orbit_min];
        }
        let kfun = random_kernel(&mut rng, &tx, &ty, seed % 3 != 0);
        let l = integral_operator(&kfun, &mu).unwrap();
        let kappa = l.map(|z| z.re);
        let r = kernel_invariance_iff_equivariance(&TransitionKernel { kappa }, &tx, &ty, 1e-12).unwrap();
        if r.operator_equivariant {
            let tx_inv = invert_permutation(&tx);
            for y in 0..ny {
                for x in 0..nx {
                    // k(tX⁻¹ x, y) = k(x, tY y), kfun indexed [y][x]
                    prop_assert!((kfun[(y, tx_inv[x])] - kfun[(ty[y], x)]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn conv_operators_are_equivariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ts = tables();
        let t = &ts[rng.random_range(0..ts.len())];
        let (cx, cy) = (rng.random_range(1..=2), rng.random_range(1..=2));
        let (x, y) = (free_space(t, cx), free_space(t, cy));
        let ell = ConvKernel::new(
            (0..t.order() * cx * cy).map(|_| rng.random_range(-1.0..1.0)).collect(),
            t.order(), cx, cy,
        ).unwrap();
        let l = conv_operator(&ell, &x, &y).unwrap();
        let basis = equivariant_operator_basis(&x, &y, DEFAULT_TOL).unwrap();
        prop_assert!(basis.residual(&l) < 1e-9);
    }

    #[test]
    fn group_like_matches_classical_form(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ts = tables();
        let t = &ts[rng.random_range(0..ts.len())];
        let ell: Vec<f64> = (0..t.order()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f: Vec<f64> = (0..t.order()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = group_like_conv(&ell, &f, t, None).unwrap();
        let b = classical_group_conv(&ell, &f, t).unwrap();
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((u - v).abs() < 1e-15);
        }
    }
}

#[test]
fn survivors_form_a_group_containing_the_image() {
    let z2 = SemigroupTable::cyclic(2);
    let cases = vec![
        (free_space(&z2, 1), free_space(&z2, 1)),
        (free_space(&z2, 2), free_space(&z2, 1)),
        (
            free_space(&SemigroupTable::cyclic(3), 1),
            free_space(&SemigroupTable::cyclic(3), 2),
        ),
        (
            free_space(&SemigroupTable::cyclic(4), 1),
            free_space(&SemigroupTable::cyclic(4), 1),
        ),
    ];
    for (x, y) in cases {
        let r = symmetry_enumeration(&x, &y, DEFAULT_TOL, 11).unwrap();
        let set: BTreeSet<(Vec<usize>, Vec<usize>)> = r.survivors.iter().cloned().collect();
        for pair in &r.group_image {
            assert!(set.contains(pair));
        }
        for (ax, ay) in &set {
            for (bx, by) in &set {
                assert!(set.contains(&(compose(ax, bx), compose(ay, by))));
            }
        }
    }
}
