#![allow(dead_code)]

use eqsym::algebra::{close_generators, GeneratorSet, SemigroupTable};
use eqsym::linalg::{c, identity, permutation_matrix, Mat, C64};
use eqsym::rep::{CoupledRep, Rep};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const TOL: f64 = 1e-9;

/// S3 closed from a transposition and a 3-cycle, with its permutations.
pub fn s3() -> (SemigroupTable, Vec<Vec<usize>>) {
    let (t, real) = close_generators(&GeneratorSet::permutations(vec![
        vec![1, 0, 2],
        vec![1, 2, 0],
    ]))
    .unwrap();
    let perms = real.permutations().unwrap().to_vec();
    (t, perms)
}

pub fn parity(p: &[usize]) -> usize {
    let mut inv = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inv += 1;
            }
        }
    }
    inv % 2
}

pub fn perm_rep(t: &SemigroupTable, perms: &[Vec<usize>]) -> Rep {
    Rep::new(
        t.clone(),
        perms.iter().map(|p| permutation_matrix(p)).collect(),
        TOL,
    )
    .unwrap()
}

pub fn sign_rep(t: &SemigroupTable, perms: &[Vec<usize>]) -> Rep {
    let images = perms
        .iter()
        .map(|p| identity(1) * c(if parity(p) == 1 { -1.0 } else { 1.0 }))
        .collect();
    Rep::new(t.clone(), images, TOL).unwrap()
}

/// Character `g ↦ ω^{kg}` of the cyclic table of order `n`.
pub fn character(n: usize, k: usize) -> Rep {
    let t = SemigroupTable::cyclic(n);
    let images = (0..n)
        .map(|g| {
            identity(1) * C64::from_polar(1.0, std::f64::consts::TAU * (k * g) as f64 / n as f64)
        })
        .collect();
    Rep::new(t, images, TOL).unwrap()
}

pub fn random_mat(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

pub fn random_real(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| c(rng.random_range(-1.0..1.0)))
}

/// `I + 0.3 R`, comfortably invertible.
pub fn random_invertible(rng: &mut ChaCha8Rng, d: usize) -> Mat {
    identity(d) + random_mat(rng, d, d) * c(0.3 / (d as f64).sqrt())
}

#[derive(Debug, Clone, Copy)]
pub enum Group {
    C2,
    C3,
    C4,
    S3,
}

pub const GROUPS: [Group; 4] = [Group::C2, Group::C3, Group::C4, Group::S3];

/// Irreducible building blocks of a group, in a fixed order.
pub fn building_blocks(g: Group) -> Vec<Rep> {
    match g {
        Group::C2 => (0..2).map(|k| character(2, k)).collect(),
        Group::C3 => (0..3).map(|k| character(3, k)).collect(),
        Group::C4 => (0..4).map(|k| character(4, k)).collect(),
        Group::S3 => {
            let (t, perms) = s3();
            // the permutation rep contributes trivial + standard
            vec![
                Rep::trivial(&t, 1),
                sign_rep(&t, &perms),
                perm_rep(&t, &perms),
            ]
        }
    }
}

/// Random direct sum of building blocks (dimension between 1 and
/// `max_dim`), conjugated by a random invertible matrix.
pub fn random_rep(rng: &mut ChaCha8Rng, g: Group, max_dim: usize) -> Rep {
    let blocks = building_blocks(g);
    let mut rep: Option<Rep> = None;
    let target = rng.random_range(1..=max_dim);
    loop {
        let b = &blocks[rng.random_range(0..blocks.len())];
        let dim = rep.as_ref().map_or(0, Rep::dim);
        if dim + b.dim() > max_dim {
            if dim > 0 {
                break;
            }
            continue;
        }
        rep = Some(match rep {
            None => b.clone(),
            Some(r) => r.direct_sum(b).unwrap(),
        });
        if dim + b.dim() >= target {
            break;
        }
    }
    let rep = rep.unwrap();
    let p = random_invertible(rng, rep.dim());
    rep.conjugate(&p).unwrap()
}

pub fn random_coupled(rng: &mut ChaCha8Rng, g: Group, max_dim: usize) -> CoupledRep {
    let u = random_rep(rng, g, max_dim);
    let v = random_rep(rng, g, max_dim);
    CoupledRep::new(u, v).unwrap()
}
