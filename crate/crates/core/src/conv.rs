//! Kernel operators on finite measure spaces, equivariant operators between
//! signal spaces, group and semigroup convolutions, and exhaustive search
//! for the symmetries of an equivariant operator space.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::algebra::{classify, compose, invert_permutation, is_permutation, SemigroupTable};
use crate::error::{Error, Result};
use crate::linalg::{c, frobenius, max_abs, null_vectors, zeros, Mat, MatSubspace};

/// Largest `|X|!` (and `|Y|!`) the symmetry search will enumerate.
pub const SEARCH_CAP: usize = 40_320;

/// Tolerance for exact comparisons of measure weights.
const MEASURE_EPS: f64 = 1e-12;

/// Finite set `X` with a left action of a finite semigroup and positive
/// point weights.
#[derive(Debug, Clone)]
pub struct GSpace {
    table: SemigroupTable,
    action: Vec<Vec<usize>>,
    orbits: Vec<Vec<usize>>,
    orbit_of: Vec<usize>,
    mu: Vec<f64>,
}

impl GSpace {
    /// `action[g]` is the permutation of `X` by which `g` acts, with
    /// `action[gh] = action[g] ∘ action[h]`. `mu` defaults to `1/|G|` on every
    /// point.
    pub fn new(
        table: SemigroupTable,
        action: Vec<Vec<usize>>,
        mu: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = table.order();
        if action.len() != n {
            return Err(Error::InvalidInput(format!(
                "{} action maps for a table of order {n}",
                action.len()
            )));
        }
        let size = action[0].len();
        if action.iter().any(|p| p.len() != size || !is_permutation(p)) {
            return Err(Error::InvalidInput(
                "action maps must be permutations of X".into(),
            ));
        }
        for g in 0..n {
            for h in 0..n {
                if action[table.mul(g, h)] != compose(&action[g], &action[h]) {
                    return Err(Error::InvalidInput(format!(
                        "action is not a homomorphism at ({g}, {h})"
                    )));
                }
            }
        }
        let mu = mu.unwrap_or_else(|| vec![1.0 / n as f64; size]);
        if mu.len() != size || mu.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput(
                "mu must be finite nonnegative weights on X".into(),
            ));
        }
        let mut orbit_of = vec![usize::MAX; size];
        let mut orbits = Vec::new();
        for x in 0..size {
            if orbit_of[x] != usize::MAX {
                continue;
            }
            let id = orbits.len();
            let mut orbit = vec![x];
            orbit_of[x] = id;
            let mut k = 0;
            while k < orbit.len() {
                let y = orbit[k];
                for p in &action {
                    let z = p[y];
                    if orbit_of[z] == usize::MAX {
                        orbit_of[z] = id;
                        orbit.push(z);
                    }
                }
                k += 1;
            }
            orbit.sort_unstable();
            orbits.push(orbit);
        }
        Ok(GSpace {
            table,
            action,
            orbits,
            orbit_of,
            mu,
        })
    }

    /// The table acting on its own elements by left multiplication.
    pub fn regular(table: &SemigroupTable) -> Self {
        let action = (0..table.order())
            .map(|g| table.table()[g].clone())
            .collect();
        GSpace::new(table.clone(), action, None).expect("left multiplication is an action")
    }

    pub fn size(&self) -> usize {
        self.mu.len()
    }

    pub fn table(&self) -> &SemigroupTable {
        &self.table
    }

    pub fn action(&self) -> &[Vec<usize>] {
        &self.action
    }

    pub fn orbits(&self) -> &[Vec<usize>] {
        &self.orbits
    }

    pub fn orbit_of(&self, x: usize) -> usize {
        self.orbit_of[x]
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// `μ_{X/G}(o) = Σ_{x ∈ o} μ(x)`.
    pub fn orbit_mass(&self, o: usize) -> f64 {
        self.orbits[o].iter().map(|&x| self.mu[x]).sum()
    }

    /// Whether `t` pushes `mu` forward to itself.
    pub fn preserves_mu(&self, t: &[usize]) -> bool {
        (0..self.size()).all(|x| (self.mu[t[x]] - self.mu[x]).abs() <= MEASURE_EPS)
    }

    pub fn is_transitive(&self) -> bool {
        self.orbits.len() == 1
    }

    /// Size of the stabilizer of the smallest point of each orbit.
    pub fn stabilizer_sizes(&self) -> Vec<usize> {
        self.orbits
            .iter()
            .map(|o| self.action.iter().filter(|p| p[o[0]] == o[0]).count())
            .collect()
    }

    fn require_free(&self) -> Result<()> {
        for (orbit, &stabilizer) in self.stabilizer_sizes().iter().enumerate() {
            if stabilizer != 1 || self.orbits[orbit].len() != self.table.order() {
                return Err(Error::NonFreeOrbit { orbit, stabilizer });
            }
        }
        Ok(())
    }

    /// Point `g · b_o`, `b_o` the smallest point of orbit `o`.
    fn coordinate(&self, g: usize, o: usize) -> usize {
        self.action[g][self.orbits[o][0]]
    }
}

/// `(R_t f)(s) = f(t(s))` for any map `t` (not necessarily bijective).
pub fn pullback_matrix(t: &[usize]) -> Mat {
    let n = t.len();
    let mut r = zeros(n, n);
    for (s, &ts) in t.iter().enumerate() {
        r[(s, ts)] = c(1.0);
    }
    r
}

/// `‖R_{tY} L − L R_{tX}‖_F`, zero exactly when `(L f) ∘ tY = L(f ∘ tX)`.
pub fn pullback_residual(l: &Mat, tx: &[usize], ty: &[usize]) -> f64 {
    frobenius(&(pullback_matrix(ty) * l - l * pullback_matrix(tx)))
}

/// Rows `κ_y` of signed measures on `X`, one per `y ∈ Y`.
#[derive(Debug, Clone)]
pub struct TransitionKernel {
    pub kappa: DMatrix<f64>,
}

/// `(L f)(y) = Σ_x κ_y(x) f(x)`.
pub fn kernel_operator(k: &TransitionKernel) -> Mat {
    k.kappa.map(c)
}

/// `(L f)(y) = Σ_x k(x, y) f(x) μ(x)`, `kfun` indexed as `[y][x]`.
pub fn integral_operator(kfun: &DMatrix<f64>, mu: &[f64]) -> Result<Mat> {
    if kfun.ncols() != mu.len() {
        return Err(Error::ShapeMismatch(format!(
            "kernel has {} columns for {} weights",
            kfun.ncols(),
            mu.len()
        )));
    }
    let mut l = kfun.map(c);
    for (x, &w) in mu.iter().enumerate() {
        l.column_mut(x).scale_mut(w);
    }
    Ok(l)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InvarianceAgreement {
    pub kernel_invariant: bool,
    pub operator_equivariant: bool,
}

/// Decides `κ_{tY(y)} = κ_y ∘ tX⁻¹` and `(L f) ∘ tY = L(f ∘ tX)` separately;
/// the two must agree.
pub fn kernel_invariance_iff_equivariance(
    k: &TransitionKernel,
    tx: &[usize],
    ty: &[usize],
    tol: f64,
) -> Result<InvarianceAgreement> {
    let (ny, nx) = k.kappa.shape();
    if tx.len() != nx || ty.len() != ny || !is_permutation(tx) || !is_permutation(ty) {
        return Err(Error::InvalidInput(
            "tX and tY must be bijections of X and Y".into(),
        ));
    }
    let scale = k.kappa.amax().max(1.0);
    let tx_inv = invert_permutation(tx);
    let kernel_invariant = (0..ny).all(|y| {
        (0..nx).all(|x| (k.kappa[(ty[y], x)] - k.kappa[(y, tx_inv[x])]).abs() <= tol * scale)
    });
    let l = kernel_operator(k);
    let operator_equivariant =
        max_abs(&(pullback_matrix(ty) * &l - &l * pullback_matrix(tx))) <= tol * scale;
    if kernel_invariant != operator_equivariant {
        return Err(Error::InternalInconsistency(format!(
            "kernel invariance ({kernel_invariant}) disagrees with operator equivariance ({operator_equivariant})"
        )));
    }
    Ok(InvarianceAgreement {
        kernel_invariant,
        operator_equivariant,
    })
}

fn real_permutation_matrix(p: &[usize]) -> DMatrix<f64> {
    let n = p.len();
    let mut m = DMatrix::zeros(n, n);
    for (x, &y) in p.iter().enumerate() {
        m[(y, x)] = 1.0;
    }
    m
}

fn same_table(gx: &GSpace, gy: &GSpace) -> Result<()> {
    if gx.table != gy.table {
        return Err(Error::InvalidInput(
            "X and Y carry actions of different tables".into(),
        ));
    }
    Ok(())
}

/// Real operators `L: R^X → R^Y` with `L P_g = P_g L` for every `g`.
pub fn equivariant_operator_basis(gx: &GSpace, gy: &GSpace, tol: f64) -> Result<MatSubspace> {
    same_table(gx, gy)?;
    let (nx, ny) = (gx.size(), gy.size());
    let ix = DMatrix::<f64>::identity(nx, nx);
    let iy = DMatrix::<f64>::identity(ny, ny);
    let blocks: Vec<DMatrix<f64>> = gx
        .table
        .generating_set()
        .into_iter()
        .map(|g| {
            let px = real_permutation_matrix(&gx.action[g]);
            let py = real_permutation_matrix(&gy.action[g]);
            px.transpose().kronecker(&iy) - ix.kronecker(&py)
        })
        .collect();
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut constraints = DMatrix::<f64>::zeros(rows, nx * ny);
    let mut r = 0;
    for b in &blocks {
        constraints.view_mut((r, 0), b.shape()).copy_from(b);
        r += b.nrows();
    }
    let vs = null_vectors(&constraints, tol, 1.0)
        .into_iter()
        .map(|v| v.map(c))
        .collect();
    Ok(MatSubspace::from_orthonormal_vectors(ny, nx, vs))
}

/// Filter `ℓ(g, o, p)` over group elements, input orbits and output orbits.
#[derive(Debug, Clone)]
pub struct ConvKernel {
    ell: Vec<f64>,
    group: usize,
    in_orbits: usize,
    out_orbits: usize,
}

impl ConvKernel {
    pub fn new(ell: Vec<f64>, group: usize, in_orbits: usize, out_orbits: usize) -> Result<Self> {
        if ell.len() != group * in_orbits * out_orbits {
            return Err(Error::ShapeMismatch(format!(
                "filter of length {} for shape {group}x{in_orbits}x{out_orbits}",
                ell.len()
            )));
        }
        Ok(ConvKernel {
            ell,
            group,
            in_orbits,
            out_orbits,
        })
    }

    pub fn zeros(group: usize, in_orbits: usize, out_orbits: usize) -> Self {
        ConvKernel {
            ell: vec![0.0; group * in_orbits * out_orbits],
            group,
            in_orbits,
            out_orbits,
        }
    }

    pub fn get(&self, g: usize, o: usize, p: usize) -> f64 {
        self.ell[(g * self.in_orbits + o) * self.out_orbits + p]
    }

    pub fn set(&mut self, g: usize, o: usize, p: usize, v: f64) {
        self.ell[(g * self.in_orbits + o) * self.out_orbits + p] = v;
    }

    pub fn len(&self) -> usize {
        self.ell.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ell.is_empty()
    }
}

/// `(L f)(h, p) = Σ_o Σ_g ℓ(h⁻¹g, o, p) f(g, o) λ(g) μ_{X/G}(o)` with
/// `λ = 1/|G|`, in the coordinates `(g, o) ↦ g · b_o`.
pub fn conv_operator(ell: &ConvKernel, gx: &GSpace, gy: &GSpace) -> Result<Mat> {
    same_table(gx, gy)?;
    let t = &gx.table;
    if !t.is_group() {
        return Err(Error::NotAGroup);
    }
    gx.require_free()?;
    gy.require_free()?;
    let n = t.order();
    if (ell.group, ell.in_orbits, ell.out_orbits) != (n, gx.orbits.len(), gy.orbits.len()) {
        return Err(Error::ShapeMismatch(
            "filter shape does not match the spaces".into(),
        ));
    }
    let lambda = 1.0 / n as f64;
    let mut l = zeros(gy.size(), gx.size());
    for p in 0..gy.orbits.len() {
        for h in 0..n {
            let row = gy.coordinate(h, p);
            let h_inv = t.inverse(h).expect("group element has an inverse");
            for o in 0..gx.orbits.len() {
                let mass = gx.orbit_mass(o);
                for g in 0..n {
                    let col = gx.coordinate(g, o);
                    l[(row, col)] += c(ell.get(t.mul(h_inv, g), o, p) * lambda * mass);
                }
            }
        }
    }
    Ok(l)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completeness {
    pub complete: bool,
    /// Largest distance from an equivariant basis operator to the span of
    /// convolution operators.
    pub residual: f64,
    pub equivariant_dim: usize,
    pub conv_dim: usize,
}

/// Whether every equivariant operator `R^X → R^Y` is a convolution.
pub fn conv_completeness_check(gx: &GSpace, gy: &GSpace, tol: f64) -> Result<Completeness> {
    let basis = equivariant_operator_basis(gx, gy, tol)?;
    let n = gx.table.order();
    let (no, np) = (gx.orbits.len(), gy.orbits.len());
    let mut ops = Vec::with_capacity(n * no * np);
    for g in 0..n {
        for o in 0..no {
            for p in 0..np {
                let mut ell = ConvKernel::zeros(n, no, np);
                ell.set(g, o, p, 1.0);
                ops.push(conv_operator(&ell, gx, gy)?);
            }
        }
    }
    let convs = MatSubspace::span(gy.size(), gx.size(), &ops, tol)?;
    let residual = basis
        .basis()
        .iter()
        .map(|b| convs.residual(b))
        .fold(0.0, f64::max);
    Ok(Completeness {
        complete: residual < 1e-9,
        residual,
        equivariant_dim: basis.dim(),
        conv_dim: convs.dim(),
    })
}

/// All permutations of `[n]` in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]) else {
            return out;
        };
        let j = (i..n)
            .rev()
            .find(|&j| p[j] > p[i - 1])
            .expect("successor exists");
        p.swap(i - 1, j);
        p[i..].reverse();
    }
}

fn factorial_saturating(n: usize) -> usize {
    (1..=n).fold(1usize, |acc, k| acc.saturating_mul(k))
}

/// Permutation pairs commuting with the whole equivariant operator space.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetrySearch {
    /// Pairs `(tX, tY)` with `P_{tY} L = L P_{tX}` for every equivariant `L`.
    pub survivors: Vec<(Vec<usize>, Vec<usize>)>,
    /// Distinct pairs `(g|_X, g|_Y)`.
    pub group_image: Vec<(Vec<usize>, Vec<usize>)>,
    /// For each survivor, an element realizing it, if any.
    pub realized_by: Vec<Option<usize>>,
    pub equals_group_image: bool,
    pub equivariant_dim: usize,
}

/// Exhaustive search over `tX` preserving `mu` and bijections `tY`.
///
/// For each `tX`, candidate `tY` are found by matching rows of one random
/// equivariant operator, then confirmed against the full basis.
pub fn symmetry_enumeration(
    gx: &GSpace,
    gy: &GSpace,
    tol: f64,
    seed: u64,
) -> Result<SymmetrySearch> {
    same_table(gx, gy)?;
    for space in [gx, gy] {
        let size = factorial_saturating(space.size());
        if size > SEARCH_CAP {
            return Err(Error::SearchTooLarge {
                size,
                cap: SEARCH_CAP,
            });
        }
    }
    if gx.mu.iter().any(|&w| w <= 0.0) {
        return Err(Error::hypothesis("mu must be strictly positive"));
    }
    let basis = equivariant_operator_basis(gx, gy, tol)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe = zeros(gy.size(), gx.size());
    for b in basis.basis() {
        probe += b * c(rng.random_range(-1.0..1.0));
    }
    let probe = probe.map(|z| z.re);
    let match_tol = 1e-8 * probe.amax().max(1.0);
    let ny = gy.size();

    let candidates: Vec<Vec<usize>> = all_permutations(gx.size())
        .into_iter()
        .filter(|t| gx.preserves_mu(t))
        .collect();
    let survivors: Vec<(Vec<usize>, Vec<usize>)> = candidates
        .par_iter()
        .flat_map_iter(|tx| {
            // allowed[y] = targets y' with probe[y'][tX(x)] = probe[y][x] for all x
            let allowed: Vec<Vec<usize>> = (0..ny)
                .map(|y| {
                    (0..ny)
                        .filter(|&y2| {
                            tx.iter().enumerate().all(|(x, &tx_x)| {
                                (probe[(y2, tx_x)] - probe[(y, x)]).abs() <= match_tol
                            })
                        })
                        .collect()
                })
                .collect();
            let mut found = Vec::new();
            let mut ty = vec![usize::MAX; ny];
            let mut used = vec![false; ny];
            assign(0, &allowed, &mut ty, &mut used, &mut found);
            let tx = tx.clone();
            found
                .into_iter()
                .filter(|ty| {
                    let (px, py) = (
                        crate::linalg::permutation_matrix(&tx),
                        crate::linalg::permutation_matrix(ty),
                    );
                    basis
                        .basis()
                        .iter()
                        .all(|b| frobenius(&(&py * b - b * &px)) <= 1e-9)
                })
                .map(|ty| (tx.clone(), ty))
                .collect::<Vec<_>>()
        })
        .collect();

    let mut image_set = BTreeSet::new();
    let mut group_image = Vec::new();
    for g in 0..gx.table.order() {
        let pair = (gx.action[g].clone(), gy.action[g].clone());
        if image_set.insert(pair.clone()) {
            group_image.push(pair);
        }
    }
    let realized_by = survivors
        .iter()
        .map(|pair| {
            (0..gx.table.order()).find(|&g| gx.action[g] == pair.0 && gy.action[g] == pair.1)
        })
        .collect();
    let survivor_set: BTreeSet<_> = survivors.iter().cloned().collect();
    Ok(SymmetrySearch {
        equals_group_image: survivor_set == image_set,
        survivors,
        group_image,
        realized_by,
        equivariant_dim: basis.dim(),
    })
}

fn assign(
    y: usize,
    allowed: &[Vec<usize>],
    ty: &mut Vec<usize>,
    used: &mut Vec<bool>,
    found: &mut Vec<Vec<usize>>,
) {
    if y == allowed.len() {
        found.push(ty.clone());
        return;
    }
    for &t in &allowed[y] {
        if !used[t] {
            used[t] = true;
            ty[y] = t;
            assign(y + 1, allowed, ty, used, found);
            used[t] = false;
        }
    }
}

fn uniform_lambda(t: &SemigroupTable, lambda: Option<&[f64]>) -> Result<Vec<f64>> {
    match lambda {
        Some(l) if l.len() == t.order() => Ok(l.to_vec()),
        Some(_) => Err(Error::ShapeMismatch(
            "one weight per element required".into(),
        )),
        None => Ok(vec![1.0 / t.order() as f64; t.order()]),
    }
}

/// Operator of `(L f)(h) = Σ_g ℓ(g) f(h g) λ(g)`.
pub fn group_like_operator(ell: &[f64], t: &SemigroupTable, lambda: Option<&[f64]>) -> Result<Mat> {
    conv_like_operator(ell, t, lambda, |h, g| t.mul(h, g))
}

/// Operator of `(L f)(h) = Σ_g ℓ(g) f(g h) λ(g)`.
pub fn semigroup_like_operator(
    ell: &[f64],
    t: &SemigroupTable,
    lambda: Option<&[f64]>,
) -> Result<Mat> {
    conv_like_operator(ell, t, lambda, |h, g| t.mul(g, h))
}

fn conv_like_operator(
    ell: &[f64],
    t: &SemigroupTable,
    lambda: Option<&[f64]>,
    index: impl Fn(usize, usize) -> usize,
) -> Result<Mat> {
    let n = t.order();
    if ell.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "filter of length {} over {n} elements",
            ell.len()
        )));
    }
    let lambda = uniform_lambda(t, lambda)?;
    let mut l = zeros(n, n);
    for h in 0..n {
        for g in 0..n {
            l[(h, index(h, g))] += c(ell[g] * lambda[g]);
        }
    }
    Ok(l)
}

fn apply_real(l: &Mat, f: &[f64]) -> Result<Vec<f64>> {
    if f.len() != l.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "signal of length {} for {} points",
            f.len(),
            l.ncols()
        )));
    }
    Ok((0..l.nrows())
        .map(|i| (0..l.ncols()).map(|j| l[(i, j)].re * f[j]).sum())
        .collect())
}

pub fn group_like_conv(
    ell: &[f64],
    f: &[f64],
    t: &SemigroupTable,
    lambda: Option<&[f64]>,
) -> Result<Vec<f64>> {
    apply_real(&group_like_operator(ell, t, lambda)?, f)
}

pub fn semigroup_like_conv(
    ell: &[f64],
    f: &[f64],
    t: &SemigroupTable,
    lambda: Option<&[f64]>,
) -> Result<Vec<f64>> {
    apply_real(&semigroup_like_operator(ell, t, lambda)?, f)
}

/// `(L f)(h) = Σ_g ℓ(h⁻¹ g) f(g) λ(g)` for a group table.
pub fn classical_group_conv(ell: &[f64], f: &[f64], t: &SemigroupTable) -> Result<Vec<f64>> {
    let n = t.order();
    if ell.len() != n || f.len() != n {
        return Err(Error::ShapeMismatch(
            "filter and signal must match the group".into(),
        ));
    }
    let lambda = 1.0 / n as f64;
    (0..n)
        .map(|h| {
            let h_inv = t.inverse(h).ok_or(Error::NotAGroup)?;
            Ok((0..n).map(|g| ell[t.mul(h_inv, g)] * f[g] * lambda).sum())
        })
        .collect()
}

/// Right multiplications `s ↦ s t`, one per element `t`.
pub fn right_multiplications(t: &SemigroupTable) -> Vec<Vec<usize>> {
    (0..t.order())
        .map(|k| (0..t.order()).map(|s| t.mul(s, k)).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairCheck {
    pub index: usize,
    pub residual: f64,
    pub survives: bool,
}

/// Residual `‖R_{tY} L − L R_{tX}‖` for each candidate; survivors are those
/// under `tol`.
pub fn operator_equivariance_set(
    l: &Mat,
    candidates: &[(Vec<usize>, Vec<usize>)],
    tol: f64,
) -> Result<Vec<PairCheck>> {
    candidates
        .iter()
        .enumerate()
        .map(|(index, (tx, ty))| {
            if tx.len() != l.ncols() || ty.len() != l.nrows() {
                return Err(Error::ShapeMismatch(format!(
                    "candidate {index} has the wrong size"
                )));
            }
            if tx.iter().any(|&x| x >= tx.len()) || ty.iter().any(|&y| y >= ty.len()) {
                return Err(Error::InvalidInput(format!(
                    "candidate {index} maps out of range"
                )));
            }
            let residual = pullback_residual(l, tx, ty);
            Ok(PairCheck {
                index,
                residual,
                survives: residual < tol,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousAudit {
    pub operator: Mat,
    /// Section `x ↦ g_x` with `g_x · x₀ = x`.
    pub section: Vec<usize>,
    /// `G` abelian and `G|_X ⊆ T|_X`, every `T` image commuting with every `G` image.
    pub hypothesis_holds: bool,
    pub failed_hypothesis: Option<String>,
    /// First `(t, g)` whose images do not commute.
    pub commutator_witness: Option<(usize, usize)>,
    pub images_equal: bool,
    /// `‖R_t L − L R_t‖` for each element of `T`.
    pub residuals: Vec<f64>,
}

/// Builds `(L f)(x) = Σ_g ℓ(g) f(g_x g x₀) λ(g)` over a transitive `G`-space and
/// checks it against the action of a candidate group `T` on `X`.
pub fn homogeneous_conv_audit(
    x0: usize,
    ell: &[f64],
    gx: &GSpace,
    t_images: &[Vec<usize>],
) -> Result<HomogeneousAudit> {
    let n = gx.table.order();
    let size = gx.size();
    if x0 >= size {
        return Err(Error::InvalidInput("base point outside X".into()));
    }
    if ell.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "filter of length {} over {n} elements",
            ell.len()
        )));
    }
    if t_images
        .iter()
        .any(|p| p.len() != size || !is_permutation(p))
    {
        return Err(Error::InvalidInput(
            "T must act by permutations of X".into(),
        ));
    }
    let section: Vec<usize> = (0..size)
        .map(|x| {
            (0..n)
                .find(|&g| gx.action[g][x0] == x)
                .ok_or_else(|| Error::SectionUndefined(format!("no element maps {x0} to {x}")))
        })
        .collect::<Result<_>>()?;
    let lambda = 1.0 / n as f64;
    let mut l = zeros(size, size);
    for x in 0..size {
        let gx_map = &gx.action[section[x]];
        for g in 0..n {
            l[(x, gx_map[gx.action[g][x0]])] += c(ell[g] * lambda);
        }
    }

    let g_images: BTreeSet<&Vec<usize>> = gx.action.iter().collect();
    let t_set: BTreeSet<&Vec<usize>> = t_images.iter().collect();
    let commutator_witness = t_images.iter().enumerate().find_map(|(ti, tp)| {
        gx.action
            .iter()
            .position(|gp| compose(tp, gp) != compose(gp, tp))
            .map(|g| (ti, g))
    });
    let failed_hypothesis = if !classify(&gx.table).is_abelian {
        Some("G is not abelian".to_string())
    } else if commutator_witness.is_some() {
        Some("T does not commute with G".to_string())
    } else if !g_images.is_subset(&t_set) {
        Some("G is not contained in T".to_string())
    } else {
        None
    };
    let images_equal = g_images == t_set;
    if failed_hypothesis.is_none() && !images_equal {
        return Err(Error::InternalInconsistency(
            "central transitive G but T acts differently".into(),
        ));
    }
    let residuals = t_images
        .iter()
        .map(|t| pullback_residual(&l, t, t))
        .collect();
    Ok(HomogeneousAudit {
        operator: l,
        section,
        hypothesis_holds: failed_hypothesis.is_none(),
        failed_hypothesis,
        commutator_witness,
        images_equal,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{close_generators, GeneratorSet};
    use crate::linalg::{identity, DEFAULT_TOL};

    fn s3() -> SemigroupTable {
        close_generators(&GeneratorSet::permutations(vec![
            vec![1, 0, 2],
            vec![1, 2, 0],
        ]))
        .unwrap()
        .0
    }

    fn two_orbit_z2() -> (GSpace, GSpace) {
        let z2 = SemigroupTable::cyclic(2);
        let x = GSpace::new(z2.clone(), vec![vec![0, 1, 2, 3], vec![1, 0, 3, 2]], None).unwrap();
        let y = GSpace::regular(&z2);
        (x, y)
    }

    /// Number of orbits of the diagonal action on `Y × X`.
    fn pair_orbits(gx: &GSpace, gy: &GSpace) -> usize {
        let mut seen = BTreeSet::new();
        let mut count = 0;
        for y in 0..gy.size() {
            for x in 0..gx.size() {
                if seen.contains(&(y, x)) {
                    continue;
                }
                count += 1;
                for g in 0..gx.table.order() {
                    seen.insert((gy.action[g][y], gx.action[g][x]));
                }
            }
        }
        count
    }

    #[test]
    fn kernel_examples() {
        let id = TransitionKernel {
            kappa: DMatrix::identity(3, 3),
        };
        assert_eq!(kernel_operator(&id), identity(3));
        let avg = TransitionKernel {
            kappa: DMatrix::from_element(2, 3, 1.0 / 3.0),
        };
        for (tx, ty) in [(vec![1, 2, 0], vec![1, 0]), (vec![0, 1, 2], vec![0, 1])] {
            let r = kernel_invariance_iff_equivariance(&avg, &tx, &ty, 1e-12).unwrap();
            assert!(r.kernel_invariant && r.operator_equivariant);
        }
        let r = kernel_invariance_iff_equivariance(&id, &[1, 2, 0], &[2, 0, 1], 1e-12).unwrap();
        assert!(!r.kernel_invariant);
        let r = kernel_invariance_iff_equivariance(&id, &[1, 2, 0], &[1, 2, 0], 1e-12).unwrap();
        assert!(r.kernel_invariant);
    }

    #[test]
    fn random_kernel_not_invariant_under_swap() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let kappa = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
        let r = kernel_invariance_iff_equivariance(
            &TransitionKernel { kappa },
            &[1, 0, 2],
            &[1, 0, 2],
            1e-12,
        )
        .unwrap();
        assert!(!r.kernel_invariant && !r.operator_equivariant);
    }

    #[test]
    fn equivariant_dims() {
        let z4 = GSpace::regular(&SemigroupTable::cyclic(4));
        assert_eq!(
            equivariant_operator_basis(&z4, &z4, DEFAULT_TOL)
                .unwrap()
                .dim(),
            4
        );
        let s3 = GSpace::regular(&s3());
        assert_eq!(
            equivariant_operator_basis(&s3, &s3, DEFAULT_TOL)
                .unwrap()
                .dim(),
            6
        );
        let (x, y) = two_orbit_z2();
        let dim = equivariant_operator_basis(&x, &y, DEFAULT_TOL)
            .unwrap()
            .dim();
        assert_eq!(dim, pair_orbits(&x, &y));
        assert_eq!(dim, 4);
    }

    #[test]
    fn conv_operator_examples() {
        let t = SemigroupTable::cyclic(4);
        let z4 = GSpace::regular(&t);
        let mut delta = ConvKernel::zeros(4, 1, 1);
        delta.set(0, 0, 0, 1.0);
        let l = conv_operator(&delta, &z4, &z4).unwrap();
        assert!((l - identity(4) * c(0.25)).norm() < 1e-15);
        let mut shift = ConvKernel::zeros(4, 1, 1);
        shift.set(1, 0, 0, 1.0);
        let l = conv_operator(&shift, &z4, &z4).unwrap();
        for h in 0..4 {
            for g in 0..4 {
                let expect = if g == (h + 1) % 4 { 0.25 } else { 0.0 };
                assert_eq!(l[(h, g)].re, expect);
            }
        }
    }

    #[test]
    fn non_free_orbit_rejected() {
        let z2 = SemigroupTable::cyclic(2);
        let x = GSpace::new(z2.clone(), vec![vec![0, 1, 2], vec![1, 0, 2]], None).unwrap();
        let ell = ConvKernel::zeros(2, 2, 1);
        let err = conv_operator(&ell, &x, &GSpace::regular(&z2)).unwrap_err();
        assert_eq!(
            err,
            Error::NonFreeOrbit {
                orbit: 1,
                stabilizer: 2
            }
        );
    }

    #[test]
    fn completeness_examples() {
        let z4 = GSpace::regular(&SemigroupTable::cyclic(4));
        let r = conv_completeness_check(&z4, &z4, DEFAULT_TOL).unwrap();
        assert!(r.complete && r.residual < 1e-12);
        let (x, y) = two_orbit_z2();
        assert!(
            conv_completeness_check(&x, &y, DEFAULT_TOL)
                .unwrap()
                .complete
        );
    }

    #[test]
    fn permutations_enumerated() {
        let ps = all_permutations(4);
        assert_eq!(ps.len(), 24);
        assert_eq!(ps[0], vec![0, 1, 2, 3]);
        assert_eq!(ps[23], vec![3, 2, 1, 0]);
        let unique: BTreeSet<_> = ps.iter().collect();
        assert_eq!(unique.len(), 24);
    }

    #[test]
    fn enumeration_z4_and_trivial() {
        let z4 = GSpace::regular(&SemigroupTable::cyclic(4));
        let r = symmetry_enumeration(&z4, &z4, DEFAULT_TOL, 1).unwrap();
        assert_eq!(r.survivors.len(), 4);
        assert!(r.equals_group_image);

        let s3 = GSpace::regular(&s3());
        let r = symmetry_enumeration(&s3, &s3, DEFAULT_TOL, 7).unwrap();
        assert_eq!(r.survivors.len(), 6);
        assert!(r.equals_group_image && r.realized_by.iter().all(Option::is_some));

        // trivial group: every operator is equivariant, only the identity pair survives
        let triv = SemigroupTable::cyclic(1);
        let x = GSpace::new(triv, vec![vec![0, 1]], None).unwrap();
        let r = symmetry_enumeration(&x, &x, DEFAULT_TOL, 1).unwrap();
        assert_eq!(r.survivors, vec![(vec![0, 1], vec![0, 1])]);
    }

    #[test]
    fn search_cap_enforced() {
        let t = SemigroupTable::cyclic(9);
        let x = GSpace::regular(&t);
        assert!(matches!(
            symmetry_enumeration(&x, &x, DEFAULT_TOL, 1),
            Err(Error::SearchTooLarge { .. })
        ));
    }

    #[test]
    fn conv_forms() {
        let t = SemigroupTable::cyclic(3);
        let ell = [0.3, -1.2, 0.7];
        let f = [1.0, 2.0, -0.5];
        let mine = group_like_conv(&ell, &f, &t, None).unwrap();
        let classic = classical_group_conv(&ell, &f, &t).unwrap();
        // oracle: circular correlation over Z3
        for h in 0..3 {
            let oracle: f64 = (0..3).map(|g| ell[g] * f[(h + g) % 3] / 3.0).sum();
            assert!((mine[h] - oracle).abs() < 1e-15);
            assert!((classic[h] - oracle).abs() < 1e-15);
        }
        let delta = [1.0, 0.0, 0.0];
        let out = semigroup_like_conv(&delta, &f, &t, None).unwrap();
        for h in 0..3 {
            assert!((out[h] - f[h] / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn max_monoid_semigroup_conv() {
        let t = SemigroupTable::max_monoid(3);
        let ell = [0.5, -0.25, 2.0];
        let f = [1.0, -3.0, 0.5];
        let out = semigroup_like_conv(&ell, &f, &t, None).unwrap();
        for h in 0..3 {
            let oracle: f64 = (0..3).map(|g| ell[g] * f[g.max(h)] / 3.0).sum();
            assert!((out[h] - oracle).abs() < 1e-15);
        }
        let l = semigroup_like_operator(&ell, &t, None).unwrap();
        let rm = right_multiplications(&t);
        let cands: Vec<_> = rm.iter().map(|r| (r.clone(), r.clone())).collect();
        let checks = operator_equivariance_set(&l, &cands, 1e-12).unwrap();
        assert!(checks.iter().all(|c| c.survives));
    }

    #[test]
    fn identity_operator_keeps_diagonal_pairs() {
        let cands = vec![
            (vec![1, 0, 2], vec![1, 0, 2]),
            (vec![2, 2, 0], vec![2, 2, 0]),
        ];
        let checks = operator_equivariance_set(&identity(3), &cands, 1e-12).unwrap();
        assert!(checks.iter().all(|c| c.survives));
    }

    #[test]
    fn homogeneous_examples() {
        let t = SemigroupTable::cyclic(4);
        let z4 = GSpace::regular(&t);
        let delta = [1.0, 0.0, 0.0, 0.0];
        let audit = homogeneous_conv_audit(0, &delta, &z4, z4.action()).unwrap();
        assert!(audit.hypothesis_holds && audit.images_equal);
        assert!(audit.residuals.iter().all(|&r| r < 1e-12));

        // T = Z4 x Z2 acting through the first factor
        let t8: Vec<Vec<usize>> = (0..8).map(|k| z4.action()[k / 2].clone()).collect();
        let audit = homogeneous_conv_audit(0, &[0.1, 0.7, -0.3, 0.2], &z4, &t8).unwrap();
        assert!(audit.hypothesis_holds && audit.images_equal);

        let mut with_flip = z4.action().to_vec();
        with_flip.push(vec![0, 3, 2, 1]);
        let audit = homogeneous_conv_audit(0, &[0.1, 0.7, -0.3, 0.2], &z4, &with_flip).unwrap();
        assert!(!audit.hypothesis_holds);
        assert_eq!(audit.commutator_witness.map(|w| w.0), Some(4));
        assert!(audit.residuals[4] > 1e-3);
    }

    #[test]
    fn section_requires_transitivity() {
        let (x, _) = two_orbit_z2();
        let err = homogeneous_conv_audit(0, &[1.0, 0.0], &x, x.action()).unwrap_err();
        assert!(matches!(err, Error::SectionUndefined(_)));
    }
}
