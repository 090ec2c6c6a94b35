//! Representations of finite semigroups: intertwiners, commutants,
//! isotypic decompositions and the pair-symmetry space of a coupled
//! representation.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{close_generators, GeneratorSet, SemigroupTable};
use crate::error::{Error, Result};
use crate::linalg::{
    block_diag, c, frobenius, hermitian_eigen, identity, kron, max_abs, max_abs_diff, null_vectors,
    unvec, vstack, zeros, Mat, MatSubspace, C64,
};

/// Default seed for the randomized decomposition.
pub const DEFAULT_SEED: u64 = 0xDECAF;

const MAX_SPLIT_ATTEMPTS: usize = 8;

/// Linear representation of a finite semigroup on `C^dim`.
#[derive(Debug, Clone)]
pub struct Rep {
    table: SemigroupTable,
    dim: usize,
    images: Vec<Mat>,
}

impl Rep {
    /// Checks shapes and the homomorphism property within `tol` (scaled by
    /// the size of the images). Group tables also need `ρ(e) = I`.
    pub fn new(table: SemigroupTable, images: Vec<Mat>, tol: f64) -> Result<Self> {
        if images.len() != table.order() {
            return Err(Error::InvalidInput(format!(
                "{} images for a table of order {}",
                images.len(),
                table.order()
            )));
        }
        let dim = images[0].nrows();
        for m in &images {
            if m.shape() != (dim, dim) {
                return Err(Error::ShapeMismatch(format!(
                    "representation images must all be {dim}x{dim}"
                )));
            }
            if !crate::linalg::is_finite(m) {
                return Err(Error::InvalidInput("non-finite image entry".into()));
            }
        }
        let rep = Rep { table, dim, images };
        let scale = rep.images.iter().map(max_abs).fold(1.0, f64::max);
        let slack = tol * scale * scale * dim.max(1) as f64;
        let defect = rep.homomorphism_defect();
        if defect > slack {
            return Err(Error::InvalidInput(format!(
                "images are not a homomorphism (defect {defect:e})"
            )));
        }
        if let Some(e) = rep.table.identity() {
            if rep.table.is_group() && max_abs_diff(&rep.images[e], &identity(dim)) > slack {
                return Err(Error::InvalidInput("identity is not mapped to I".into()));
            }
        }
        Ok(rep)
    }

    /// Closes a set of matrix generators and uses the closure as the rep.
    pub fn from_generators(gens: GeneratorSet) -> Result<Self> {
        let tol = gens.tol;
        let (table, real) = close_generators(&gens)?;
        Rep::new(table, real.matrices(), tol)
    }

    /// The action of a table on itself by left multiplication, as
    /// permutation matrices.
    pub fn regular(table: &SemigroupTable) -> Self {
        let images = table.left_regular_action().matrices();
        Rep {
            table: table.clone(),
            dim: table.order(),
            images,
        }
    }

    pub fn trivial(table: &SemigroupTable, dim: usize) -> Self {
        Rep {
            table: table.clone(),
            dim,
            images: vec![identity(dim); table.order()],
        }
    }

    pub fn table(&self) -> &SemigroupTable {
        &self.table
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn images(&self) -> &[Mat] {
        &self.images
    }

    pub fn image(&self, g: usize) -> &Mat {
        &self.images[g]
    }

    pub fn homomorphism_defect(&self) -> f64 {
        let n = self.table.order();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let prod = &self.images[i] * &self.images[j];
                worst = worst.max(max_abs_diff(&self.images[self.table.mul(i, j)], &prod));
            }
        }
        worst
    }

    /// Images of a generating set of the table.
    pub fn generator_images(&self) -> Vec<Mat> {
        self.table
            .generating_set()
            .into_iter()
            .map(|g| self.images[g].clone())
            .collect()
    }

    /// Direct sum with another rep of the same table.
    pub fn direct_sum(&self, other: &Rep) -> Result<Rep> {
        if self.table != other.table {
            return Err(Error::InvalidInput(
                "direct sum over different tables".into(),
            ));
        }
        let images = self
            .images
            .iter()
            .zip(&other.images)
            .map(|(a, b)| block_diag(&[a, b]))
            .collect();
        Ok(Rep {
            table: self.table.clone(),
            dim: self.dim + other.dim,
            images,
        })
    }

    /// `P⁻¹ ρ(g) P` for every element.
    pub fn conjugate(&self, p: &Mat) -> Result<Rep> {
        let p_inv = p
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidInput("change of basis is singular".into()))?;
        Ok(Rep {
            table: self.table.clone(),
            dim: self.dim,
            images: self.images.iter().map(|m| &p_inv * m * p).collect(),
        })
    }
}

/// Two representations of the same table, on `U` and on `V`.
#[derive(Debug, Clone)]
pub struct CoupledRep {
    pub u: Rep,
    pub v: Rep,
}

impl CoupledRep {
    pub fn new(u: Rep, v: Rep) -> Result<Self> {
        if u.table != v.table {
            return Err(Error::InvalidInput(
                "coupled reps must share one table".into(),
            ));
        }
        Ok(CoupledRep { u, v })
    }

    /// Closes generator pairs `(A_i, B_i)` as block-diagonal matrices and
    /// splits the closure back into reps on `U` and `V`.
    pub fn from_generator_pairs(pairs: &[(Mat, Mat)], cap: usize, tol: f64) -> Result<Self> {
        let (du, dv) = match pairs.first() {
            Some((a, b)) => (a.nrows(), b.nrows()),
            None => return Err(Error::InvalidInput("no generator pairs".into())),
        };
        for (a, b) in pairs {
            if a.shape() != (du, du) || b.shape() != (dv, dv) {
                return Err(Error::ShapeMismatch(format!(
                    "generator pairs must be {du}x{du} and {dv}x{dv}"
                )));
            }
        }
        let gens = pairs.iter().map(|(a, b)| block_diag(&[a, b])).collect();
        let gens = GeneratorSet::matrices(gens).with_cap(cap).with_tol(tol);
        let (table, real) = close_generators(&gens)?;
        let mats = real.matrices();
        let us = mats
            .iter()
            .map(|m| m.view((0, 0), (du, du)).into_owned())
            .collect();
        let vs = mats
            .iter()
            .map(|m| m.view((du, du), (dv, dv)).into_owned())
            .collect();
        CoupledRep::new(Rep::new(table.clone(), us, tol)?, Rep::new(table, vs, tol)?)
    }

    pub fn table(&self) -> &SemigroupTable {
        &self.u.table
    }

    /// `(ρ_U(g), ρ_V(g))` as block-diagonal matrices.
    pub fn coupled_image(&self) -> Vec<Mat> {
        self.u
            .images
            .iter()
            .zip(&self.v.images)
            .map(|(a, b)| block_diag(&[a, b]))
            .collect()
    }
}

/// Orthonormal basis of `{L : L A_i = B_i L for all i}` (`L` is `d_B × d_A`).
pub fn intertwiners(us: &[Mat], vs: &[Mat], tol: f64) -> Result<MatSubspace> {
    if us.len() != vs.len() {
        return Err(Error::InvalidInput("unequal numbers of images".into()));
    }
    let du = us.first().map_or(0, |m| m.nrows());
    let dv = vs.first().map_or(0, |m| m.nrows());
    let (iu, iv) = (identity(du), identity(dv));
    let scale = us.iter().chain(vs).map(frobenius).fold(0.0, f64::max);
    let blocks: Vec<Mat> = us
        .iter()
        .zip(vs)
        .map(|(a, b)| kron(&a.transpose(), &iv) - kron(&iu, b))
        .collect();
    let constraints = if blocks.is_empty() {
        zeros(0, du * dv)
    } else {
        vstack(&blocks)
    };
    Ok(MatSubspace::from_orthonormal_vectors(
        dv,
        du,
        null_vectors(&constraints, tol, scale),
    ))
}

/// Equivariant linear maps `U → V`, constrained over a generating set.
pub fn intertwiner_basis(c: &CoupledRep, tol: f64) -> Result<MatSubspace> {
    let gens = c.table().generating_set();
    let us: Vec<Mat> = gens.iter().map(|&g| c.u.images[g].clone()).collect();
    let vs: Vec<Mat> = gens.iter().map(|&g| c.v.images[g].clone()).collect();
    intertwiners(&us, &vs, tol)
}

/// Same space as [`intertwiner_basis`], constrained over every element.
pub fn intertwiner_basis_all(c: &CoupledRep, tol: f64) -> Result<MatSubspace> {
    intertwiners(&c.u.images, &c.v.images, tol)
}

fn check_square_family(mats: &[Mat]) -> Result<usize> {
    let d = mats
        .first()
        .ok_or_else(|| Error::InvalidInput("empty matrix family".into()))?
        .nrows();
    if mats.iter().any(|m| m.shape() != (d, d)) {
        return Err(Error::ShapeMismatch(format!(
            "family must be {d}x{d} square matrices"
        )));
    }
    Ok(d)
}

/// Matrices commuting with every element of `mats`.
pub fn commutant(mats: &[Mat], tol: f64) -> Result<MatSubspace> {
    check_square_family(mats)?;
    intertwiners(mats, mats, tol)
}

/// The commutant of the commutant.
pub fn bicommutant(mats: &[Mat], tol: f64) -> Result<MatSubspace> {
    let comm = commutant(mats, tol)?;
    commutant(comm.basis(), tol)
}

/// True when the commutant of the images is one-dimensional and spanned by
/// a multiple of the identity.
pub fn strong_schur_check(r: &Rep, tol: f64) -> Result<bool> {
    let comm = commutant(&r.generator_images(), tol)?;
    if comm.dim() != 1 {
        return Ok(false);
    }
    let b = &comm.basis()[0];
    let scalar = b.trace() / c(r.dim as f64);
    let off = frobenius(&(b - identity(r.dim) * scalar));
    Ok(off < tol.max(1e-12) * frobenius(b).max(1.0) * 10.0)
}

/// One isotypic component: `multiplicity` copies of an irrep of dimension
/// `irrep_dim`, occupying `columns` of the basis change.
#[derive(Debug, Clone)]
pub struct IsotypicBlock {
    pub irrep_dim: usize,
    pub multiplicity: usize,
    pub columns: Range<usize>,
    /// Images of the irrep, one per table element, in the basis shared by
    /// all copies.
    pub irrep_images: Vec<Mat>,
}

impl IsotypicBlock {
    pub fn copy_columns(&self, copy: usize) -> Range<usize> {
        let start = self.columns.start + copy * self.irrep_dim;
        start..start + self.irrep_dim
    }
}

/// `Q⁻¹ ρ(g) Q = ⊕_k I_{m_k} ⊗ ρ_k(g)`.
#[derive(Debug, Clone)]
pub struct IsotypicDecomposition {
    pub blocks: Vec<IsotypicBlock>,
    pub basis_change: Mat,
    basis_change_inv: Mat,
}

impl IsotypicDecomposition {
    pub fn q(&self) -> &Mat {
        &self.basis_change
    }

    pub fn q_inv(&self) -> &Mat {
        &self.basis_change_inv
    }

    pub fn dim(&self) -> usize {
        self.basis_change.nrows()
    }

    /// The block-diagonal form `⊕_k I_{m_k} ⊗ ρ_k(g)`.
    pub fn block_form(&self, g: usize) -> Mat {
        let parts: Vec<Mat> = self
            .blocks
            .iter()
            .map(|b| kron(&identity(b.multiplicity), &b.irrep_images[g]))
            .collect();
        let refs: Vec<&Mat> = parts.iter().collect();
        block_diag(&refs)
    }

    /// Largest entry of `Q⁻¹ρ(g)Q − block_form(g)` over all elements.
    pub fn defect(&self, r: &Rep) -> f64 {
        (0..r.table.order())
            .map(|g| {
                let conj = &self.basis_change_inv * &r.images[g] * &self.basis_change;
                max_abs_diff(&conj, &self.block_form(g))
            })
            .fold(0.0, f64::max)
    }
}

/// Splits a representation of a finite group into isotypic components.
///
/// Non-unitary inputs are first made unitary with the square root of the
/// group-averaged Gram matrix. Invariant subspaces are then split along the
/// eigenspaces of random Hermitian elements of the commutant until every
/// piece has a scalar commutant; equivalent pieces are grouped and their
/// bases aligned by unitary intertwiners.
pub fn decompose(r: &Rep, seed: u64, tol: f64) -> Result<IsotypicDecomposition> {
    if !r.table.is_group() {
        return Err(Error::NotAGroup);
    }
    let d = r.dim;
    let n = r.table.order();

    let mut gram = zeros(d, d);
    for m in &r.images {
        gram += m.adjoint() * m;
    }
    gram /= c(n as f64);
    let (vals, vecs) = hermitian_eigen(&gram);
    if vals.first().is_some_and(|&l| l <= 0.0) {
        return Err(Error::InvalidInput("images are not invertible".into()));
    }
    let sqrt = |p: f64| {
        let diag = Mat::from_diagonal(&nalgebra::DVector::from_iterator(
            d,
            vals.iter().map(|&l| c(l.powf(p))),
        ));
        &vecs * diag * vecs.adjoint()
    };
    let s = sqrt(0.5);
    let s_inv = sqrt(-0.5);
    let unitary: Vec<Mat> = r.images.iter().map(|m| &s * m * &s_inv).collect();
    let gens = r.table.generating_set();
    let gen_images: Vec<Mat> = gens.iter().map(|&g| unitary[g].clone()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pending = vec![identity(d)];
    let mut irreducible: Vec<Mat> = Vec::new();
    while let Some(b) = pending.pop() {
        let restricted: Vec<Mat> = gen_images.iter().map(|m| b.adjoint() * m * &b).collect();
        let comm = commutant(&restricted, tol)?;
        if comm.dim() == 1 {
            irreducible.push(b);
            continue;
        }
        let pieces = split_once(comm.basis(), &mut rng, tol)?;
        for v in pieces {
            pending.push(&b * v);
        }
    }
    // deterministic order: by first nonzero row, then size
    irreducible.sort_by_key(|b| {
        let lead = (0..b.nrows())
            .find(|&i| b.row(i).iter().any(|z| z.norm() > 1e-8))
            .unwrap_or(usize::MAX);
        (b.ncols(), lead)
    });

    // group equivalent pieces; align each copy to the first one
    struct Group {
        rep_images: Vec<Mat>,
        bases: Vec<Mat>,
    }
    let mut groups: Vec<Group> = Vec::new();
    for b in irreducible {
        let rest_all: Vec<Mat> = unitary.iter().map(|m| b.adjoint() * m * &b).collect();
        let rest_gens: Vec<Mat> = gens.iter().map(|&g| rest_all[g].clone()).collect();
        let mut placed = false;
        for grp in groups.iter_mut() {
            if grp.rep_images[0].nrows() != b.ncols() {
                continue;
            }
            let first_gens: Vec<Mat> = gens.iter().map(|&g| grp.rep_images[g].clone()).collect();
            let ints = intertwiners(&first_gens, &rest_gens, tol)?;
            match ints.dim() {
                0 => continue,
                1 => {
                    let w = b.ncols() as f64;
                    let u = &ints.basis()[0] * c(w.sqrt());
                    if max_abs_diff(&(u.adjoint() * &u), &identity(b.ncols())) > 1e-6 {
                        return Err(Error::InternalInconsistency(
                            "intertwiner between unitary irreps is not unitary".into(),
                        ));
                    }
                    grp.bases.push(&b * u);
                    placed = true;
                    break;
                }
                k => {
                    return Err(Error::MatchingAmbiguous(format!(
                        "intertwiner space of dimension {k} between irreducible pieces"
                    )))
                }
            }
        }
        if !placed {
            groups.push(Group {
                rep_images: rest_all,
                bases: vec![b],
            });
        }
    }
    groups.sort_by_key(|g| g.rep_images[0].nrows());

    let mut q_unitary = zeros(d, d);
    let mut blocks = Vec::new();
    let mut col = 0;
    for grp in groups {
        let w = grp.rep_images[0].nrows();
        let start = col;
        for b in &grp.bases {
            q_unitary.view_mut((0, col), (d, w)).copy_from(b);
            col += w;
        }
        blocks.push(IsotypicBlock {
            irrep_dim: w,
            multiplicity: grp.bases.len(),
            columns: start..col,
            irrep_images: grp.rep_images,
        });
    }
    if col != d {
        return Err(Error::InternalInconsistency(format!(
            "irreducible pieces cover {col} of {d} dimensions"
        )));
    }
    Ok(IsotypicDecomposition {
        blocks,
        basis_change: &s_inv * &q_unitary,
        basis_change_inv: q_unitary.adjoint() * &s,
    })
}

/// Eigenspaces of a random Hermitian element of a *-closed commutant.
fn split_once(comm: &[Mat], rng: &mut ChaCha8Rng, tol: f64) -> Result<Vec<Mat>> {
    let k = comm[0].nrows();
    for _ in 0..MAX_SPLIT_ATTEMPTS {
        let mut h = zeros(k, k);
        for b in comm {
            let herm = (b + b.adjoint()) * c(0.5);
            let skew = (b - b.adjoint()) * C64::new(0.0, 0.5);
            h += herm * c(rng.random_range(-1.0..1.0)) + skew * c(rng.random_range(-1.0..1.0));
        }
        let (vals, vecs) = hermitian_eigen(&h);
        let scale = vals.iter().map(|x| x.abs()).fold(0.0, f64::max);
        if scale == 0.0 {
            continue;
        }
        let split_gap = 1e-6 * scale;
        let merge_gap = tol.max(1e-13) * scale * 1e3;
        let mut clusters: Vec<Range<usize>> = Vec::new();
        let mut start = 0;
        let mut unstable = false;
        for i in 1..vals.len() {
            let gap = vals[i] - vals[i - 1];
            if gap > split_gap {
                clusters.push(start..i);
                start = i;
            } else if gap > merge_gap {
                unstable = true;
            }
        }
        clusters.push(start..vals.len());
        if unstable || clusters.len() < 2 {
            continue;
        }
        return Ok(clusters
            .into_iter()
            .map(|r| vecs.columns(r.start, r.len()).into_owned())
            .collect());
    }
    Err(Error::DecompositionUnstable {
        attempts: MAX_SPLIT_ATTEMPTS,
    })
}

/// Pairs `(t_U, t_V)` with `t_V L = L t_U` for every intertwiner `L`,
/// returned as block-diagonal `(d_U + d_V)`-square matrices.
pub fn pair_symmetry_space(c: &CoupledRep, tol: f64) -> Result<MatSubspace> {
    let ints = intertwiner_basis(c, tol)?;
    let (du, dv) = (c.u.dim, c.v.dim);
    let unknowns = du * du + dv * dv;
    let (iu, iv) = (identity(du), identity(dv));
    let rows: Vec<Mat> = ints
        .basis()
        .iter()
        .map(|l| {
            let mut row = zeros(du * dv, unknowns);
            row.view_mut((0, 0), (du * dv, du * du))
                .copy_from(&(-kron(&iu, l)));
            row.view_mut((0, du * du), (du * dv, dv * dv))
                .copy_from(&kron(&l.transpose(), &iv));
            row
        })
        .collect();
    let constraints = if rows.is_empty() {
        zeros(0, unknowns)
    } else {
        vstack(&rows)
    };
    let basis: Vec<Mat> = null_vectors(&constraints, tol, 1.0)
        .into_iter()
        .map(|x| {
            let tu = unvec(&x.rows(0, du * du).into_owned(), du, du);
            let tv = unvec(&x.rows(du * du, dv * dv).into_owned(), dv, dv);
            block_diag(&[&tu, &tv])
        })
        .collect();
    // the vectors are orthonormal already; span keeps the type uniform
    MatSubspace::span(du + dv, du + dv, &basis, tol)
}

/// For each block of `dec_v`, the index of the equivalent block of `dec_u`.
pub fn block_matching(
    dec_u: &IsotypicDecomposition,
    dec_v: &IsotypicDecomposition,
    tol: f64,
) -> Result<Vec<Option<usize>>> {
    let mut matched = vec![None; dec_v.blocks.len()];
    for (l, bv) in dec_v.blocks.iter().enumerate() {
        for (k, bu) in dec_u.blocks.iter().enumerate() {
            if bu.irrep_dim != bv.irrep_dim {
                continue;
            }
            match intertwiners(&bu.irrep_images, &bv.irrep_images, tol)?.dim() {
                0 => {}
                1 if matched[l].is_none() && !matched.contains(&Some(k)) => matched[l] = Some(k),
                d => {
                    return Err(Error::MatchingAmbiguous(format!(
                        "V block {l} against U block {k}: intertwiner dimension {d}"
                    )))
                }
            }
        }
    }
    Ok(matched)
}

/// The pair-symmetry space assembled from block structure alone.
///
/// Irreps of `V` are matched to irreps of `U` by intertwiner dimension.
/// Matched components share one free operator on the irrep, repeated on
/// every copy; rows of `t_U` belonging to irreps absent from `V`, and
/// columns of `t_V` belonging to irreps absent from `U`, are unconstrained;
/// every other entry vanishes.
pub fn predicted_pair_space(
    dec_u: &IsotypicDecomposition,
    dec_v: &IsotypicDecomposition,
    tol: f64,
) -> Result<MatSubspace> {
    let (du, dv) = (dec_u.dim(), dec_v.dim());
    let matched = block_matching(dec_u, dec_v, tol)?;
    let mut q_v = dec_v.basis_change.clone();
    for (l, bv) in dec_v.blocks.iter().enumerate() {
        let Some(k) = matched[l] else { continue };
        let ints = intertwiners(&dec_u.blocks[k].irrep_images, &bv.irrep_images, tol)?;
        let u = &ints.basis()[0] * c((bv.irrep_dim as f64).sqrt());
        for copy in 0..bv.multiplicity {
            let cols = bv.copy_columns(copy);
            let aligned = q_v.columns(cols.start, cols.len()) * &u;
            q_v.columns_mut(cols.start, cols.len()).copy_from(&aligned);
        }
    }
    let q_v_inv = q_v
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InternalInconsistency("aligned basis is singular".into()))?;
    let q_u = &dec_u.basis_change;
    let q_u_inv = &dec_u.basis_change_inv;

    let pair = |tu_hat: &Mat, tv_hat: &Mat| -> Mat {
        let tu = q_u * tu_hat * q_u_inv;
        let tv = &q_v * tv_hat * &q_v_inv;
        block_diag(&[&tu, &tv])
    };
    let unit = |rows: usize, cols: usize, i: usize, j: usize| {
        let mut m = zeros(rows, cols);
        m[(i, j)] = c(1.0);
        m
    };

    let mut gens = Vec::new();
    for (l, bv) in dec_v.blocks.iter().enumerate() {
        if let Some(k) = matched[l] {
            let bu = &dec_u.blocks[k];
            let w = bu.irrep_dim;
            for i in 0..w {
                for j in 0..w {
                    let e = unit(w, w, i, j);
                    let mut tu = zeros(du, du);
                    let mut tv = zeros(dv, dv);
                    tu.view_mut(
                        (bu.columns.start, bu.columns.start),
                        (bu.columns.len(), bu.columns.len()),
                    )
                    .copy_from(&kron(&identity(bu.multiplicity), &e));
                    tv.view_mut(
                        (bv.columns.start, bv.columns.start),
                        (bv.columns.len(), bv.columns.len()),
                    )
                    .copy_from(&kron(&identity(bv.multiplicity), &e));
                    gens.push(pair(&tu, &tv));
                }
            }
        }
    }
    for (k, bu) in dec_u.blocks.iter().enumerate() {
        if matched.contains(&Some(k)) {
            continue;
        }
        for i in bu.columns.clone() {
            for j in 0..du {
                gens.push(pair(&unit(du, du, i, j), &zeros(dv, dv)));
            }
        }
    }
    for (l, bv) in dec_v.blocks.iter().enumerate() {
        if matched[l].is_some() {
            continue;
        }
        for j in bv.columns.clone() {
            for i in 0..dv {
                gens.push(pair(&zeros(du, du), &unit(dv, dv, i, j)));
            }
        }
    }
    MatSubspace::span(du + dv, du + dv, &gens, tol)
}
