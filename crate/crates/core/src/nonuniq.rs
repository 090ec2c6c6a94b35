//! Symmetry non-uniqueness audits for equivariant model families: linear
//! networks, gated layers, algebra-element witnesses and finite
//! learnability instances.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::algebra::SemigroupTable;
use crate::error::{Error, Result};
use crate::linalg::{
    block_diag, c, frobenius, identity, kron, max_abs, null_vectors, unvec, vstack, zeros, CVec,
    Mat, MatSubspace, C64,
};
use crate::rep::CoupledRep;

/// Residual below which a numerical equivariance check counts as exact.
pub const EQUIVARIANCE_THRESHOLD: f64 = 1e-7;

/// Composition of linear layers `L_1, …, L_{n-1}`; layer `k` maps
/// `C^{d_k}` to `C^{d_{k+1}}`.
#[derive(Debug, Clone)]
pub struct LinearNetwork {
    layers: Vec<Mat>,
}

impl LinearNetwork {
    pub fn new(layers: Vec<Mat>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidInput(
                "network needs at least one layer".into(),
            ));
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[1].ncols() != pair[0].nrows() {
                return Err(Error::ShapeMismatch(format!(
                    "layer {} outputs {} but layer {} takes {}",
                    k,
                    pair[0].nrows(),
                    k + 1,
                    pair[1].ncols()
                )));
            }
        }
        Ok(LinearNetwork { layers })
    }

    pub fn layers(&self) -> &[Mat] {
        &self.layers
    }

    /// Widths `d_1, …, d_n`.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.layers[0].ncols()];
        d.extend(self.layers.iter().map(|l| l.nrows()));
        d
    }

    /// `L_{n-1} ⋯ L_1`.
    pub fn end_to_end(&self) -> Mat {
        let mut f = identity(self.layers[0].ncols());
        for l in &self.layers {
            f = l * f;
        }
        f
    }
}

#[derive(Debug, Clone)]
pub struct NetworkSymmetries {
    /// Block-diagonal tuples `(t_1, …, t_n)`.
    pub space: MatSubspace,
    /// Largest `‖t_n F − F t_1‖` over the basis, `F` the end-to-end map.
    pub end_to_end_residual: f64,
}

/// Tuples with `t_{k+1} L_k = L_k t_k` for every layer.
pub fn network_symmetry_tuple_space(net: &LinearNetwork, tol: f64) -> Result<NetworkSymmetries> {
    let dims = net.dims();
    let offsets: Vec<usize> = dims
        .iter()
        .scan(0, |acc, d| {
            let o = *acc;
            *acc += d * d;
            Some(o)
        })
        .collect();
    let unknowns: usize = dims.iter().map(|d| d * d).sum();
    let scale = net.layers.iter().map(frobenius).fold(0.0, f64::max);
    let rows: Vec<Mat> = net
        .layers
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let (din, dout) = (dims[k], dims[k + 1]);
            let mut row = zeros(din * dout, unknowns);
            row.view_mut((0, offsets[k]), (din * dout, din * din))
                .copy_from(&(-kron(&identity(din), l)));
            row.view_mut((0, offsets[k + 1]), (din * dout, dout * dout))
                .copy_from(&kron(&l.transpose(), &identity(dout)));
            row
        })
        .collect();
    let basis: Vec<Mat> = null_vectors(&vstack(&rows), tol, scale)
        .into_iter()
        .map(|x| {
            let ts: Vec<Mat> = dims
                .iter()
                .zip(&offsets)
                .map(|(&d, &o)| unvec(&x.rows(o, d * d).into_owned(), d, d))
                .collect();
            let refs: Vec<&Mat> = ts.iter().collect();
            block_diag(&refs)
        })
        .collect();
    let total: usize = dims.iter().sum();
    let space = MatSubspace::span(total, total, &basis, tol)?;
    let f = net.end_to_end();
    let (d1, dn) = (dims[0], *dims.last().unwrap());
    let end_to_end_residual = space
        .basis()
        .iter()
        .map(|b| {
            let t1 = b.view((0, 0), (d1, d1));
            let tn = b.view((total - dn, total - dn), (dn, dn));
            frobenius(&(tn * &f - &f * t1))
        })
        .fold(0.0, f64::max);
    Ok(NetworkSymmetries {
        space,
        end_to_end_residual,
    })
}

/// Scalar nonlinearities available to gated layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sigma {
    Identity,
    Tanh,
    Relu,
    Sigmoid,
}

impl Sigma {
    /// Evaluated on complex arguments; `relu` thresholds the real part.
    pub fn apply(self, z: C64) -> C64 {
        match self {
            Sigma::Identity => z,
            Sigma::Tanh => z.tanh(),
            Sigma::Relu => {
                if z.re > 0.0 {
                    z
                } else {
                    C64::new(0.0, 0.0)
                }
            }
            Sigma::Sigmoid => c(1.0) / (c(1.0) + (-z).exp()),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Sigma::Identity => "identity",
            Sigma::Tanh => "tanh",
            Sigma::Relu => "relu",
            Sigma::Sigmoid => "sigmoid",
        }
    }
}

impl fmt::Display for Sigma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Sigma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Sigma::Identity),
            "tanh" => Ok(Sigma::Tanh),
            "relu" => Ok(Sigma::Relu),
            "sigmoid" => Ok(Sigma::Sigmoid),
            other => Err(Error::InvalidInput(format!(
                "unknown nonlinearity {other:?}"
            ))),
        }
    }
}

/// `x ↦ ⊕_r σ(s_r · x) (L x)_r`, the output split into blocks `r`.
#[derive(Debug, Clone)]
pub struct GatedLayer {
    l: Mat,
    gates: Vec<CVec>,
    blocks: Vec<Vec<usize>>,
    sigma: Sigma,
}

impl GatedLayer {
    pub fn new(l: Mat, gates: Vec<CVec>, blocks: Vec<Vec<usize>>, sigma: Sigma) -> Result<Self> {
        if gates.len() != blocks.len() {
            return Err(Error::InvalidInput(format!(
                "{} gates for {} blocks",
                gates.len(),
                blocks.len()
            )));
        }
        if let Some(g) = gates.iter().find(|g| g.len() != l.ncols()) {
            return Err(Error::ShapeMismatch(format!(
                "gate of length {} for input dimension {}",
                g.len(),
                l.ncols()
            )));
        }
        let mut seen = vec![false; l.nrows()];
        for &i in blocks.iter().flatten() {
            if i >= l.nrows() || seen[i] {
                return Err(Error::InvalidInput(
                    "blocks must partition the output coordinates".into(),
                ));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidInput(
                "blocks must partition the output coordinates".into(),
            ));
        }
        Ok(GatedLayer {
            l,
            gates,
            blocks,
            sigma,
        })
    }

    pub fn eval(&self, x: &CVec) -> CVec {
        let mut y = &self.l * x;
        for (s, block) in self.gates.iter().zip(&self.blocks) {
            let gate = self.sigma.apply(s.dot(x));
            for &i in block {
                y[i] *= gate;
            }
        }
        y
    }

    pub fn weight(&self) -> &Mat {
        &self.l
    }
}

/// Largest `‖layer(t_in x) − t_out layer(x)‖` over `samples`.
///
/// The hypotheses making the layer equivariant are checked first: `t_out L =
/// L t_in`, every gate fixed by `t_in`, and `t_out` not mixing gate blocks.
pub fn gated_layer_equivariance_check(
    layer: &GatedLayer,
    t_in: &Mat,
    t_out: &Mat,
    samples: &[CVec],
    tol: f64,
) -> Result<f64> {
    let (dout, din) = layer.l.shape();
    if t_in.shape() != (din, din) || t_out.shape() != (dout, dout) {
        return Err(Error::ShapeMismatch(format!(
            "expected t_in {din}x{din} and t_out {dout}x{dout}"
        )));
    }
    let scale = max_abs(&layer.l).max(1.0) * max_abs(t_in).max(max_abs(t_out)).max(1.0);
    let slack = tol * scale * (din.max(dout) as f64);
    if max_abs(&(t_out * &layer.l - &layer.l * t_in)) > slack {
        return Err(Error::hypothesis("t_out L != L t_in"));
    }
    for (r, s) in layer.gates.iter().enumerate() {
        let moved = s.transpose() * t_in;
        if (moved - s.transpose()).camax() > slack {
            return Err(Error::HypothesisViolated {
                hypothesis: format!("gate {r} is not invariant under t_in"),
                witness: Some(r),
            });
        }
    }
    let mut block_of = vec![0; dout];
    for (r, block) in layer.blocks.iter().enumerate() {
        for &i in block {
            block_of[i] = r;
        }
    }
    for i in 0..dout {
        for j in 0..dout {
            if block_of[i] != block_of[j] && t_out[(i, j)].norm() > slack {
                return Err(Error::HypothesisViolated {
                    hypothesis: format!(
                        "t_out mixes gate blocks {} and {}",
                        block_of[j], block_of[i]
                    ),
                    witness: Some(block_of[i]),
                });
            }
        }
    }
    Ok(samples
        .iter()
        .map(|x| (layer.eval(&(t_in * x)) - t_out * layer.eval(x)).norm())
        .fold(0.0, f64::max))
}

/// Finitely supported formal combination `Σ a(s) s`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AlgebraElement {
    coeffs: BTreeMap<usize, C64>,
}

impl AlgebraElement {
    pub fn delta(s: usize) -> Self {
        Self::from_pairs([(s, c(1.0))])
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, C64)>) -> Self {
        let mut coeffs = BTreeMap::new();
        for (s, a) in pairs {
            *coeffs.entry(s).or_insert(C64::new(0.0, 0.0)) += a;
        }
        AlgebraElement { coeffs }
    }

    pub fn coeffs(&self) -> &BTreeMap<usize, C64> {
        &self.coeffs
    }

    pub fn coeff(&self, s: usize) -> C64 {
        self.coeffs.get(&s).copied().unwrap_or_default()
    }

    /// `Σ_s a(s)`, the augmentation.
    pub fn sum(&self) -> C64 {
        self.coeffs.values().sum()
    }

    /// `(ab)(s) = Σ_{tu = s} a(t) b(u)`.
    pub fn product(&self, other: &AlgebraElement, table: &SemigroupTable) -> Result<Self> {
        let n = table.order();
        if self
            .coeffs
            .keys()
            .chain(other.coeffs.keys())
            .any(|&s| s >= n)
        {
            return Err(Error::InvalidInput(
                "algebra element outside the table".into(),
            ));
        }
        Ok(Self::from_pairs(self.coeffs.iter().flat_map(|(&t, &a)| {
            other
                .coeffs
                .iter()
                .map(move |(&u, &b)| (table.mul(t, u), a * b))
        })))
    }

    /// `Σ_s a(s) ρ(s)`.
    pub fn realize(&self, images: &[Mat]) -> Result<Mat> {
        let d = images
            .first()
            .ok_or_else(|| Error::InvalidInput("no images".into()))?
            .nrows();
        let mut out = zeros(d, d);
        for (&s, &a) in &self.coeffs {
            let img = images
                .get(s)
                .ok_or_else(|| Error::InvalidInput(format!("element {s} has no image")))?;
            out += img * a;
        }
        Ok(out)
    }
}

/// Multiplies two elements of augmentation 1 and reports whether the product
/// has augmentation 1 within `tol`.
pub fn k1_closure_check(
    a: &AlgebraElement,
    b: &AlgebraElement,
    table: &SemigroupTable,
    tol: f64,
) -> Result<(bool, AlgebraElement)> {
    for (name, x) in [("a", a), ("b", b)] {
        if (x.sum() - c(1.0)).norm() > tol {
            return Err(Error::hypothesis(format!(
                "coefficients of {name} do not sum to 1"
            )));
        }
    }
    let p = a.product(b, table)?;
    Ok(((p.sum() - c(1.0)).norm() <= tol, p))
}

/// Largest `‖f(ρ̃_U(a) x) − ρ̃_V(a) f(x)‖` over `points`.
pub fn algebra_witness_residual<F>(
    c: &CoupledRep,
    a: &AlgebraElement,
    f: F,
    points: &[CVec],
) -> Result<f64>
where
    F: Fn(&CVec) -> CVec,
{
    let tu = a.realize(c.u.images())?;
    let tv = a.realize(c.v.images())?;
    let mut worst: f64 = 0.0;
    for x in points {
        if x.len() != c.u.dim() {
            return Err(Error::ShapeMismatch(format!(
                "point of length {} for U of dimension {}",
                x.len(),
                c.u.dim()
            )));
        }
        let fx = f(x);
        if fx.len() != c.v.dim() {
            return Err(Error::ShapeMismatch("f does not land in V".into()));
        }
        worst = worst.max((f(&(&tu * x)) - &tv * fx).norm());
    }
    Ok(worst)
}

/// A finite relation `R ⊆ F × Γ`, an ansatz `A ⊆ R` and a map `H` on `Γ`.
/// Convergence is discrete, so the closure of `A` is `A`.
#[derive(Debug, Clone)]
pub struct FiniteLearnabilityInstance {
    pub functions: Vec<String>,
    pub symmetries: Vec<String>,
    /// `relation[f][γ]`.
    pub relation: Vec<Vec<bool>>,
    pub ansatz: Vec<(usize, usize)>,
    pub h: Vec<usize>,
}

impl FiniteLearnabilityInstance {
    fn validate(&self) -> Result<()> {
        let (nf, ng) = (self.functions.len(), self.symmetries.len());
        if self.relation.len() != nf || self.relation.iter().any(|r| r.len() != ng) {
            return Err(Error::ShapeMismatch(format!("relation must be {nf}x{ng}")));
        }
        if self.h.len() != ng || self.h.iter().any(|&g| g >= ng) {
            return Err(Error::InvalidInput(
                "H must map symmetries to symmetries".into(),
            ));
        }
        for &(f, g) in &self.ansatz {
            if f >= nf || g >= ng {
                return Err(Error::InvalidInput(format!(
                    "ansatz pair ({f}, {g}) out of range"
                )));
            }
            if !self.relation[f][g] {
                return Err(Error::AnsatzNotSubsetOfR { f, gamma: g });
            }
        }
        Ok(())
    }

    fn in_ansatz(&self, f: usize, g: usize) -> bool {
        self.ansatz.contains(&(f, g))
    }

    /// Functions appearing in some ansatz pair.
    pub fn learnable_functions(&self) -> Vec<usize> {
        let mut fs: Vec<usize> = self.ansatz.iter().map(|&(f, _)| f).collect();
        fs.sort_unstable();
        fs.dedup();
        fs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnabilityReport {
    /// `(f, H(γ)) ∈ R` for every `(f, γ) ∈ A`.
    pub subset_hypothesis: bool,
    /// Symmetric pairs shown unlearnable: `(f, γ) ∈ R` with `(f, H(γ)) ∉ R`.
    pub unlearnable: Vec<(usize, usize)>,
    /// `H` maps `A` into `A`, and `(f, H(γ)) ∈ R` implies `(f, γ) ∈ R`.
    pub equal_hypothesis: bool,
    /// Symmetries for which local universality and distinguishability by a
    /// learnable function both hold.
    pub tradeoff_conflicts: Vec<usize>,
}

/// Audits a finite instance for unlearnable pairs and for symmetries that
/// are both universally approximated and distinguishable from their image
/// under `H`.
pub fn unlearnability_audit(inst: &FiniteLearnabilityInstance) -> Result<LearnabilityReport> {
    inst.validate()?;
    let r = &inst.relation;
    let h = &inst.h;
    let (nf, ng) = (inst.functions.len(), inst.symmetries.len());

    let subset_hypothesis = inst.ansatz.iter().all(|&(f, g)| r[f][h[g]]);
    let mut unlearnable = Vec::new();
    if subset_hypothesis {
        for f in 0..nf {
            for g in 0..ng {
                if r[f][g] && !r[f][h[g]] {
                    unlearnable.push((f, g));
                }
            }
        }
    }

    let equal_hypothesis = inst.ansatz.iter().all(|&(f, g)| inst.in_ansatz(f, h[g]))
        && (0..nf).all(|f| (0..ng).all(|g| !r[f][h[g]] || r[f][g]));
    let learnable = inst.learnable_functions();
    let tradeoff_conflicts: Vec<usize> = (0..ng)
        .filter(|&g| {
            let universal = learnable.iter().all(|&f| !r[f][g] || inst.in_ansatz(f, g));
            let distinguishable = learnable.iter().any(|&f| r[f][g] != r[f][h[g]]);
            universal && distinguishable
        })
        .collect();
    if equal_hypothesis && !tradeoff_conflicts.is_empty() {
        return Err(Error::InternalInconsistency(format!(
            "tradeoff conditions both hold for symmetry {} under verified hypotheses",
            tradeoff_conflicts[0]
        )));
    }
    Ok(LearnabilityReport {
        subset_hypothesis,
        unlearnable,
        equal_hypothesis,
        tradeoff_conflicts,
    })
}
