//! Finite experiments on convergence of matrix semigroups: windowed point
//! clouds, Hausdorff distances, generator perturbation sweeps, closedness of
//! the equivariance relation and the spiral orbit in the plane.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{frobenius, identity, operator_norm, CVec, Mat};
use crate::matindex::{Lookup, MatIndex, Metric};
use crate::rep::CoupledRep;

/// Clouds larger than this abort with `BlowUp`.
pub const MAX_CLOUD: usize = 1_000_000;

/// Points closer than this (Frobenius) are merged.
pub const DEDUP_TOL: f64 = 1e-10;

/// Finite set of `d×d` matrices, complete inside the operator-norm ball of
/// radius `window`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatCloud {
    points: Vec<Mat>,
    window: f64,
}

impl MatCloud {
    pub fn new(points: Vec<Mat>, window: f64) -> Result<Self> {
        let d = points.first().map(|m| m.nrows()).unwrap_or(0);
        if points.iter().any(|m| m.shape() != (d, d)) {
            return Err(Error::ShapeMismatch(
                "cloud points must share one square shape".into(),
            ));
        }
        if let Some(i) = points
            .iter()
            .position(|m| operator_norm(m) > window * (1.0 + 1e-12))
        {
            return Err(Error::InvalidInput(format!(
                "point {i} lies outside the window"
            )));
        }
        Ok(MatCloud { points, window })
    }

    /// Real scalars as `1×1` matrices.
    pub fn from_scalars(xs: &[f64], window: f64) -> Result<Self> {
        Self::new(
            xs.iter()
                .map(|&x| Mat::from_element(1, 1, crate::linalg::c(x)))
                .collect(),
            window,
        )
    }

    pub fn points(&self) -> &[Mat] {
        &self.points
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Frobenius distance from `m` to the nearest point.
    pub fn distance_to(&self, m: &Mat) -> f64 {
        self.points
            .iter()
            .map(|p| frobenius(&(p - m)))
            .fold(f64::INFINITY, f64::min)
    }
}

/// `sup_{a ∈ A} inf_{b ∈ B} ‖a − b‖_F`.
pub fn directed_distance(a: &MatCloud, b: &MatCloud) -> f64 {
    a.points
        .par_iter()
        .map(|p| b.distance_to(p))
        .reduce(|| 0.0, f64::max)
}

pub fn hausdorff(a: &MatCloud, b: &MatCloud) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if a.points[0].shape() != b.points[0].shape() {
        return Err(Error::ShapeMismatch("clouds of different dimension".into()));
    }
    Ok(directed_distance(a, b).max(directed_distance(b, a)))
}

/// All distinct products of at most `max_wordlen` generators whose operator
/// norm is at most `window`.
pub fn truncated_semigroup_cloud(
    gens: &[Mat],
    window: f64,
    max_wordlen: usize,
) -> Result<MatCloud> {
    let Some(first) = gens.first() else {
        return Err(Error::InvalidInput(
            "at least one generator required".into(),
        ));
    };
    let d = first.nrows();
    if gens.iter().any(|g| g.shape() != (d, d)) {
        return Err(Error::ShapeMismatch(
            "generators must be square of one size".into(),
        ));
    }
    let mut seen = MatIndex::new(d * d, DEDUP_TOL, Metric::Frobenius);
    let mut frontier = Vec::new();
    for g in gens {
        if matches!(seen.lookup(g), Lookup::Missing) {
            seen.push(g.clone());
            frontier.push(g.clone());
        }
    }
    for _ in 1..max_wordlen {
        let mut next = Vec::new();
        for w in &frontier {
            for g in gens {
                let p = w * g;
                if matches!(seen.lookup(&p), Lookup::Missing) {
                    seen.push(p.clone());
                    next.push(p);
                    if seen.len() > MAX_CLOUD {
                        return Err(Error::BlowUp { points: seen.len() });
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    let points = seen
        .into_items()
        .into_iter()
        .filter(|m| operator_norm(m) <= window)
        .collect();
    MatCloud::new(points, window)
}

/// Largest distance from a product of two points back to the cloud, over
/// pairs whose product stays inside the window.
pub fn closure_residual(cloud: &MatCloud) -> Result<f64> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    Ok(cloud
        .points
        .par_iter()
        .map(|a| {
            cloud
                .points
                .iter()
                .map(|b| a * b)
                .filter(|p| operator_norm(p) <= cloud.window)
                .map(|p| cloud.distance_to(&p))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max))
}

/// Whether a series falls by more than a factor 10 from first to last value.
pub fn decays_tenfold(series: &[f64]) -> bool {
    match (series.first(), series.last()) {
        (Some(&first), Some(&last)) => last < first / 10.0 || (first == 0.0 && last == 0.0),
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometricAudit {
    /// Per step, the largest distance from a limit point to the step cloud.
    pub cond1_sup: Vec<f64>,
    /// Per step, the largest distance from a step point to the limit.
    pub cond2_residual: Vec<f64>,
}

pub fn geometric_convergence_audit(seq: &[MatCloud], limit: &MatCloud) -> Result<GeometricAudit> {
    if limit.is_empty() || seq.iter().any(MatCloud::is_empty) {
        return Err(Error::EmptyCloud);
    }
    Ok(GeometricAudit {
        cond1_sup: seq.iter().map(|s| directed_distance(limit, s)).collect(),
        cond2_residual: seq.iter().map(|s| directed_distance(s, limit)).collect(),
    })
}

/// Generator tuples indexed by step, with their limit tuple.
#[derive(Debug, Clone)]
pub struct GeneratorSequence {
    steps: Vec<Vec<Mat>>,
    limit: Vec<Mat>,
}

impl GeneratorSequence {
    pub fn new(steps: Vec<Vec<Mat>>, limit: Vec<Mat>) -> Result<Self> {
        let Some(first) = limit.first() else {
            return Err(Error::InvalidInput("empty generator tuple".into()));
        };
        let shape = first.shape();
        if shape.0 != shape.1 || limit.iter().any(|m| m.shape() != shape) {
            return Err(Error::ShapeMismatch(
                "limit generators must be square of one size".into(),
            ));
        }
        for (n, tuple) in steps.iter().enumerate() {
            if tuple.len() != limit.len() || tuple.iter().any(|m| m.shape() != shape) {
                return Err(Error::ShapeMismatch(format!(
                    "step {n} does not match the limit tuple"
                )));
            }
        }
        Ok(GeneratorSequence { steps, limit })
    }

    /// `gens_n = limit + perturbation / n` for each `n` in `ns`.
    pub fn perturbed(limit: Vec<Mat>, perturbation: &[Mat], ns: &[usize]) -> Result<Self> {
        if perturbation.len() != limit.len() {
            return Err(Error::ShapeMismatch(
                "one perturbation per generator".into(),
            ));
        }
        let steps = ns
            .iter()
            .map(|&n| {
                limit
                    .iter()
                    .zip(perturbation)
                    .map(|(g, e)| g + e.scale(1.0 / n as f64))
                    .collect()
            })
            .collect();
        Self::new(steps, limit)
    }

    pub fn steps(&self) -> &[Vec<Mat>] {
        &self.steps
    }

    pub fn limit(&self) -> &[Mat] {
        &self.limit
    }
}

/// All words of length `1..=max_len` over `arity` letters, shortest first.
pub fn words(arity: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut level: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..max_len {
        level = level
            .iter()
            .flat_map(|w| {
                (0..arity).map(move |a| {
                    let mut v = w.clone();
                    v.push(a);
                    v
                })
            })
            .collect();
        out.extend(level.iter().cloned());
    }
    out
}

fn evaluate(word: &[usize], gens: &[Mat]) -> Mat {
    let d = gens[0].nrows();
    word.iter().fold(identity(d), |acc, &k| acc * &gens[k])
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorAudit {
    pub words: Vec<Vec<usize>>,
    /// `deviations[n][w] = ‖w(gens_n) − w(limit)‖_F`.
    pub deviations: Vec<Vec<f64>>,
    /// Per step, the largest generator deviation.
    pub generator_gap: Vec<f64>,
    /// Per step, the largest word deviation.
    pub sup: Vec<f64>,
    pub decays: bool,
}

pub fn generator_convergence_audit(gs: &GeneratorSequence, max_wordlen: usize) -> GeneratorAudit {
    let words = words(gs.limit.len(), max_wordlen);
    let limit_values: Vec<Mat> = words.iter().map(|w| evaluate(w, &gs.limit)).collect();
    let deviations: Vec<Vec<f64>> = gs
        .steps
        .par_iter()
        .map(|gens| {
            words
                .iter()
                .zip(&limit_values)
                .map(|(w, lim)| frobenius(&(evaluate(w, gens) - lim)))
                .collect()
        })
        .collect();
    let generator_gap = gs
        .steps
        .iter()
        .map(|gens| {
            gens.iter()
                .zip(&gs.limit)
                .map(|(g, l)| frobenius(&(g - l)))
                .fold(0.0, f64::max)
        })
        .collect();
    let sup: Vec<f64> = deviations
        .iter()
        .map(|row| row.iter().copied().fold(0.0, f64::max))
        .collect();
    GeneratorAudit {
        decays: decays_tenfold(&sup),
        words,
        deviations,
        generator_gap,
        sup,
    }
}

/// `max_{g, x} ‖f ρ_U(g) x − ρ_V(g) f x‖` over sample vectors.
pub fn pair_residual(f: &Mat, rep: &CoupledRep, samples: &[CVec]) -> Result<f64> {
    if f.shape() != (rep.v.dim(), rep.u.dim()) {
        return Err(Error::ShapeMismatch(
            "f must map the U space to the V space".into(),
        ));
    }
    if samples.iter().any(|x| x.len() != rep.u.dim()) {
        return Err(Error::ShapeMismatch(
            "samples must live in the U space".into(),
        ));
    }
    Ok(rep
        .u
        .images()
        .iter()
        .zip(rep.v.images())
        .map(|(ru, rv)| {
            let defect = f * ru - rv * f;
            samples
                .iter()
                .map(|x| (&defect * x).norm())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosednessDemo {
    /// Residual of each step pair.
    pub step_residuals: Vec<f64>,
    /// Residual of the limit map against each step realization.
    pub residuals: Vec<f64>,
    pub limit_residual: f64,
    /// Triangle-inequality bound on the limit residual from step `n`.
    pub bounds: Vec<f64>,
    pub within_bound: bool,
}

/// Tracks how equivariance of `(f_n, ρ_n)` carries over to `(f_lim, ρ_lim)`.
pub fn equivariance_closedness_demo(
    f_seq: &[Mat],
    rep_seq: &[CoupledRep],
    f_lim: &Mat,
    rep_lim: &CoupledRep,
    samples: &[CVec],
) -> Result<ClosednessDemo> {
    if f_seq.len() != rep_seq.len() {
        return Err(Error::ShapeMismatch("one map per realization".into()));
    }
    let order = rep_lim.u.images().len();
    if rep_seq.iter().any(|r| r.u.images().len() != order) {
        return Err(Error::InvalidInput(
            "realizations of different tables".into(),
        ));
    }
    let step_residuals = f_seq
        .iter()
        .zip(rep_seq)
        .map(|(f, r)| pair_residual(f, r, samples))
        .collect::<Result<Vec<_>>>()?;
    if let Some(n) = step_residuals.iter().position(|&r| r > 1e-9) {
        return Err(Error::HypothesisViolated {
            hypothesis: "every step pair is equivariant".into(),
            witness: Some(n),
        });
    }
    let residuals = rep_seq
        .iter()
        .map(|r| pair_residual(f_lim, r, samples))
        .collect::<Result<Vec<_>>>()?;
    let limit_residual = pair_residual(f_lim, rep_lim, samples)?;
    let x_max = samples.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let f_lim_norm = operator_norm(f_lim);
    let bounds: Vec<f64> = f_seq
        .iter()
        .zip(rep_seq)
        .zip(&step_residuals)
        .map(|((f, r), own)| {
            let df = operator_norm(&(f_lim - f));
            let gap = (0..order)
                .map(|g| {
                    let (ul, vl) = (&rep_lim.u.images()[g], &rep_lim.v.images()[g]);
                    let (un, vn) = (&r.u.images()[g], &r.v.images()[g]);
                    df * operator_norm(ul)
                        + operator_norm(f) * operator_norm(&(ul - un))
                        + operator_norm(&(vl - vn)) * f_lim_norm
                        + operator_norm(vn) * df
                })
                .fold(0.0, f64::max);
            own + x_max * gap
        })
        .collect();
    let best = bounds.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ClosednessDemo {
        within_bound: limit_residual <= best * (1.0 + 1e-9) + 1e-12,
        step_residuals,
        residuals,
        limit_residual,
        bounds,
    })
}

/// `radii × angles` polar grid over the annulus `r_min ≤ ‖x‖ ≤ r_max`.
pub fn annulus_grid(radii: usize, angles: usize, r_min: f64, r_max: f64) -> Vec<[f64; 2]> {
    let mut grid = Vec::with_capacity(radii * angles);
    for i in 0..radii {
        let r = if radii == 1 {
            r_min
        } else {
            r_min + (r_max - r_min) * i as f64 / (radii - 1) as f64
        };
        for j in 0..angles {
            let th = std::f64::consts::TAU * j as f64 / angles as f64;
            grid.push([r * th.cos(), r * th.sin()]);
        }
    }
    grid
}

pub fn circle_grid(points: usize, radius: f64) -> Vec<[f64; 2]> {
    annulus_grid(1, points, radius, radius)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpiralReport {
    /// Largest distance from a grid point to the sampled orbit.
    pub coverage: f64,
    /// Per grid point distance to the orbit.
    pub distances: Vec<f64>,
    /// Any 1-Lipschitz function constant along the orbit varies by at most
    /// this much across the grid.
    pub collapse: f64,
    /// Fraction of orbit samples inside the unit disc, the value the orbit
    /// average of the radial indicator assigns to every grid point.
    pub radial_average: f64,
}

/// Orbit `t ↦ e^{εt}(cos t, sin t)` of `exp(t [[ε, −1], [1, ε]])` through
/// `(1, 0)`, sampled at `n_samples` equally spaced times.
pub fn spiral_orbit(eps: f64, t_range: (f64, f64), n_samples: usize) -> Vec<[f64; 2]> {
    let (t0, t1) = t_range;
    let step = if n_samples > 1 {
        (t1 - t0) / (n_samples - 1) as f64
    } else {
        0.0
    };
    (0..n_samples)
        .map(|k| {
            let t = t0 + step * k as f64;
            let r = (eps * t).exp();
            [r * t.cos(), r * t.sin()]
        })
        .collect()
}

pub fn spiral_orbit_demo(
    eps: f64,
    t_range: (f64, f64),
    n_samples: usize,
    grid: &[[f64; 2]],
) -> Result<SpiralReport> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidInput("eps must be nonnegative".into()));
    }
    if n_samples == 0 || grid.is_empty() || t_range.1 < t_range.0 {
        return Err(Error::EmptyCloud);
    }
    let orbit = spiral_orbit(eps, t_range, n_samples);
    let distances: Vec<f64> = grid
        .par_iter()
        .map(|p| {
            orbit
                .iter()
                .map(|q| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2))
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect();
    let coverage = distances.iter().copied().fold(0.0, f64::max);
    let inside = orbit.iter().filter(|q| q[0].hypot(q[1]) <= 1.0).count();
    Ok(SpiralReport {
        coverage,
        collapse: 2.0 * coverage,
        radial_average: inside as f64 / n_samples as f64,
        distances,
    })
}
