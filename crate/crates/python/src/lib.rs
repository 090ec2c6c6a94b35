//! Python bindings. Matrices cross the boundary as lists of rows of Python
//! `complex` (real numbers are accepted on input).

use eqsym::algebra::{
    classify, close_generators, GeneratorSet, SemigroupTable, DEFAULT_CLOSURE_CAP,
};
use eqsym::conv::{conv_completeness_check, symmetry_enumeration, GSpace};
use eqsym::converge::{annulus_grid, circle_grid, hausdorff, spiral_orbit_demo, MatCloud};
use eqsym::linalg::{Mat, C64, DEFAULT_TOL};
use eqsym::nonuniq::{unlearnability_audit, FiniteLearnabilityInstance};
use eqsym::rep::{
    decompose, intertwiner_basis, pair_symmetry_space, predicted_pair_space,
    CoupledRep as CoreCoupled, Rep as CoreRep, DEFAULT_SEED,
};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

create_exception!(eqsym_py, EqsymError, PyException);

/// Library errors become `EqsymError("[module] message")`.
fn err(module: &'static str) -> impl Fn(eqsym::Error) -> PyErr {
    move |e| EqsymError::new_err(format!("[{module}] {e}"))
}

type Rows = Vec<Vec<C64>>;

fn to_mat(rows: &Rows) -> PyResult<Mat> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err(
            "matrix must be a non-empty list of equal-length rows",
        ));
    }
    Ok(Mat::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn to_rows(m: &Mat) -> Rows {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

/// A finite semigroup given by its Cayley table.
#[pyclass(module = "eqsym_py")]
struct Semigroup {
    inner: SemigroupTable,
}

#[pymethods]
impl Semigroup {
    #[new]
    fn new(table: Vec<Vec<usize>>) -> PyResult<Self> {
        SemigroupTable::from_table(table)
            .map(|inner| Semigroup { inner })
            .map_err(err("algebra-core"))
    }

    /// Closes permutation generators; returns the semigroup and the
    /// permutation realizing each element.
    #[staticmethod]
    #[pyo3(signature = (gens, cap = DEFAULT_CLOSURE_CAP))]
    fn from_permutations(gens: Vec<Vec<usize>>, cap: usize) -> PyResult<(Self, Vec<Vec<usize>>)> {
        let (t, real) = close_generators(&GeneratorSet::permutations(gens).with_cap(cap))
            .map_err(err("algebra-core"))?;
        let perms = real.permutations().map(<[_]>::to_vec).unwrap_or_default();
        Ok((Semigroup { inner: t }, perms))
    }

    #[staticmethod]
    fn cyclic(n: usize) -> Self {
        Semigroup {
            inner: SemigroupTable::cyclic(n),
        }
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    #[getter]
    fn table(&self) -> Vec<Vec<usize>> {
        self.inner.table().to_vec()
    }

    #[getter]
    fn identity(&self) -> Option<usize> {
        self.inner.identity()
    }

    fn is_group(&self) -> bool {
        self.inner.is_group()
    }

    fn is_abelian(&self) -> bool {
        classify(&self.inner).is_abelian
    }

    fn __repr__(&self) -> String {
        format!("Semigroup(order={})", self.inner.order())
    }
}

/// A matrix representation of a finite semigroup.
#[pyclass(module = "eqsym_py")]
struct Rep {
    inner: CoreRep,
}

#[pymethods]
impl Rep {
    /// Closes matrix generators and represents the closure by itself.
    #[staticmethod]
    #[pyo3(signature = (gens, tol = DEFAULT_TOL, cap = DEFAULT_CLOSURE_CAP))]
    fn from_generators(gens: Vec<Rows>, tol: f64, cap: usize) -> PyResult<Self> {
        let mats = gens.iter().map(to_mat).collect::<PyResult<Vec<_>>>()?;
        CoreRep::from_generators(GeneratorSet::matrices(mats).with_tol(tol).with_cap(cap))
            .map(|inner| Rep { inner })
            .map_err(err("rep-theory"))
    }

    #[staticmethod]
    fn regular(s: &Semigroup) -> Self {
        Rep {
            inner: CoreRep::regular(&s.inner),
        }
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn semigroup(&self) -> Semigroup {
        Semigroup {
            inner: self.inner.table().clone(),
        }
    }

    fn images(&self) -> Vec<Rows> {
        self.inner.images().iter().map(to_rows).collect()
    }

    /// `(irrep_dim, multiplicity)` for each isotypic component.
    #[pyo3(signature = (seed = DEFAULT_SEED, tol = DEFAULT_TOL))]
    fn decompose(&self, seed: u64, tol: f64) -> PyResult<Vec<(usize, usize)>> {
        let dec = decompose(&self.inner, seed, tol).map_err(err("rep-theory"))?;
        Ok(dec
            .blocks
            .iter()
            .map(|b| (b.irrep_dim, b.multiplicity))
            .collect())
    }
}

/// Two representations of one semigroup, closed from generator pairs.
#[pyclass(module = "eqsym_py")]
struct CoupledRep {
    inner: CoreCoupled,
}

#[pymethods]
impl CoupledRep {
    #[new]
    #[pyo3(signature = (pairs, tol = DEFAULT_TOL, cap = DEFAULT_CLOSURE_CAP))]
    fn new(pairs: Vec<(Rows, Rows)>, tol: f64, cap: usize) -> PyResult<Self> {
        let pairs = pairs
            .iter()
            .map(|(u, v)| Ok((to_mat(u)?, to_mat(v)?)))
            .collect::<PyResult<Vec<_>>>()?;
        CoreCoupled::from_generator_pairs(&pairs, cap, tol)
            .map(|inner| CoupledRep { inner })
            .map_err(err("rep-theory"))
    }

    #[getter]
    fn u(&self) -> Rep {
        Rep {
            inner: self.inner.u.clone(),
        }
    }

    #[getter]
    fn v(&self) -> Rep {
        Rep {
            inner: self.inner.v.clone(),
        }
    }

    /// Orthonormal basis of the equivariant maps `U → V`.
    #[pyo3(signature = (tol = DEFAULT_TOL))]
    fn intertwiners(&self, tol: f64) -> PyResult<Vec<Rows>> {
        let space = intertwiner_basis(&self.inner, tol).map_err(err("rep-theory"))?;
        Ok(space.basis().iter().map(to_rows).collect())
    }

    /// Dimension of the space of pairs `(t_U, t_V)` preserving every
    /// intertwiner.
    #[pyo3(signature = (tol = DEFAULT_TOL))]
    fn pair_space_dim(&self, tol: f64) -> PyResult<usize> {
        pair_symmetry_space(&self.inner, tol)
            .map(|s| s.dim())
            .map_err(err("rep-theory"))
    }

    /// The same dimension read off the isotypic decompositions.
    #[pyo3(signature = (seed = DEFAULT_SEED, tol = DEFAULT_TOL))]
    fn predicted_pair_space_dim(&self, seed: u64, tol: f64) -> PyResult<usize> {
        let du = decompose(&self.inner.u, seed, tol).map_err(err("rep-theory"))?;
        let dv = decompose(&self.inner.v, seed, tol).map_err(err("rep-theory"))?;
        predicted_pair_space(&du, &dv, tol)
            .map(|s| s.dim())
            .map_err(err("rep-theory"))
    }
}

fn space(t: &SemigroupTable, action: Option<Vec<Vec<usize>>>) -> PyResult<GSpace> {
    match action {
        None => Ok(GSpace::regular(t)),
        Some(a) => GSpace::new(t.clone(), a, None).map_err(err("convolution")),
    }
}

/// `(complete, residual, equivariant_dim, conv_dim)`; actions default to the
/// left regular action.
#[pyfunction]
#[pyo3(signature = (s, x_action = None, y_action = None, tol = DEFAULT_TOL))]
fn conv_completeness(
    s: &Semigroup,
    x_action: Option<Vec<Vec<usize>>>,
    y_action: Option<Vec<Vec<usize>>>,
    tol: f64,
) -> PyResult<(bool, f64, usize, usize)> {
    let (gx, gy) = (space(&s.inner, x_action)?, space(&s.inner, y_action)?);
    let c = conv_completeness_check(&gx, &gy, tol).map_err(err("convolution"))?;
    Ok((c.complete, c.residual, c.equivariant_dim, c.conv_dim))
}

/// Surviving `(t_X, t_Y)` pairs and whether they are exactly the group image.
#[pyfunction]
#[pyo3(signature = (s, x_action = None, y_action = None, tol = DEFAULT_TOL, seed = DEFAULT_SEED))]
#[allow(clippy::type_complexity)]
fn enumerate_symmetries(
    s: &Semigroup,
    x_action: Option<Vec<Vec<usize>>>,
    y_action: Option<Vec<Vec<usize>>>,
    tol: f64,
    seed: u64,
) -> PyResult<(Vec<(Vec<usize>, Vec<usize>)>, bool)> {
    let (gx, gy) = (space(&s.inner, x_action)?, space(&s.inner, y_action)?);
    let r = symmetry_enumeration(&gx, &gy, tol, seed).map_err(err("convolution"))?;
    Ok((r.survivors, r.equals_group_image))
}

/// Hausdorff distance between two finite matrix clouds.
#[pyfunction]
#[pyo3(signature = (a, b, window = f64::INFINITY))]
fn hausdorff_distance(a: Vec<Rows>, b: Vec<Rows>, window: f64) -> PyResult<f64> {
    let cloud = |pts: &[Rows]| -> PyResult<MatCloud> {
        let mats = pts.iter().map(to_mat).collect::<PyResult<Vec<_>>>()?;
        MatCloud::new(mats, window).map_err(err("convergence-lab"))
    };
    hausdorff(&cloud(&a)?, &cloud(&b)?).map_err(err("convergence-lab"))
}

/// Largest distance from a grid point to the sampled spiral orbit. The grid
/// is an annulus `(radii, angles, r_min, r_max)` or, with `circle`, points
/// on the unit circle.
#[pyfunction]
#[pyo3(signature = (eps, t0, t1, samples, radii = 4, angles = 16, r_min = 0.5, r_max = 2.0, circle = None))]
#[allow(clippy::too_many_arguments)]
fn spiral_coverage(
    eps: f64,
    t0: f64,
    t1: f64,
    samples: usize,
    radii: usize,
    angles: usize,
    r_min: f64,
    r_max: f64,
    circle: Option<usize>,
) -> PyResult<f64> {
    let grid = match circle {
        Some(n) => circle_grid(n, 1.0),
        None => annulus_grid(radii, angles, r_min, r_max),
    };
    spiral_orbit_demo(eps, (t0, t1), samples, &grid)
        .map(|r| r.coverage)
        .map_err(err("convergence-lab"))
}

/// Unlearnable `(f, γ)` index pairs and the symmetries in tradeoff conflict.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn unlearnability(
    relation: Vec<Vec<bool>>,
    ansatz: Vec<(usize, usize)>,
    h: Vec<usize>,
) -> PyResult<(Vec<(usize, usize)>, Vec<usize>)> {
    let nf = relation.len();
    let ng = relation.first().map_or(0, Vec::len);
    let inst = FiniteLearnabilityInstance {
        functions: (0..nf).map(|f| format!("f{f}")).collect(),
        symmetries: (0..ng).map(|g| format!("g{g}")).collect(),
        relation,
        ansatz,
        h,
    };
    let r = unlearnability_audit(&inst).map_err(err("nonuniqueness"))?;
    Ok((r.unlearnable, r.tradeoff_conflicts))
}

#[pymodule]
fn eqsym_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("EqsymError", m.py().get_type::<EqsymError>())?;
    m.add_class::<Semigroup>()?;
    m.add_class::<Rep>()?;
    m.add_class::<CoupledRep>()?;
    m.add_function(wrap_pyfunction!(conv_completeness, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_symmetries, m)?)?;
    m.add_function(wrap_pyfunction!(hausdorff_distance, m)?)?;
    m.add_function(wrap_pyfunction!(spiral_coverage, m)?)?;
    m.add_function(wrap_pyfunction!(unlearnability, m)?)?;
    Ok(())
}
