//! Finite semigroups, monoids and groups given by Cayley tables, their
//! closure from generators, and structural checks on their actions.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::error::{Error, Result};
use crate::linalg::{max_abs_diff, permutation_matrix, Mat, DEFAULT_TOL};
use crate::matindex::{Lookup, MatIndex, Metric};

/// Default cap on the number of elements produced by [`close_generators`].
pub const DEFAULT_CLOSURE_CAP: usize = 10_000;

/// Abstract finite semigroup: `table[i][j]` is the index of `i · j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SemigroupTable {
    table: Vec<Vec<usize>>,
    identity: Option<usize>,
    inverses: Option<Vec<usize>>,
    labels: Option<Vec<String>>,
}

/// Result of an exhaustive structural scan of a table.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub is_monoid: bool,
    pub is_group: bool,
    pub is_abelian: bool,
    pub identity: Option<usize>,
    pub inverses: Option<Vec<usize>>,
    pub center: Vec<usize>,
}

impl SemigroupTable {
    /// Validates shape, index range and associativity.
    pub fn from_table(table: Vec<Vec<usize>>) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::InvalidInput("empty Cayley table".into()));
        }
        for row in &table {
            if row.len() != n {
                return Err(Error::InvalidInput("Cayley table is not square".into()));
            }
            if row.iter().any(|&k| k >= n) {
                return Err(Error::InvalidInput(
                    "Cayley table entry out of range".into(),
                ));
            }
        }
        let t = Self::from_table_unchecked(table);
        if let Some((i, j, k)) = t.associativity_failure() {
            return Err(Error::InvalidInput(format!(
                "not associative at ({i}, {j}, {k})"
            )));
        }
        Ok(t)
    }

    pub(crate) fn from_table_unchecked(table: Vec<Vec<usize>>) -> Self {
        let mut t = SemigroupTable {
            table,
            identity: None,
            inverses: None,
            labels: None,
        };
        t.identity = t.find_identity();
        t.inverses = t.identity.and_then(|e| t.find_inverses(e));
        t
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.order() {
            return Err(Error::InvalidInput(
                "label count does not match order".into(),
            ));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Cyclic group `Z_n` with element `k` standing for `k mod n`.
    pub fn cyclic(n: usize) -> Self {
        assert!(n > 0);
        let table = (0..n)
            .map(|i| (0..n).map(|j| (i + j) % n).collect())
            .collect();
        Self::from_table_unchecked(table)
    }

    /// `({0, …, n-1}, max)`, a commutative monoid with identity 0.
    pub fn max_monoid(n: usize) -> Self {
        assert!(n > 0);
        let table = (0..n).map(|i| (0..n).map(|j| i.max(j)).collect()).collect();
        Self::from_table_unchecked(table)
    }

    /// Direct product; element `(a, b)` has index `a * |B| + b`.
    pub fn direct_product(a: &SemigroupTable, b: &SemigroupTable) -> Self {
        let (na, nb) = (a.order(), b.order());
        let table = (0..na * nb)
            .map(|i| {
                (0..na * nb)
                    .map(|j| a.mul(i / nb, j / nb) * nb + b.mul(i % nb, j % nb))
                    .collect()
            })
            .collect();
        Self::from_table_unchecked(table)
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    #[inline]
    pub fn mul(&self, i: usize, j: usize) -> usize {
        self.table[i][j]
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }

    pub fn identity(&self) -> Option<usize> {
        self.identity
    }

    pub fn inverses(&self) -> Option<&[usize]> {
        self.inverses.as_deref()
    }

    pub fn inverse(&self, i: usize) -> Option<usize> {
        self.inverses.as_ref().map(|inv| inv[i])
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn is_group(&self) -> bool {
        self.inverses.is_some()
    }

    /// First triple violating associativity, if any. O(n³).
    pub fn associativity_failure(&self) -> Option<(usize, usize, usize)> {
        let n = self.order();
        for i in 0..n {
            for j in 0..n {
                let ij = self.mul(i, j);
                for k in 0..n {
                    if self.mul(ij, k) != self.mul(i, self.mul(j, k)) {
                        return Some((i, j, k));
                    }
                }
            }
        }
        None
    }

    fn find_identity(&self) -> Option<usize> {
        let n = self.order();
        (0..n).find(|&e| (0..n).all(|i| self.mul(e, i) == i && self.mul(i, e) == i))
    }

    fn find_inverses(&self, e: usize) -> Option<Vec<usize>> {
        let n = self.order();
        (0..n)
            .map(|i| (0..n).find(|&j| self.mul(i, j) == e && self.mul(j, i) == e))
            .collect()
    }

    /// Sub-semigroup generated by `gens`, as a sorted index list.
    pub fn generated_by(&self, gens: &[usize]) -> Vec<usize> {
        let mut seen: HashSet<usize> = gens.iter().copied().collect();
        let mut queue: VecDeque<usize> = gens.iter().copied().collect();
        while let Some(x) = queue.pop_front() {
            for &g in gens {
                let y = self.mul(x, g);
                if seen.insert(y) {
                    queue.push_back(y);
                }
            }
        }
        let mut out: Vec<_> = seen.into_iter().collect();
        out.sort_unstable();
        out
    }

    /// Greedy generating set: scans elements in index order and keeps each
    /// one not already generated by the previous picks.
    pub fn generating_set(&self) -> Vec<usize> {
        let mut gens = Vec::new();
        let mut covered = vec![false; self.order()];
        for i in 0..self.order() {
            if !covered[i] {
                gens.push(i);
                for k in self.generated_by(&gens) {
                    covered[k] = true;
                }
            }
        }
        gens
    }

    /// Regular left action: element `g` maps `h` to `g · h`.
    pub fn left_regular_action(&self) -> Realization {
        Realization::Permutation {
            degree: self.order(),
            images: (0..self.order()).map(|g| self.table[g].clone()).collect(),
        }
    }
}

/// Exhaustive scan for identity, inverses, commutativity and center.
pub fn classify(t: &SemigroupTable) -> Classification {
    let n = t.order();
    let identity = t.find_identity();
    let inverses = identity.and_then(|e| t.find_inverses(e));
    let center: Vec<usize> = (0..n)
        .filter(|&i| (0..n).all(|j| t.mul(i, j) == t.mul(j, i)))
        .collect();
    Classification {
        is_monoid: identity.is_some(),
        is_group: inverses.is_some(),
        is_abelian: center.len() == n,
        identity,
        inverses,
        center,
    }
}

/// Realization of the elements of a semigroup as permutations of `[degree]`
/// or as square complex matrices.
#[derive(Debug, Clone, PartialEq)]
pub enum Realization {
    Permutation {
        degree: usize,
        images: Vec<Vec<usize>>,
    },
    Matrix {
        dim: usize,
        images: Vec<Mat>,
    },
}

/// `(p ∘ q)(x) = p(q(x))`.
pub fn compose(p: &[usize], q: &[usize]) -> Vec<usize> {
    q.iter().map(|&x| p[x]).collect()
}

pub fn invert_permutation(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (x, &y) in p.iter().enumerate() {
        inv[y] = x;
    }
    inv
}

pub fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    for &y in p {
        if y >= p.len() || seen[y] {
            return false;
        }
        seen[y] = true;
    }
    true
}

impl Realization {
    pub fn len(&self) -> usize {
        match self {
            Realization::Permutation { images, .. } => images.len(),
            Realization::Matrix { images, .. } => images.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Degree of the permutations or dimension of the matrices.
    pub fn degree(&self) -> usize {
        match self {
            Realization::Permutation { degree, .. } => *degree,
            Realization::Matrix { dim, .. } => *dim,
        }
    }

    pub fn permutations(&self) -> Option<&[Vec<usize>]> {
        match self {
            Realization::Permutation { images, .. } => Some(images),
            Realization::Matrix { .. } => None,
        }
    }

    /// Images as matrices; permutations become permutation matrices.
    pub fn matrices(&self) -> Vec<Mat> {
        match self {
            Realization::Permutation { images, .. } => {
                images.iter().map(|p| permutation_matrix(p)).collect()
            }
            Realization::Matrix { images, .. } => images.clone(),
        }
    }

    /// Largest deviation from `image(i·j) = image(i) ∘ image(j)`; exact
    /// permutation mismatches count as 1.
    pub fn homomorphism_defect(&self, t: &SemigroupTable) -> f64 {
        let n = t.order();
        assert_eq!(self.len(), n, "realization size does not match table");
        let mut worst: f64 = 0.0;
        match self {
            Realization::Permutation { images, .. } => {
                for i in 0..n {
                    for j in 0..n {
                        if images[t.mul(i, j)] != compose(&images[i], &images[j]) {
                            return 1.0;
                        }
                    }
                }
            }
            Realization::Matrix { images, .. } => {
                for i in 0..n {
                    for j in 0..n {
                        let prod = &images[i] * &images[j];
                        worst = worst.max(max_abs_diff(&images[t.mul(i, j)], &prod));
                    }
                }
            }
        }
        worst
    }
}

#[derive(Debug, Clone)]
pub enum Generators {
    Permutations(Vec<Vec<usize>>),
    Matrices(Vec<Mat>),
}

/// Generators plus the closure policy: element cap and matching tolerance.
#[derive(Debug, Clone)]
pub struct GeneratorSet {
    pub gens: Generators,
    pub closure_cap: usize,
    pub tol: f64,
}

impl GeneratorSet {
    pub fn permutations(perms: Vec<Vec<usize>>) -> Self {
        GeneratorSet {
            gens: Generators::Permutations(perms),
            closure_cap: DEFAULT_CLOSURE_CAP,
            tol: DEFAULT_TOL,
        }
    }

    pub fn matrices(mats: Vec<Mat>) -> Self {
        GeneratorSet {
            gens: Generators::Matrices(mats),
            closure_cap: DEFAULT_CLOSURE_CAP,
            tol: DEFAULT_TOL,
        }
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.closure_cap = cap;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    fn validate(&self) -> Result<()> {
        match &self.gens {
            Generators::Permutations(ps) => {
                let first = ps
                    .first()
                    .ok_or_else(|| Error::InvalidInput("no generators".into()))?;
                for p in ps {
                    if p.len() != first.len() || !is_permutation(p) {
                        return Err(Error::InvalidInput(format!(
                            "generator {p:?} is not a permutation of [{}]",
                            first.len()
                        )));
                    }
                }
            }
            Generators::Matrices(ms) => {
                let first = ms
                    .first()
                    .ok_or_else(|| Error::InvalidInput("no generators".into()))?;
                if !first.is_square() {
                    return Err(Error::InvalidInput("generators must be square".into()));
                }
                for m in ms {
                    if m.shape() != first.shape() {
                        return Err(Error::InvalidInput("generators differ in dimension".into()));
                    }
                    if !crate::linalg::is_finite(m) {
                        return Err(Error::InvalidInput("non-finite generator entry".into()));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Closes a generator set under products.
///
/// Elements are indexed generators first (duplicates dropped), then in
/// breadth-first order of right multiplication by generators. Matrix
/// elements are identified when their max-abs entry distance is within
/// `tol`.
pub fn close_generators(gens: &GeneratorSet) -> Result<(SemigroupTable, Realization)> {
    gens.validate()?;
    match &gens.gens {
        Generators::Permutations(ps) => close_permutations(ps, gens.closure_cap),
        Generators::Matrices(ms) => close_matrices(ms, gens.closure_cap, gens.tol),
    }
}

fn close_permutations(gens: &[Vec<usize>], cap: usize) -> Result<(SemigroupTable, Realization)> {
    let degree = gens[0].len();
    let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut elems: Vec<Vec<usize>> = Vec::new();
    let mut gen_ids = Vec::new();
    for g in gens {
        let id = *index.entry(g.clone()).or_insert_with(|| {
            elems.push(g.clone());
            elems.len() - 1
        });
        gen_ids.push(id);
    }
    let mut k = 0;
    while k < elems.len() {
        for &g in &gen_ids {
            let prod = compose(&elems[k], &elems[g]);
            if !index.contains_key(&prod) {
                if elems.len() >= cap {
                    return Err(Error::CapExceeded { cap });
                }
                index.insert(prod.clone(), elems.len());
                elems.push(prod);
            }
        }
        k += 1;
    }
    let n = elems.len();
    let table = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| index[&compose(&elems[i], &elems[j])])
                .collect()
        })
        .collect();
    Ok((
        SemigroupTable::from_table_unchecked(table),
        Realization::Permutation {
            degree,
            images: elems,
        },
    ))
}

fn close_matrices(gens: &[Mat], cap: usize, tol: f64) -> Result<(SemigroupTable, Realization)> {
    let dim = gens[0].nrows();
    let mut index = MatIndex::new(dim * dim, tol, Metric::MaxAbs);
    let mut gen_ids = Vec::new();
    let find_or_insert = |index: &mut MatIndex, m: Mat| -> Result<(usize, bool)> {
        match index.lookup(&m) {
            Lookup::Found(id) => Ok((id, false)),
            Lookup::Ambiguous(first, second) => Err(Error::AmbiguousMatch { first, second, tol }),
            Lookup::Missing => {
                if index.len() >= cap {
                    return Err(Error::CapExceeded { cap });
                }
                Ok((index.push(m), true))
            }
        }
    };
    for g in gens {
        let (id, _) = find_or_insert(&mut index, g.clone())?;
        gen_ids.push(id);
    }
    let mut k = 0;
    while k < index.len() {
        for &g in &gen_ids {
            let prod = &index.items()[k] * &index.items()[g];
            find_or_insert(&mut index, prod)?;
        }
        k += 1;
    }
    let n = index.len();
    let mut table = vec![vec![0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let prod = &index.items()[i] * &index.items()[j];
            table[i][j] = match index.lookup(&prod) {
                Lookup::Found(id) => id,
                Lookup::Ambiguous(first, second) => {
                    return Err(Error::AmbiguousMatch { first, second, tol })
                }
                Lookup::Missing => {
                    return Err(Error::InternalInconsistency(format!(
                        "product of elements {i} and {j} left the closed set; tolerance too tight"
                    )))
                }
            };
        }
    }
    Ok((
        SemigroupTable::from_table_unchecked(table),
        Realization::Matrix {
            dim,
            images: index.into_items(),
        },
    ))
}

/// Which hypothesis set of the transitive image-equality criterion to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageEqualityMode {
    /// Right actions of `S` and `T`, with `alpha` transitive.
    RightTransitive,
    /// Left actions, `alpha` transitive, `S` abelian and `phi(S)` central in `T`.
    LeftAbelianCentral,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageEquality {
    pub equal: bool,
    /// Number of distinct transformations in `alpha(S)` and `beta(T)`.
    pub alpha_images: usize,
    pub beta_images: usize,
    /// Some `t` with `beta(t)` outside `alpha(S)`.
    pub witness: Option<usize>,
}

/// Checks whether a homomorphism `phi: S → T` with `alpha = beta ∘ phi` and a
/// transitive `alpha` forces `alpha(S) = beta(T)`.
///
/// Every hypothesis is verified; a failing one is reported as
/// `HypothesisViolated` carrying a witness `t` with `beta(t) ∉ alpha(S)` when
/// one exists. In left mode verified hypotheses force the images to coincide
/// and a mismatch is an `InternalInconsistency`. Right-mode hypotheses do not
/// suffice on their own; a mismatch there comes back as `equal = false`.
pub fn transitive_image_equality(
    s: &SemigroupTable,
    t: &SemigroupTable,
    phi: &[usize],
    alpha: &Realization,
    beta: &Realization,
    mode: ImageEqualityMode,
) -> Result<ImageEquality> {
    let (a_imgs, b_imgs) = match (alpha.permutations(), beta.permutations()) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::InvalidInput(
                "image equality needs permutation realizations".into(),
            ))
        }
    };
    if a_imgs.len() != s.order() || b_imgs.len() != t.order() || phi.len() != s.order() {
        return Err(Error::InvalidInput(
            "sizes of S, T, phi and realizations disagree".into(),
        ));
    }
    if alpha.degree() != beta.degree() {
        return Err(Error::InvalidInput(
            "alpha and beta act on different sets".into(),
        ));
    }
    if phi.iter().any(|&x| x >= t.order()) {
        return Err(Error::InvalidInput("phi maps outside T".into()));
    }

    let alpha_set: HashSet<&Vec<usize>> = a_imgs.iter().collect();
    let beta_set: HashSet<&Vec<usize>> = b_imgs.iter().collect();
    let witness = (0..t.order()).find(|&k| !alpha_set.contains(&b_imgs[k]));

    let violated = |msg: &str| Error::HypothesisViolated {
        hypothesis: msg.to_string(),
        witness,
    };

    let ns = s.order();
    for i in 0..ns {
        for j in 0..ns {
            if phi[s.mul(i, j)] != t.mul(phi[i], phi[j]) {
                return Err(violated("phi is not a homomorphism"));
            }
        }
    }
    if (0..ns).any(|i| a_imgs[i] != b_imgs[phi[i]]) {
        return Err(violated("alpha != beta . phi"));
    }
    let right = mode == ImageEqualityMode::RightTransitive;
    let acts = |imgs: &[Vec<usize>], tab: &SemigroupTable| {
        (0..tab.order()).all(|i| {
            (0..tab.order()).all(|j| {
                let expect = if right {
                    compose(&imgs[j], &imgs[i])
                } else {
                    compose(&imgs[i], &imgs[j])
                };
                imgs[tab.mul(i, j)] == expect
            })
        })
    };
    if !acts(a_imgs, s) {
        return Err(violated(if right {
            "alpha is not a right action"
        } else {
            "alpha is not a left action"
        }));
    }
    if !acts(b_imgs, t) {
        return Err(violated(if right {
            "beta is not a right action"
        } else {
            "beta is not a left action"
        }));
    }
    let degree = alpha.degree();
    let transitive = (0..degree).any(|x0| {
        let orbit: HashSet<usize> = a_imgs.iter().map(|p| p[x0]).collect();
        orbit.len() == degree
    });
    if !transitive {
        return Err(violated("alpha is not transitive"));
    }
    if mode == ImageEqualityMode::LeftAbelianCentral {
        let cs = classify(s);
        if !cs.is_abelian {
            return Err(violated("S is not abelian"));
        }
        let ct = classify(t);
        if phi.iter().any(|x| ct.center.binary_search(x).is_err()) {
            return Err(violated("phi(S) is not contained in the center of T"));
        }
    }

    let equal = alpha_set == beta_set;
    // the right-action hypotheses alone do not force equality (Z3 inside S3
    // acting by inverses is a counterexample), so only left mode can be inconsistent
    if !equal && !right {
        return Err(Error::InternalInconsistency(
            "hypotheses verified but alpha(S) != beta(T)".into(),
        ));
    }
    Ok(ImageEquality {
        equal,
        alpha_images: alpha_set.len(),
        beta_images: beta_set.len(),
        witness,
    })
}
