//! Tolerance-aware lookup of matrices.
//!
//! Matrices are bucketed by a fixed weighted sum of their entries. Two
//! matrices within `tol` of each other (entry-wise) have keys differing by at
//! most `width`, so probing the neighbouring buckets finds every candidate.

use std::collections::HashMap;

use crate::linalg::{frobenius, max_abs_diff, Mat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Metric {
    MaxAbs,
    Frobenius,
}

impl Metric {
    pub(crate) fn distance(self, a: &Mat, b: &Mat) -> f64 {
        match self {
            Metric::MaxAbs => max_abs_diff(a, b),
            Metric::Frobenius => frobenius(&(a - b)),
        }
    }
}

pub(crate) struct MatIndex {
    tol: f64,
    metric: Metric,
    width: f64,
    buckets: HashMap<i64, Vec<usize>>,
    items: Vec<Mat>,
}

pub(crate) enum Lookup {
    Found(usize),
    Missing,
    Ambiguous(usize, usize),
}

fn weight(k: usize) -> (f64, f64) {
    let golden = 0.618_033_988_749_895_f64;
    let a = (k as f64 * golden).fract();
    let b = ((k as f64 + 0.5) * golden * golden).fract();
    (0.5 + a, 0.5 + b)
}

impl MatIndex {
    pub(crate) fn new(entries: usize, tol: f64, metric: Metric) -> Self {
        // every weight is below 1.5; keys of tol-close matrices differ by less
        // than 3 * entries * tol
        let width = (3.0 * entries as f64 * tol).max(1e-12) * 1.01;
        MatIndex {
            tol,
            metric,
            width,
            buckets: HashMap::new(),
            items: Vec::new(),
        }
    }

    fn key(&self, m: &Mat) -> f64 {
        m.iter()
            .enumerate()
            .map(|(k, z)| {
                let (wr, wi) = weight(k);
                wr * z.re + wi * z.im
            })
            .sum()
    }

    fn bucket(&self, key: f64) -> i64 {
        (key / self.width).floor() as i64
    }

    pub(crate) fn len(&self) -> usize {
        self.items.len()
    }

    pub(crate) fn items(&self) -> &[Mat] {
        &self.items
    }

    pub(crate) fn into_items(self) -> Vec<Mat> {
        self.items
    }

    pub(crate) fn lookup(&self, m: &Mat) -> Lookup {
        let b = self.bucket(self.key(m));
        let mut found: Option<usize> = None;
        for probe in [b - 1, b, b + 1] {
            if let Some(ids) = self.buckets.get(&probe) {
                for &id in ids {
                    if self.metric.distance(&self.items[id], m) <= self.tol {
                        match found {
                            None => found = Some(id),
                            Some(prev) if prev != id => {
                                return Lookup::Ambiguous(prev.min(id), prev.max(id))
                            }
                            _ => {}
                        }
                    }
                }
            }
        }
        match found {
            Some(id) => Lookup::Found(id),
            None => Lookup::Missing,
        }
    }

    /// Appends `m` without checking for duplicates and returns its index.
    pub(crate) fn push(&mut self, m: Mat) -> usize {
        let b = self.bucket(self.key(&m));
        let id = self.items.len();
        self.items.push(m);
        self.buckets.entry(b).or_default().push(id);
        id
    }
}
