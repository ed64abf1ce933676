//! Sparse exact linear algebra over the rationals: reduced row echelon
//! forms with deterministic pivoting, reused by every quotient construction.
//! Complex-coefficient vectors are reduced with the same (exact) rows
//! converted once to doubles.

use crate::scalar::{Rat, C64};
use num_traits::Zero;
use std::collections::BTreeMap;

/// A sparse vector with ordered column indices and exact entries.
pub type SparseRat = BTreeMap<u32, Rat>;

pub fn sparse_is_zero(v: &SparseRat) -> bool {
    v.values().all(|c| c.is_zero())
}

fn prune(v: &mut SparseRat) {
    v.retain(|_, c| !c.is_zero());
}

/// Reduced row echelon form built incrementally. Rows are normalized to a
/// unit pivot and fully reduced against each other, so reduction of an
/// arbitrary vector is a single elimination pass. Pivot choice is the
/// smallest column index present, which together with the global word order
/// makes the construction deterministic.
#[derive(Clone, Debug, Default)]
pub struct Echelon {
    /// pivot column -> row (row has coefficient 1 at the pivot, 0 at all
    /// other pivots)
    rows: BTreeMap<u32, SparseRat>,
    /// f64 copies of the rows, set once after construction is complete
    rows_f64: std::sync::OnceLock<BTreeMap<u32, Vec<(u32, f64)>>>,
}

impl Echelon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivots(&self) -> impl Iterator<Item = u32> + '_ {
        self.rows.keys().copied()
    }

    pub fn is_pivot(&self, col: u32) -> bool {
        self.rows.contains_key(&col)
    }

    /// Eliminate all pivots from `v` in place (canonical representative of
    /// the class of `v` modulo the row space).
    pub fn reduce(&self, v: &mut SparseRat) {
        loop {
            let hit = v
                .iter()
                .find(|(c, x)| !x.is_zero() && self.rows.contains_key(c))
                .map(|(c, x)| (*c, x.clone()));
            let Some((col, coeff)) = hit else { break };
            let row = &self.rows[&col];
            for (rc, rx) in row {
                let entry = v.entry(*rc).or_insert_with(Rat::zero);
                *entry -= &coeff * rx;
            }
            prune(v);
        }
    }

    /// Insert `v` into the row space; returns the pivot column if the vector
    /// was independent.
    pub fn insert(&mut self, mut v: SparseRat) -> Option<u32> {
        self.reduce(&mut v);
        prune(&mut v);
        let pivot = *v.keys().next()?;
        let inv = {
            let p = &v[&pivot];
            Rat::new(p.denom().clone(), p.numer().clone())
        };
        for x in v.values_mut() {
            *x *= &inv;
        }
        // back-substitute into existing rows so the form stays fully reduced
        let cols: Vec<u32> = self.rows.keys().copied().collect();
        for c in cols {
            let coeff = self.rows[&c].get(&pivot).cloned();
            if let Some(coeff) = coeff {
                if !coeff.is_zero() {
                    let row = self.rows.get_mut(&c).unwrap();
                    for (vc, vx) in &v {
                        let entry = row.entry(*vc).or_insert_with(Rat::zero);
                        *entry -= &coeff * vx;
                    }
                    prune(row);
                }
            }
        }
        self.rows.insert(pivot, v);
        debug_assert!(
            self.rows_f64.get().is_none(),
            "echelon mutated after complex reduction started"
        );
        Some(pivot)
    }

    /// The exact rows as (pivot, row-entry) pairs.
    pub fn rows_exact(&self) -> Vec<(u32, Vec<(u32, Rat)>)> {
        self.rows
            .iter()
            .map(|(p, row)| (*p, row.iter().map(|(c, x)| (*c, x.clone())).collect()))
            .collect()
    }

    fn rows_as_f64(&self) -> &BTreeMap<u32, Vec<(u32, f64)>> {
        self.rows_f64.get_or_init(|| {
            self.rows
                .iter()
                .map(|(p, row)| {
                    (
                        *p,
                        row.iter()
                            .map(|(c, x)| (*c, crate::scalar::rat_to_f64(x)))
                            .collect(),
                    )
                })
                .collect()
        })
    }

    /// Reduce a complex vector with the exact rows (converted to doubles).
    pub fn reduce_c64(&self, v: &mut BTreeMap<u32, C64>) {
        let rows = self.rows_as_f64();
        // pivots are mutually independent in RREF: one pass
        let hits: Vec<(u32, C64)> = v
            .iter()
            .filter(|(c, _)| rows.contains_key(c))
            .map(|(c, x)| (*c, *x))
            .collect();
        for (col, coeff) in hits {
            for (rc, rx) in &rows[&col] {
                let entry = v.entry(*rc).or_insert(C64::new(0.0, 0.0));
                *entry -= coeff * *rx;
            }
        }
        v.retain(|_, x| x.norm_sqr() > 0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    fn v(entries: &[(u32, (i64, i64))]) -> SparseRat {
        entries
            .iter()
            .map(|(c, (n, d))| (*c, rat(*n, *d)))
            .collect()
    }

    #[test]
    fn reduction_is_idempotent_projection() {
        let mut e = Echelon::new();
        e.insert(v(&[(0, (1, 1)), (2, (2, 1))]));
        e.insert(v(&[(1, (3, 1)), (2, (1, 1))]));
        assert_eq!(e.rank(), 2);

        let mut x = v(&[(0, (1, 1)), (1, (1, 1)), (2, (1, 1))]);
        e.reduce(&mut x);
        let mut y = x.clone();
        e.reduce(&mut y);
        assert_eq!(x, y);
        // residual must have no pivot support
        assert!(x.keys().all(|c| !e.is_pivot(*c)));
    }

    #[test]
    fn dependent_vectors_are_rejected() {
        let mut e = Echelon::new();
        assert!(e.insert(v(&[(0, (1, 1)), (1, (1, 1))])).is_some());
        assert!(e.insert(v(&[(0, (2, 1)), (1, (2, 1))])).is_none());
    }
}
