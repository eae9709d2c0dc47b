//! High-order energies over discrete variables.
//!
//! An energy is a sum of table factors `E(x) = sum_a E_a(x_a)` where `x_a` is the
//! restriction of the full labeling to the factor's scope. Tables are flat and
//! indexed by the mixed-radix code of the scope labels, first scope variable most
//! significant.

use std::ops::Deref;

use crate::error::{Error, Result};

/// Cost sentinel for forbidden configurations.
///
/// This is IEEE positive infinity: `INF + finite == INF` and `INF.min(v) == v`.
/// Tables never hold NaN or negative infinity, so sums of costs stay well defined.
pub const INF: f64 = f64::INFINITY;

/// Default cap on the number of labelings `brute_force_min` will enumerate.
pub const BRUTE_FORCE_CAP: u128 = 1 << 24;

/// Largest table a single factor may hold.
const MAX_TABLE_LEN: u128 = 1 << 28;

/// True for finite costs and the `INF` sentinel.
#[inline]
pub fn is_valid_cost(v: f64) -> bool {
    !v.is_nan() && v != f64::NEG_INFINITY
}

/// Mixed-radix code of `labels`, first entry most significant.
pub fn encode(labels: &[usize], radices: &[usize]) -> u64 {
    debug_assert_eq!(labels.len(), radices.len());
    labels
        .iter()
        .zip(radices)
        .fold(0u64, |acc, (&l, &r)| acc * r as u64 + l as u64)
}

/// Inverse of [`encode`], writing into `out`.
pub fn decode_into(mut code: u64, radices: &[usize], out: &mut [usize]) {
    for (slot, &r) in out.iter_mut().zip(radices).rev() {
        *slot = (code % r as u64) as usize;
        code /= r as u64;
    }
}

pub fn decode(code: u64, radices: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radices.len()];
    decode_into(code, radices, &mut out);
    out
}

/// Product of radices, saturating.
pub fn state_count(radices: &[usize]) -> u128 {
    radices
        .iter()
        .fold(1u128, |acc, &r| acc.saturating_mul(r as u128))
}

/// `x` restricted to `scope`, in scope order.
pub fn restrict(x: &[usize], scope: &[usize]) -> Vec<usize> {
    scope.iter().map(|&i| x[i]).collect()
}

/// A full assignment of labels to variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Labeling(pub Vec<usize>);

impl Labeling {
    pub fn zeros(n: usize) -> Self {
        Labeling(vec![0; n])
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

impl Deref for Labeling {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for Labeling {
    fn from(v: Vec<usize>) -> Self {
        Labeling(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    scope: Vec<usize>,
    table: Vec<f64>,
}

impl Factor {
    pub fn scope(&self) -> &[usize] {
        &self.scope
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// Cost of the factor for a scope assignment given in scope order.
    pub fn cost_of(&self, local: &[usize], radices: &[usize]) -> f64 {
        self.table[encode(local, radices) as usize]
    }
}

/// Variables with finite label sets and high-order table factors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FactorGraph {
    label_counts: Vec<usize>,
    factors: Vec<Factor>,
}

impl FactorGraph {
    pub fn new(label_counts: Vec<usize>) -> Result<Self> {
        if let Some(i) = label_counts.iter().position(|&k| k == 0) {
            return Err(Error::input(format!("variable {i} has no labels")));
        }
        Ok(FactorGraph {
            label_counts,
            factors: Vec::new(),
        })
    }

    /// Graph over `n` binary variables.
    pub fn binary(n: usize) -> Self {
        FactorGraph {
            label_counts: vec![2; n],
            factors: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.label_counts.len()
    }

    pub fn label_counts(&self) -> &[usize] {
        &self.label_counts
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// Radices of a scope.
    pub fn radices(&self, scope: &[usize]) -> Vec<usize> {
        scope.iter().map(|&i| self.label_counts[i]).collect()
    }

    /// Adds a factor and returns its index.
    ///
    /// The scope must be strictly increasing and the table must hold one entry per
    /// joint scope state, each finite or `INF`.
    pub fn add_factor(&mut self, scope: Vec<usize>, table: Vec<f64>) -> Result<usize> {
        if scope.is_empty() {
            return Err(Error::input("factor scope is empty"));
        }
        if scope.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::input(format!(
                "factor scope {scope:?} is not strictly increasing"
            )));
        }
        if let Some(&bad) = scope.iter().find(|&&i| i >= self.num_vars()) {
            return Err(Error::input(format!(
                "factor scope references variable {bad} but the graph has {} variables",
                self.num_vars()
            )));
        }
        let expected = state_count(&self.radices(&scope));
        if expected > MAX_TABLE_LEN {
            return Err(Error::Capacity {
                what: format!("factor table over {scope:?}"),
                needed: expected,
                cap: MAX_TABLE_LEN,
            });
        }
        if table.len() as u128 != expected {
            return Err(Error::input(format!(
                "factor over {scope:?} needs {expected} table entries, got {}",
                table.len()
            )));
        }
        if let Some(v) = table.iter().find(|v| !is_valid_cost(**v)) {
            return Err(Error::input(format!(
                "factor over {scope:?} holds invalid cost {v}"
            )));
        }
        self.factors.push(Factor { scope, table });
        Ok(self.factors.len() - 1)
    }

    pub fn add_unary(&mut self, var: usize, costs: Vec<f64>) -> Result<usize> {
        self.add_factor(vec![var], costs)
    }

    pub fn add_pairwise(&mut self, a: usize, b: usize, table: Vec<f64>) -> Result<usize> {
        if a < b {
            self.add_factor(vec![a, b], table)
        } else {
            let (ka, kb) = (self.label_count_checked(a)?, self.label_count_checked(b)?);
            // caller's table is indexed [x_a][x_b]; store as [x_b][x_a]
            if table.len() != ka * kb {
                return Err(Error::input("pairwise table has the wrong length"));
            }
            let mut swapped = vec![0.0; table.len()];
            for xa in 0..ka {
                for xb in 0..kb {
                    swapped[xb * ka + xa] = table[xa * kb + xb];
                }
            }
            self.add_factor(vec![b, a], swapped)
        }
    }

    fn label_count_checked(&self, i: usize) -> Result<usize> {
        self.label_counts
            .get(i)
            .copied()
            .ok_or_else(|| Error::input(format!("variable {i} out of range")))
    }

    /// Checks that `x` is a valid labeling for this graph.
    pub fn check_labeling(&self, x: &[usize]) -> Result<()> {
        if x.len() != self.num_vars() {
            return Err(Error::input(format!(
                "labeling has {} entries, graph has {} variables",
                x.len(),
                self.num_vars()
            )));
        }
        if let Some((i, (&v, &k))) = x
            .iter()
            .zip(&self.label_counts)
            .enumerate()
            .find(|(_, (&v, &k))| v >= k)
        {
            return Err(Error::input(format!(
                "variable {i} has label {v} but only {k} labels"
            )));
        }
        Ok(())
    }

    /// Total energy of a labeling; `INF` if any factor forbids it.
    pub fn evaluate(&self, x: &[usize]) -> Result<f64> {
        self.check_labeling(x)?;
        Ok(self.evaluate_unchecked(x))
    }

    fn evaluate_unchecked(&self, x: &[usize]) -> f64 {
        self.factors
            .iter()
            .map(|f| {
                let idx = f.scope.iter().fold(0usize, |acc, &i| {
                    acc * self.label_counts[i] + x[i]
                });
                f.table[idx]
            })
            .sum()
    }

    /// Number of full labelings, saturating.
    pub fn assignment_count(&self) -> u128 {
        state_count(&self.label_counts)
    }

    /// Exhaustive minimization with the default cap.
    pub fn brute_force_min(&self) -> Result<(Labeling, f64)> {
        self.brute_force_min_with_cap(BRUTE_FORCE_CAP)
    }

    /// Global minimizer by enumeration; ties go to the lexicographically smallest
    /// labeling.
    pub fn brute_force_min_with_cap(&self, cap: u128) -> Result<(Labeling, f64)> {
        let total = self.assignment_count();
        if total > cap {
            return Err(Error::Capacity {
                what: "exhaustive enumeration".into(),
                needed: total,
                cap,
            });
        }
        let n = self.num_vars();
        let mut x = vec![0usize; n];
        let mut best = x.clone();
        let mut best_e = self.evaluate_unchecked(&x);
        // odometer over labelings in lexicographic order, last variable fastest
        loop {
            let mut pos = n;
            loop {
                if pos == 0 {
                    return Ok((Labeling(best), best_e));
                }
                pos -= 1;
                x[pos] += 1;
                if x[pos] < self.label_counts[pos] {
                    break;
                }
                x[pos] = 0;
            }
            let e = self.evaluate_unchecked(&x);
            if e < best_e {
                best_e = e;
                best.copy_from_slice(&x);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn restrict_projects_in_scope_order() {
        assert_eq!(restrict(&[0, 1, 0], &[1]), vec![1]);
        assert_eq!(restrict(&[1, 0, 1, 1], &[0, 2, 3]), vec![1, 1, 1]);
    }

    #[test]
    fn empty_graph_has_zero_energy() {
        let g = FactorGraph::binary(3);
        assert_eq!(g.evaluate(&[1, 0, 1]).unwrap(), 0.0);
    }

    #[test]
    fn encode_first_variable_most_significant() {
        assert_eq!(encode(&[1, 0], &[2, 3]), 3);
        assert_eq!(encode(&[0, 2], &[2, 3]), 2);
        assert_eq!(decode(5, &[2, 3]), vec![1, 2]);
    }

    #[test]
    fn rejects_bad_factors() {
        let mut g = FactorGraph::binary(3);
        assert!(g.add_factor(vec![], vec![0.0]).is_err());
        assert!(g.add_factor(vec![1, 0], vec![0.0; 4]).is_err());
        assert!(g.add_factor(vec![0, 0], vec![0.0; 4]).is_err());
        assert!(g.add_factor(vec![0, 5], vec![0.0; 4]).is_err());
        assert!(g.add_factor(vec![0, 1], vec![0.0; 3]).is_err());
        assert!(g.add_factor(vec![0], vec![f64::NAN, 0.0]).is_err());
        assert!(g.add_factor(vec![0], vec![f64::NEG_INFINITY, 0.0]).is_err());
        assert!(g.add_factor(vec![0], vec![INF, 0.0]).is_ok());
    }

    #[test]
    fn evaluate_checks_dimensions() {
        let g = FactorGraph::new(vec![2, 3]).unwrap();
        assert!(matches!(g.evaluate(&[0]), Err(Error::Input(_))));
        assert!(matches!(g.evaluate(&[0, 3]), Err(Error::Input(_))));
    }

    #[test]
    fn infinite_factor_dominates() {
        let mut g = FactorGraph::binary(2);
        g.add_unary(0, vec![1.0, INF]).unwrap();
        g.add_unary(1, vec![-5.0, 2.0]).unwrap();
        assert_eq!(g.evaluate(&[1, 0]).unwrap(), INF);
        assert_eq!(g.evaluate(&[0, 0]).unwrap(), -4.0);
    }

    #[test]
    fn pairwise_with_reversed_order_is_transposed() {
        let mut g = FactorGraph::new(vec![2, 3]).unwrap();
        // table indexed [x_1][x_0]
        g.add_pairwise(1, 0, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(g.evaluate(&[1, 2]).unwrap(), 5.0);
        assert_eq!(g.evaluate(&[0, 1]).unwrap(), 2.0);
    }

    #[test]
    fn brute_force_ties_break_lexicographically() {
        let mut g = FactorGraph::binary(4);
        g.add_factor(vec![0, 1, 2, 3], vec![0.0; 16]).unwrap();
        let (x, e) = g.brute_force_min().unwrap();
        assert_eq!(e, 0.0);
        assert_eq!(x.0, vec![0, 0, 0, 0]);

        let mut g = FactorGraph::binary(2);
        g.add_factor(vec![0, 1], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(g.brute_force_min().unwrap().0 .0, vec![0, 1]);
    }

    #[test]
    fn brute_force_respects_cap() {
        let g = FactorGraph::binary(25);
        assert!(matches!(g.brute_force_min(), Err(Error::Capacity { .. })));
    }
}
