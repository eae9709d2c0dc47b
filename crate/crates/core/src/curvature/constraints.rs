use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::table::PatchCostTable;
use super::window::Window;
use crate::error::{Error, Result};
use crate::lp::{residuals, solve_lp, LinearProgram, LpOutcome};

/// One window equality: `Σ multiplicity · cost(variable) = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    /// `(variable index, multiplicity)`, sorted by variable.
    pub coeffs: Vec<(usize, u32)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSystem {
    pub patch_side: usize,
    /// Sorted patch states; costs are indexed like this list.
    pub variables: Vec<u32>,
    pub rows: Vec<Row>,
}

impl ConstraintSystem {
    pub fn variable(&self, state: u32) -> Option<usize> {
        self.variables.binary_search(&state).ok()
    }

    /// Left-hand side of every row for the given per-variable costs.
    pub fn row_sums(&self, costs: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.coeffs.iter().map(|&(v, m)| f64::from(m) * costs[v]).sum())
            .collect()
    }

    pub fn to_lp(&self, objective: Vec<f64>) -> Result<LinearProgram> {
        let n = self.variables.len();
        let matrix = self
            .rows
            .iter()
            .map(|r| {
                let mut dense = vec![0.0; n];
                for &(v, m) in &r.coeffs {
                    dense[v] = f64::from(m);
                }
                dense
            })
            .collect();
        LinearProgram::new(objective, matrix, self.rows.iter().map(|r| r.rhs).collect())
    }
}

/// One equality per window over the states of its interior `s × s` patches.
/// Variables are exactly the states that occur in some window.
pub fn assemble_constraints(windows: &[Window], s: usize) -> Result<ConstraintSystem> {
    if s == 0 || s * s > 25 {
        return Err(Error::input(format!("patch side {s} not supported")));
    }
    if let Some(w) = windows.iter().find(|w| w.side <= s) {
        return Err(Error::input(format!("window side {} must exceed patch side {s}", w.side)));
    }
    let states: Vec<Vec<u32>> = windows.iter().map(|w| w.patch_states(s)).collect();
    let variables: Vec<u32> = states.iter().flatten().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let mut seen = BTreeSet::new();
    let mut rows = Vec::new();
    for (w, st) in windows.iter().zip(&states) {
        let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
        for p in st {
            let v = variables.binary_search(p).expect("collected above");
            *counts.entry(v).or_default() += 1;
        }
        let coeffs: Vec<(usize, u32)> = counts.into_iter().collect();
        if seen.insert((coeffs.clone(), w.curvature.to_bits())) {
            rows.push(Row {
                coeffs,
                rhs: w.curvature,
            });
        }
    }
    Ok(ConstraintSystem {
        patch_side: s,
        variables,
        rows,
    })
}

/// Minimises a seeded random positive cost (uniform in `[0.5, 1.5]`) over the
/// system and returns the solution as a table.
pub fn solve_patch_costs(system: &ConstraintSystem, seed: u64) -> Result<PatchCostTable> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let objective = (0..system.variables.len()).map(|_| rng.random_range(0.5..=1.5)).collect();
    let lp = system.to_lp(objective)?;
    match solve_lp(&lp)? {
        LpOutcome::Optimal { x, .. } => {
            let (violation, min) = residuals(&lp, &x);
            if violation > crate::lp::FEAS_TOL || min < -1e-10 {
                return Err(Error::Infeasible(format!(
                    "cost system solved with residual {violation:e} and minimum {min:e}"
                )));
            }
            PatchCostTable::new(system.patch_side, system.variables.iter().copied().zip(x))
        }
        LpOutcome::Infeasible { residual, rows } => Err(Error::Infeasible(format!(
            "cost system has no nonnegative solution (phase-1 residual {residual:e}, rows {rows:?})"
        ))),
        LpOutcome::Unbounded => unreachable!("objective is positive over nonnegative variables"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::window::{canonical_windows, expand_windows};

    #[test]
    fn straight_window_row_has_zero_rhs() {
        let sys = assemble_constraints(&canonical_windows()[3..4], 3).unwrap();
        assert_eq!(sys.rows.len(), 1);
        assert_eq!(sys.rows[0].rhs, 0.0);
        assert_eq!(sys.rows[0].coeffs.iter().map(|c| c.1).sum::<u32>(), 9);
    }

    #[test]
    fn three_by_three_has_122_states() {
        let sys = assemble_constraints(&expand_windows(&canonical_windows()), 3).unwrap();
        assert_eq!(sys.variables.len(), 122);
    }

    #[test]
    fn rejects_small_windows() {
        let w = Window::from_rows(&["01", "11"], 0.0).unwrap();
        assert!(assemble_constraints(&[w], 2).is_err());
    }

    #[test]
    fn conflicting_rows_are_infeasible() {
        let w = canonical_windows()[3];
        let bent = Window { curvature: 1.0, ..w };
        let sys = assemble_constraints(&[w, bent], 3).unwrap();
        assert_eq!(sys.rows.len(), 2);
        assert!(matches!(solve_patch_costs(&sys, 1), Err(Error::Infeasible(_))));
    }
}
