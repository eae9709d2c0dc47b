//! Binary deconvolution under a 3×3 mean blur.
//!
//! The data energy `Σ_i ((K∗x)_i − y_i)²` over every pixel centre `i` (zero
//! padding) expands for binary `x` into unary and pairwise terms whose scopes
//! always fit inside a 3×3 patch.

use std::collections::BTreeMap;

use crate::energy::FactorGraph;
use crate::error::{Error, Result};
use crate::image::GridImage;
use crate::lift::{build_super_graph, PatchCover, SuperGraph};

#[derive(Debug, Clone, PartialEq)]
pub struct DeconvProblem {
    pub width: usize,
    pub height: usize,
    pub observed: Vec<f64>,
}

impl DeconvProblem {
    pub fn new(width: usize, height: usize, observed: Vec<f64>) -> Result<Self> {
        if width < 3 || height < 3 {
            return Err(Error::input(format!("deconvolution needs at least 3x3 pixels, got {width}x{height}")));
        }
        if observed.len() != width * height {
            return Err(Error::input(format!(
                "{} observations for a {width}x{height} image",
                observed.len()
            )));
        }
        if observed.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("observations must be finite"));
        }
        Ok(DeconvProblem {
            width,
            height,
            observed,
        })
    }

    pub fn from_image(img: &GridImage) -> Result<Self> {
        Self::new(img.width, img.height, img.samples.clone())
    }

    /// Pixels in the clipped 3×3 neighbourhood of `i`.
    fn neighbourhood(&self, i: usize) -> Vec<usize> {
        let (r, c) = ((i / self.width) as isize, (i % self.width) as isize);
        let mut out = Vec::with_capacity(9);
        for rr in r - 1..=r + 1 {
            for cc in c - 1..=c + 1 {
                if rr >= 0 && cc >= 0 && (rr as usize) < self.height && (cc as usize) < self.width {
                    out.push(rr as usize * self.width + cc as usize);
                }
            }
        }
        out
    }

    /// `K∗x` for a binary labeling.
    pub fn blur(&self, x: &[usize]) -> Vec<f64> {
        (0..x.len())
            .map(|i| self.neighbourhood(i).iter().map(|&j| x[j] as f64).sum::<f64>() / 9.0)
            .collect()
    }

    /// Squared residual of `x` computed directly.
    pub fn energy(&self, x: &[usize]) -> f64 {
        assert_eq!(x.len(), self.observed.len(), "labeling length");
        self.blur(x)
            .iter()
            .zip(&self.observed)
            .map(|(b, y)| (b - y).powi(2))
            .sum()
    }

    /// Unary and pairwise expansion. The constant `Σ y²` rides on pixel 0.
    pub fn to_factor_graph(&self) -> Result<FactorGraph> {
        let n = self.width * self.height;
        let mut unary = vec![0.0; n];
        let mut pairs: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut constant = 0.0;
        for (i, &y) in self.observed.iter().enumerate() {
            constant += y * y;
            let nb = self.neighbourhood(i);
            for (k, &j) in nb.iter().enumerate() {
                unary[j] += 1.0 / 81.0 - 2.0 / 9.0 * y;
                for &l in &nb[k + 1..] {
                    *pairs.entry((j, l)).or_default() += 2.0 / 81.0;
                }
            }
        }
        let mut g = FactorGraph::binary(n);
        for (j, &u) in unary.iter().enumerate() {
            let base = if j == 0 { constant } else { 0.0 };
            g.add_unary(j, vec![base, base + u])?;
        }
        for (&(j, l), &w) in &pairs {
            g.add_pairwise(j, l, vec![0.0, 0.0, 0.0, w])?;
        }
        Ok(g)
    }

    /// Lifts the energy onto sliding 3×3 patches.
    pub fn super_graph(&self) -> Result<SuperGraph> {
        let g = self.to_factor_graph()?;
        build_super_graph(&g, &PatchCover::sliding_grid(self.width, self.height, 3)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::random_binary;

    #[test]
    fn expansion_matches_direct_energy() {
        let truth = random_binary(4, 4, 3);
        let p = DeconvProblem::new(4, 4, (0..16).map(|i| (i as f64 * 0.37).sin().abs()).collect()).unwrap();
        let g = p.to_factor_graph().unwrap();
        for m in [0usize, 1, 0xffff, 0x1234, 0xbeef] {
            let x: Vec<usize> = (0..16).map(|i| m >> i & 1).collect();
            assert!((g.evaluate(&x).unwrap() - p.energy(&x)).abs() < 1e-12);
        }
        let x = truth.to_labels(0.5);
        assert!((g.evaluate(&x).unwrap() - p.energy(&x)).abs() < 1e-12);
    }

    #[test]
    fn exact_blur_has_zero_residual() {
        let truth = random_binary(6, 5, 9);
        let x = truth.to_labels(0.5);
        let p = DeconvProblem::new(6, 5, DeconvProblem::new(6, 5, vec![0.0; 30]).unwrap().blur(&x)).unwrap();
        assert!(p.energy(&x).abs() < 1e-15);
    }

    #[test]
    fn pair_coefficients() {
        // Horizontal neighbours in the middle of a 5x5 grid share 6 centres.
        let p = DeconvProblem::new(5, 5, vec![0.0; 25]).unwrap();
        let g = p.to_factor_graph().unwrap();
        let f = g.factors().iter().find(|f| f.scope() == [12, 13]).unwrap();
        assert!((f.table()[3] - 12.0 / 81.0).abs() < 1e-15);
        let f = g.factors().iter().find(|f| f.scope() == [12, 24]).unwrap();
        assert!((f.table()[3] - 2.0 / 81.0).abs() < 1e-15);
    }
}
