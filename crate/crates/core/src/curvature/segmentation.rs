use super::table::{two_by_two_costs, PatchCostTable};
use crate::energy::{FactorGraph, INF};
use crate::error::{Error, Result};
use crate::lift::{select_consistency_edges, PatchCover, SuperGraph, SuperNode};

/// Per-pixel data costs `[(v − μ_bg)², (v − μ_fg)²]`.
pub fn data_term_from_image(samples: &[f64], mu_bg: f64, mu_fg: f64) -> Vec<[f64; 2]> {
    samples.iter().map(|&v| [(v - mu_bg).powi(2), (v - mu_fg).powi(2)]).collect()
}

/// Curvature-regularised binary segmentation lifted onto sliding patches:
/// `Σ_i f_i(x_i) + λ Σ_patches cost(x_patch)`.
#[derive(Debug, Clone)]
pub struct SegmentationInstance {
    pub width: usize,
    pub height: usize,
    pub lambda: f64,
    pub table: PatchCostTable,
    pub data: Vec<[f64; 2]>,
    cover: PatchCover,
    graph: SuperGraph,
}

/// Patch state (top-left pixel in bit 0) to super-node code (top-left pixel most
/// significant).
fn state_to_code(state: u32, bits: usize) -> u64 {
    u64::from(state.reverse_bits() >> (32 - bits))
}

pub fn build_segmentation_instance(
    width: usize,
    height: usize,
    data: Vec<[f64; 2]>,
    lambda: f64,
    table: PatchCostTable,
) -> Result<SegmentationInstance> {
    if data.len() != width * height {
        return Err(Error::input(format!(
            "data term has {} pixels, expected {width}x{height}",
            data.len()
        )));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::input(format!("lambda must be finite and non-negative, got {lambda}")));
    }
    if data.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::input("data term must be finite"));
    }
    let s = table.side();
    let cover = PatchCover::sliding_grid(width, height, s)?;
    let memberships = cover.memberships(width * height);
    let bits = s * s;

    let mut order: Vec<(u64, usize)> = table
        .allowed()
        .iter()
        .enumerate()
        .map(|(i, &st)| (state_to_code(st, bits), i))
        .collect();
    order.sort_unstable();
    let labels: Vec<u64> = order.iter().map(|o| o.0).collect();

    let nodes = cover
        .patches()
        .iter()
        .map(|scope| {
            let weights: Vec<f64> = scope.iter().map(|&p| 1.0 / memberships[p].len() as f64).collect();
            let unary = order
                .iter()
                .map(|&(_, i)| {
                    let st = table.allowed()[i];
                    let d: f64 = scope
                        .iter()
                        .zip(&weights)
                        .enumerate()
                        .map(|(q, (&p, &w))| w * data[p][(st >> q & 1) as usize])
                        .sum();
                    lambda * table.costs()[i] + d
                })
                .collect();
            SuperNode {
                scope: scope.clone(),
                radices: vec![2; bits],
                labels: labels.clone(),
                unary,
            }
        })
        .collect();
    let edges = select_consistency_edges(&cover);
    let graph = SuperGraph::from_parts(vec![2; width * height], nodes, &edges)?.with_grid(cover.grid());
    Ok(SegmentationInstance {
        width,
        height,
        lambda,
        table,
        data,
        cover,
        graph,
    })
}

impl SegmentationInstance {
    pub fn graph(&self) -> &SuperGraph {
        &self.graph
    }

    pub fn cover(&self) -> &PatchCover {
        &self.cover
    }

    fn patch_state(&self, scope: &[usize], x: &[usize]) -> u32 {
        scope
            .iter()
            .enumerate()
            .fold(0, |m, (q, &p)| m | ((x[p] as u32 & 1) << q))
    }

    /// Energy of a binary pixel labeling; `INF` if some patch state is not allowed.
    pub fn energy(&self, x: &[usize]) -> f64 {
        assert_eq!(x.len(), self.data.len(), "labeling length");
        let data: f64 = self.data.iter().zip(x).map(|(d, &l)| d[l]).sum();
        let mut reg = 0.0;
        for scope in self.cover.patches() {
            match self.table.cost(self.patch_state(scope, x)) {
                Some(c) => reg += c,
                None => return INF,
            }
        }
        data + self.lambda * reg
    }

    /// Data part of [`SegmentationInstance::energy`].
    pub fn data_cost(&self, x: &[usize]) -> f64 {
        self.data.iter().zip(x).map(|(d, &l)| d[l]).sum()
    }

    /// The same energy as an explicit factor graph: one unary per pixel and one
    /// dense table per patch.
    pub fn to_factor_graph(&self) -> Result<FactorGraph> {
        let bits = self.table.side().pow(2);
        if bits > 16 {
            return Err(Error::Capacity {
                what: "dense patch table".into(),
                needed: 1 << bits,
                cap: 1 << 16,
            });
        }
        let mut g = FactorGraph::binary(self.data.len());
        for (i, d) in self.data.iter().enumerate() {
            g.add_unary(i, d.to_vec())?;
        }
        let mut dense = vec![INF; 1 << bits];
        for (&st, &c) in self.table.allowed().iter().zip(self.table.costs()) {
            dense[state_to_code(st, bits) as usize] = self.lambda * c;
        }
        for scope in self.cover.patches() {
            g.add_factor(scope.clone(), dense.clone())?;
        }
        Ok(g)
    }

    /// The 2×2 model written as an 8-connected pairwise energy: `λπ/2·[x≠y]` on
    /// the four sides of every patch and `−λπ/2·[x≠y]` on its two diagonals.
    pub fn to_pairwise_graph(&self) -> Result<FactorGraph> {
        if self.table != two_by_two_costs() {
            return Err(Error::input("pairwise form exists only for the 2x2 table"));
        }
        let mut g = FactorGraph::binary(self.data.len());
        for (i, d) in self.data.iter().enumerate() {
            g.add_unary(i, d.to_vec())?;
        }
        let w = self.lambda * std::f64::consts::FRAC_PI_2;
        for p in self.cover.patches() {
            let [tl, tr, bl, br] = [p[0], p[1], p[2], p[3]];
            for (a, b) in [(tl, tr), (bl, br), (tl, bl), (tr, br)] {
                g.add_pairwise(a, b, vec![0.0, w, w, 0.0])?;
            }
            for (a, b) in [(tl, br), (tr, bl)] {
                g.add_pairwise(a, b, vec![0.0, -w, -w, 0.0])?;
            }
        }
        Ok(g)
    }
}
