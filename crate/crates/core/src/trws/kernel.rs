//! Min-convolution of a label function across a consistency edge.
//!
//! Sending `h` across a consistency edge computes, for each target label, the
//! minimum of `h` over the source labels that agree with it on the overlap. With
//! labels bucketed by their overlap restriction this is one sweep over each
//! endpoint.

use crate::energy::INF;
use crate::lift::ConsistencyEdge;

/// Which way a message travels along an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// From endpoint `a` to endpoint `b`.
    AtoB,
    /// From endpoint `b` to endpoint `a`.
    BtoA,
}

/// Labels of one endpoint arranged contiguously by group.
///
/// Labels of group `g` are `order[offsets[g]..offsets[g + 1]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupOrder {
    pub order: Vec<u32>,
    pub offsets: Vec<u32>,
}

impl GroupOrder {
    fn from_groups(groups: &[u32], group_count: usize) -> Self {
        let mut offsets = vec![0u32; group_count + 1];
        for &g in groups {
            offsets[g as usize + 1] += 1;
        }
        for g in 0..group_count {
            offsets[g + 1] += offsets[g];
        }
        let mut cursor = offsets.clone();
        let mut order = vec![0u32; groups.len()];
        for (label, &g) in groups.iter().enumerate() {
            order[cursor[g as usize] as usize] = label as u32;
            cursor[g as usize] += 1;
        }
        GroupOrder { order, offsets }
    }

    pub fn group(&self, g: usize) -> &[u32] {
        &self.order[self.offsets[g] as usize..self.offsets[g + 1] as usize]
    }

    pub fn group_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn label_count(&self) -> usize {
        self.order.len()
    }
}

/// Precomputed grouping of both endpoints of an edge. Group `g` on one side
/// corresponds to group `g` on the other.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupLayout {
    pub a: GroupOrder,
    pub b: GroupOrder,
}

impl GroupLayout {
    fn sides(&self, dir: Direction) -> (&GroupOrder, &GroupOrder) {
        match dir {
            Direction::AtoB => (&self.a, &self.b),
            Direction::BtoA => (&self.b, &self.a),
        }
    }

    pub fn source_len(&self, dir: Direction) -> usize {
        self.sides(dir).0.label_count()
    }

    pub fn target_len(&self, dir: Direction) -> usize {
        self.sides(dir).1.label_count()
    }
}

pub fn precompute_group_order(edge: &ConsistencyEdge) -> GroupLayout {
    GroupLayout {
        a: GroupOrder::from_groups(&edge.groups_a, edge.group_count),
        b: GroupOrder::from_groups(&edge.groups_b, edge.group_count),
    }
}

/// Grouped message: `out[x_t] = min { h[x_s] : x_s agrees with x_t }`, `INF` for
/// target labels whose group is empty on the source side.
///
/// Returns the number of elementary steps taken (one per group plus one per label
/// visited on either side).
pub fn send_message_grouped(layout: &GroupLayout, dir: Direction, h: &[f64], out: &mut [f64]) -> usize {
    let (src, dst) = layout.sides(dir);
    assert_eq!(h.len(), src.label_count(), "h length must match the source label count");
    assert_eq!(out.len(), dst.label_count(), "output length must match the target label count");
    let mut ops = 0;
    for g in 0..src.group_count() {
        let mut best = INF;
        for &l in src.group(g) {
            best = best.min(h[l as usize]);
        }
        for &l in dst.group(g) {
            out[l as usize] = best;
        }
        ops += 1 + src.group(g).len() + dst.group(g).len();
    }
    ops
}

/// Quadratic reference for [`send_message_grouped`].
pub fn send_message_naive(edge: &ConsistencyEdge, dir: Direction, h: &[f64], out: &mut [f64]) {
    let (src, dst) = match dir {
        Direction::AtoB => (&edge.groups_a, &edge.groups_b),
        Direction::BtoA => (&edge.groups_b, &edge.groups_a),
    };
    assert_eq!(h.len(), src.len());
    assert_eq!(out.len(), dst.len());
    for (t, slot) in out.iter_mut().enumerate() {
        let mut best = INF;
        for (s, &hs) in h.iter().enumerate() {
            let pairwise = if src[s] == dst[t] { 0.0 } else { INF };
            best = best.min(pairwise + hs);
        }
        *slot = best;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::FactorGraph;
    use crate::lift::{build_super_graph, PatchCover};

    fn two_by_two_edge() -> ConsistencyEdge {
        let g = FactorGraph::binary(6);
        let cover = PatchCover::sliding_grid(3, 2, 2).unwrap();
        build_super_graph(&g, &cover).unwrap().edges()[0].clone()
    }

    #[test]
    fn two_shared_pixels_give_four_groups_of_four() {
        let layout = precompute_group_order(&two_by_two_edge());
        for side in [&layout.a, &layout.b] {
            assert_eq!(side.group_count(), 4);
            assert!((0..4).all(|g| side.group(g).len() == 4));
        }
    }

    #[test]
    fn full_overlap_gives_singleton_groups() {
        let g = FactorGraph::binary(2);
        let cover = PatchCover::new(vec![vec![0, 1], vec![0, 1]]).unwrap();
        let sg = build_super_graph(&g, &cover).unwrap();
        let e = &sg.edges()[0];
        assert_eq!(e.groups_a, e.groups_b);
        let layout = precompute_group_order(e);
        assert!((0..4).all(|g| layout.a.group(g).len() == 1));
    }

    #[test]
    fn zero_input_gives_zero_message() {
        let edge = two_by_two_edge();
        let layout = precompute_group_order(&edge);
        let mut out = vec![1.0; 16];
        send_message_grouped(&layout, Direction::AtoB, &[0.0; 16], &mut out);
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empty_source_group_sends_infinity() {
        let edge = ConsistencyEdge {
            a: 0,
            b: 1,
            overlap: vec![1],
            groups_a: vec![0, 0],
            groups_b: vec![0, 1, 1],
            group_count: 2,
        };
        let layout = precompute_group_order(&edge);
        let mut out = vec![0.0; 3];
        send_message_grouped(&layout, Direction::AtoB, &[3.0, 2.0], &mut out);
        assert_eq!(out, vec![2.0, INF, INF]);
        let mut naive = vec![0.0; 3];
        send_message_naive(&edge, Direction::AtoB, &[3.0, 2.0], &mut naive);
        assert_eq!(out, naive);
    }

    #[test]
    fn naive_trivia() {
        let edge = ConsistencyEdge {
            a: 0,
            b: 1,
            overlap: vec![0],
            groups_a: vec![0],
            groups_b: vec![0],
            group_count: 1,
        };
        let mut out = vec![0.0];
        send_message_naive(&edge, Direction::BtoA, &[4.5], &mut out);
        assert_eq!(out, vec![4.5]);
        send_message_naive(&edge, Direction::BtoA, &[INF], &mut out);
        assert_eq!(out, vec![INF]);
    }
}
