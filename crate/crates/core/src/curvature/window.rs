use std::collections::BTreeSet;
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const MAX_WINDOW_SIDE: usize = 11;

/// A square binary pattern with the curvature of the boundary it contains.
///
/// Pixel `(r, c)` is bit `r * side + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub side: usize,
    pub bits: u128,
    pub curvature: f64,
}

fn bit(bits: u128, side: usize, r: usize, c: usize) -> bool {
    bits >> (r * side + c) & 1 == 1
}

fn remap(bits: u128, side: usize, src: impl Fn(usize, usize) -> (usize, usize)) -> u128 {
    let mut out = 0;
    for r in 0..side {
        for c in 0..side {
            let (sr, sc) = src(r, c);
            if bit(bits, side, sr, sc) {
                out |= 1 << (r * side + c);
            }
        }
    }
    out
}

fn full_mask(side: usize) -> u128 {
    if side * side == 128 {
        u128::MAX
    } else {
        (1u128 << (side * side)) - 1
    }
}

/// Quarter turn clockwise.
pub fn rotate(bits: u128, side: usize) -> u128 {
    remap(bits, side, |r, c| (side - 1 - c, r))
}

/// Mirror left to right.
pub fn reflect(bits: u128, side: usize) -> u128 {
    remap(bits, side, |r, c| (r, side - 1 - c))
}

pub fn invert(bits: u128, side: usize) -> u128 {
    !bits & full_mask(side)
}

/// All images of a square pattern under rotations, reflections and
/// foreground/background inversion, sorted and deduplicated.
pub fn generate_symmetry_orbit(bits: u128, side: usize) -> Vec<u128> {
    let mut out = BTreeSet::new();
    for inverted in [bits, invert(bits, side)] {
        for mirrored in [inverted, reflect(inverted, side)] {
            let mut b = mirrored;
            for _ in 0..4 {
                out.insert(b);
                b = rotate(b, side);
            }
        }
    }
    out.into_iter().collect()
}

/// Extracts the `s × s` block at `(r, c)` as a patch state.
pub fn sub_patch(bits: u128, side: usize, r: usize, c: usize, s: usize) -> u32 {
    let mut out = 0;
    for i in 0..s {
        for j in 0..s {
            if bit(bits, side, r + i, c + j) {
                out |= 1 << (i * s + j);
            }
        }
    }
    out
}

impl Window {
    pub fn new(side: usize, bits: u128, curvature: f64) -> Result<Self> {
        if side == 0 || side > MAX_WINDOW_SIDE {
            return Err(Error::input(format!("window side {side} outside 1..={MAX_WINDOW_SIDE}")));
        }
        if bits & !full_mask(side) != 0 {
            return Err(Error::input("window bits exceed its area"));
        }
        Ok(Window { side, bits, curvature })
    }

    /// Builds a window from rows of `0`/`1`, top row first.
    pub fn from_rows(rows: &[&str], curvature: f64) -> Result<Self> {
        let side = rows.len();
        let mut bits = 0u128;
        for (r, row) in rows.iter().enumerate() {
            if row.len() != side {
                return Err(Error::input(format!("row {r} has length {}, expected {side}", row.len())));
            }
            for (c, ch) in row.bytes().enumerate() {
                match ch {
                    b'1' => bits |= 1 << (r * side + c),
                    b'0' => {}
                    _ => return Err(Error::input(format!("unexpected character {:?}", ch as char))),
                }
            }
        }
        Window::new(side, bits, curvature)
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        bit(self.bits, self.side, r, c)
    }

    pub fn is_uniform(&self) -> bool {
        self.bits == 0 || self.bits == full_mask(self.side)
    }

    /// States of all `s × s` sub-patches, row-major over positions, with repeats.
    pub fn patch_states(&self, s: usize) -> Vec<u32> {
        assert!(s <= self.side, "patch larger than window");
        let n = self.side - s + 1;
        (0..n)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .map(|(r, c)| sub_patch(self.bits, self.side, r, c, s))
            .collect()
    }

    pub fn orbit(&self) -> Vec<Window> {
        generate_symmetry_orbit(self.bits, self.side)
            .into_iter()
            .map(|bits| Window { bits, ..*self })
            .collect()
    }
}

/// Expands each window by its symmetry orbit; drops uniform windows and exact
/// duplicates (same pattern and curvature).
pub fn expand_windows(windows: &[Window]) -> Vec<Window> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for w in windows {
        for o in w.orbit() {
            if !o.is_uniform() && seen.insert((o.side, o.bits, o.curvature.to_bits())) {
                out.push(o);
            }
        }
    }
    out
}

/// The seven representative 5×5 windows of the 3×3 model.
pub fn canonical_windows() -> Vec<Window> {
    const ROWS: [([&str; 5], f64); 7] = [
        (["00000", "00000", "00100", "00110", "00111"], 3.0 * PI / 4.0),
        (["00000", "00000", "00111", "00111", "00111"], PI / 2.0),
        (["00000", "00000", "00111", "01111", "11111"], PI / 4.0),
        (["00000", "00000", "00000", "11111", "11111"], 0.0),
        (["00000", "00000", "00100", "01110", "11111"], PI / 2.0),
        (["00000", "00000", "00001", "00011", "00111"], 0.0),
        (["00000", "00001", "00011", "00111", "01111"], 0.0),
    ];
    ROWS.iter()
        .map(|(rows, k)| Window::from_rows(rows, *k).expect("static window"))
        .collect()
}

/// Rasterizes a boundary through the window centre for every pair of
/// directions (multiples of `2π / directions`) whose turn is at most 3π/4.
///
/// A pixel is foreground when its centre lies strictly left of the directed
/// boundary. The result is closed under symmetry and free of uniform windows.
pub fn rasterize_windows(directions: usize, side: usize) -> Result<Vec<Window>> {
    if directions < 4 || directions % 4 != 0 {
        return Err(Error::input(format!("direction count {directions} must be a positive multiple of 4")));
    }
    if side == 0 || side > MAX_WINDOW_SIDE {
        return Err(Error::input(format!("window side {side} outside 1..={MAX_WINDOW_SIDE}")));
    }
    let k = directions as i64;
    let max_turn = 3 * k / 8;
    let unit = 2.0 * PI / directions as f64;
    let half = side as f64 / 2.0;
    let centres: Vec<(f64, f64)> = (0..side * side)
        .map(|p| ((p % side) as f64 + 0.5 - half, half - (p / side) as f64 - 0.5))
        .collect();
    let left = |theta: f64, (x, y): (f64, f64)| theta.cos() * y - theta.sin() * x > 1e-9;
    let mut raw = Vec::new();
    for a in 0..k {
        for t in -max_turn..=max_turn {
            let t1 = a as f64 * unit;
            let t2 = (a + t).rem_euclid(k) as f64 * unit;
            let mut bits = 0u128;
            for (p, &q) in centres.iter().enumerate() {
                let fg = match t.signum() {
                    1 => left(t1, q) && left(t2, q),
                    -1 => left(t1, q) || left(t2, q),
                    _ => left(t1, q),
                };
                if fg {
                    bits |= 1 << p;
                }
            }
            raw.push(Window {
                side,
                bits,
                curvature: t.unsigned_abs() as f64 * unit,
            });
        }
    }
    Ok(expand_windows(&raw))
}
