use std::collections::HashMap;

/// Boundary length (in unit pixel edges) by local orientation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DirectionHistogram {
    /// Straight runs of two or more horizontal edges.
    pub horizontal: usize,
    /// Straight runs of two or more vertical edges.
    pub vertical: usize,
    /// Staircases of alternating single steps (±45°).
    pub diagonal: usize,
    /// Everything else: isolated single steps between longer runs.
    pub other: usize,
}

impl DirectionHistogram {
    pub fn total(&self) -> usize {
        self.horizontal + self.vertical + self.diagonal + self.other
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    pub fn axis_fraction(&self) -> f64 {
        self.fraction(self.horizontal + self.vertical)
    }

    pub fn diagonal_fraction(&self) -> f64 {
        self.fraction(self.diagonal)
    }

    /// Share of boundary at multiples of π/4.
    pub fn quarter_pi_fraction(&self) -> f64 {
        self.fraction(self.horizontal + self.vertical + self.diagonal)
    }

    fn fraction(&self, n: usize) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            n as f64 / self.total() as f64
        }
    }
}

// Step directions on the pixel-corner lattice: east, south, west, north.
const STEPS: [(isize, isize); 4] = [(0, 1), (1, 0), (0, -1), (-1, 0)];

/// Traces the crack-edge contours of the foreground (pixels outside the image
/// are background) and classifies every unit edge by the run it belongs to.
pub fn boundary_direction_histogram(width: usize, height: usize, fg: &[bool]) -> DirectionHistogram {
    assert_eq!(fg.len(), width * height, "mask size");
    let at = |r: isize, c: isize| {
        r >= 0 && c >= 0 && (r as usize) < height && (c as usize) < width && fg[r as usize * width + c as usize]
    };
    // Directed edges with the foreground on their right, keyed by start corner.
    let mut out: HashMap<(isize, isize), Vec<u8>> = HashMap::new();
    for r in 0..height as isize {
        for c in 0..width as isize {
            if !at(r, c) {
                continue;
            }
            if !at(r - 1, c) {
                out.entry((r, c)).or_default().push(0);
            }
            if !at(r, c + 1) {
                out.entry((r, c + 1)).or_default().push(1);
            }
            if !at(r + 1, c) {
                out.entry((r + 1, c + 1)).or_default().push(2);
            }
            if !at(r, c - 1) {
                out.entry((r + 1, c)).or_default().push(3);
            }
        }
    }
    let mut starts: Vec<(isize, isize)> = out.keys().copied().collect();
    starts.sort_unstable();
    let mut hist = DirectionHistogram::default();
    for s in starts {
        while let Some(first) = out.get_mut(&s).and_then(Vec::pop) {
            let mut steps = vec![first];
            let mut pos = s;
            let mut dir = first;
            loop {
                pos = (pos.0 + STEPS[dir as usize].0, pos.1 + STEPS[dir as usize].1);
                let Some(opts) = out.get_mut(&pos).filter(|o| !o.is_empty()) else {
                    break;
                };
                // At a corner shared by two diagonal pixels prefer the right turn,
                // which keeps diagonal neighbours on separate contours.
                let right = (dir + 1) % 4;
                let k = opts.iter().position(|&d| d == right).unwrap_or(0);
                dir = opts.swap_remove(k);
                steps.push(dir);
            }
            classify(&steps, &mut hist);
        }
    }
    hist
}

fn classify(steps: &[u8], hist: &mut DirectionHistogram) {
    // Rotate so the cycle starts at a direction change.
    let n = steps.len();
    let Some(shift) = (0..n).find(|&i| steps[i] != steps[(i + n - 1) % n]) else {
        return;
    };
    let mut runs: Vec<(u8, usize)> = Vec::new();
    for k in 0..n {
        let d = steps[(shift + k) % n];
        match runs.last_mut() {
            Some((ld, len)) if *ld == d => *len += 1,
            _ => runs.push((d, 1)),
        }
    }
    let m = runs.len();
    let mut i = 0;
    while i < m {
        let (d, len) = runs[i];
        if len >= 2 {
            if d % 2 == 0 {
                hist.horizontal += len;
            } else {
                hist.vertical += len;
            }
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < m && runs[j].1 == 1 && runs[j].0 % 2 != runs[j - 1].0 % 2 && (j < i + 2 || runs[j].0 == runs[j - 2].0) {
            j += 1;
        }
        if j - i >= 2 {
            hist.diagonal += j - i;
        } else {
            hist.other += 1;
        }
        i = j;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(rows: &[&str]) -> (usize, usize, Vec<bool>) {
        let v = rows.iter().flat_map(|r| r.bytes().map(|b| b == b'1')).collect();
        (rows[0].len(), rows.len(), v)
    }

    #[test]
    fn empty_image() {
        assert!(boundary_direction_histogram(3, 3, &[false; 9]).is_empty());
    }

    #[test]
    fn full_frame_is_axis_aligned() {
        let h = boundary_direction_histogram(4, 3, &[true; 12]);
        assert_eq!(h, DirectionHistogram { horizontal: 8, vertical: 6, diagonal: 0, other: 0 });
    }

    #[test]
    fn isolated_step_between_runs_is_other() {
        let (w, h, m) = mask(&["11100", "11111", "11111"]);
        let hist = boundary_direction_histogram(w, h, &m);
        assert_eq!(hist, DirectionHistogram { horizontal: 10, vertical: 5, diagonal: 0, other: 1 });
    }

    #[test]
    fn diamond_is_diagonal() {
        let n = 21usize;
        let c = (n / 2) as isize;
        let m: Vec<bool> = (0..n * n)
            .map(|p| ((p / n) as isize - c).abs() + ((p % n) as isize - c).abs() <= 8)
            .collect();
        let hist = boundary_direction_histogram(n, n, &m);
        assert!(hist.diagonal_fraction() >= 0.9, "{hist:?}");
    }

    #[test]
    fn diagonal_neighbours_form_two_contours() {
        let (w, h, m) = mask(&["10", "01"]);
        assert_eq!(boundary_direction_histogram(w, h, &m).diagonal, 8);
    }
}
