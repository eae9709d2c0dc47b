use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Curvature penalty per allowed binary patch state.
///
/// States are bitmasks over the `side × side` patch in row-major order with the
/// top-left pixel in the least significant bit. A set bit is foreground.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchCostTable {
    side: usize,
    allowed: Vec<u32>,
    costs: Vec<f64>,
}

impl PatchCostTable {
    pub fn new(side: usize, entries: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        if side == 0 || side * side > 25 {
            return Err(Error::input(format!("patch side {side} not supported (1..=5)")));
        }
        let mut entries: Vec<(u32, f64)> = entries.into_iter().collect();
        entries.sort_by_key(|e| e.0);
        let limit = 1u64 << (side * side);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::input(format!("state {} listed twice", w[0].0)));
            }
        }
        for &(s, c) in &entries {
            if u64::from(s) >= limit {
                return Err(Error::input(format!("state {s} does not fit a {side}x{side} patch")));
            }
            if !c.is_finite() || c < -1e-10 {
                return Err(Error::input(format!("state {s} has invalid cost {c}")));
            }
        }
        if entries.is_empty() {
            return Err(Error::Infeasible("cost table allows no patch state".into()));
        }
        let (allowed, costs) = entries.into_iter().map(|(s, c)| (s, c.max(0.0))).unzip();
        Ok(PatchCostTable { side, allowed, costs })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn allowed(&self) -> &[u32] {
        &self.allowed
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn len(&self) -> usize {
        self.allowed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.allowed.is_empty()
    }

    pub fn cost(&self, state: u32) -> Option<f64> {
        self.allowed.binary_search(&state).ok().map(|i| self.costs[i])
    }

    pub fn to_tsv(&self) -> String {
        let mut s = format!("# patch_side={} count={}\n", self.side, self.len());
        for (&m, &c) in self.allowed.iter().zip(&self.costs) {
            let _ = writeln!(s, "{m}\t{c:.16e}");
        }
        s
    }

    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_tsv())?;
        Ok(())
    }

    pub fn read_tsv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read(path)?;
        Self::parse_tsv(&text, path)
    }

    /// Parses the tab-separated format written by [`PatchCostTable::to_tsv`].
    /// `path` is only used in error messages.
    pub fn parse_tsv(bytes: &[u8], path: &Path) -> Result<Self> {
        let err = |offset: usize, msg: String| Error::Format {
            path: path.to_path_buf(),
            offset,
            msg,
        };
        let text = std::str::from_utf8(bytes).map_err(|e| err(e.valid_up_to(), "not valid UTF-8".into()))?;
        let mut offset = 0;
        let mut lines = text.split_inclusive('\n');
        let header = lines.next().ok_or_else(|| err(0, "empty file".into()))?;
        let (side, count) = parse_header(header.trim_end()).ok_or_else(|| err(0, format!("bad header {:?}", header.trim_end())))?;
        offset += header.len();
        let mut entries = Vec::with_capacity(count);
        for line in lines {
            let body = line.trim_end_matches(['\n', '\r']);
            if !body.is_empty() {
                let mut parts = body.split('\t');
                let (Some(m), Some(c), None) = (parts.next(), parts.next(), parts.next()) else {
                    return Err(err(offset, "expected `bitmask<TAB>cost`".into()));
                };
                let m: u32 = m.parse().map_err(|_| err(offset, format!("bad bitmask {m:?}")))?;
                let c: f64 = c.parse().map_err(|_| err(offset, format!("bad cost {c:?}")))?;
                entries.push((m, c));
            }
            offset += line.len();
        }
        if entries.len() != count {
            return Err(err(offset, format!("header announces {count} rows, found {}", entries.len())));
        }
        Self::new(side, entries).map_err(|e| match e {
            Error::Input(msg) | Error::Infeasible(msg) => err(0, msg),
            other => other,
        })
    }
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let rest = line.strip_prefix("# patch_side=")?;
    let (side, rest) = rest.split_once(' ')?;
    let count = rest.strip_prefix("count=")?;
    Some((side.parse().ok()?, count.parse().ok()?))
}

/// The 2×2 table: 0 for uniform and straight half/half states, π/2 for a
/// single minority pixel, 2π for the two diagonal checkerboards.
pub fn two_by_two_costs() -> PatchCostTable {
    let entries = (0u32..16).map(|s| {
        let c = match s {
            0b0110 | 0b1001 => 2.0 * PI,
            _ if s.count_ones() % 2 == 1 => PI / 2.0,
            _ => 0.0,
        };
        (s, c)
    });
    PatchCostTable::new(2, entries).expect("static table")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_values() {
        let t = two_by_two_costs();
        assert_eq!(t.len(), 16);
        assert_eq!(t.cost(0), Some(0.0));
        assert_eq!(t.cost(15), Some(0.0));
        assert_eq!(t.cost(0b0011), Some(0.0));
        assert_eq!(t.cost(0b0101), Some(0.0));
        assert_eq!(t.cost(0b0100), Some(PI / 2.0));
        assert_eq!(t.cost(0b1110), Some(PI / 2.0));
        assert_eq!(t.cost(0b1001), Some(2.0 * PI));
    }

    #[test]
    fn isolated_pixel_turns_once() {
        // A lone pixel sits in four patches, once in each corner position.
        let t = two_by_two_costs();
        let total: f64 = [1u32, 2, 4, 8].iter().map(|&s| t.cost(s).unwrap()).sum();
        assert!((total - 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn tsv_round_trip_and_errors() {
        let t = two_by_two_costs();
        let p = Path::new("t.tsv");
        assert_eq!(PatchCostTable::parse_tsv(t.to_tsv().as_bytes(), p).unwrap(), t);
        let bad = b"# patch_side=2 count=2\n1\t0.5\nx\t1\n";
        match PatchCostTable::parse_tsv(bad, p) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 29),
            r => panic!("{r:?}"),
        }
        assert!(PatchCostTable::parse_tsv(b"patch_side=2\n", p).is_err());
        assert!(PatchCostTable::parse_tsv(b"# patch_side=2 count=2\n1\t0.5\n", p).is_err());
    }

    #[test]
    fn rejects_bad_entries() {
        assert!(PatchCostTable::new(2, [(16, 0.0)]).is_err());
        assert!(PatchCostTable::new(2, [(1, -1.0)]).is_err());
        assert!(PatchCostTable::new(2, [(1, 0.0), (1, 1.0)]).is_err());
        assert!(PatchCostTable::new(2, []).is_err());
    }
}
