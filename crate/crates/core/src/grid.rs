//! Uniform box lattices in one and two dimensions, and the shared grid
//! file format.
//!
//! File format, bit-exact round trip:
//! line 1: `dim nodes_x [nodes_y] lo_x hi_x [lo_y hi_y]`
//! then one node value per whitespace-separated token in row-major order
//! (axis 0 outer, axis 1 inner), with the literal token `inf` for +inf.

use crate::error::{CoreError, Result};
use crate::ext::Ext;
use std::fmt::Write as _;

/// Geometry of a uniform lattice on an axis-aligned box.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    dim: usize,
    lo: [f64; 2],
    hi: [f64; 2],
    nodes: [usize; 2],
}

impl GridSpec {
    /// per-axis lower bounds, upper bounds and node counts. Node counts must
    /// be odd and at least 3 so that symmetric boxes carry the origin as a
    /// lattice node.
    pub fn new(dim: usize, lo: &[f64], hi: &[f64], nodes: &[usize]) -> Result<GridSpec> {
        if dim != 1 && dim != 2 {
            return Err(CoreError::InvalidSpec(format!("dim must be 1 or 2, got {dim}")));
        }
        if lo.len() != dim || hi.len() != dim || nodes.len() != dim {
            return Err(CoreError::InvalidSpec("axis count mismatch".into()));
        }
        let mut s = GridSpec { dim, lo: [0.0; 2], hi: [0.0; 2], nodes: [1; 2] };
        for a in 0..dim {
            if !(lo[a] < hi[a]) || !lo[a].is_finite() || !hi[a].is_finite() {
                return Err(CoreError::InvalidSpec(format!(
                    "axis {a}: need lo < hi, got [{}, {}]",
                    lo[a], hi[a]
                )));
            }
            if nodes[a] < 3 || nodes[a] % 2 == 0 {
                return Err(CoreError::InvalidSpec(format!(
                    "axis {a}: node count must be odd and >= 3, got {}",
                    nodes[a]
                )));
            }
            s.lo[a] = lo[a];
            s.hi[a] = hi[a];
            s.nodes[a] = nodes[a];
        }
        Ok(s)
    }

    /// Symmetric box [-half, half]^dim.
    pub fn symmetric(dim: usize, half: f64, nodes: usize) -> Result<GridSpec> {
        let lo = [-half; 2];
        let hi = [half; 2];
        let n = [nodes; 2];
        GridSpec::new(dim, &lo[..dim], &hi[..dim], &n[..dim])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn lo(&self, axis: usize) -> f64 {
        self.lo[axis]
    }

    #[inline]
    pub fn hi(&self, axis: usize) -> f64 {
        self.hi[axis]
    }

    #[inline]
    pub fn nodes(&self, axis: usize) -> usize {
        self.nodes[axis]
    }

    /// Lattice spacing along an axis; derived, never stored.
    #[inline]
    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.nodes[axis] - 1) as f64
    }

    /// Largest spacing over the axes.
    pub fn max_spacing(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).fold(0.0, f64::max)
    }

    /// Coordinate of node `i` on an axis.
    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.lo[axis] + self.spacing(axis) * i as f64
    }

    /// Total number of lattice nodes.
    #[inline]
    pub fn len(&self) -> usize {
        if self.dim == 1 {
            self.nodes[0]
        } else {
            self.nodes[0] * self.nodes[1]
        }
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major flat index of the multi-index (i, j); j ignored in 1-D.
    #[inline]
    pub fn flat(&self, i: usize, j: usize) -> usize {
        if self.dim == 1 {
            i
        } else {
            i * self.nodes[1] + j
        }
    }

    /// Multi-index of a flat index.
    #[inline]
    pub fn unflat(&self, k: usize) -> (usize, usize) {
        if self.dim == 1 {
            (k, 0)
        } else {
            (k / self.nodes[1], k % self.nodes[1])
        }
    }

    /// Position of a flat index as a 2-vector (y = 0 in 1-D).
    #[inline]
    pub fn point(&self, k: usize) -> [f64; 2] {
        let (i, j) = self.unflat(k);
        if self.dim == 1 {
            [self.coord(0, i), 0.0]
        } else {
            [self.coord(0, i), self.coord(1, j)]
        }
    }

    /// Whether a point lies inside the closed box.
    pub fn contains(&self, p: &[f64]) -> bool {
        (0..self.dim).all(|a| p[a] >= self.lo[a] && p[a] <= self.hi[a])
    }

    /// Nearest node multi-index to a point (clamped to the box).
    pub fn nearest_node(&self, p: &[f64]) -> (usize, usize) {
        let mut idx = [0usize; 2];
        for a in 0..self.dim {
            let t = ((p[a] - self.lo[a]) / self.spacing(a)).round();
            idx[a] = t.clamp(0.0, (self.nodes[a] - 1) as f64) as usize;
        }
        (idx[0], idx[1])
    }

    /// Distance from the origin to the nearest box face; negative when the
    /// origin is outside the box.
    pub fn origin_inradius(&self) -> f64 {
        (0..self.dim)
            .map(|a| (-self.lo[a]).min(self.hi[a]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Spec translated so that old coordinates x become x - shift.
    pub fn translated(&self, shift: &[f64]) -> GridSpec {
        let mut s = self.clone();
        for a in 0..self.dim {
            s.lo[a] -= shift[a];
            s.hi[a] -= shift[a];
        }
        s
    }

    /// Spec with all coordinates divided by c > 0 (the lattice for x -> f(cx)).
    pub fn scaled(&self, c: f64) -> GridSpec {
        assert!(c > 0.0);
        let mut s = self.clone();
        for a in 0..self.dim {
            s.lo[a] /= c;
            s.hi[a] /= c;
        }
        s
    }

    /// Node-centered cell measure (trapezoidal weight): full cell in the
    /// interior, half cell at box faces.
    pub fn cell_weight(&self, i: usize, j: usize) -> f64 {
        let mut w = 1.0;
        let idx = [i, j];
        for a in 0..self.dim {
            let h = self.spacing(a);
            w *= if idx[a] == 0 || idx[a] == self.nodes[a] - 1 { h / 2.0 } else { h };
        }
        w
    }

    /// Extents of the node-centered cell along an axis, clipped to the box.
    pub fn cell_bounds(&self, axis: usize, i: usize) -> (f64, f64) {
        let h = self.spacing(axis);
        let x = self.coord(axis, i);
        let lo = if i == 0 { x } else { x - h / 2.0 };
        let hi = if i == self.nodes[axis] - 1 { x } else { x + h / 2.0 };
        (lo, hi)
    }
}

/// Serialize a grid header plus values. Values print with Rust's shortest
/// round-trip float formatting, so re-reading reproduces bits.
pub fn write_grid(spec: &GridSpec, values: &[Ext]) -> String {
    let mut out = String::new();
    if spec.dim() == 1 {
        let _ = writeln!(out, "1 {} {} {}", spec.nodes(0), spec.lo(0), spec.hi(0));
    } else {
        let _ = writeln!(
            out,
            "2 {} {} {} {} {} {}",
            spec.nodes(0),
            spec.nodes(1),
            spec.lo(0),
            spec.hi(0),
            spec.lo(1),
            spec.hi(1)
        );
    }
    for (k, v) in values.iter().enumerate() {
        let sep = if spec.dim() == 2 && (k + 1) % spec.nodes(1) != 0 { ' ' } else { '\n' };
        let _ = write!(out, "{}{}", v, sep);
    }
    out
}

/// Parse the grid file format.
pub fn read_grid(text: &str) -> Result<(GridSpec, Vec<Ext>)> {
    let mut tokens = text.split_whitespace();
    let mut next = |what: &str| -> Result<&str> {
        tokens.next().ok_or_else(|| CoreError::Format(format!("missing {what}")))
    };
    let dim: usize = next("dim")?
        .parse()
        .map_err(|_| CoreError::Format("bad dim".into()))?;
    if dim != 1 && dim != 2 {
        return Err(CoreError::Format(format!("dim must be 1 or 2, got {dim}")));
    }
    let mut nodes = [0usize; 2];
    for a in 0..dim {
        nodes[a] = next("node count")?
            .parse()
            .map_err(|_| CoreError::Format("bad node count".into()))?;
    }
    let mut lo = [0f64; 2];
    let mut hi = [0f64; 2];
    for a in 0..dim {
        lo[a] = next("lo")?
            .parse()
            .map_err(|_| CoreError::Format("bad bound".into()))?;
        hi[a] = next("hi")?
            .parse()
            .map_err(|_| CoreError::Format("bad bound".into()))?;
    }
    let spec = GridSpec::new(dim, &lo[..dim], &hi[..dim], &nodes[..dim])
        .map_err(|e| CoreError::Format(e.to_string()))?;
    let mut values = Vec::with_capacity(spec.len());
    for _ in 0..spec.len() {
        let tok = next("node value")?;
        if tok == "inf" {
            values.push(crate::ext::INF);
        } else {
            let v: f64 = tok
                .parse()
                .map_err(|_| CoreError::Format(format!("bad value token `{tok}`")))?;
            if !v.is_finite() {
                return Err(CoreError::Format(format!("non-finite value `{tok}`")));
            }
            values.push(Ext::finite(v));
        }
    }
    if tokens.next().is_some() {
        return Err(CoreError::Format("trailing tokens after grid values".into()));
    }
    Ok((spec, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        assert!(GridSpec::new(1, &[0.0], &[1.0], &[4]).is_err()); // even
        assert!(GridSpec::new(1, &[1.0], &[0.0], &[5]).is_err()); // lo >= hi
        assert!(GridSpec::new(3, &[0.0; 3], &[1.0; 3], &[5; 3]).is_err());
        let s = GridSpec::symmetric(2, 2.0, 5).unwrap();
        assert_eq!(s.spacing(0), 1.0);
        assert_eq!(s.len(), 25);
        assert_eq!(s.point(s.flat(2, 2)), [0.0, 0.0]); // origin is a node
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let s = GridSpec::new(1, &[-1.5], &[2.5], &[5]).unwrap();
        let vals = vec![
            Ext::finite(0.1 + 0.2),
            crate::ext::INF,
            Ext::finite(-3.25),
            Ext::finite(1e-17),
            Ext::finite(7.0),
        ];
        let text = write_grid(&s, &vals);
        let (s2, v2) = read_grid(&text).unwrap();
        assert_eq!(s, s2);
        for (a, b) in vals.iter().zip(&v2) {
            assert_eq!(a.raw().to_bits(), b.raw().to_bits());
        }
    }

    #[test]
    fn malformed_header_rejected() {
        assert!(read_grid("7 5 0 1\n0 0 0 0 0").is_err());
        assert!(read_grid("1 5 0").is_err());
        assert!(read_grid("1 5 0 1\n0 0 0 0").is_err()); // too few values
        assert!(read_grid("1 5 0 1\n0 0 0 0 nan").is_err());
    }

    #[test]
    fn cell_weights_sum_to_box_volume() {
        let s = GridSpec::symmetric(2, 3.0, 7).unwrap();
        let total: f64 = (0..s.len())
            .map(|k| {
                let (i, j) = s.unflat(k);
                s.cell_weight(i, j)
            })
            .sum();
        assert!((total - 36.0).abs() < 1e-12);
    }
}
