//! Discrete convex analysis on box lattices: extended-real convex grid
//! functions, Legendre transforms, conjugate algebra, the Asplund combine,
//! epigraph scaling and subgradients.
//!
//! Conjugation runs axis by axis. Each one-dimensional pass builds the lower
//! convex hull of the finite lattice points (positions are sorted, so the
//! hull is a single monotone sweep) and then walks the hull once while the
//! dual coordinates increase, which makes every pass linear in the line
//! length plus the dual length. The quadratic brute-force sup is kept as a
//! test oracle in [`GridConvexFunction::conjugate_brute`].

use crate::error::{CoreError, Result};
use crate::ext::{Ext, INF};
use crate::grid::GridSpec;
use rayon::prelude::*;

/// Extended-real-valued function sampled on a uniform box lattice.
///
/// Invariants enforced at construction: at least one finite value, the
/// finite nodes form a lattice-convex set along axis and diagonal lines,
/// and discrete second differences along those lines stay above
/// `-convexity_tol`.
#[derive(Debug, Clone)]
pub struct GridConvexFunction {
    spec: GridSpec,
    values: Vec<Ext>,
    convexity_tol: f64,
}

/// Result of one full conjugation with diagnostics.
struct ConjOutcome {
    values: Vec<f64>,
    /// number of output nodes whose conjugating argmax sat on the first or
    /// last node of an input line
    touched: usize,
    touched_flags: Vec<bool>,
}

impl GridConvexFunction {
    /// Build with the default convexity tolerance 1e-9 times the value scale.
    pub fn new(spec: GridSpec, values: Vec<Ext>) -> Result<GridConvexFunction> {
        let scale = value_scale(&values);
        Self::with_tolerance(spec, values, 1e-9 * scale)
    }

    /// Build with an explicit convexity tolerance.
    pub fn with_tolerance(
        spec: GridSpec,
        values: Vec<Ext>,
        convexity_tol: f64,
    ) -> Result<GridConvexFunction> {
        if convexity_tol < 0.0 {
            return Err(CoreError::InvalidSpec("convexity_tol must be >= 0".into()));
        }
        let f = GridConvexFunction { spec, values, convexity_tol };
        f.validate()?;
        Ok(f)
    }

    /// Accept raw samples without the convexity test (the domain-pattern and
    /// properness checks still run). This is the entry point for computing
    /// convex envelopes of non-convex data via [`Self::biconjugate`].
    pub fn sampled(spec: GridSpec, values: Vec<Ext>) -> Result<GridConvexFunction> {
        if values.len() != spec.len() {
            return Err(CoreError::InvalidSpec(format!(
                "value count {} does not match lattice size {}",
                values.len(),
                spec.len()
            )));
        }
        if !values.iter().any(|v| v.is_finite()) {
            return Err(CoreError::ImproperFunction);
        }
        Ok(GridConvexFunction { spec, values, convexity_tol: f64::INFINITY })
    }

    /// Internal constructor for conjugation outputs, which are convex by
    /// construction.
    fn from_conjugation(spec: GridSpec, values: Vec<Ext>) -> GridConvexFunction {
        let tol = 1e-9 * value_scale(&values);
        GridConvexFunction { spec, values, convexity_tol: tol }
    }

    fn validate(&self) -> Result<()> {
        if self.values.len() != self.spec.len() {
            return Err(CoreError::InvalidSpec(format!(
                "value count {} does not match lattice size {}",
                self.values.len(),
                self.spec.len()
            )));
        }
        if !self.values.iter().any(|v| v.is_finite()) {
            return Err(CoreError::ImproperFunction);
        }
        for line in self.lattice_lines() {
            self.check_line(&line)?;
        }
        Ok(())
    }

    /// Indices of every axis line, plus both diagonal directions in 2-D.
    fn lattice_lines(&self) -> Vec<Vec<usize>> {
        let mut lines = Vec::new();
        let s = &self.spec;
        if s.dim() == 1 {
            lines.push((0..s.nodes(0)).collect());
            return lines;
        }
        let (n0, n1) = (s.nodes(0), s.nodes(1));
        for i in 0..n0 {
            lines.push((0..n1).map(|j| s.flat(i, j)).collect());
        }
        for j in 0..n1 {
            lines.push((0..n0).map(|i| s.flat(i, j)).collect());
        }
        // diagonals in both orientations, only those with >= 3 nodes
        for c in -(n0 as isize - 1)..=(n1 as isize - 1) {
            let line: Vec<usize> = (0..n0)
                .filter_map(|i| {
                    let j = i as isize + c;
                    (0..n1 as isize).contains(&j).then(|| s.flat(i, j as usize))
                })
                .collect();
            if line.len() >= 3 {
                lines.push(line);
            }
        }
        for c in 0..=(n0 + n1 - 2) {
            let line: Vec<usize> = (0..n0)
                .filter_map(|i| {
                    let j = c as isize - i as isize;
                    (0..n1 as isize).contains(&j).then(|| s.flat(i, j as usize))
                })
                .collect();
            if line.len() >= 3 {
                lines.push(line);
            }
        }
        lines
    }

    fn check_line(&self, line: &[usize]) -> Result<()> {
        // no finite-infinite-finite pattern
        let mut seen_finite = false;
        let mut gap_after_finite = false;
        for &k in line {
            if self.values[k].is_finite() {
                if gap_after_finite {
                    return Err(CoreError::InvalidSpec(
                        "finite domain is not lattice-convex".into(),
                    ));
                }
                seen_finite = true;
            } else if seen_finite {
                gap_after_finite = true;
            }
        }
        if self.convexity_tol.is_finite() {
            for w in line.windows(3) {
                let (a, b, c) = (self.values[w[0]], self.values[w[1]], self.values[w[2]]);
                if let (Some(a), Some(b), Some(c)) = (a.as_finite(), b.as_finite(), c.as_finite())
                {
                    if a - 2.0 * b + c < -self.convexity_tol {
                        return Err(CoreError::InvalidSpec(format!(
                            "second difference {} below -{}",
                            a - 2.0 * b + c,
                            self.convexity_tol
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    #[inline]
    pub fn values(&self) -> &[Ext] {
        &self.values
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> Ext {
        self.values[self.spec.flat(i, j)]
    }

    #[inline]
    pub fn convexity_tol(&self) -> f64 {
        self.convexity_tol
    }

    /// phi + a, exact on every node.
    pub fn add_constant(&self, a: f64) -> GridConvexFunction {
        let values = self.values.iter().map(|v| v.add_scalar(a)).collect();
        GridConvexFunction { spec: self.spec.clone(), values, convexity_tol: self.convexity_tol }
    }

    /// Range [min, max] of finite-node coordinates along an axis.
    pub fn finite_range(&self, axis: usize) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..self.values.len() {
            if self.values[k].is_finite() {
                let p = self.spec.point(k);
                lo = lo.min(p[axis]);
                hi = hi.max(p[axis]);
            }
        }
        if lo <= hi {
            Some((lo, hi))
        } else {
            None
        }
    }

    /// Largest magnitude of an adjacent finite-pair slope along an axis.
    pub fn max_abs_slope(&self, axis: usize) -> f64 {
        let s = &self.spec;
        let h = s.spacing(axis);
        let mut best = 0.0f64;
        let each = |i: usize, j: usize, best: &mut f64| {
            let here = self.values[s.flat(i, j)];
            let next = if axis == 0 {
                self.values[s.flat(i + 1, j)]
            } else {
                self.values[s.flat(i, j + 1)]
            };
            if let (Some(a), Some(b)) = (here.as_finite(), next.as_finite()) {
                *best = best.max(((b - a) / h).abs());
            }
        };
        if s.dim() == 1 {
            for i in 0..s.nodes(0) - 1 {
                each(i, 0, &mut best);
            }
        } else {
            let bound0 = if axis == 0 { s.nodes(0) - 1 } else { s.nodes(0) };
            let bound1 = if axis == 1 { s.nodes(1) - 1 } else { s.nodes(1) };
            for i in 0..bound0 {
                for j in 0..bound1 {
                    each(i, j, &mut best);
                }
            }
        }
        best
    }

    /// Legendre transform onto a caller-provided dual lattice:
    /// out(y) = max over finite nodes x of <x, y> - phi(x).
    pub fn legendre_transform(&self, dual_spec: &GridSpec) -> Result<GridConvexFunction> {
        Ok(self.legendre_transform_reporting(dual_spec)?.0)
    }

    /// Like [`Self::legendre_transform`], additionally reporting how many
    /// dual nodes had their argmax on the boundary of the primal box (a sign
    /// that the primal box truncates the true conjugate).
    pub fn legendre_transform_reporting(
        &self,
        dual_spec: &GridSpec,
    ) -> Result<(GridConvexFunction, usize)> {
        if dual_spec.dim() != self.spec.dim() {
            return Err(CoreError::SpecMismatch(format!(
                "primal dim {} vs dual dim {}",
                self.spec.dim(),
                dual_spec.dim()
            )));
        }
        if !self.values.iter().any(|v| v.is_finite()) {
            return Err(CoreError::ImproperFunction);
        }
        let out = conjugate_full(&self.spec, &self.values, dual_spec);
        let values = out.values.into_iter().map(Ext::finite).collect();
        Ok((GridConvexFunction::from_conjugation(dual_spec.clone(), values), out.touched))
    }

    /// Quadratic-time conjugate over all finite nodes; reference oracle for
    /// the sweep implementation.
    pub fn conjugate_brute(&self, dual_spec: &GridSpec) -> Result<GridConvexFunction> {
        if dual_spec.dim() != self.spec.dim() {
            return Err(CoreError::SpecMismatch("dim mismatch".into()));
        }
        let finite: Vec<([f64; 2], f64)> = (0..self.values.len())
            .filter_map(|k| self.values[k].as_finite().map(|v| (self.spec.point(k), v)))
            .collect();
        if finite.is_empty() {
            return Err(CoreError::ImproperFunction);
        }
        let dim = self.spec.dim();
        let values: Vec<Ext> = (0..dual_spec.len())
            .map(|q| {
                let y = dual_spec.point(q);
                let mut best = f64::NEG_INFINITY;
                for (x, v) in &finite {
                    let mut dot = x[0] * y[0];
                    if dim == 2 {
                        dot += x[1] * y[1];
                    }
                    best = best.max(dot - v);
                }
                Ext::finite(best)
            })
            .collect();
        Ok(GridConvexFunction::from_conjugation(dual_spec.clone(), values))
    }

    /// (phi*)* on the original lattice. The dual lattice is sized from the
    /// observed slope bound per axis, so the inner conjugate keeps every
    /// subgradient of phi strictly inside it. Nodes outside the convex hull
    /// range of the finite domain come back as +inf (the true biconjugate is
    /// +inf beyond the domain hull).
    pub fn biconjugate(&self) -> Result<GridConvexFunction> {
        if !self.values.iter().any(|v| v.is_finite()) {
            return Err(CoreError::ImproperFunction);
        }
        let dim = self.spec.dim();
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        let mut nodes = [0usize; 2];
        for a in 0..dim {
            let s = self.max_abs_slope(a);
            let half = s + (1.0f64).max(0.25 * s);
            lo[a] = -half;
            hi[a] = half;
            nodes[a] = self.spec.nodes(a);
        }
        let dual = GridSpec::new(dim, &lo[..dim], &hi[..dim], &nodes[..dim])?;
        let star = self.legendre_transform(&dual)?;
        let back = conjugate_full(&dual, &star.values, &self.spec);
        let mut ranges = [(0.0, 0.0); 2];
        for a in 0..dim {
            ranges[a] = self.finite_range(a).ok_or(CoreError::ImproperFunction)?;
        }
        let values = certify_outside_inf(&self.spec, back.values, &ranges[..dim]);
        Ok(GridConvexFunction::from_conjugation(self.spec.clone(), values))
    }

    /// (s phi* + t psi*)* on phi's lattice. The conjugates are taken on the
    /// caller-provided shared dual lattice; a primal node whose conjugating
    /// argmax lands on the dual boundary raises `DualGridTooSmall` unless the
    /// node is certified +inf by the slope-range algebra
    /// dom(s phi* + t psi*)-slopes = s hull(dom phi) + t hull(dom psi).
    pub fn asplund_combine(
        phi: &GridConvexFunction,
        psi: &GridConvexFunction,
        s: f64,
        t: f64,
        dual_spec: &GridSpec,
    ) -> Result<GridConvexFunction> {
        if !(s > 0.0) {
            return Err(CoreError::NonpositiveScale(s));
        }
        if !(t >= 0.0) {
            return Err(CoreError::NonpositiveScale(t));
        }
        if phi.spec.dim() != psi.spec.dim() || phi.spec.dim() != dual_spec.dim() {
            return Err(CoreError::SpecMismatch("dimension mismatch".into()));
        }
        let dim = phi.spec.dim();
        let phi_star = phi.legendre_transform(dual_spec)?;
        let psi_star = psi.legendre_transform(dual_spec)?;
        let combined: Vec<Ext> = phi_star
            .values
            .iter()
            .zip(&psi_star.values)
            .map(|(&a, &b)| a.scale(s).add(b.scale(t)))
            .collect();
        let back = conjugate_full(dual_spec, &combined, &phi.spec);

        let mut ranges = [(0.0, 0.0); 2];
        for a in 0..dim {
            let (plo, phi_r) = phi.finite_range(a).ok_or(CoreError::ImproperFunction)?;
            let (qlo, qhi) = psi.finite_range(a).ok_or(CoreError::ImproperFunction)?;
            ranges[a] = (s * plo + t * qlo, s * phi_r + t * qhi);
        }
        // A boundary-touching argmax at a node inside the certified range is
        // a genuine truncation; outside the range the value is +inf anyway.
        let mut bad = 0usize;
        for k in 0..back.values.len() {
            if back.touched_flags[k] && inside_ranges(&phi.spec, k, &ranges[..dim]) {
                bad += 1;
            }
        }
        if bad > 0 {
            return Err(CoreError::DualGridTooSmall(bad));
        }
        let values = certify_outside_inf(&phi.spec, back.values, &ranges[..dim]);
        Ok(GridConvexFunction::from_conjugation(phi.spec.clone(), values))
    }

    /// Epigraph scaling: out(x) = t * phi(x / t), +inf outside t * dom(phi).
    /// Off-lattice targets are filled by bilinear interpolation of phi.
    pub fn epi_scale(&self, t: f64) -> Result<GridConvexFunction> {
        if !(t > 0.0) {
            return Err(CoreError::NonpositiveScale(t));
        }
        let s = &self.spec;
        let dim = s.dim();
        let values: Vec<Ext> = (0..s.len())
            .map(|k| {
                let x = s.point(k);
                let q = [x[0] / t, x[1] / t];
                match self.interpolate(&q[..dim]) {
                    Some(v) => v.scale(t),
                    None => INF,
                }
            })
            .collect();
        if !values.iter().any(|v| v.is_finite()) {
            return Err(CoreError::ImproperFunction);
        }
        Ok(GridConvexFunction::from_conjugation(self.spec.clone(), values))
    }

    /// Bilinear interpolation of the lattice values, +inf when the query is
    /// outside the box or touches an infinite corner. Exact node hits (within
    /// 1e-12 cells) read the node directly so kinks and domain edges stay
    /// sharp; None means "outside the box".
    pub fn interpolate(&self, p: &[f64]) -> Option<Ext> {
        let s = &self.spec;
        let dim = s.dim();
        let mut base = [0usize; 2];
        let mut frac = [0.0f64; 2];
        for a in 0..dim {
            let h = s.spacing(a);
            let t = (p[a] - s.lo(a)) / h;
            if t < -1e-12 || t > (s.nodes(a) - 1) as f64 + 1e-12 {
                return None;
            }
            let t = t.clamp(0.0, (s.nodes(a) - 1) as f64);
            let mut i = t.floor() as usize;
            let mut u = t - i as f64;
            if u > 1.0 - 1e-12 && i + 1 < s.nodes(a) {
                i += 1;
                u = 0.0;
            }
            if u < 1e-12 {
                u = 0.0;
            }
            if i >= s.nodes(a) - 1 && s.nodes(a) >= 2 {
                i = s.nodes(a) - 2;
                u = 1.0;
            }
            base[a] = i;
            frac[a] = u;
        }
        if dim == 1 {
            let v0 = self.value(base[0], 0);
            if frac[0] == 0.0 {
                return Some(v0);
            }
            let v1 = self.value(base[0] + 1, 0);
            if frac[0] == 1.0 {
                return Some(v1);
            }
            match (v0.as_finite(), v1.as_finite()) {
                (Some(a), Some(b)) => Some(Ext::finite(a + frac[0] * (b - a))),
                _ => Some(INF),
            }
        } else {
            // snap exact edges to avoid pulling in infinite corners
            let (i, j) = (base[0], base[1]);
            let (u, v) = (frac[0], frac[1]);
            let corners = [
                (self.value(i, j), (1.0 - u) * (1.0 - v)),
                (self.value(i + 1, j), u * (1.0 - v)),
                (self.value(i, j + 1), (1.0 - u) * v),
                (self.value(i + 1, j + 1), u * v),
            ];
            let mut acc = 0.0;
            for (val, w) in corners {
                if w == 0.0 {
                    continue;
                }
                match val.as_finite() {
                    Some(x) => acc += w * x,
                    None => return Some(INF),
                }
            }
            Some(Ext::finite(acc))
        }
    }

    /// Subgradient at the lattice node nearest to `p`: per axis the average
    /// of the one-sided slopes that exist. A node with both neighbors finite
    /// therefore gets the central difference.
    pub fn subgradient(&self, p: &[f64]) -> Result<Vec<f64>> {
        let s = &self.spec;
        let dim = s.dim();
        if !s.contains(p) {
            return Err(CoreError::OutsideDomain);
        }
        let (i, j) = s.nearest_node(p);
        let here = self.value(i, j);
        let v0 = match here.as_finite() {
            Some(v) => v,
            None => return Err(CoreError::OutsideDomain),
        };
        let mut g = Vec::with_capacity(dim);
        for a in 0..dim {
            let h = s.spacing(a);
            let idx = [i, j];
            let at = |d: isize| -> Option<f64> {
                let t = idx[a] as isize + d;
                if t < 0 || t >= s.nodes(a) as isize {
                    return None;
                }
                let (ii, jj) = if a == 0 { (t as usize, j) } else { (i, t as usize) };
                self.value(ii, jj).as_finite()
            };
            let left = at(-1).map(|v| (v0 - v) / h);
            let right = at(1).map(|v| (v - v0) / h);
            let slope = match (left, right) {
                (Some(l), Some(r)) => (l + r) / 2.0,
                (Some(l), None) => l,
                (None, Some(r)) => r,
                (None, None) => return Err(CoreError::NoFiniteNeighbor),
            };
            g.push(slope);
        }
        Ok(g)
    }
}

fn value_scale(values: &[Ext]) -> f64 {
    values
        .iter()
        .filter_map(|v| v.as_finite())
        .fold(1.0f64, |m, v| m.max(v.abs()))
}

fn inside_ranges(spec: &GridSpec, k: usize, ranges: &[(f64, f64)]) -> bool {
    let p = spec.point(k);
    (0..spec.dim()).all(|a| {
        let (lo, hi) = ranges[a];
        let tol = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
        p[a] >= lo - tol && p[a] <= hi + tol
    })
}

fn certify_outside_inf(spec: &GridSpec, values: Vec<f64>, ranges: &[(f64, f64)]) -> Vec<Ext> {
    (0..values.len())
        .map(|k| {
            if inside_ranges(spec, k, ranges) {
                Ext::finite(values[k])
            } else {
                INF
            }
        })
        .collect()
}

/// One-dimensional discrete conjugate of a single lattice line.
///
/// `positions` ascend uniformly; `duals` ascend. For each dual coordinate y
/// the winning hull vertex of max_i (positions[i] * y - vals[i]) is written
/// to `out`, its original index to `arg`, and `touch` marks argmaxes that sat
/// on the first or last node of the full line (only when those are finite).
/// Returns false when the line has no finite value.
fn conjugate_line(
    positions: &[f64],
    vals: &[Ext],
    duals: &[f64],
    out: &mut [f64],
    arg: &mut [u32],
    touch: &mut [bool],
) -> bool {
    let n = positions.len();
    debug_assert_eq!(vals.len(), n);
    // lower convex hull over finite nodes (indices into the line)
    let mut hull: Vec<usize> = Vec::with_capacity(n);
    for k in 0..n {
        let vk = match vals[k].as_finite() {
            Some(v) => v,
            None => continue,
        };
        while hull.len() >= 2 {
            let j = hull[hull.len() - 1];
            let i = hull[hull.len() - 2];
            let (xi, vi) = (positions[i], vals[i].raw());
            let (xj, vj) = (positions[j], vals[j].raw());
            // pop j when slope(i->j) >= slope(j->k)
            if (vj - vi) * (positions[k] - xj) >= (vk - vj) * (xj - xi) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    if hull.is_empty() {
        return false;
    }
    let last_line_idx = n - 1;
    let mut ptr = 0usize;
    for (q, &y) in duals.iter().enumerate() {
        // advance while the edge ahead has slope strictly below y
        while ptr + 1 < hull.len() {
            let a = hull[ptr];
            let b = hull[ptr + 1];
            if vals[b].raw() - vals[a].raw() < y * (positions[b] - positions[a]) {
                ptr += 1;
            } else {
                break;
            }
        }
        // tie-break toward the interior so closed-domain endpoints that
        // merely tie with an extreme node do not raise truncation flags
        let mut chosen = ptr;
        if hull[chosen] == 0 && chosen + 1 < hull.len() {
            let a = hull[chosen];
            let b = hull[chosen + 1];
            if vals[b].raw() - vals[a].raw() == y * (positions[b] - positions[a]) {
                chosen += 1;
            }
        } else if hull[chosen] == last_line_idx && chosen > 0 {
            let a = hull[chosen - 1];
            let b = hull[chosen];
            if vals[b].raw() - vals[a].raw() == y * (positions[b] - positions[a]) {
                chosen -= 1;
            }
        }
        let k = hull[chosen];
        out[q] = positions[k] * y - vals[k].raw();
        arg[q] = k as u32;
        touch[q] = k == 0 || k == last_line_idx;
    }
    true
}

/// Full axis-factorized conjugation of `values` on `spec` onto `dual`.
/// Output values are finite everywhere (the input is proper); `touched`
/// flags propagate through both passes in 2-D.
fn conjugate_full(spec: &GridSpec, values: &[Ext], dual: &GridSpec) -> ConjOutcome {
    let dim = spec.dim();
    if dim == 1 {
        let xs: Vec<f64> = (0..spec.nodes(0)).map(|i| spec.coord(0, i)).collect();
        let ys: Vec<f64> = (0..dual.nodes(0)).map(|i| dual.coord(0, i)).collect();
        let mut out = vec![0.0; dual.nodes(0)];
        let mut arg = vec![0u32; dual.nodes(0)];
        let mut touch = vec![false; dual.nodes(0)];
        let ok = conjugate_line(&xs, values, &ys, &mut out, &mut arg, &mut touch);
        debug_assert!(ok, "caller guarantees a proper function");
        let touched = touch.iter().filter(|&&t| t).count();
        return ConjOutcome { values: out, touched, touched_flags: touch };
    }

    let (n0, n1) = (spec.nodes(0), spec.nodes(1));
    let (m0, m1) = (dual.nodes(0), dual.nodes(1));
    let xs1: Vec<f64> = (0..n1).map(|j| spec.coord(1, j)).collect();
    let ys1: Vec<f64> = (0..m1).map(|q| dual.coord(1, q)).collect();

    // pass A: conjugate each axis-0 row over axis 1 onto the dual axis 1
    // A[i][q] = sup_j (ys1[q] * xs1[j] - values[i][j]); empty rows = +inf input later
    let mut pass_a = vec![0.0f64; n0 * m1];
    let mut touch_a = vec![false; n0 * m1];
    let mut empty_row = vec![false; n0];
    pass_a
        .par_chunks_mut(m1)
        .zip(touch_a.par_chunks_mut(m1))
        .zip(empty_row.par_iter_mut())
        .enumerate()
        .for_each(|(i, ((out_row, touch_row), empty))| {
            let row = &values[i * n1..(i + 1) * n1];
            let mut arg = vec![0u32; m1];
            let ok = conjugate_line(&xs1, row, &ys1, out_row, &mut arg, touch_row);
            *empty = !ok;
        });

    // pass B: for every dual axis-1 index q, conjugate h(i) = -A[i][q] over
    // axis 0 onto the dual axis 0
    let xs0: Vec<f64> = (0..n0).map(|i| spec.coord(0, i)).collect();
    let ys0: Vec<f64> = (0..m0).map(|p| dual.coord(0, p)).collect();
    let mut out = vec![0.0f64; m0 * m1];
    let mut touch = vec![false; m0 * m1];
    let cols: Vec<(Vec<f64>, Vec<u32>, Vec<bool>)> = (0..m1)
        .into_par_iter()
        .map(|q| {
            let col: Vec<Ext> = (0..n0)
                .map(|i| {
                    if empty_row[i] {
                        INF
                    } else {
                        Ext::finite(-pass_a[i * m1 + q])
                    }
                })
                .collect();
            let mut o = vec![0.0; m0];
            let mut a = vec![0u32; m0];
            let mut t = vec![false; m0];
            let ok = conjugate_line(&xs0, &col, &ys0, &mut o, &mut a, &mut t);
            debug_assert!(ok);
            (o, a, t)
        })
        .collect();
    for (q, (o, a, t)) in cols.into_iter().enumerate() {
        for p in 0..m0 {
            out[p * m1 + q] = o[p];
            // inherit the pass-A flag of the row the pass-B argmax selected
            let i = a[p] as usize;
            touch[p * m1 + q] = t[p] || touch_a[i * m1 + q];
        }
    }
    let touched = touch.iter().filter(|&&t| t).count();
    ConjOutcome { values: out, touched, touched_flags: touch }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn quadratic_1d(half: f64, nodes: usize) -> GridConvexFunction {
        let spec = GridSpec::symmetric(1, half, nodes).unwrap();
        let values = (0..nodes)
            .map(|i| {
                let x = spec.coord(0, i);
                Ext::finite(x * x / 2.0)
            })
            .collect();
        GridConvexFunction::new(spec, values).unwrap()
    }

    fn indicator_1d(half_box: f64, nodes: usize, lo: f64, hi: f64) -> GridConvexFunction {
        let spec = GridSpec::symmetric(1, half_box, nodes).unwrap();
        let values = (0..nodes)
            .map(|i| {
                let x = spec.coord(0, i);
                if x >= lo - 1e-12 && x <= hi + 1e-12 {
                    Ext::finite(0.0)
                } else {
                    INF
                }
            })
            .collect();
        GridConvexFunction::new(spec, values).unwrap()
    }

    fn abs_1d(half: f64, nodes: usize) -> GridConvexFunction {
        let spec = GridSpec::symmetric(1, half, nodes).unwrap();
        let values =
            (0..nodes).map(|i| Ext::finite(spec.coord(0, i).abs())).collect();
        GridConvexFunction::new(spec, values).unwrap()
    }

    #[test]
    fn quadratic_is_self_dual() {
        let phi = quadratic_1d(4.0, 129);
        let h = phi.spec().spacing(0);
        let dual = GridSpec::symmetric(1, 2.0, 129).unwrap();
        let star = phi.legendre_transform(&dual).unwrap();
        let mut worst = 0.0f64;
        for q in 0..dual.nodes(0) {
            let y = dual.coord(0, q);
            worst = worst.max((star.value(q, 0).raw() - y * y / 2.0).abs());
        }
        assert!(worst <= 2.0 * h * h, "sup error {worst} > 2h^2");
    }

    #[test]
    fn indicator_conjugate_is_support_function() {
        let chi = indicator_1d(4.0, 513, -1.0, 1.0);
        let dual = GridSpec::symmetric(1, 3.0, 129).unwrap();
        let star = chi.legendre_transform(&dual).unwrap();
        for q in 0..dual.nodes(0) {
            let y = dual.coord(0, q);
            assert_eq!(star.value(q, 0).raw(), y.abs(), "exact at dual node {y}");
        }
    }

    #[test]
    fn abs_conjugate_matches_brute_force() {
        let phi = abs_1d(4.0, 257);
        let dual = GridSpec::symmetric(1, 2.0, 257).unwrap();
        let fast = phi.legendre_transform(&dual).unwrap();
        let brute = phi.conjugate_brute(&dual).unwrap();
        for q in 0..dual.nodes(0) {
            let y = dual.coord(0, q);
            assert_relative_eq!(
                fast.value(q, 0).raw(),
                brute.value(q, 0).raw(),
                max_relative = 1e-12,
                epsilon = 1e-12
            );
            // truncated sup: 0 inside |y|<=1, then linear growth with slope 4
            let expect = (4.0 * (y.abs() - 1.0)).max(0.0);
            assert_relative_eq!(fast.value(q, 0).raw(), expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn sweep_matches_brute_force_2d() {
        let spec = GridSpec::new(2, &[-2.0, -3.0], &[2.0, 1.0], &[33, 41]).unwrap();
        let values: Vec<Ext> = (0..spec.len())
            .map(|k| {
                let p = spec.point(k);
                // anisotropic convex bowl with a kink
                Ext::finite(0.7 * p[0] * p[0] + 0.3 * p[1] * p[1] + (p[0] - 0.5).abs())
            })
            .collect();
        let phi = GridConvexFunction::new(spec, values).unwrap();
        let dual = GridSpec::new(2, &[-3.0, -2.0], &[3.0, 2.0], &[31, 29]).unwrap();
        let fast = phi.legendre_transform(&dual).unwrap();
        let brute = phi.conjugate_brute(&dual).unwrap();
        for k in 0..dual.len() {
            assert_relative_eq!(
                fast.values()[k].raw(),
                brute.values()[k].raw(),
                max_relative = 1e-11,
                epsilon = 1e-11
            );
        }
    }

    #[test]
    fn biconjugate_restores_quadratic() {
        let phi = quadratic_1d(4.0, 129);
        let h = phi.spec().spacing(0);
        let back = phi.biconjugate().unwrap();
        let n = phi.spec().nodes(0);
        for i in n / 4..=3 * n / 4 {
            let d = (back.value(i, 0).raw() - phi.value(i, 0).raw()).abs();
            assert!(d <= 4.0 * h * h, "node {i}: error {d}");
        }
        // never exceeds phi beyond tolerance
        for i in 0..n {
            assert!(back.value(i, 0).raw() <= phi.value(i, 0).raw() + 1e-9);
        }
    }

    #[test]
    fn biconjugate_restores_indicator_exactly() {
        let chi = indicator_1d(4.0, 129, -1.0, 1.0);
        let back = chi.biconjugate().unwrap();
        for i in 0..chi.spec().nodes(0) {
            let a = chi.value(i, 0);
            let b = back.value(i, 0);
            assert_eq!(a.is_finite(), b.is_finite(), "node {i}");
            if let (Some(x), Some(y)) = (a.as_finite(), b.as_finite()) {
                assert!((x - y).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn biconjugate_builds_convex_envelope() {
        // w(x) = min(x^2, (|x|-2)^2): envelope is 0 on [-2, 2], (|x|-2)^2 outside
        let spec = GridSpec::symmetric(1, 4.0, 257).unwrap();
        let h = spec.spacing(0);
        let values: Vec<Ext> = (0..spec.nodes(0))
            .map(|i| {
                let x = spec.coord(0, i);
                Ext::finite((x * x).min((x.abs() - 2.0) * (x.abs() - 2.0)))
            })
            .collect();
        let w = GridConvexFunction::sampled(spec.clone(), values).unwrap();
        let env = w.biconjugate().unwrap();
        // brute-force double sup oracle
        let dual = GridSpec::symmetric(1, 6.0, 257).unwrap();
        let oracle = w.conjugate_brute(&dual).unwrap().conjugate_brute(&spec).unwrap();
        for i in 0..spec.nodes(0) {
            let x = spec.coord(0, i);
            let expect = if x.abs() <= 2.0 { 0.0 } else { (x.abs() - 2.0) * (x.abs() - 2.0) };
            assert!((env.value(i, 0).raw() - expect).abs() <= 4.0 * h * h);
            assert!((env.value(i, 0).raw() - oracle.value(i, 0).raw()).abs() <= 4.0 * h * h);
        }
    }

    #[test]
    fn combine_quadratics_halves_curvature() {
        // phi = psi = x^2/2, s = t = 1 -> (2 (y^2/2))^* = x^2/4
        let phi = quadratic_1d(4.0, 257);
        let h = phi.spec().spacing(0);
        let dual = GridSpec::symmetric(1, 6.0, 513).unwrap();
        let sum = GridConvexFunction::asplund_combine(&phi, &phi, 1.0, 1.0, &dual).unwrap();
        for i in 0..phi.spec().nodes(0) {
            let x = phi.spec().coord(0, i);
            assert!((sum.value(i, 0).raw() - x * x / 4.0).abs() <= 4.0 * h * h);
        }
    }

    #[test]
    fn combine_indicators_is_minkowski_sum() {
        let k = indicator_1d(4.0, 257, -1.0, 1.0);
        let l = indicator_1d(4.0, 257, -0.5, 1.5);
        let dual = GridSpec::symmetric(1, 4.0, 257).unwrap();
        let sum = GridConvexFunction::asplund_combine(&k, &l, 1.0, 1.0, &dual).unwrap();
        for i in 0..sum.spec().nodes(0) {
            let x = sum.spec().coord(0, i);
            let inside = x >= -1.5 - 1e-9 && x <= 2.5 + 1e-9;
            assert_eq!(sum.value(i, 0).is_finite(), inside, "x = {x}");
            if inside {
                assert!(sum.value(i, 0).raw().abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn combine_with_t_zero_is_biconjugate() {
        let phi = abs_1d(4.0, 129);
        let dual = GridSpec::symmetric(1, 2.0, 129).unwrap();
        let same = GridConvexFunction::asplund_combine(&phi, &phi, 1.0, 0.0, &dual).unwrap();
        let bi = phi.biconjugate().unwrap();
        for i in 0..phi.spec().nodes(0) {
            assert!((same.value(i, 0).raw() - bi.value(i, 0).raw()).abs() <= 1e-9);
        }
    }

    #[test]
    fn combine_detects_small_dual_grid() {
        let phi = quadratic_1d(4.0, 129);
        let dual = GridSpec::symmetric(1, 1.0, 65).unwrap(); // slopes reach 4
        let err = GridConvexFunction::asplund_combine(&phi, &phi, 1.0, 1.0, &dual);
        assert!(matches!(err, Err(CoreError::DualGridTooSmall(_))));
    }

    #[test]
    fn epi_scale_rejects_nonpositive_factor() {
        let phi = abs_1d(4.0, 33);
        assert!(matches!(phi.epi_scale(0.0), Err(CoreError::NonpositiveScale(_))));
        assert!(matches!(phi.epi_scale(-2.0), Err(CoreError::NonpositiveScale(_))));
    }

    #[test]
    fn epi_scale_examples() {
        let phi = abs_1d(4.0, 129);
        let same = phi.epi_scale(1.0).unwrap();
        for i in 0..phi.spec().nodes(0) {
            assert_eq!(same.value(i, 0).raw().to_bits(), phi.value(i, 0).raw().to_bits());
        }
        // |x| is positively homogeneous: 3 |x/3| = |x|
        let tripled = phi.epi_scale(3.0).unwrap();
        for i in 0..phi.spec().nodes(0) {
            let x = phi.spec().coord(0, i);
            assert!((tripled.value(i, 0).raw() - x.abs()).abs() <= 1e-12);
        }
        // x^2 scaled by 2: 2 (x/2)^2 = x^2/2
        let quad = quadratic_1d(4.0, 129);
        let spec = GridSpec::symmetric(1, 4.0, 129).unwrap();
        let sq: Vec<Ext> =
            (0..129).map(|i| Ext::finite(spec.coord(0, i).powi(2))).collect();
        let square = GridConvexFunction::new(spec.clone(), sq).unwrap();
        let scaled = square.epi_scale(2.0).unwrap();
        let h = spec.spacing(0);
        for i in 0..spec.nodes(0) {
            assert!((scaled.value(i, 0).raw() - quad.value(i, 0).raw()).abs() <= 2.0 * h * h);
        }
    }

    #[test]
    fn epi_scale_2d_bowl() {
        let spec = GridSpec::symmetric(2, 3.0, 65).unwrap();
        let h = spec.spacing(0);
        let values: Vec<Ext> = (0..spec.len())
            .map(|k| {
                let p = spec.point(k);
                Ext::finite(p[0] * p[0] + 0.5 * p[1] * p[1])
            })
            .collect();
        let phi = GridConvexFunction::new(spec.clone(), values).unwrap();
        let scaled = phi.epi_scale(2.0).unwrap();
        for k in (0..spec.len()).step_by(11) {
            let p = spec.point(k);
            let want = 2.0 * ((p[0] / 2.0).powi(2) + 0.5 * (p[1] / 2.0).powi(2));
            assert!((scaled.values()[k].raw() - want).abs() <= 3.0 * h * h);
        }
    }

    #[test]
    fn subgradient_examples() {
        let quad = quadratic_1d(4.0, 129);
        let g = quad.subgradient(&[0.5]).unwrap();
        assert_relative_eq!(g[0], 0.5, epsilon = 1e-10);

        let abs = abs_1d(4.0, 129);
        assert_eq!(abs.subgradient(&[0.0]).unwrap()[0], 0.0); // kink midpoint
        assert_relative_eq!(abs.subgradient(&[1.0]).unwrap()[0], 1.0, epsilon = 1e-12);

        let chi = indicator_1d(4.0, 129, -1.0, 1.0);
        assert!(matches!(chi.subgradient(&[2.0]), Err(CoreError::OutsideDomain)));
        assert!(matches!(chi.subgradient(&[9.0]), Err(CoreError::OutsideDomain)));
    }

    #[test]
    fn fenchel_identity_at_interior_nodes() {
        let phi = quadratic_1d(4.0, 257);
        let h = phi.spec().spacing(0);
        let dual = GridSpec::symmetric(1, 5.0, 513).unwrap();
        let star = phi.legendre_transform(&dual).unwrap();
        let tol = 25.0 * h * h * 8.0;
        for i in (1..phi.spec().nodes(0) - 1).step_by(7) {
            let y = phi.spec().coord(0, i);
            let g = phi.subgradient(&[y]).unwrap()[0];
            let star_g = star.interpolate(&[g]).unwrap().raw();
            let resid = (phi.value(i, 0).raw() + star_g - y * g).abs();
            assert!(resid <= tol, "node {i}: residual {resid} > {tol}");
        }
    }

    #[test]
    fn rejects_nonconvex_and_gapped_domains() {
        let spec = GridSpec::symmetric(1, 2.0, 5).unwrap();
        let bumpy = vec![
            Ext::finite(0.0),
            Ext::finite(1.0),
            Ext::finite(0.0),
            Ext::finite(1.0),
            Ext::finite(0.0),
        ];
        assert!(GridConvexFunction::new(spec.clone(), bumpy.clone()).is_err());
        assert!(GridConvexFunction::sampled(spec.clone(), bumpy).is_ok());

        let gapped = vec![Ext::finite(0.0), INF, Ext::finite(0.0), INF, INF];
        assert!(GridConvexFunction::new(spec.clone(), gapped).is_err());

        let improper = vec![INF; 5];
        assert!(matches!(
            GridConvexFunction::new(spec, improper),
            Err(CoreError::ImproperFunction)
        ));
    }

    #[test]
    fn shift_rule_and_order_reversal() {
        let phi = quadratic_1d(3.0, 65);
        let dual = GridSpec::symmetric(1, 4.0, 65).unwrap();
        let star = phi.legendre_transform(&dual).unwrap();
        let shifted_star = phi.add_constant(2.5).legendre_transform(&dual).unwrap();
        for q in 0..dual.nodes(0) {
            assert!(
                (shifted_star.value(q, 0).raw() - (star.value(q, 0).raw() - 2.5)).abs() <= 1e-12
            );
        }
        // phi1 >= phi2 pointwise => phi1* <= phi2*
        let larger = phi.add_constant(0.7);
        let larger_star = larger.legendre_transform(&dual).unwrap();
        for q in 0..dual.nodes(0) {
            assert!(larger_star.value(q, 0).raw() <= star.value(q, 0).raw());
        }
    }
}
