//! Discrete measures and the Riesz energy measure: the push-forward of
//! I_a(f, y) f(y) dy under grad phi, its spherical companion on the unit
//! sphere, admissibility checks for inverse-problem data, measure
//! comparison, and the measure file format.
//!
//! File format, bit-exact round trip:
//! line 1: `measure <euclidean|sphere> <dim>`
//! then one atom per line: `x [y] weight` with full-precision decimals.

use crate::error::{CoreError, Result};
use crate::logconcave::LogConcaveFunction;
use crate::quad::{self, QuadratureConfig};
use crate::variation;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ambient {
    Euclidean(usize),
    Sphere(usize),
}

impl Ambient {
    pub fn dim(&self) -> usize {
        match self {
            Ambient::Euclidean(d) | Ambient::Sphere(d) => *d,
        }
    }
}

/// Finite atomic measure on R^n or S^{n-1}. Atom points use two slots with
/// the second fixed at 0 in one dimension.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    ambient: Ambient,
    atoms: Vec<([f64; 2], f64)>,
}

impl DiscreteMeasure {
    pub fn new(ambient: Ambient, atoms: Vec<([f64; 2], f64)>) -> Result<DiscreteMeasure> {
        let dim = ambient.dim();
        if dim != 1 && dim != 2 {
            return Err(CoreError::InvalidSpec("measure dim must be 1 or 2".into()));
        }
        for (p, w) in &atoms {
            if !(p[0].is_finite() && p[1].is_finite()) {
                return Err(CoreError::InvalidSpec("atom with non-finite point".into()));
            }
            if !(*w > 0.0) || !w.is_finite() {
                return Err(CoreError::InvalidSpec(format!("atom weight must be > 0, got {w}")));
            }
            if dim == 1 && p[1] != 0.0 {
                return Err(CoreError::InvalidSpec("1-D atom with nonzero second slot".into()));
            }
            if let Ambient::Sphere(_) = ambient {
                let norm = if dim == 1 { p[0].abs() } else { (p[0] * p[0] + p[1] * p[1]).sqrt() };
                if (norm - 1.0).abs() > 1e-12 {
                    return Err(CoreError::InvalidSpec(format!(
                        "sphere atom with |u| = {norm}"
                    )));
                }
            }
        }
        let mut m = DiscreteMeasure { ambient, atoms };
        m.normalize_order();
        Ok(m)
    }

    /// Sort atoms lexicographically and merge exactly coincident points;
    /// every construction path funnels through this, so atom order is a
    /// deterministic function of content.
    fn normalize_order(&mut self) {
        self.atoms
            .sort_by(|a, b| a.0[0].total_cmp(&b.0[0]).then(a.0[1].total_cmp(&b.0[1])));
        let mut merged: Vec<([f64; 2], f64)> = Vec::with_capacity(self.atoms.len());
        for (p, w) in self.atoms.drain(..) {
            if let Some(last) = merged.last_mut() {
                if last.0[0] == p[0] && last.0[1] == p[1] {
                    last.1 += w;
                    continue;
                }
            }
            merged.push((p, w));
        }
        self.atoms = merged;
    }

    #[inline]
    pub fn ambient(&self) -> Ambient {
        self.ambient
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.ambient.dim()
    }

    #[inline]
    pub fn atoms(&self) -> &[([f64; 2], f64)] {
        &self.atoms
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|(_, w)| w).sum()
    }

    /// Monomial moment sum of w x^p y^q.
    pub fn moment(&self, p: u32, q: u32) -> f64 {
        self.atoms
            .iter()
            .map(|(x, w)| w * x[0].powi(p as i32) * x[1].powi(q as i32))
            .sum()
    }

    pub fn first_moment(&self) -> f64 {
        self.atoms
            .iter()
            .map(|(x, w)| {
                w * if self.dim() == 1 {
                    x[0].abs()
                } else {
                    (x[0] * x[0] + x[1] * x[1]).sqrt()
                }
            })
            .sum()
    }

    /// Largest atom radius.
    pub fn radius(&self) -> f64 {
        self.atoms
            .iter()
            .map(|(x, _)| if self.dim() == 1 { x[0].abs() } else { (x[0] * x[0] + x[1] * x[1]).sqrt() })
            .fold(0.0, f64::max)
    }

    /// Measure of the closed axis box [lo, hi].
    pub fn box_mass(&self, lo: &[f64], hi: &[f64]) -> f64 {
        self.atoms
            .iter()
            .filter(|(x, _)| {
                (0..self.dim()).all(|a| x[a] >= lo[a] - 1e-15 && x[a] <= hi[a] + 1e-15)
            })
            .map(|(_, w)| w)
            .sum()
    }

    /// Integral of a test function against the measure.
    pub fn integrate(&self, f: &dyn Fn(&[f64]) -> f64) -> f64 {
        self.atoms.iter().map(|(x, w)| w * f(&x[..self.dim()])).sum()
    }

    /// The reflection x -> -x.
    pub fn reflected(&self) -> DiscreteMeasure {
        let atoms = self.atoms.iter().map(|(x, w)| ([-x[0], -x[1]], *w)).collect();
        let mut m = DiscreteMeasure { ambient: self.ambient, atoms };
        m.normalize_order();
        m
    }

    /// Scale every weight by c > 0.
    pub fn scaled_mass(&self, c: f64) -> DiscreteMeasure {
        let atoms = self.atoms.iter().map(|(x, w)| (*x, w * c)).collect();
        DiscreteMeasure { ambient: self.ambient, atoms }
    }

    /// (mu + reflected mu) / 2; the result has evenness defect 0.
    pub fn symmetrize(&self) -> DiscreteMeasure {
        let mut atoms: Vec<([f64; 2], f64)> =
            self.atoms.iter().map(|(x, w)| (*x, w / 2.0)).collect();
        atoms.extend(self.atoms.iter().map(|(x, w)| ([-x[0], -x[1]], w / 2.0)));
        let mut m = DiscreteMeasure { ambient: self.ambient, atoms };
        m.normalize_order();
        m
    }

    /// Snap atoms to the centers of a cube lattice of the given cell size
    /// and merge what lands together. The snap is odd (c(-v) = -c(v), with
    /// the origin fixed), so binning an even measure keeps it even.
    pub fn binned(&self, cell: f64) -> Result<DiscreteMeasure> {
        if !(cell > 0.0) {
            return Err(CoreError::NonpositiveScale(cell));
        }
        let snap = |v: f64| {
            if v == 0.0 {
                0.0
            } else {
                v.signum() * ((v.abs() / cell).floor() + 0.5) * cell
            }
        };
        let atoms = self
            .atoms
            .iter()
            .map(|(x, w)| {
                let p = if self.dim() == 1 {
                    [snap(x[0]), 0.0]
                } else {
                    [snap(x[0]), snap(x[1])]
                };
                (p, *w)
            })
            .collect();
        let mut m = DiscreteMeasure { ambient: self.ambient, atoms };
        m.normalize_order();
        Ok(m)
    }

    /// Smallest radius containing the given mass fraction; a robust scale
    /// for sizing solver lattices when far tail atoms carry trivial weight.
    pub fn effective_radius(&self, fraction: f64) -> f64 {
        let mut radii: Vec<(f64, f64)> = self
            .atoms
            .iter()
            .map(|(x, w)| {
                let r = if self.dim() == 1 {
                    x[0].abs()
                } else {
                    (x[0] * x[0] + x[1] * x[1]).sqrt()
                };
                (r, *w)
            })
            .collect();
        radii.sort_by(|a, b| a.0.total_cmp(&b.0));
        let target = fraction.clamp(0.0, 1.0) * self.total_mass();
        let mut acc = 0.0;
        for (r, w) in radii {
            acc += w;
            if acc >= target {
                return r;
            }
        }
        self.radius()
    }
}

/// Admissibility data for inverse-problem inputs: total mass, how far the
/// measure is from its reflection, the minimal directional first moment
/// over a deterministic direction net, and the first moment.
#[derive(Debug, Clone)]
pub struct AdmissibilityReport {
    pub total_mass: f64,
    pub evenness_defect: f64,
    pub min_directional_moment: f64,
    pub first_moment: f64,
}

impl AdmissibilityReport {
    /// The conditions under which the even inverse problem is solvable:
    /// even data, not concentrated in a subspace, finite first moment.
    pub fn is_admissible(&self) -> bool {
        let scale = self.total_mass * (1.0 + self.first_moment / self.total_mass.max(1e-300));
        self.evenness_defect <= 1e-8 * scale.max(1e-12)
            && self.min_directional_moment > 1e-10 * scale.max(1e-12)
            && self.first_moment.is_finite()
    }
}

/// Evenness and concentration report for a Euclidean measure.
pub fn admissibility(mu: &DiscreteMeasure) -> Result<AdmissibilityReport> {
    if !matches!(mu.ambient(), Ambient::Euclidean(_)) {
        return Err(CoreError::AmbientMismatch);
    }
    if mu.is_empty() {
        return Err(CoreError::EmptyMeasure);
    }
    let evenness_defect = matching_distance(mu, &mu.reflected());
    let dirs: Vec<[f64; 2]> = if mu.dim() == 1 {
        vec![[1.0, 0.0]]
    } else {
        (0..720)
            .map(|k| {
                let t = std::f64::consts::PI * k as f64 / 720.0;
                [t.cos(), t.sin()]
            })
            .collect()
    };
    let min_directional_moment = dirs
        .iter()
        .map(|u| {
            mu.atoms
                .iter()
                .map(|(x, w)| w * (x[0] * u[0] + x[1] * u[1]).abs())
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    Ok(AdmissibilityReport {
        total_mass: mu.total_mass(),
        evenness_defect,
        min_directional_moment,
        first_moment: mu.first_moment(),
    })
}

/// Greedy transport distance between two measures of equal mass: walk both
/// atom lists in lexicographic order, matching mass fronts. On the line
/// this is the exact optimal coupling; in the plane it is a deterministic
/// upper bound that vanishes exactly when the measures coincide.
fn matching_distance(a: &DiscreteMeasure, b: &DiscreteMeasure) -> f64 {
    let mut cost = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    let mut wa = a.atoms.first().map(|t| t.1).unwrap_or(0.0);
    let mut wb = b.atoms.first().map(|t| t.1).unwrap_or(0.0);
    while i < a.atoms.len() && j < b.atoms.len() {
        let pa = a.atoms[i].0;
        let pb = b.atoms[j].0;
        let d = ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt();
        let m = wa.min(wb);
        cost += m * d;
        wa -= m;
        wb -= m;
        if wa <= 0.0 {
            i += 1;
            wa = a.atoms.get(i).map(|t| t.1).unwrap_or(0.0);
        }
        if wb <= 0.0 {
            j += 1;
            wb = b.atoms.get(j).map(|t| t.1).unwrap_or(0.0);
        }
    }
    cost
}

/// The Riesz energy measure of f: one atom per lattice cell with positive
/// density, located at grad phi of the node and weighted by
/// I_a(f, node) f(node) cell. A cell whose gradient genuinely jumps (a
/// polyhedral kink, not lattice curvature) splits its mass between the
/// one-sided slopes: the midpoint subgradient is a point nowhere in the
/// range of the a.e. gradient, so an atom there would be an O(h) artifact.
/// Exactly coincident atoms merge (an indicator pushes its whole support
/// to the origin); `binning` optionally merges atoms on a coarser lattice
/// afterwards.
pub fn riesz_energy_measure(
    f: &LogConcaveFunction,
    cfg: &QuadratureConfig,
    binning: Option<f64>,
) -> Result<DiscreteMeasure> {
    if !(cfg.alpha > 0.0) {
        return Err(CoreError::InvalidAlpha(cfg.alpha));
    }
    let spec = f.spec();
    let dim = f.dim();
    let pots = quad::node_potentials(f, cfg.alpha);
    let mut atoms = Vec::new();
    for k in 0..spec.len() {
        let fv = f.density_node(k);
        if fv <= 0.0 {
            continue;
        }
        let w = f.node_weight(k) * fv * pots[k];
        if w <= 0.0 {
            continue;
        }
        let p = spec.point(k);
        let (lo, hi) = f.gradient_interval(&p[..dim])?;
        // per-axis locations: one at the midpoint, or the two one-sided
        // slopes when the jump dwarfs what lattice curvature can produce
        let mut axis_locs: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        for a in 0..dim {
            let jump = hi[a] - lo[a];
            let h = spec.spacing(a);
            if jump > 16.0 * h * (1.0 + lo[a].abs() + hi[a].abs()) {
                axis_locs[a] = vec![lo[a], hi[a]];
            } else {
                axis_locs[a] = vec![(lo[a] + hi[a]) / 2.0];
            }
        }
        if dim == 1 {
            let share = w / axis_locs[0].len() as f64;
            for &x in &axis_locs[0] {
                atoms.push(([x, 0.0], share));
            }
        } else {
            let count = (axis_locs[0].len() * axis_locs[1].len()) as f64;
            for &x in &axis_locs[0] {
                for &y in &axis_locs[1] {
                    atoms.push(([x, y], w / count));
                }
            }
        }
    }
    let m = DiscreteMeasure::new(Ambient::Euclidean(dim), atoms)?;
    match binning {
        Some(cell) => m.binned(cell),
        None => Ok(m),
    }
}

/// The spherical energy measure: one atom per outward-normal class of the
/// support boundary, weighted by the boundary potential integral over that
/// class. Whole-space supports have no boundary and give the zero measure.
pub fn spherical_energy_measure(
    f: &LogConcaveFunction,
    cfg: &QuadratureConfig,
) -> Result<DiscreteMeasure> {
    if !(cfg.alpha > 0.0) {
        return Err(CoreError::InvalidAlpha(cfg.alpha));
    }
    let dim = f.dim();
    let elements = f.support_set().boundary_elements();
    let mut atoms: Vec<([f64; 2], f64)> = Vec::new();
    for el in elements {
        // restrict the boundary integral to this element via a normal match
        let target = el.normal;
        let w = variation::boundary_quadrature(
            f,
            &|nu: &[f64]| {
                let dot = nu[0] * target[0] + if dim == 2 { nu[1] * target[1] } else { 0.0 };
                if dot > 1.0 - 1e-9 {
                    1.0
                } else {
                    0.0
                }
            },
            cfg,
        )?;
        if w > 0.0 {
            atoms.push((target, w));
        }
    }
    // merge equal normals (e.g. opposite edges of a square are distinct,
    // but collinear split edges of a polygon share a class)
    let mut merged: Vec<([f64; 2], f64)> = Vec::new();
    'outer: for (p, w) in atoms {
        for (q, v) in merged.iter_mut() {
            if (q[0] - p[0]).abs() < 1e-12 && (q[1] - p[1]).abs() < 1e-12 {
                // same class was integrated twice; keep one copy
                *v = v.max(w);
                continue 'outer;
            }
        }
        merged.push((p, w));
    }
    DiscreteMeasure::new(Ambient::Sphere(dim), merged)
}

/// Residuals between two measures: relative mass gap, worst scaled monomial
/// moment gap up to the given degree, and the worst dyadic-box mass gap.
#[derive(Debug, Clone)]
pub struct MeasureComparison {
    pub mass_residual: f64,
    pub moment_residual: f64,
    pub box_residual: f64,
    pub degree: u32,
}

impl MeasureComparison {
    pub fn max_residual(&self) -> f64 {
        self.mass_residual.max(self.moment_residual).max(self.box_residual)
    }
}

pub fn compare_measures(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    degree: u32,
) -> Result<MeasureComparison> {
    if mu.ambient() != nu.ambient() {
        return Err(CoreError::AmbientMismatch);
    }
    let dim = mu.dim();
    let mass_mu = mu.total_mass();
    let mass_nu = nu.total_mass();
    let mass_scale = mass_mu.abs().max(mass_nu.abs()).max(1e-300);
    let mass_residual = (mass_mu - mass_nu).abs() / mass_scale;

    // scaled moment gaps: odd moments of near-even measures sit near zero,
    // so each degree normalizes by the absolute moment of that degree
    let mut moment_residual = 0.0f64;
    for total in 1..=degree {
        for p in 0..=total {
            let q = total - p;
            if dim == 1 && q > 0 {
                continue;
            }
            let abs_scale = mu
                .atoms
                .iter()
                .chain(nu.atoms.iter())
                .map(|(x, w)| w * x[0].abs().powi(p as i32) * x[1].abs().powi(q as i32))
                .sum::<f64>()
                .max(1e-300);
            let gap = (mu.moment(p, q) - nu.moment(p, q)).abs() / abs_scale;
            moment_residual = moment_residual.max(gap);
        }
    }

    // dyadic box family over the joint bounding box, padded asymmetrically
    // so box boundaries fall away from atom coordinates (atoms exactly on a
    // boundary would flip sides under roundoff and fake a gap)
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for (x, _) in mu.atoms.iter().chain(nu.atoms.iter()) {
        for a in 0..dim {
            lo[a] = lo[a].min(x[a]);
            hi[a] = hi[a].max(x[a]);
        }
    }
    let mut box_residual = 0.0f64;
    if lo[0] <= hi[0] {
        for a in 0..dim {
            let span = (hi[a] - lo[a]).max(1e-12);
            lo[a] -= 0.0373 * span;
            hi[a] += 0.0191 * span;
        }
        for level in 0..=3u32 {
            let parts = 1usize << level;
            let cells: usize = if dim == 1 { parts } else { parts * parts };
            for c in 0..cells {
                let (ci, cj) = if dim == 1 { (c, 0) } else { (c / parts, c % parts) };
                let mut blo = [0.0; 2];
                let mut bhi = [0.0; 2];
                for a in 0..dim {
                    let idx = if a == 0 { ci } else { cj };
                    let width = (hi[a] - lo[a]) / parts as f64;
                    blo[a] = lo[a] + idx as f64 * width;
                    bhi[a] = blo[a] + width;
                }
                let gap =
                    (mu.box_mass(&blo[..dim], &bhi[..dim]) - nu.box_mass(&blo[..dim], &bhi[..dim]))
                        .abs();
                box_residual = box_residual.max(gap / mass_scale);
            }
        }
    }
    Ok(MeasureComparison { mass_residual, moment_residual, box_residual, degree })
}

/// Density diagnostic for smooth data: where the conjugate potential is
/// twice differentiable on its lattice, the measure has density
/// I_a(f, grad phi*(z)) f(grad phi*(z)) det(Hessian phi*(z)); this compares
/// that model against a kernel-density estimate of the atoms. Reported,
/// never asserted - lattice second derivatives are noisy.
#[derive(Debug, Clone)]
pub struct MongeAmpereDiagnostic {
    pub samples: usize,
    pub median_relative_gap: f64,
    pub max_relative_gap: f64,
}

pub fn monge_ampere_residual(
    f: &LogConcaveFunction,
    cfg: &QuadratureConfig,
) -> Result<MongeAmpereDiagnostic> {
    let dim = f.dim();
    if dim != 1 {
        // the diagnostic is wired for the line; planar Hessians of lattice
        // conjugates are too noisy to be informative at desk scale
        return Ok(MongeAmpereDiagnostic {
            samples: 0,
            median_relative_gap: f64::NAN,
            max_relative_gap: f64::NAN,
        });
    }
    let atoms = riesz_energy_measure(f, cfg, None)?;
    let mut lo = [0.0; 2];
    let mut hi = [0.0; 2];
    lo[0] = -atoms.radius() - 1.0;
    hi[0] = atoms.radius() + 1.0;
    let dual = crate::GridSpec::new(1, &lo[..1], &hi[..1], &[129])?;
    let conj = f.conjugate_on(&dual)?;
    let h = dual.spacing(0);
    let bw = 4.0 * h;
    let mut gaps = Vec::new();
    for i in 2..dual.nodes(0) - 2 {
        let z = dual.coord(0, i);
        let (vm, v0, vp) = (conj.value(i - 1, 0), conj.value(i, 0), conj.value(i + 1, 0));
        let (vm, v0, vp) = match (vm.as_finite(), v0.as_finite(), vp.as_finite()) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => continue,
        };
        let hess = (vm - 2.0 * v0 + vp) / (h * h);
        if hess <= 1e-9 {
            continue;
        }
        let grad = (vp - vm) / (2.0 * h);
        let fv = f.density(&[grad]);
        if fv <= 1e-12 {
            continue;
        }
        let pot = quad::riesz_potential(f, &[grad], cfg)?;
        let model = pot * fv * hess;
        // Gaussian KDE of the atoms at z
        let mut kde = 0.0;
        for (x, w) in atoms.atoms() {
            let u = (x[0] - z) / bw;
            kde += w * (-0.5 * u * u).exp();
        }
        kde /= bw * (std::f64::consts::TAU).sqrt();
        if kde > 1e-12 {
            gaps.push(((model - kde).abs() / kde.max(model), z));
        }
    }
    gaps.sort_by(|a, b| a.0.total_cmp(&b.0));
    let samples = gaps.len();
    let median = if samples == 0 { f64::NAN } else { gaps[samples / 2].0 };
    let max = gaps.last().map(|g| g.0).unwrap_or(f64::NAN);
    Ok(MongeAmpereDiagnostic {
        samples,
        median_relative_gap: median,
        max_relative_gap: max,
    })
}

/// Serialize in the measure file format (shortest round-trip decimals).
pub fn write_measure(m: &DiscreteMeasure) -> String {
    let mut out = String::new();
    let kind = match m.ambient() {
        Ambient::Euclidean(_) => "euclidean",
        Ambient::Sphere(_) => "sphere",
    };
    let _ = writeln!(out, "measure {} {}", kind, m.dim());
    for (x, w) in m.atoms() {
        if m.dim() == 1 {
            let _ = writeln!(out, "{} {}", x[0], w);
        } else {
            let _ = writeln!(out, "{} {} {}", x[0], x[1], w);
        }
    }
    out
}

pub fn read_measure(text: &str) -> Result<DiscreteMeasure> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| CoreError::Format("empty measure file".into()))?;
    let mut tok = header.split_whitespace();
    if tok.next() != Some("measure") {
        return Err(CoreError::Format("measure file must start with `measure`".into()));
    }
    let ambient = match (tok.next(), tok.next()) {
        (Some(kind), Some(d)) => {
            let dim: usize =
                d.parse().map_err(|_| CoreError::Format("bad measure dim".into()))?;
            match kind {
                "euclidean" => Ambient::Euclidean(dim),
                "sphere" => Ambient::Sphere(dim),
                other => {
                    return Err(CoreError::Format(format!("unknown ambient `{other}`")));
                }
            }
        }
        _ => return Err(CoreError::Format("truncated measure header".into())),
    };
    let dim = ambient.dim();
    let mut atoms = Vec::new();
    for line in lines {
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| CoreError::Format(format!("bad token `{t}`"))))
            .collect::<Result<_>>()?;
        if vals.len() != dim + 1 {
            return Err(CoreError::Format(format!(
                "atom line needs {} numbers, got {}",
                dim + 1,
                vals.len()
            )));
        }
        let p = if dim == 1 { [vals[0], 0.0] } else { [vals[0], vals[1]] };
        atoms.push((p, vals[dim]));
    }
    DiscreteMeasure::new(ambient, atoms)
}
