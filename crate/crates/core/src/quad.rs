//! Quadrature for the Riesz potential I_a(f, y) = integral of
//! f(x) |x - y|^{alpha - n} dx, the energy (the double integral), and
//! phi-weighted energies.
//!
//! Three methods:
//! * `DirectDiagonalCorrected` - node-centered cell sums; for alpha < n the
//!   cell containing the singularity is integrated by the exact local
//!   primitive of the kernel against the frozen density value (1-D closed
//!   form, 2-D radial primitive with a Gauss rule in the angle).
//! * `EpsilonRegularized` - kernel (|x-y|^2 + eps)^{(alpha-n)/2} over a
//!   decreasing eps schedule with Richardson extrapolation of order
//!   alpha/2 (the order of the local kernel expansion); eps is only engaged
//!   for alpha < n, matching the regularization that makes sense there.
//! * `MonteCarlo` - uniform box sampling with a counter-based seeded
//!   generator; chunked so results are bit-identical at any thread count.
//!
//! Truncation to the working box is certified: `tail_bound` bounds the mass
//! the exponential envelope e^{-b|x|-c} from the growth certificate can put
//! outside the box, via incomplete-Gamma tail integrals.

use crate::error::{CoreError, Result};
use crate::logconcave::LogConcaveFunction;
use crate::support::SupportSet;
use crate::GridSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::gamma::{gamma, gamma_ur};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadMethod {
    DirectDiagonalCorrected,
    EpsilonRegularized,
    MonteCarlo,
}

impl std::fmt::Display for QuadMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            QuadMethod::DirectDiagonalCorrected => "direct",
            QuadMethod::EpsilonRegularized => "epsreg",
            QuadMethod::MonteCarlo => "mc",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone)]
pub struct QuadratureConfig {
    pub method: QuadMethod,
    /// strictly decreasing positive eps values for the regularized path
    pub epsilon_schedule: Vec<f64>,
    pub mc_samples: usize,
    pub seed: u64,
    pub alpha: f64,
}

impl QuadratureConfig {
    pub fn direct(alpha: f64) -> Result<QuadratureConfig> {
        QuadratureConfig {
            method: QuadMethod::DirectDiagonalCorrected,
            epsilon_schedule: vec![1e-2, 2.5e-3, 6.25e-4],
            mc_samples: 1_000_000,
            seed: 0,
            alpha,
        }
        .validated()
    }

    pub fn epsilon_regularized(alpha: f64, schedule: Vec<f64>) -> Result<QuadratureConfig> {
        QuadratureConfig {
            method: QuadMethod::EpsilonRegularized,
            epsilon_schedule: schedule,
            mc_samples: 1_000_000,
            seed: 0,
            alpha,
        }
        .validated()
    }

    pub fn monte_carlo(alpha: f64, samples: usize, seed: u64) -> Result<QuadratureConfig> {
        QuadratureConfig {
            method: QuadMethod::MonteCarlo,
            epsilon_schedule: vec![1e-2, 2.5e-3, 6.25e-4],
            mc_samples: samples,
            seed,
            alpha,
        }
        .validated()
    }

    pub fn validated(self) -> Result<QuadratureConfig> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(CoreError::InvalidAlpha(self.alpha));
        }
        if self.epsilon_schedule.is_empty()
            || self.epsilon_schedule.iter().any(|&e| !(e > 0.0))
            || self.epsilon_schedule.windows(2).any(|w| w[1] >= w[0])
        {
            return Err(CoreError::InvalidConfig(
                "epsilon schedule must be strictly decreasing and positive".into(),
            ));
        }
        if self.mc_samples < 10_000 {
            return Err(CoreError::InvalidConfig("mc_samples must be >= 10^4".into()));
        }
        Ok(self)
    }

    pub fn with_method(mut self, method: QuadMethod) -> QuadratureConfig {
        self.method = method;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> QuadratureConfig {
        self.seed = seed;
        self
    }
}

/// Energy value with its books: an error estimate (coarse-grid comparison
/// for lattice methods, the standard error for Monte Carlo) and the
/// certified bound on the truncated tail.
#[derive(Debug, Clone)]
pub struct EnergyReport {
    pub value: f64,
    pub estimated_error: f64,
    pub method_used: QuadMethod,
    pub tail_bound: f64,
}

/// Pin the rayon thread count (first call wins; later calls are no-ops).
/// Reductions are ordered, so the numbers do not depend on this.
pub fn set_threads(n: usize) {
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
}

#[inline]
fn kernel(d2: f64, alpha: f64, n: f64) -> f64 {
    // |x - y|^{alpha - n} written on squared distances
    d2.powf((alpha - n) / 2.0)
}

// 16-point Gauss-Legendre rule on [-1, 1]
const GL_X: [f64; 8] = [
    0.0950125098376374,
    0.2816035507792589,
    0.4580167776572274,
    0.6178762444026438,
    0.7554044083550030,
    0.8656312023878318,
    0.9445750230732326,
    0.9894009349916499,
];
const GL_W: [f64; 8] = [
    0.1894506104550685,
    0.1826034150449236,
    0.1691565193950025,
    0.1495959888165767,
    0.1246289712555339,
    0.0951585116824928,
    0.0622535239386479,
    0.0271524594117541,
];

fn gauss16<F: Fn(f64) -> f64>(a: f64, b: f64, f: F) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut s = 0.0;
    for k in 0..8 {
        s += GL_W[k] * (f(mid + half * GL_X[k]) + f(mid - half * GL_X[k]));
    }
    s * half
}

/// Exact local primitive of the kernel over the axis box
/// [-ax, bx] x [-ay, by] around the singular point (1-D: [-ax, bx]).
///
/// 1-D: closed form (ax^alpha + bx^alpha) / alpha. 2-D: the radial
/// primitive (1/alpha) integral of R(theta)^alpha over the angle, with
/// R the box exit radius; each quadrant splits at its corner angle so the
/// Gauss rule sees smooth integrands.
fn cell_kernel_integral(alpha: f64, n: usize, ax: f64, bx: f64, ay: f64, by: f64) -> f64 {
    debug_assert!(alpha < n as f64);
    if n == 1 {
        return (ax.max(0.0).powf(alpha) + bx.max(0.0).powf(alpha)) / alpha;
    }
    let mut total = 0.0;
    for (wx, wy) in [(bx, by), (ax, by), (ax, ay), (bx, ay)] {
        let (wx, wy) = (wx.max(0.0), wy.max(0.0));
        if wx == 0.0 || wy == 0.0 {
            continue;
        }
        let split = wy.atan2(wx);
        // R = wx / cos(theta) below the corner angle, wy / sin(theta) above
        total += gauss16(0.0, split, |t| (wx / t.cos()).powf(alpha));
        total += gauss16(split, std::f64::consts::FRAC_PI_2, |t| (wy / t.sin()).powf(alpha));
    }
    total / alpha
}

/// Per-node quadrature data extracted from a log-concave function: node
/// positions implicit in the lattice, cell weights (support-clipped for
/// indicator backings) and exact density values.
pub(crate) struct NodeQuadrature {
    pub spec: GridSpec,
    pub weights: Vec<f64>,
    pub fvals: Vec<f64>,
}

impl NodeQuadrature {
    pub fn of(f: &LogConcaveFunction) -> NodeQuadrature {
        let spec = f.spec().clone();
        let weights: Vec<f64> = (0..spec.len()).map(|k| f.node_weight(k)).collect();
        let fvals: Vec<f64> = (0..spec.len()).map(|k| f.density_node(k)).collect();
        NodeQuadrature { spec, weights, fvals }
    }
}

/// Kernel values tabulated over index offsets (the lattice is uniform, so
/// the kernel is a function of the offset only).
fn kernel_table(spec: &GridSpec, alpha: f64) -> Vec<f64> {
    let n = spec.dim() as f64;
    if spec.dim() == 1 {
        let h = spec.spacing(0);
        (0..spec.nodes(0))
            .map(|d| {
                let dist = d as f64 * h;
                kernel(dist * dist, alpha, n)
            })
            .collect()
    } else {
        let hx = spec.spacing(0);
        let hy = spec.spacing(1);
        let (n0, n1) = (spec.nodes(0), spec.nodes(1));
        let mut t = vec![0.0; n0 * n1];
        for di in 0..n0 {
            for dj in 0..n1 {
                let d2 = (di as f64 * hx).powi(2) + (dj as f64 * hy).powi(2);
                t[di * n1 + dj] = kernel(d2, alpha, n);
            }
        }
        t
    }
}

/// Fraction of node k's cell that lies in the support (1 away from the
/// boundary); scales the diagonal correction for indicator backings.
fn cell_fill_fraction(f: &LogConcaveFunction, k: usize) -> f64 {
    let spec = f.spec();
    let (i, j) = spec.unflat(k);
    let full = spec.cell_weight(i, j);
    if full <= 0.0 {
        return 0.0;
    }
    (f.node_weight(k) / full).clamp(0.0, 1.0)
}

/// Odd primitive of the 1-D kernel: F' (u) = |u|^{alpha - 1}, so the exact
/// kernel integral over [a, b] is F(b) - F(a) even across the singularity.
#[inline]
fn kernel_primitive_1d(u: f64, alpha: f64) -> f64 {
    u.signum() * u.abs().powf(alpha) / alpha
}

/// I_alpha(f, x_j) at every lattice node. In one dimension every cell
/// integrates the kernel by its exact primitive against the frozen node
/// density (singular and regular cells alike); in two dimensions the
/// tabulated kernel handles off-diagonal cells and the diagonal cell gets
/// the radial primitive when alpha < n. This is the inner loop of the
/// direct energy and of the energy measure, so its reduction order is
/// fixed (plain index order per node).
pub(crate) fn node_potentials(f: &LogConcaveFunction, alpha: f64) -> Vec<f64> {
    let nq = NodeQuadrature::of(f);
    node_potentials_from(f, &nq, alpha)
}

pub(crate) fn node_potentials_from(
    f: &LogConcaveFunction,
    nq: &NodeQuadrature,
    alpha: f64,
) -> Vec<f64> {
    let spec = &nq.spec;
    let n = spec.dim();

    if n == 1 {
        let cells: Vec<Option<(f64, f64)>> =
            (0..spec.len()).map(|k| f.cell_interval(k)).collect();
        return (0..spec.len())
            .into_par_iter()
            .map(|j| {
                let y = spec.coord(0, j);
                let mut acc = 0.0;
                for k in 0..spec.len() {
                    let fv = nq.fvals[k];
                    if fv == 0.0 {
                        continue;
                    }
                    if let Some((lo, hi)) = cells[k] {
                        acc += fv
                            * (kernel_primitive_1d(hi - y, alpha)
                                - kernel_primitive_1d(lo - y, alpha));
                    }
                }
                acc
            })
            .collect();
    }

    let table = kernel_table(spec, alpha);
    let singular = alpha < n as f64;
    let n1 = spec.nodes(1);
    (0..spec.len())
        .into_par_iter()
        .map(|j| {
            let (j0, j1) = spec.unflat(j);
            let mut acc = 0.0;
            for k in 0..spec.len() {
                if singular && k == j {
                    continue;
                }
                let fv = nq.fvals[k] * nq.weights[k];
                if fv == 0.0 {
                    continue;
                }
                let (k0, k1) = spec.unflat(k);
                let di = k0.abs_diff(j0);
                let dj = k1.abs_diff(j1);
                acc += fv * table[di * n1 + dj];
            }
            if singular && nq.fvals[j] > 0.0 {
                let (lx, hx) = spec.cell_bounds(0, j0);
                let x = spec.coord(0, j0);
                let (ly, hy) = spec.cell_bounds(1, j1);
                let y = spec.coord(1, j1);
                let c = cell_kernel_integral(alpha, 2, x - lx, hx - x, y - ly, hy - y);
                acc += nq.fvals[j] * c * cell_fill_fraction(f, j);
            }
            acc
        })
        .collect()
}

/// Riesz potential I_alpha(f, y) at an arbitrary point.
pub fn riesz_potential(f: &LogConcaveFunction, y: &[f64], cfg: &QuadratureConfig) -> Result<f64> {
    if !(cfg.alpha > 0.0) {
        return Err(CoreError::InvalidAlpha(cfg.alpha));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::InvalidSpec("potential point must be finite".into()));
    }
    Ok(potential_at(f, y, cfg.alpha, None))
}

/// Potential with an optional boundary clip: when the evaluation point sits
/// on a straight piece of the support boundary, the singular cell integral
/// is halved (the kernel is radially symmetric, so exactly half the cell's
/// angular range carries density).
pub(crate) fn potential_at(
    f: &LogConcaveFunction,
    y: &[f64],
    alpha: f64,
    boundary_clip: Option<f64>,
) -> f64 {
    let spec = f.spec();
    let n = spec.dim();
    let nf = n as f64;
    let nq = NodeQuadrature::of(f);

    if n == 1 {
        // exact kernel primitive on every cell against the frozen density;
        // when the kernel is singular, the cell hosting y freezes the
        // density at y itself
        let (i0, _) = spec.nearest_node(y);
        let host = spec.flat(i0, 0);
        let mut acc = 0.0;
        for k in 0..spec.len() {
            let mut fv = nq.fvals[k];
            if k == host && alpha < 1.0 {
                let fy = f.density_closed(y);
                fv = if fy > 0.0 { fy } else { fv };
            }
            if fv == 0.0 {
                continue;
            }
            if let Some((lo, hi)) = f.cell_interval(k) {
                acc += fv
                    * (kernel_primitive_1d(hi - y[0], alpha)
                        - kernel_primitive_1d(lo - y[0], alpha));
            }
        }
        return acc;
    }

    let singular = alpha < nf;
    let (i0, j0) = spec.nearest_node(y);
    let host = spec.flat(i0, j0);
    let hosted = singular && spec.contains(y);

    let mut acc = 0.0;
    for k in 0..spec.len() {
        if hosted && k == host {
            continue;
        }
        let fv = nq.fvals[k] * nq.weights[k];
        if fv == 0.0 {
            continue;
        }
        let p = spec.point(k);
        let d2 = (p[0] - y[0]).powi(2) + (p[1] - y[1]).powi(2);
        if d2 == 0.0 && singular {
            continue;
        }
        acc += fv * kernel(d2, alpha, nf);
    }
    if hosted {
        let fy = f.density_closed(y);
        if fy > 0.0 {
            let (lx, hx) = spec.cell_bounds(0, i0);
            let (ly, hy) = spec.cell_bounds(1, j0);
            let c = cell_kernel_integral(
                alpha,
                2,
                (y[0] - lx).max(0.0),
                (hx - y[0]).max(0.0),
                (y[1] - ly).max(0.0),
                (hy - y[1]).max(0.0),
            );
            let fill = boundary_clip.unwrap_or_else(|| {
                if nq.fvals[host] > 0.0 {
                    cell_fill_fraction(f, host)
                } else {
                    1.0
                }
            });
            acc += fy * c * fill;
        }
    }
    acc
}

/// Potential at a point on a straight piece of the support boundary: the
/// singular cell is halved, since exactly half of the cell's angular range
/// around the point carries density.
pub(crate) fn potential_at_boundary(f: &LogConcaveFunction, y: &[f64], alpha: f64) -> f64 {
    potential_at(f, y, alpha, Some(0.5))
}

fn direct_energy_value(f: &LogConcaveFunction, alpha: f64) -> f64 {
    let nq = NodeQuadrature::of(f);
    let pots = node_potentials_from(f, &nq, alpha);
    let mut acc = 0.0;
    for j in 0..nq.spec.len() {
        acc += nq.weights[j] * nq.fvals[j] * pots[j];
    }
    acc
}

fn eps_energy_value(f: &LogConcaveFunction, alpha: f64, eps: f64) -> f64 {
    let nq = NodeQuadrature::of(f);
    let spec = &nq.spec;
    let n = spec.dim();
    let nf = n as f64;
    // eps_alpha: eps below the singular range, 0 at or above it
    let eps_a = if alpha < nf { eps } else { 0.0 };
    let hx = spec.spacing(0);
    let hy = if n == 2 { spec.spacing(1) } else { 0.0 };
    let rows: Vec<f64> = (0..spec.len())
        .into_par_iter()
        .map(|j| {
            let fj = nq.fvals[j] * nq.weights[j];
            if fj == 0.0 {
                return 0.0;
            }
            let (j0, j1) = spec.unflat(j);
            let mut acc = 0.0;
            for k in 0..spec.len() {
                let fv = nq.fvals[k] * nq.weights[k];
                if fv == 0.0 {
                    continue;
                }
                let (k0, k1) = spec.unflat(k);
                let di = k0.abs_diff(j0) as f64 * hx;
                let dj = k1.abs_diff(j1) as f64 * hy;
                let d2 = di * di + if n == 2 { dj * dj } else { 0.0 };
                acc += fv * kernel(d2 + eps_a, alpha, nf);
            }
            fj * acc
        })
        .collect();
    rows.iter().sum()
}

/// Halve the lattice (keep every other node); node counts stay odd.
fn coarsen(f: &LogConcaveFunction) -> Option<LogConcaveFunction> {
    let spec = f.spec();
    let dim = spec.dim();
    if (0..dim).any(|a| spec.nodes(a) < 5) {
        return None;
    }
    let mut nodes = [0usize; 2];
    let mut lo = [0.0; 2];
    let mut hi = [0.0; 2];
    for a in 0..dim {
        nodes[a] = (spec.nodes(a) + 1) / 2;
        if nodes[a] % 2 == 0 {
            return None;
        }
        lo[a] = spec.lo(a);
        hi[a] = spec.hi(a);
    }
    let coarse = GridSpec::new(dim, &lo[..dim], &hi[..dim], &nodes[..dim]).ok()?;
    match f.analytic_form() {
        Some(form) => LogConcaveFunction::from_analytic(form.clone(), coarse).ok(),
        None => {
            let g = f.grid_potential()?;
            let values: Vec<_> = (0..coarse.len())
                .map(|k| {
                    let (i, j) = coarse.unflat(k);
                    g.value(2 * i, 2 * j)
                })
                .collect();
            let phi = crate::grid_convex::GridConvexFunction::sampled(coarse, values).ok()?;
            LogConcaveFunction::from_grid(phi).ok()
        }
    }
}

/// Certified bound on the energy truncated outside the working box,
/// following the exponential-envelope estimates behind the finiteness of
/// the energy (triangle-inequality split plus Gamma-tail integrals).
pub fn energy_tail_bound(f: &LogConcaveFunction, alpha: f64) -> f64 {
    let spec = f.spec();
    let n = spec.dim();
    if f.support_set().is_bounded() {
        // support tracked exactly; nothing lives outside the box
        let inside = match f.support_set() {
            SupportSet::Interval { lo, hi } => *lo >= spec.lo(0) && *hi <= spec.hi(0),
            SupportSet::Polygon(v) => v.iter().all(|p| spec.contains(p)),
            _ => false,
        };
        if inside {
            return 0.0;
        }
    }
    let (b, c) = f.growth_certificate();
    let r0 = spec.origin_inradius().max(0.0);
    let nf = n as f64;
    let n_omega = if n == 1 { 2.0 } else { std::f64::consts::TAU };
    // integral of |x|^s e^{-g|x|} over |x| > r
    let tail_radial = |s: f64, g: f64, r: f64| -> f64 {
        let a = s + nf;
        n_omega * g.powf(-a) * gamma_ur(a, g * r) * gamma(a)
    };
    let mass_env = n_omega * gamma(nf) * b.powf(-nf); // integral of e^{-b|y|}
    let e2c = (-2.0 * c).exp();
    if alpha <= nf {
        let a1 = (nf - alpha).exp2() * mass_env;
        let mass_env_half = n_omega * gamma(nf) * (b / 2.0).powf(-nf);
        let k2 = n_omega / alpha + mass_env_half;
        2.0 * e2c * (a1 * tail_radial(alpha - nf, b, r0) + k2 * tail_radial(0.0, 1.25 * b, r0))
    } else {
        let moment_env = n_omega * gamma(alpha) * b.powf(-alpha);
        2.0 * e2c
            * (alpha - nf).exp2()
            * (mass_env * tail_radial(alpha - nf, b, r0) + moment_env * tail_radial(0.0, b, r0))
    }
}

/// Riesz alpha-energy of f by the configured method.
pub fn riesz_energy(f: &LogConcaveFunction, cfg: &QuadratureConfig) -> Result<EnergyReport> {
    if !(cfg.alpha > 0.0) {
        return Err(CoreError::InvalidAlpha(cfg.alpha));
    }
    let alpha = cfg.alpha;
    let tail = energy_tail_bound(f, alpha);
    match cfg.method {
        QuadMethod::DirectDiagonalCorrected => {
            let value = direct_energy_value(f, alpha);
            let est = match coarsen(f) {
                Some(cf) => (value - direct_energy_value(&cf, alpha)).abs(),
                None => value.abs() * 1e-6,
            };
            Ok(EnergyReport {
                value,
                estimated_error: est.max(1e-14 * value.abs()),
                method_used: cfg.method,
                tail_bound: tail,
            })
        }
        QuadMethod::EpsilonRegularized => {
            let nf = f.dim() as f64;
            if alpha >= nf {
                // eps_alpha = 0: the regularized kernel is the plain kernel
                let value = eps_energy_value(f, alpha, 0.0);
                let est = match coarsen(f) {
                    Some(cf) => (value - eps_energy_value(&cf, alpha, 0.0)).abs(),
                    None => value.abs() * 1e-6,
                };
                return Ok(EnergyReport {
                    value,
                    estimated_error: est.max(1e-14 * value.abs()),
                    method_used: cfg.method,
                    tail_bound: tail,
                });
            }
            let raw: Vec<f64> = cfg
                .epsilon_schedule
                .iter()
                .map(|&e| eps_energy_value(f, alpha, e))
                .collect();
            // E(eps) = E + C eps^{alpha/2} + higher order
            let p = alpha / 2.0;
            let mut extraps = Vec::new();
            for w in 0..raw.len() - 1 {
                let r = (cfg.epsilon_schedule[w] / cfg.epsilon_schedule[w + 1]).powf(p);
                extraps.push((raw[w + 1] * r - raw[w]) / (r - 1.0));
            }
            let (value, est) = match extraps.len() {
                0 => (raw[0], raw[0].abs()),
                1 => (extraps[0], (extraps[0] - raw[raw.len() - 1]).abs()),
                m => {
                    let last = extraps[m - 1];
                    let spread = (extraps[m - 1] - extraps[m - 2]).abs();
                    (last, 3.0 * spread + 1e-12 * last.abs())
                }
            };
            Ok(EnergyReport {
                value,
                estimated_error: est.max(1e-14 * value.abs()),
                method_used: cfg.method,
                tail_bound: tail,
            })
        }
        QuadMethod::MonteCarlo => {
            let (value, stderr) = mc_energy(f, cfg);
            Ok(EnergyReport {
                value,
                estimated_error: 3.0 * stderr,
                method_used: cfg.method,
                tail_bound: tail,
            })
        }
    }
}

const MC_CHUNK: usize = 16_384;

/// Monte Carlo estimate of the energy: uniform pairs in the working box,
/// estimator f(x) f(y) K(x, y) V^2. Chunks are seeded independently
/// (seed + chunk index drives a dedicated stream), partial sums reduce in
/// chunk order.
fn mc_energy(f: &LogConcaveFunction, cfg: &QuadratureConfig) -> (f64, f64) {
    let spec = f.spec();
    let dim = spec.dim();
    let nf = dim as f64;
    let alpha = cfg.alpha;
    let mut vol = 1.0;
    for a in 0..dim {
        vol *= spec.hi(a) - spec.lo(a);
    }
    let n_chunks = (cfg.mc_samples + MC_CHUNK - 1) / MC_CHUNK;
    let partials: Vec<(f64, f64, u64)> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(chunk as u64 + 1);
            let count = MC_CHUNK.min(cfg.mc_samples - chunk * MC_CHUNK);
            let mut s = 0.0;
            let mut s2 = 0.0;
            let mut x = [0.0f64; 2];
            let mut y = [0.0f64; 2];
            for _ in 0..count {
                for a in 0..dim {
                    x[a] = rng.gen_range(spec.lo(a)..spec.hi(a));
                }
                for a in 0..dim {
                    y[a] = rng.gen_range(spec.lo(a)..spec.hi(a));
                }
                let mut d2 = (x[0] - y[0]).powi(2);
                if dim == 2 {
                    d2 += (x[1] - y[1]).powi(2);
                }
                let v = if d2 == 0.0 && alpha < nf {
                    0.0
                } else {
                    f.density(&x[..dim]) * f.density(&y[..dim]) * kernel(d2, alpha, nf)
                };
                s += v;
                s2 += v * v;
            }
            (s, s2, count as u64)
        })
        .collect();
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    let mut n = 0u64;
    for (s, s2, c) in partials {
        sum += s;
        sum2 += s2;
        n += c;
    }
    let nn = n as f64;
    let mean = sum / nn;
    let var = (sum2 / nn - mean * mean).max(0.0);
    let scale = vol * vol;
    (mean * scale, scale * (var / nn).sqrt())
}

/// Energy of the indicator of a bounded body (the chord-integral form of
/// the energy, exposed for convex-body experiments).
pub fn chord_energy(k: &SupportSet, cfg: &QuadratureConfig) -> Result<EnergyReport> {
    if !k.is_bounded() {
        return Err(CoreError::UnboundedBody);
    }
    let dim = k.dim();
    let mut lo = [0.0; 2];
    let mut hi = [0.0; 2];
    let mut nodes = [0usize; 2];
    match k {
        SupportSet::Interval { lo: a, hi: b } => {
            let pad = 0.05 * (b - a) + 1e-6;
            lo[0] = a - pad;
            hi[0] = b + pad;
            nodes[0] = 513;
        }
        SupportSet::Polygon(v) => {
            let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
            let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
            for p in v {
                x0 = x0.min(p[0]);
                x1 = x1.max(p[0]);
                y0 = y0.min(p[1]);
                y1 = y1.max(p[1]);
            }
            let pad_x = 0.05 * (x1 - x0) + 1e-6;
            let pad_y = 0.05 * (y1 - y0) + 1e-6;
            lo = [x0 - pad_x, y0 - pad_y];
            hi = [x1 + pad_x, y1 + pad_y];
            nodes = [129, 129];
        }
        _ => unreachable!("bounded sets are intervals or polygons"),
    }
    let spec = GridSpec::new(dim, &lo[..dim], &hi[..dim], &nodes[..dim])?;
    let f = LogConcaveFunction::indicator(k.clone(), spec)?;
    riesz_energy(&f, cfg)
}

/// Integral of w(x) f(x) f(y) K(x, y) over both variables, with the same
/// diagonal handling as the energy. The weight field is given per lattice
/// node and must be finite wherever f > 0; nodes with f = 0 are ignored.
pub fn weighted_energy(
    f: &LogConcaveFunction,
    w: &[f64],
    cfg: &QuadratureConfig,
) -> Result<f64> {
    if !(cfg.alpha > 0.0) {
        return Err(CoreError::InvalidAlpha(cfg.alpha));
    }
    let nq = NodeQuadrature::of(f);
    let spec = &nq.spec;
    if w.len() != spec.len() {
        return Err(CoreError::SpecMismatch("weight field length mismatch".into()));
    }
    // decay certificate: |w| may grow at most like e^{b|x|/2} relative to
    // its inner-box scale, so w f still decays like e^{-b|x|/2}
    let (b, _) = f.growth_certificate();
    let r0 = spec.origin_inradius().max(0.0);
    let radius = |k: usize| {
        let p = spec.point(k);
        if spec.dim() == 1 {
            p[0].abs()
        } else {
            (p[0] * p[0] + p[1] * p[1]).sqrt()
        }
    };
    let mut inner_scale = 0.0f64;
    for k in 0..spec.len() {
        if nq.fvals[k] <= 0.0 {
            continue;
        }
        if !w[k].is_finite() {
            return Err(CoreError::WeightBlowup);
        }
        if radius(k) <= r0 / 2.0 {
            inner_scale = inner_scale.max(w[k].abs() * (-b * radius(k) / 2.0).exp());
        }
    }
    for k in 0..spec.len() {
        if nq.fvals[k] <= 0.0 || radius(k) <= r0 / 2.0 {
            continue;
        }
        if w[k].abs() * (-b * radius(k) / 2.0).exp() > 4.0 * inner_scale + 1e-9 {
            return Err(CoreError::WeightBlowup);
        }
    }
    let pots = node_potentials_from(f, &nq, cfg.alpha);
    let mut acc = 0.0;
    for j in 0..spec.len() {
        if nq.fvals[j] > 0.0 {
            acc += nq.weights[j] * nq.fvals[j] * w[j] * pots[j];
        }
    }
    Ok(acc)
}
