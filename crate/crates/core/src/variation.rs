//! First variation of the Riesz energy along the Asplund sum,
//! delta I_a(f, g) = (1/2) d/dt I_a(f (+) t.g) at t = 0+, by four routes
//! that cross-check each other:
//!
//! * `delta_ff_closed` - the closed form
//!   ((n + alpha)/2) I_a(f) - integral of phi f f / |x-y|^{n-alpha};
//! * `delta_ff_boundary_form` / `delta_fg_general` - the integral
//!   representation: a bulk term in psi*(grad phi) against the potential
//!   plus a boundary term weighted by the support function at the Gauss
//!   map (zero when the support is the whole space);
//! * `delta_fg_proportional` - beta1 delta I(f,f) + beta2 I(f) when
//!   psi* = beta1 phi* + beta2;
//! * `delta_finite_difference` - one-sided difference quotients of the
//!   energy of f (+) t.g with Richardson extrapolation in t. One-sided
//!   only: the sum is undefined for t < 0.

use crate::error::{CoreError, Result};
use crate::logconcave::LogConcaveFunction;
use crate::quad::{self, QuadratureConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariationRoute {
    ClosedFF,
    BoundaryFF,
    GeneralFG,
    Proportional,
    FiniteDifference,
}

impl std::fmt::Display for VariationRoute {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            VariationRoute::ClosedFF => "closed",
            VariationRoute::BoundaryFF => "boundary",
            VariationRoute::GeneralFG => "general",
            VariationRoute::Proportional => "proportional",
            VariationRoute::FiniteDifference => "fd",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, Default)]
pub struct VariationDiagnostics {
    /// (t, one-sided quotient) pairs for the finite-difference route
    pub fd_table: Vec<(f64, f64)>,
    /// successive Richardson extrapolants
    pub fd_extrapolants: Vec<f64>,
    /// growth-condition violation reported before a general-route run
    pub growth_violation: Option<f64>,
    /// translation applied to put the origin inside the support
    pub translated_by: Option<Vec<f64>>,
}

/// One evaluation of the first variation. For the integral routes the value
/// splits as interior_term + boundary_term; the closed, proportional and
/// finite-difference routes carry their value in interior_term with a zero
/// boundary part.
#[derive(Debug, Clone)]
pub struct VariationReport {
    pub value: f64,
    pub route: VariationRoute,
    pub interior_term: f64,
    pub boundary_term: f64,
    pub diagnostics: VariationDiagnostics,
}

/// Closed form for g = f:
/// value = ((n + alpha)/2) I_a(f) - iint phi(x) f(x) f(y) K dx dy.
pub fn delta_ff_closed(f: &LogConcaveFunction, cfg: &QuadratureConfig) -> Result<VariationReport> {
    let energy = quad::riesz_energy(f, cfg)?.value;
    let w: Vec<f64> = (0..f.spec().len())
        .map(|k| f.potential_node(k).as_finite().unwrap_or(0.0))
        .collect();
    let weighted = quad::weighted_energy(f, &w, cfg)?;
    let n = f.dim() as f64;
    let value = (n + cfg.alpha) / 2.0 * energy - weighted;
    Ok(VariationReport {
        value,
        route: VariationRoute::ClosedFF,
        interior_term: value,
        boundary_term: 0.0,
        diagnostics: VariationDiagnostics::default(),
    })
}

/// Integral representation of delta I(f, f): bulk term in phi*(grad phi)
/// plus the boundary term weighted by h_{K_f} at the outward normal.
pub fn delta_ff_boundary_form(
    f: &LogConcaveFunction,
    cfg: &QuadratureConfig,
) -> Result<VariationReport> {
    general_route(f, f, cfg, VariationRoute::BoundaryFF, false)
}

/// General (f, g) integral representation. The growth comparison
/// psi* <= beta1 phi* + beta2 is checked first and reported in the
/// diagnostics; a positive violation downgrades confidence but the value is
/// still computed.
pub fn delta_fg_general(
    f: &LogConcaveFunction,
    g: &LogConcaveFunction,
    cfg: &QuadratureConfig,
) -> Result<VariationReport> {
    general_route(f, g, cfg, VariationRoute::GeneralFG, true)
}

fn general_route(
    f: &LogConcaveFunction,
    g: &LogConcaveFunction,
    cfg: &QuadratureConfig,
    route: VariationRoute,
    check_growth: bool,
) -> Result<VariationReport> {
    if !(cfg.alpha > 0.0) {
        return Err(CoreError::InvalidAlpha(cfg.alpha));
    }
    let mut diagnostics = VariationDiagnostics::default();
    if check_growth {
        let rep = f.check_growth_condition(g, None)?;
        diagnostics.growth_violation = Some(rep.max_violation);
    }

    // the representation needs the origin interior to K_f; translating f
    // leaves the variation unchanged (the energy is translation invariant)
    let mut shifted;
    let f = if f.support_set().origin_interior() {
        f
    } else {
        let target = f
            .support_set()
            .interior_point()
            .ok_or(CoreError::OriginNotInterior)?;
        // snap to the lattice so grid backings translate exactly
        let (i, j) = f.spec().nearest_node(&target);
        let node = f.spec().point(f.spec().flat(i, j));
        let dim = f.dim();
        shifted = f.translated(&node[..dim])?;
        if !shifted.support_set().origin_interior() {
            // nearest node may sit outside thin supports; use the exact point
            shifted = f.translated(&target)?;
            if !shifted.support_set().origin_interior() {
                return Err(CoreError::OriginNotInterior);
            }
        }
        diagnostics.translated_by = Some(node[..dim].to_vec());
        &shifted
    };

    let dim = f.dim();
    let pots = quad::node_potentials(f, cfg.alpha);
    let spec = f.spec();
    let mut interior = 0.0;
    for k in 0..spec.len() {
        let fv = f.density_node(k);
        if fv <= 0.0 {
            continue;
        }
        let w = f.node_weight(k);
        let p = spec.point(k);
        let grad = f.gradient(&p[..dim])?;
        let conj = g.conjugate_at(&grad);
        let conj = match conj.as_finite() {
            Some(v) => v,
            // grad phi(x) is a subgradient, so Fenchel holds with equality:
            // psi*(grad) falls back to <x, grad> - psi(x) only when g = f
            None => {
                if route == VariationRoute::BoundaryFF {
                    let mut dot = p[0] * grad[0];
                    if dim == 2 {
                        dot += p[1] * grad[1];
                    }
                    dot - f.potential_node(k).as_finite().unwrap_or(0.0)
                } else {
                    return Ok(VariationReport {
                        value: f64::INFINITY,
                        route,
                        interior_term: f64::INFINITY,
                        boundary_term: 0.0,
                        diagnostics,
                    });
                }
            }
        };
        interior += w * fv * conj * pots[k];
    }

    let kg = g.support_set().clone();
    let boundary = boundary_quadrature(
        f,
        &|nu: &[f64]| kg.support_function(nu).map(|v| v.raw()).unwrap_or(f64::INFINITY),
        cfg,
    )?;
    Ok(VariationReport {
        value: interior + boundary,
        route,
        interior_term: interior,
        boundary_term: boundary,
        diagnostics,
    })
}

/// Proportional perturbation psi* = beta1 phi* + beta2:
/// delta I(f, g) = beta1 delta I(f, f) + beta2 I(f).
pub fn delta_fg_proportional(
    f: &LogConcaveFunction,
    beta1: f64,
    beta2: f64,
    cfg: &QuadratureConfig,
) -> Result<VariationReport> {
    if !(beta1 > 0.0) {
        return Err(CoreError::NonpositiveBeta1(beta1));
    }
    let closed = delta_ff_closed(f, cfg)?;
    let energy = quad::riesz_energy(f, cfg)?.value;
    let value = beta1 * closed.value + beta2 * energy;
    Ok(VariationReport {
        value,
        route: VariationRoute::Proportional,
        interior_term: value,
        boundary_term: 0.0,
        diagnostics: VariationDiagnostics::default(),
    })
}

/// One-sided difference quotients of t -> I_a(f (+) t.g) at the given
/// decreasing t values, extrapolated to t = 0 assuming first-order error.
pub fn delta_finite_difference(
    f: &LogConcaveFunction,
    g: &LogConcaveFunction,
    t_list: &[f64],
    cfg: &QuadratureConfig,
) -> Result<VariationReport> {
    if t_list.is_empty()
        || t_list.iter().any(|&t| !(t > 0.0 && t <= 0.25))
        || t_list.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(CoreError::InvalidConfig(
            "t list must be strictly decreasing inside (0, 0.25]".into(),
        ));
    }
    let base = quad::riesz_energy(f, cfg)?.value;
    let mut diagnostics = VariationDiagnostics::default();
    let mut quotients = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let ft = f.asplund_sum(g, t)?;
        let et = quad::riesz_energy(&ft, cfg)?.value;
        let q = (et - base) / (2.0 * t);
        diagnostics.fd_table.push((t, q));
        quotients.push(q);
    }
    // Neville table in t (polynomial extrapolation to t = 0)
    let mut row = quotients.clone();
    diagnostics.fd_extrapolants.push(*row.last().unwrap());
    let m = row.len();
    for level in 1..m {
        for i in 0..m - level {
            let (t0, t1) = (t_list[i], t_list[i + level]);
            row[i] = (t0 * row[i + 1] - t1 * row[i]) / (t0 - t1);
        }
        diagnostics.fd_extrapolants.push(row[0]);
    }
    let value = row[0];
    Ok(VariationReport {
        value,
        route: VariationRoute::FiniteDifference,
        interior_term: value,
        boundary_term: 0.0,
        diagnostics,
    })
}

/// Surface integral over the support boundary:
/// sum / integral of weight(nu(x)) f(x) I_a(f, x) dH^{n-1}(x).
///
/// 1-D supports contribute their finite endpoints; polygon edges use a
/// composite midpoint rule with per-edge constant outward normal (vertices
/// carry no H^1 mass); whole-space supports contribute exactly zero.
pub fn boundary_quadrature(
    f: &LogConcaveFunction,
    weight: &dyn Fn(&[f64]) -> f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let elements = f.support_set().boundary_elements();
    if elements.is_empty() {
        return Ok(0.0);
    }
    let dim = f.dim();
    let alpha = cfg.alpha;
    let mut total = 0.0;
    if dim == 1 {
        for el in elements {
            let w = weight(&el.normal[..1]);
            let fv = f.density_closed(&el.point[..1]);
            if fv == 0.0 {
                continue;
            }
            let i = quad::potential_at_boundary(f, &el.point[..1], alpha);
            total += w * fv * i;
        }
        return Ok(total);
    }
    let h = f.spec().max_spacing();
    for el in elements {
        if el.length <= 0.0 {
            continue;
        }
        let w = weight(&el.normal);
        // reconstruct the edge from its midpoint, tangent and length
        let tangent = [-el.normal[1], el.normal[0]];
        let panels = (el.length / h).ceil().max(1.0) as usize;
        let dl = el.length / panels as f64;
        let mut edge_sum = 0.0;
        for p in 0..panels {
            let s = (p as f64 + 0.5) * dl - el.length / 2.0;
            let q = [el.point[0] + s * tangent[0], el.point[1] + s * tangent[1]];
            let fv = f.density_closed(&q);
            if fv == 0.0 {
                continue;
            }
            edge_sum += fv * quad::potential_at_boundary(f, &q, alpha) * dl;
        }
        total += w * edge_sum;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::support::SupportSet;
    use approx::assert_relative_eq;

    const PI: f64 = std::f64::consts::PI;

    fn spec1(half: f64, nodes: usize) -> GridSpec {
        GridSpec::symmetric(1, half, nodes).unwrap()
    }

    fn indicator() -> LogConcaveFunction {
        LogConcaveFunction::indicator(SupportSet::Interval { lo: -1.0, hi: 1.0 }, spec1(4.0, 513))
            .unwrap()
    }

    fn gaussian() -> LogConcaveFunction {
        LogConcaveFunction::gaussian(1, 1.0, 0.0, spec1(8.0, 513)).unwrap()
    }

    fn exponential() -> LogConcaveFunction {
        LogConcaveFunction::exponential(1, 1.0, 0.0, spec1(12.0, 513)).unwrap()
    }

    #[test]
    fn closed_form_values() {
        let cfg = QuadratureConfig::direct(1.0).unwrap();
        assert_relative_eq!(
            delta_ff_closed(&exponential(), &cfg).unwrap().value,
            0.0,
            epsilon = 5e-3
        );
        assert_relative_eq!(
            delta_ff_closed(&indicator(), &cfg).unwrap().value,
            4.0,
            epsilon = 1e-3
        );
        assert_relative_eq!(delta_ff_closed(&gaussian(), &cfg).unwrap().value, PI, epsilon = 1e-4);
    }

    #[test]
    fn boundary_form_values() {
        let cfg = QuadratureConfig::direct(1.0).unwrap();
        let r = delta_ff_boundary_form(&indicator(), &cfg).unwrap();
        assert_relative_eq!(r.interior_term, 0.0, epsilon = 1e-12);
        assert_relative_eq!(r.boundary_term, 4.0, epsilon = 1e-6);

        let r = delta_ff_boundary_form(&gaussian(), &cfg).unwrap();
        assert_eq!(r.boundary_term, 0.0); // K_f is the whole line
        assert_relative_eq!(r.interior_term, PI, epsilon = 1e-4);

        let r = delta_ff_boundary_form(&exponential(), &cfg).unwrap();
        assert_relative_eq!(r.value, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn finite_difference_examples() {
        let cfg = QuadratureConfig::direct(1.0).unwrap();
        let ind = indicator();
        let r = delta_finite_difference(&ind, &ind, &[0.02, 0.01], &cfg).unwrap();
        assert_relative_eq!(r.value, 4.0, epsilon = 1e-3);

        let e = exponential();
        let r = delta_finite_difference(&e, &e, &[0.02, 0.01], &cfg).unwrap();
        assert!(r.value.abs() <= 1e-6, "exponential family is fixed: {}", r.value);

        let g = gaussian();
        let r = delta_finite_difference(&g, &g, &[0.04, 0.02, 0.01], &cfg).unwrap();
        assert!((r.value - PI).abs() / PI <= 2e-2, "fd {} vs pi", r.value);
        assert_eq!(r.diagnostics.fd_table.len(), 3);
    }

    #[test]
    fn fd_rejects_bad_t_lists() {
        let cfg = QuadratureConfig::direct(1.0).unwrap();
        let ind = indicator();
        assert!(delta_finite_difference(&ind, &ind, &[0.01, 0.02], &cfg).is_err());
        assert!(delta_finite_difference(&ind, &ind, &[0.5], &cfg).is_err());
        assert!(delta_finite_difference(&ind, &ind, &[], &cfg).is_err());
    }

    #[test]
    fn general_route_interval_pair() {
        // f = 1_[-1,1], g = 1_[-2,2]: interior 0, boundary 2*2 + 2*2 = 8
        let cfg = QuadratureConfig::direct(1.0).unwrap();
        let f = indicator();
        let g = LogConcaveFunction::indicator(
            SupportSet::Interval { lo: -2.0, hi: 2.0 },
            spec1(4.0, 513),
        )
        .unwrap();
        let r = delta_fg_general(&f, &g, &cfg).unwrap();
        assert_relative_eq!(r.interior_term, 0.0, epsilon = 1e-12);
        assert_relative_eq!(r.boundary_term, 8.0, epsilon = 1e-6);
        assert_eq!(r.diagnostics.growth_violation, Some(0.0));

        // Minkowski-sum finite-difference oracle: I(t) = 4 (1 + 2t)^2
        let fd = delta_finite_difference(&f, &g, &[0.02, 0.01], &cfg).unwrap();
        assert_relative_eq!(fd.value, 8.0, epsilon = 1e-3);
    }

    #[test]
    fn proportional_matches_general() {
        // g = e^{beta2} (beta1 . f) for Gaussian f
        let cfg = QuadratureConfig::direct(1.0).unwrap();
        let f = gaussian();
        let (beta1, beta2) = (2.0, 1.0);
        let prop = delta_fg_proportional(&f, beta1, beta2, &cfg).unwrap();
        assert_relative_eq!(prop.value, beta1 * PI + beta2 * 2.0 * PI, epsilon = 1e-3);

        let g = LogConcaveFunction::gaussian(1, 1.0 / beta1, beta2, spec1(8.0, 513)).unwrap();
        let gen = delta_fg_general(&f, &g, &cfg).unwrap();
        assert_relative_eq!(gen.value, prop.value, max_relative = 1e-3);
        assert!(matches!(
            delta_fg_proportional(&f, 0.0, 0.0, &cfg),
            Err(CoreError::NonpositiveBeta1(_))
        ));
    }

    #[test]
    fn translation_fallback_for_offset_support() {
        let cfg = QuadratureConfig::direct(1.0).unwrap();
        let f = LogConcaveFunction::indicator(
            SupportSet::Interval { lo: 1.0, hi: 3.0 },
            GridSpec::new(1, &[0.0], &[4.0], &[513]).unwrap(),
        )
        .unwrap();
        let r = delta_ff_boundary_form(&f, &cfg).unwrap();
        assert!(r.diagnostics.translated_by.is_some());
        // translation invariance: same value as the centered interval
        let centered = indicator();
        let rc = delta_ff_boundary_form(&centered, &cfg).unwrap();
        assert_relative_eq!(r.value, rc.value, max_relative = 1e-9);
    }

    #[test]
    fn boundary_quadrature_examples() {
        let cfg = QuadratureConfig::direct(1.0).unwrap();
        let f = indicator();
        let v = boundary_quadrature(&f, &|_| 1.0, &cfg).unwrap();
        assert_relative_eq!(v, 4.0, epsilon = 1e-6); // 2 + 2

        let g = gaussian();
        assert_eq!(boundary_quadrature(&g, &|_| 1.0, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn shift_rule_under_constant_rescaling() {
        // f~ = e^c f, g~ = e^d g: delta(f~, g~) = e^{2c} (delta(f, g) + d I(f))
        let cfg = QuadratureConfig::direct(1.0).unwrap();
        let f = gaussian();
        let g = LogConcaveFunction::gaussian(1, 2.0, 0.0, spec1(8.0, 513)).unwrap();
        let (c, d): (f64, f64) = (0.3, -0.2);
        let base = delta_fg_general(&f, &g, &cfg).unwrap().value;
        let energy = quad::riesz_energy(&f, &cfg).unwrap().value;
        let ft = f.scale_mass(c.exp()).unwrap();
        let gt = g.scale_mass(d.exp()).unwrap();
        let lifted = delta_fg_general(&ft, &gt, &cfg).unwrap().value;
        assert_relative_eq!(
            lifted,
            (2.0 * c).exp() * (base + d * energy),
            max_relative = 1e-6
        );
    }
}
