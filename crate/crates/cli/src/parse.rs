//! Parsing of function specs, lattice specs and the support file format.
//!
//! Function spec strings (the one-line analytic records, plus a grid-file
//! form):
//!   `gaussian <a> <b>`           e^{-a |x|^2/2 + b}
//!   `exponential <b> <c>`        e^{-b |x| + c}
//!   `indicator [lo,hi]`          1-D interval indicator
//!   `indicator box [x0,x1] [y0,y1]`
//!   `indicator file <path>`      support set read from a file
//!   `scaled <m> indicator ...`   m times an indicator
//!   `grid <path>`                potential from a grid file
//!
//! Support files: `support interval lo hi` | `support halfline anchor <+|->`
//! | `support line` | `support plane` | `support polygon n` followed by n
//! `x y` lines.

use riesz_core::ext::Ext;
use riesz_core::logconcave::LogConcaveFunction;
use riesz_core::{CoreError, GridConvexFunction, GridSpec, SupportSet};
use std::fmt::Write as _;

pub type Result<T> = std::result::Result<T, CoreError>;

/// `lo:hi:nodes[,lo:hi:nodes]`
pub fn parse_grid_spec(text: &str) -> Result<GridSpec> {
    let axes: Vec<&str> = text.split(',').collect();
    if axes.is_empty() || axes.len() > 2 {
        return Err(CoreError::Format("grid spec needs 1 or 2 axes".into()));
    }
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    let mut nodes = Vec::new();
    for axis in &axes {
        let parts: Vec<&str> = axis.split(':').collect();
        if parts.len() != 3 {
            return Err(CoreError::Format(format!("axis `{axis}` is not lo:hi:nodes")));
        }
        lo.push(parts[0].parse::<f64>().map_err(|_| CoreError::Format("bad lo".into()))?);
        hi.push(parts[1].parse::<f64>().map_err(|_| CoreError::Format("bad hi".into()))?);
        nodes.push(parts[2].parse::<usize>().map_err(|_| CoreError::Format("bad nodes".into()))?);
    }
    GridSpec::new(axes.len(), &lo, &hi, &nodes)
}

fn parse_interval(token: &str) -> Result<(f64, f64)> {
    let inner = token
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| CoreError::Format(format!("expected [lo,hi], got `{token}`")))?;
    let parts: Vec<&str> = inner.split(',').collect();
    if parts.len() != 2 {
        return Err(CoreError::Format(format!("expected [lo,hi], got `{token}`")));
    }
    let lo = parts[0].trim().parse().map_err(|_| CoreError::Format("bad bound".into()))?;
    let hi = parts[1].trim().parse().map_err(|_| CoreError::Format("bad bound".into()))?;
    Ok((lo, hi))
}

fn parse_support_spec(tokens: &[&str]) -> Result<SupportSet> {
    match tokens {
        [interval] => {
            let (lo, hi) = parse_interval(interval)?;
            Ok(SupportSet::Interval { lo, hi })
        }
        ["box", xr, yr] => {
            let (x0, x1) = parse_interval(xr)?;
            let (y0, y1) = parse_interval(yr)?;
            SupportSet::rectangle(x0, x1, y0, y1)
        }
        ["file", path] => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CoreError::Io(format!("{path}: {e}")))?;
            read_support(&text)
        }
        other => Err(CoreError::Format(format!("bad indicator support spec: {other:?}"))),
    }
}

/// Parse a function spec. `grid` overrides the working lattice; otherwise a
/// default lattice of the requested dimension, sized to the function's own
/// scale, is used.
pub fn parse_function(
    spec: &str,
    grid: Option<&GridSpec>,
    dim: usize,
) -> Result<LogConcaveFunction> {
    let tokens: Vec<&str> = spec.split_whitespace().collect();
    let default_grid = |half: f64| {
        GridSpec::symmetric(dim, half, if dim == 1 { 513 } else { 129 })
    };
    match tokens.as_slice() {
        ["gaussian", a, b] => {
            let a: f64 = a.parse().map_err(|_| CoreError::Format("bad gaussian a".into()))?;
            let b: f64 = b.parse().map_err(|_| CoreError::Format("bad gaussian b".into()))?;
            let spec = match grid {
                Some(g) => g.clone(),
                None => default_grid(8.0 / a.abs().max(1e-6).sqrt())?,
            };
            LogConcaveFunction::gaussian(spec.dim(), a, b, spec)
        }
        ["exponential", b, c] => {
            let b: f64 = b.parse().map_err(|_| CoreError::Format("bad exponential b".into()))?;
            let c: f64 = c.parse().map_err(|_| CoreError::Format("bad exponential c".into()))?;
            let spec = match grid {
                Some(g) => g.clone(),
                None => default_grid(12.0 / b.abs().max(1e-6))?,
            };
            LogConcaveFunction::exponential(spec.dim(), b, c, spec)
        }
        ["indicator", rest @ ..] => {
            let set = parse_support_spec(rest)?;
            let spec = default_spec_for_support(&set, grid)?;
            LogConcaveFunction::indicator(set, spec)
        }
        ["scaled", m, "indicator", rest @ ..] => {
            let m: f64 = m.parse().map_err(|_| CoreError::Format("bad scale".into()))?;
            let set = parse_support_spec(rest)?;
            let spec = default_spec_for_support(&set, grid)?;
            LogConcaveFunction::scaled_indicator(m, set, spec)
        }
        ["grid", path] => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CoreError::Io(format!("{path}: {e}")))?;
            let (spec, values) = riesz_core::grid::read_grid(&text)?;
            let phi = GridConvexFunction::sampled(spec, values)?;
            LogConcaveFunction::from_grid(phi)
        }
        _ => Err(CoreError::Format(format!("unrecognized function spec `{spec}`"))),
    }
}

fn default_spec_for_support(set: &SupportSet, grid: Option<&GridSpec>) -> Result<GridSpec> {
    if let Some(g) = grid {
        return Ok(g.clone());
    }
    let r = set.circumradius();
    let half = if r.is_finite() { 2.0 * r.raw() + 1.0 } else { 8.0 };
    match set.dim() {
        1 => GridSpec::symmetric(1, half, 513),
        _ => GridSpec::symmetric(2, half, 129),
    }
}

pub fn write_support(set: &SupportSet) -> String {
    let mut out = String::new();
    match set {
        SupportSet::Interval { lo, hi } => {
            let _ = writeln!(out, "support interval {lo} {hi}");
        }
        SupportSet::HalfLine { anchor, towards_plus_infinity } => {
            let dir = if *towards_plus_infinity { "+" } else { "-" };
            let _ = writeln!(out, "support halfline {anchor} {dir}");
        }
        SupportSet::Line => {
            let _ = writeln!(out, "support line");
        }
        SupportSet::Plane => {
            let _ = writeln!(out, "support plane");
        }
        SupportSet::Polygon(v) => {
            let _ = writeln!(out, "support polygon {}", v.len());
            for p in v {
                let _ = writeln!(out, "{} {}", p[0], p[1]);
            }
        }
    }
    out
}

pub fn read_support(text: &str) -> Result<SupportSet> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| CoreError::Format("empty support file".into()))?
        .split_whitespace()
        .collect();
    match header.as_slice() {
        ["support", "interval", lo, hi] => Ok(SupportSet::Interval {
            lo: lo.parse().map_err(|_| CoreError::Format("bad interval".into()))?,
            hi: hi.parse().map_err(|_| CoreError::Format("bad interval".into()))?,
        }),
        ["support", "halfline", anchor, dir] => Ok(SupportSet::HalfLine {
            anchor: anchor.parse().map_err(|_| CoreError::Format("bad anchor".into()))?,
            towards_plus_infinity: *dir == "+",
        }),
        ["support", "line"] => Ok(SupportSet::Line),
        ["support", "plane"] => Ok(SupportSet::Plane),
        ["support", "polygon", n] => {
            let n: usize = n.parse().map_err(|_| CoreError::Format("bad count".into()))?;
            let mut verts = Vec::with_capacity(n);
            for _ in 0..n {
                let line = lines
                    .next()
                    .ok_or_else(|| CoreError::Format("truncated polygon".into()))?;
                let xy: Vec<f64> = line
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|_| CoreError::Format("bad vertex".into())))
                    .collect::<Result<_>>()?;
                if xy.len() != 2 {
                    return Err(CoreError::Format("vertex needs x y".into()));
                }
                verts.push([xy[0], xy[1]]);
            }
            SupportSet::polygon(verts)
        }
        other => Err(CoreError::Format(format!("bad support header {other:?}"))),
    }
}

/// Serialize a lattice potential through the shared grid format.
pub fn grid_to_text(phi: &GridConvexFunction) -> String {
    riesz_core::grid::write_grid(phi.spec(), phi.values())
}

/// Point spec `x[,y]`.
pub fn parse_point(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CoreError::Format("bad point".into())))
        .collect()
}

/// Comma-separated decreasing list.
pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CoreError::Format("bad list".into())))
        .collect()
}

/// Ext values for CSV output: `inf` for +inf, shortest round trip otherwise.
pub fn ext_to_string(v: Ext) -> String {
    if v.is_finite() {
        format!("{}", v.raw())
    } else {
        "inf".to_string()
    }
}
