//! Shared fixtures for the criterion benches.

use riesz_core::ext::Ext;
use riesz_core::logconcave::LogConcaveFunction;
use riesz_core::{GridConvexFunction, GridSpec};

/// Convex 1-D profile with both smooth and kinked structure.
pub fn quadratic_cone_1d(half: f64, nodes: usize) -> GridConvexFunction {
    let spec = GridSpec::symmetric(1, half, nodes).unwrap();
    let values = (0..nodes)
        .map(|i| {
            let x = spec.coord(0, i);
            Ext::finite(0.4 * x * x + (x - 0.7).abs())
        })
        .collect();
    GridConvexFunction::new(spec, values).unwrap()
}

/// Anisotropic convex bowl on a planar lattice.
pub fn bowl_2d(half: f64, nodes: usize) -> GridConvexFunction {
    let spec = GridSpec::symmetric(2, half, nodes).unwrap();
    let values = (0..spec.len())
        .map(|k| {
            let p = spec.point(k);
            Ext::finite(0.6 * p[0] * p[0] + 0.3 * p[1] * p[1] + 0.2 * (p[0] + p[1]).abs())
        })
        .collect();
    GridConvexFunction::new(spec, values).unwrap()
}

/// Standard Gaussian on a 1-D working lattice.
pub fn gaussian_1d(nodes: usize) -> LogConcaveFunction {
    LogConcaveFunction::gaussian(1, 1.0, 0.0, GridSpec::symmetric(1, 8.0, nodes).unwrap())
        .unwrap()
}

/// Unit-square indicator on a planar working lattice.
pub fn square_2d(nodes: usize) -> LogConcaveFunction {
    LogConcaveFunction::indicator(
        riesz_core::SupportSet::rectangle(-0.5, 0.5, -0.5, 0.5).unwrap(),
        GridSpec::symmetric(2, 1.0, nodes).unwrap(),
    )
    .unwrap()
}
