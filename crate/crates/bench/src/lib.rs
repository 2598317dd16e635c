//! Fixtures shared by the benchmarks.

use snlab_core::{GridSpec, WaveField};

/// Unit Gaussian on an `ns x nz` cylinder grid with extents of 8 packet widths.
pub fn cylinder_packet(ns: usize, nz: usize) -> WaveField {
    let grid = GridSpec::cylinder(ns, nz, 8.0, 8.0).expect("valid grid");
    WaveField::gaussian_cylinder(grid, 1.0, 0.0, 0.0, 0.0).expect("valid packet")
}

/// Unit Gaussian at `z0` on an `n`-node line over `[-40, 40]`.
pub fn line_packet(n: usize, z0: f64) -> WaveField {
    let grid = GridSpec::line(n, 40.0).expect("valid grid");
    WaveField::gaussian_line(grid, 1.0, z0, 0.0).expect("valid packet")
}
