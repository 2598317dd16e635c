//! Thresholds and frozen values from reference runs.

/// Largest pure-mode signaling gap of the reference signaling run, rounded down: 2048
/// nodes on `[-40, 40]`, width-1 packets at `+-2`, `g = 1`, softening 0.5, `dt = 5e-5`,
/// `t <= 1`, one potential per step. The run gives 0.12258.
pub const PURE_SIGNALING_GAP_FLOOR: f64 = 0.122;

/// Mixed-mode ensembles with equal density matrices must stay closer than this (L1).
pub const MIXED_SIGNALING_GAP_CEILING: f64 = 1e-8;

/// Mean-field bipartite runs keep `purity >= 1 - PURITY_DEFICIT_CEILING`.
pub const PURITY_DEFICIT_CEILING: f64 = 1e-6;

/// Mean-field bipartite runs keep the mutual information below this [bits].
pub const PRODUCT_MUTUAL_INFORMATION_CEILING: f64 = 1e-6;

/// Operator-valued couplings are expected to build at least this much mutual information [bits].
pub const ENTANGLING_MUTUAL_INFORMATION_FLOOR: f64 = 1e-3;

/// Mutual information of the quadratic-Newton bipartite reference run (`L = 5`,
/// `w^2 = 0.1`, 256^2 nodes on `[-10, 10]^2`, `dt = 1e-4`) at `t = 1` [bits].
pub const QUADRATIC_NEWTON_MUTUAL_INFORMATION: f64 = 2.150e-2;
