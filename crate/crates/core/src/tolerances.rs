//! Numerical tolerances shared across modules.

/// Coefficients below this magnitude are dropped from polynomials.
pub const COEFF_PRUNE: f64 = 1e-14;

/// Largest imaginary residue tolerated when expanding into real variables (relative).
pub const IMAG_RESIDUE: f64 = 1e-12;

/// Default relative stopping tolerance of the interior-point solver.
pub const SDP_TOL: f64 = 1e-8;

/// Default iteration cap of the interior-point solver.
pub const SDP_MAX_ITER: usize = 200;

/// Relative singular-value threshold for numerical rank.
pub const RANK_TOL: f64 = 1e-6;

/// Entries below this (relative to the row maximum) are treated as zero during row reduction.
pub const ECHELON_DROP: f64 = 1e-11;

/// Commutation defect allowed between shift matrices.
pub const COMMUTE_TOL: f64 = 1e-8;

/// Allowed defect in `sum T_i^T T_i = R I`, relative to `R`.
pub const SHIFT_SUM_TOL: f64 = 1e-6;

/// Fitting error allowed when matching a shift pair to a canonical form.
pub const SHIFT_FORM_TOL: f64 = 1e-6;

/// Constraint violation allowed for an extracted atom.
pub const ATOM_FEAS_TOL: f64 = 1e-4;

/// Objective gap allowed for an extracted atom, scaled by `1 + |opt|`.
pub const ATOM_OBJ_TOL: f64 = 1e-3;

/// Agreement required between two independent joint diagonalizations.
pub const JOINT_DIAG_TOL: f64 = 1e-5;
