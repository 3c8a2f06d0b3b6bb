#pragma once

// Primal-dual interior-point method for ConicProgram over Zero, NonNeg,
// SecondOrder and RotatedSecondOrder cones.
//
// The iteration runs on the homogeneous self-dual embedding with
// Nesterov-Todd scaling and a Mehrotra predictor-corrector step, so
// infeasible and unbounded programs terminate with a certificate instead of
// diverging. Zero blocks become linear equalities; rotated cones are mapped
// onto ordinary second-order cones by an orthogonal change of coordinates.

#include "dpconic/conic.hpp"

namespace dpconic {

struct SolverSettings {
    double tol = 1e-8;
    int max_iter = 200;
    /// A run that stalls (or hits max_iter) whose best iterate meets this
    /// looser tolerance returns Optimal with reduced_accuracy set.
    double reduced_tol = 1e-6;
    /// Iterations without a better merit before the run counts as stalled.
    int stall_iters = 10;
    /// Certificate residual accepted for PrimalInfeasible / DualInfeasible.
    double infeasibility_threshold = 1e-8;
    /// Static primal/dual regularization of the reduced KKT system.
    double regularization = 1e-9;
    /// Ruiz equilibration passes applied to [A; b] before iterating.
    int equilibration_passes = 10;
    bool verbose = false;

    /// Throws ValidationError when a field is out of range.
    void check() const;
};

/// Requires validate(program) to be empty. Throws NumericalBreakdown when
/// the KKT system is singular at the starting point; a breakdown in a later
/// iteration returns the best iterate with status MaxIter, as does a run
/// that stalls short of reduced_tol.
///
/// Termination residuals are relative: primal by 1 + max(|b|, |Ax|, |s|),
/// dual by 1 + max(|c|, |A'y|).
Solution solve(const ConicProgram& program, const SolverSettings& settings = {});

struct KktReport {
    double primal = 0.0;
    double dual = 0.0;
    double gap = 0.0;
    double complementarity = 0.0;
};

/// Residuals recomputed from (x, y) alone, without any solver state:
///  primal           dist(b - Ax, K) / (1 + |b|)
///  dual             (|A'y + c| + dist(y, K*)) / (1 + |c|)
///  gap              |c'x + b'y| / (1 + |c'x|)
///  complementarity  |(b - Ax)'y| / (1 + |c'x|)
KktReport kkt_report(const ConicProgram& program, const Solution& solution);

}  // namespace dpconic
