#pragma once

// The one-variable LP  min c x  s.t.  lower <= x <= upper  with the lower
// bound as the private datum. For c > 0 the optimum is x* = lower, so the
// identity query on x has sensitivity alpha under |lower - lower'| <= alpha.

#include "dpconic/apps/metrics.hpp"
#include "dpconic/ldr.hpp"
#include "dpconic/privacy.hpp"

#include <optional>

namespace dpconic {

struct SimpleLpSettings {
    double c = 1.0;
    double lower = 1.0;
    double upper = 3.0;
    double alpha = 0.1;
    double eps = 1.0;
    double eta = 0.05;
    double beta = 0.01;
    /// Defaults to alpha (exact for c > 0).
    std::optional<double> delta1;

    void check() const;
};

/// Pairs (lower, lower') with |lower - lower'| <= alpha; the query solves the
/// LP and returns x*.
AdjacencyModel simple_lp_adjacency(const SimpleLpSettings& settings);

struct PrivateSimpleLp {
    SimpleLpSettings settings;
    ConicProgram program;
    Solution base;
    NoiseSpec noise;
    PrivatizedProgram privatized;
    DecisionRule rule;
    QueryRelease release;
};

/// Laplace(delta1 / eps) on x, identity query, bounds held over the vertex
/// box of the noise.
PrivateSimpleLp privatize_simple_lp(const SimpleLpSettings& settings, std::uint64_t seed);

/// Output releases x* + zeta; input solves the LP with lower + zeta (same
/// draws, so the two coincide when the perturbed LP is feasible); program
/// releases xbar + zeta. Infeasible when the released x leaves
/// [lower, upper] or the perturbed LP has no solution. Loss c (x - x*).
StrategyResult evaluate_simple_lp(const PrivateSimpleLp& priv, Strategy strategy, Index draws, std::uint64_t seed);

}  // namespace dpconic
