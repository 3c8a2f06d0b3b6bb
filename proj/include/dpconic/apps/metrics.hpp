#pragma once

// Monte Carlo evaluation of released solutions shared by the applications.

#include "dpconic/ldr.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace dpconic {

enum class Strategy { Input, Output, Program };

std::string_view to_string(Strategy strategy);
Strategy strategy_from_string(std::string_view name);

struct RuleMetrics {
    double mean_loss = 0.0;
    double infeasibility_rate = 0.0;
    /// c'(xbar + X zeta_s) - c'x* per draw.
    Vector losses;
    std::vector<bool> feasible;
};

/// Draws zeta_s = sample_noise(noise, seed, S) rows; a draw is infeasible
/// when the slack of x = xbar + X zeta_s leaves the cones by more than tol.
RuleMetrics evaluate_rule_metrics(const DecisionRule& rule, const ConicProgram& base, const Solution& base_solution,
                                  const NoiseSpec& noise, Index S, std::uint64_t seed, double tol = 1e-6);

/// One strategy evaluated at one parameter point.
struct StrategyResult {
    Strategy strategy = Strategy::Program;
    /// "ok", or the reason no rule exists (e.g. "infeasible").
    std::string status = "ok";
    double loss_mean = 0.0;
    /// CVaR of the loss over the worst 5% of draws.
    double loss_cvar = 0.0;
    double infeasibility = 0.0;
    Index draws = 0;
    /// Per-draw losses; NaN where no loss is defined (failed input solves).
    Vector losses;
};

/// Mean and 5% CVaR over the finite entries of `losses`, `infeasible` draws
/// out of losses.size().
StrategyResult summarize(Strategy strategy, const Vector& losses, Index infeasible);

}  // namespace dpconic
