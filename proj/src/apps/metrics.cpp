#include "dpconic/apps/metrics.hpp"

#include "dpconic/errors.hpp"
#include "dpconic/parallel.hpp"
#include "dpconic/risk.hpp"

#include <cmath>
#include <limits>

namespace dpconic {

std::string_view to_string(Strategy strategy) {
    switch (strategy) {
        case Strategy::Input: return "input";
        case Strategy::Output: return "output";
        case Strategy::Program: return "program";
    }
    return "?";
}

Strategy strategy_from_string(std::string_view name) {
    if (name == "input") return Strategy::Input;
    if (name == "output") return Strategy::Output;
    if (name == "program") return Strategy::Program;
    throw ValidationError("unknown strategy '" + std::string(name) + "' (expected input, output or program)");
}

RuleMetrics evaluate_rule_metrics(const DecisionRule& rule, const ConicProgram& base, const Solution& base_solution,
                                  const NoiseSpec& noise, Index S, std::uint64_t seed, double tol) {
    if (S < 1) throw ValidationError("evaluate_rule_metrics: S must be >= 1");
    if (rule.xbar.size() != base.cols() || base_solution.x.size() != base.cols() || rule.X.cols() != noise.dim)
        throw ValidationError("evaluate_rule_metrics: shape mismatch");
    const Matrix zeta = sample_noise(noise, seed, S);
    const double optimum = base.c.dot(base_solution.x);
    RuleMetrics out;
    out.losses.resize(S);
    std::vector<char> ok(static_cast<std::size_t>(S));
    parallel_for(static_cast<std::size_t>(S), [&](std::size_t s) {
        const auto i = static_cast<Index>(s);
        const Vector x = rule.evaluate(zeta.row(i).transpose());
        out.losses(i) = base.c.dot(x) - optimum;
        ok[s] = cone_membership(slack(base, x), base.cones, tol) ? 1 : 0;
    });
    Index bad = 0;
    out.feasible.resize(static_cast<std::size_t>(S));
    for (std::size_t s = 0; s < ok.size(); ++s) {
        out.feasible[s] = ok[s] != 0;
        bad += ok[s] ? 0 : 1;
    }
    out.mean_loss = out.losses.mean();
    out.infeasibility_rate = static_cast<double>(bad) / static_cast<double>(S);
    return out;
}

StrategyResult summarize(Strategy strategy, const Vector& losses, Index infeasible) {
    StrategyResult r;
    r.strategy = strategy;
    r.draws = losses.size();
    r.losses = losses;
    r.infeasibility = r.draws ? static_cast<double>(infeasible) / static_cast<double>(r.draws) : 0.0;
    std::vector<double> finite;
    for (Index s = 0; s < losses.size(); ++s)
        if (std::isfinite(losses(s))) finite.push_back(losses(s));
    if (finite.empty()) {
        r.loss_mean = r.loss_cvar = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    const Eigen::Map<const Vector> f(finite.data(), static_cast<Index>(finite.size()));
    r.loss_mean = f.mean();
    r.loss_cvar = cvar_empirical(f, 0.95);
    return r;
}

}  // namespace dpconic
