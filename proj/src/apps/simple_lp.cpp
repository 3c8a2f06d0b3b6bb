#include "dpconic/apps/simple_lp.hpp"

#include "dpconic/errors.hpp"
#include "dpconic/parallel.hpp"

#include <cmath>
#include <limits>

namespace dpconic {

void SimpleLpSettings::check() const {
    if (!(lower < upper)) throw ValidationError("simple lp: lower must be < upper");
    if (!(alpha > 0.0) || !(eps > 0.0)) throw ValidationError("simple lp: alpha and eps must be > 0");
    if (delta1 && !(*delta1 >= 0.0)) throw ValidationError("simple lp: delta1 must be >= 0");
}

AdjacencyModel simple_lp_adjacency(const SimpleLpSettings& settings) {
    settings.check();
    auto query = [settings](const Vector& lower) {
        const Solution sol = solve(build_simple_lp(settings.c, lower(0), settings.upper));
        if (!sol.optimal()) throw SolveFailure("simple lp: solver returned " + std::string(to_string(sol.status)));
        return sol.x;
    };
    return AdjacencyModel(settings.alpha, ball_sampler(Vector::Constant(1, settings.lower), settings.alpha), query);
}

PrivateSimpleLp privatize_simple_lp(const SimpleLpSettings& settings, std::uint64_t seed) {
    settings.check();
    PrivateSimpleLp out;
    out.settings = settings;
    out.program = build_simple_lp(settings.c, settings.lower, settings.upper);
    out.base = solve(out.program);
    if (!out.base.optimal()) throw SolveFailure("simple lp: base program " + std::string(to_string(out.base.status)));
    out.noise = calibrate_laplace(settings.delta1.value_or(settings.alpha), settings.eps, 1);
    const auto query = QueryConstraint::identity({0});
    out.privatized = privatize(out.program, out.noise, query, ChanceSpec::vertex(settings.eta, settings.beta), seed);
    out.rule = solve_privatized(out.privatized).rule;
    out.release = release_query(out.rule, query, out.noise, derive_seed(seed, 2));
    return out;
}

StrategyResult evaluate_simple_lp(const PrivateSimpleLp& priv, Strategy strategy, Index draws, std::uint64_t seed) {
    if (draws < 1) throw ValidationError("evaluate_simple_lp: draws must be >= 1");
    const SimpleLpSettings& st = priv.settings;
    const double x_star = priv.base.x(0);
    const Matrix zeta = sample_noise(priv.noise, seed, draws);
    Vector losses(draws);
    std::vector<char> bad(static_cast<std::size_t>(draws), 0);
    parallel_for(static_cast<std::size_t>(draws), [&](std::size_t s) {
        const auto i = static_cast<Index>(s);
        double x = 0.0;
        switch (strategy) {
            case Strategy::Output: x = x_star + zeta(i, 0); break;
            case Strategy::Program: x = priv.rule.xbar(0) + zeta(i, 0); break;
            case Strategy::Input: {
                const double lower = st.lower + zeta(i, 0);
                const Solution sol =
                    lower < st.upper ? solve(build_simple_lp(st.c, lower, st.upper)) : Solution{};
                if (!sol.optimal()) {
                    losses(i) = std::numeric_limits<double>::quiet_NaN();
                    bad[s] = 1;
                    return;
                }
                x = sol.x(0);
                break;
            }
        }
        losses(i) = st.c * (x - x_star);
        bad[s] = x < st.lower || x > st.upper ? 1 : 0;
    });
    Index count = 0;
    for (char b : bad) count += b;
    return summarize(strategy, losses, count);
}

}  // namespace dpconic
