#pragma once

// DC optimal power flow with one generator per node:
//   min c'x  s.t.  1'(x - d) = 0,  |F(x - d)| <= fmax,  xmin <= x <= xmax.
// The private dataset is the demand vector d; the released query is the
// dispatch cost.

#include "dpconic/apps/metrics.hpp"
#include "dpconic/ldr.hpp"
#include "dpconic/privacy.hpp"
#include "dpconic/risk.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace dpconic {

struct PowerNetwork {
    std::string name;
    Index nodes = 0;
    Index lines = 0;
    Vector c, d, xmin, xmax, fmax;
    /// lines x nodes PTDF matrix.
    Matrix F;

    void check() const;
};

PowerNetwork network_from_json(const nlohmann::json& doc);
nlohmann::json network_to_json(const PowerNetwork& net);
PowerNetwork load_network(const std::filesystem::path& path);
/// Networks shipped in the data directory, by name ("net3", "net4", "net5").
PowerNetwork bundled_network(const std::string& name);

/// Rows: Zero(1) balance, then NonNeg flow limits (F x <= fmax + F d and
/// -F x <= fmax - F d) and generation limits (x >= xmin, x <= xmax).
ConicProgram build_opf(const PowerNetwork& net);

/// max(c) alpha: a single demand element moving by alpha changes the cost by
/// at most the price of the most expensive generator times alpha.
double opf_sensitivity_bound(const Vector& c, double alpha);

/// Adjacent demands differ in one uniformly chosen element by U(-alpha,
/// alpha); the query is the optimal cost c'x*(d).
AdjacencyModel opf_adjacency(const PowerNetwork& net, double alpha);

/// [min, max] of c'x over the feasible dispatches of the network.
std::pair<double, double> opf_cost_range(const PowerNetwork& net);

struct OpfPrivacySettings {
    double eps = 1.0;
    double alpha = 1.0;
    double eta = 0.01;
    double beta = 0.01;
    ChanceMethod method = ChanceMethod::Vertex;
    /// Overrides opf_sensitivity_bound.
    std::optional<double> delta1;
    /// Default: WeightedSum(c) over all generators.
    std::optional<QueryConstraint> query;
};

struct PrivateOpf {
    Solution base;
    NoiseSpec noise;
    PrivatizedProgram privatized;
    DecisionRule rule;
    /// c'xbar + zeta for the cost query.
    QueryRelease release;
};

/// Throws SolveFailure when the chance-constrained program has no solution
/// and ConflictingConstraints when the query contradicts the balance recourse.
PrivateOpf privatize_opf(const PowerNetwork& net, const OpfPrivacySettings& settings, std::uint64_t seed);

/// Loss is the released cost minus c'x*, infeasibility the share of draws
/// whose release no feasible dispatch attains (program: whose dispatch
/// xbar + X zeta leaves the feasible set).
StrategyResult evaluate_opf(const PowerNetwork& net, Strategy strategy, const OpfPrivacySettings& settings, Index draws,
                            std::uint64_t seed);

struct OpfCvarResult {
    /// Optimization level: the rule minimizes CVaR_q of the cost loss.
    double q = 0.95;
    /// Out-of-sample metrics; loss_cvar is reported at `report_q`.
    StrategyResult result;
    double var = 0.0;
    double report_q = 0.95;
};

/// Program perturbation with the expected cost replaced by the empirical
/// CVaR_q over `scenarios` noise samples. The metrics use `draws` fresh
/// samples shared by every q for one seed.
OpfCvarResult evaluate_opf_cvar(const PowerNetwork& net, const OpfPrivacySettings& settings, double q,
                                Index scenarios, Index draws, std::uint64_t seed, double report_q = 0.95);

}  // namespace dpconic
