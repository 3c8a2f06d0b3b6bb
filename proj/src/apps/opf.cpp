#include "dpconic/apps/opf.hpp"

#include "dpconic/errors.hpp"
#include "dpconic/json_io.hpp"
#include "dpconic/parallel.hpp"

#include <cmath>
#include <limits>

namespace dpconic {

void PowerNetwork::check() const {
    const Index n = nodes;
    if (n < 1) throw ValidationError("network: needs at least one node");
    if (c.size() != n || d.size() != n || xmin.size() != n || xmax.size() != n)
        throw ValidationError("network '" + name + "': c, d, xmin, xmax must have one entry per node");
    if (fmax.size() != lines || F.rows() != lines || F.cols() != n)
        throw ValidationError("network '" + name + "': F must be lines x nodes and fmax one entry per line");
    if (!F.allFinite() || !c.allFinite() || !d.allFinite() || !fmax.allFinite())
        throw ValidationError("network '" + name + "': non-finite data");
    if ((xmin.array() > xmax.array()).any()) throw ValidationError("network '" + name + "': xmin > xmax");
    if (xmax.sum() < d.sum()) throw ValidationError("network '" + name + "': total capacity below total demand");
}

PowerNetwork network_from_json(const nlohmann::json& doc) {
    try {
        PowerNetwork net;
        net.name = doc.value("name", std::string("network"));
        net.nodes = doc.at("nodes").get<Index>();
        net.lines = doc.at("lines").get<Index>();
        net.c = vector_from_json(doc.at("c"));
        net.d = vector_from_json(doc.at("d"));
        net.xmin = vector_from_json(doc.at("xmin"));
        net.xmax = vector_from_json(doc.at("xmax"));
        net.fmax = vector_from_json(doc.at("fmax"));
        const auto& rows = doc.at("F");
        net.F = Matrix::Zero(static_cast<Index>(rows.size()), net.nodes);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != static_cast<std::size_t>(net.nodes))
                throw ValidationError("network: F row " + std::to_string(r) + " has the wrong length");
            for (Index j = 0; j < net.nodes; ++j) net.F(static_cast<Index>(r), j) = rows[r][static_cast<std::size_t>(j)];
        }
        net.check();
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("network JSON: ") + e.what());
    }
}

nlohmann::json network_to_json(const PowerNetwork& net) {
    nlohmann::json F = nlohmann::json::array();
    for (Index r = 0; r < net.F.rows(); ++r) F.push_back(vector_to_json(net.F.row(r).transpose()));
    return {{"name", net.name},
            {"nodes", net.nodes},
            {"lines", net.lines},
            {"c", vector_to_json(net.c)},
            {"d", vector_to_json(net.d)},
            {"xmin", vector_to_json(net.xmin)},
            {"xmax", vector_to_json(net.xmax)},
            {"fmax", vector_to_json(net.fmax)},
            {"F", F}};
}

PowerNetwork load_network(const std::filesystem::path& path) { return network_from_json(read_json_file(path)); }

PowerNetwork bundled_network(const std::string& name) {
    return load_network(std::filesystem::path(DPCONIC_DATA_DIR) / "networks" / (name + ".json"));
}

ConicProgram build_opf(const PowerNetwork& net) {
    net.check();
    const Index n = net.nodes, e = net.lines;
    ProgramBuilder b(n);
    b.add_block(ConeKind::Zero, Matrix::Ones(1, n), Vector::Constant(1, net.d.sum()));
    Matrix A(2 * e + 2 * n, n);
    Vector rhs(2 * e + 2 * n);
    const Vector base_flow = net.F * net.d;
    A << net.F, -net.F, -Matrix::Identity(n, n), Matrix::Identity(n, n);
    rhs << net.fmax + base_flow, net.fmax - base_flow, -net.xmin, net.xmax;
    b.add_block(ConeKind::NonNeg, A, rhs);
    b.set_objective(net.c);
    std::vector<std::string> names;
    for (Index i = 0; i < n; ++i) names.push_back("x[" + std::to_string(i) + "]");
    b.set_variable_names(std::move(names));
    return b.build();
}

double opf_sensitivity_bound(const Vector& c, double alpha) {
    if (!(alpha >= 0.0)) throw ValidationError("opf_sensitivity_bound: alpha must be >= 0");
    if (c.size() == 0) throw ValidationError("opf_sensitivity_bound: empty cost vector");
    return c.maxCoeff() * alpha;
}

AdjacencyModel opf_adjacency(const PowerNetwork& net, double alpha) {
    net.check();
    if (!(alpha > 0.0 && std::isfinite(alpha))) throw ValidationError("opf_adjacency: alpha must be finite and > 0");
    auto sampler = [d = net.d, alpha](Rng& rng) {
        Vector other = d;
        const auto i = static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(d.size()));
        other(i) += alpha * (2.0 * rng.uniform() - 1.0);
        return std::make_pair(d, other);
    };
    auto query = [net](const Vector& demand) {
        PowerNetwork copy = net;
        copy.d = demand;
        const auto program = build_opf(copy);
        const Solution sol = solve(program);
        if (!sol.optimal()) throw SolveFailure("opf: solver returned " + std::string(to_string(sol.status)));
        return Vector::Constant(1, net.c.dot(sol.x));
    };
    return AdjacencyModel(alpha, sampler, query);
}

std::pair<double, double> opf_cost_range(const PowerNetwork& net) {
    ConicProgram program = build_opf(net);
    const Solution lo = solve(program);
    program.c = -program.c;
    const Solution hi = solve(program);
    if (!lo.optimal() || !hi.optimal()) throw SolveFailure("opf_cost_range: network has no feasible dispatch");
    return {net.c.dot(lo.x), net.c.dot(hi.x)};
}

PrivateOpf privatize_opf(const PowerNetwork& net, const OpfPrivacySettings& settings, std::uint64_t seed) {
    const ConicProgram program = build_opf(net);
    PrivateOpf out;
    out.base = solve(program);
    if (!out.base.optimal()) throw SolveFailure("opf: base program " + std::string(to_string(out.base.status)));
    const QueryConstraint query = settings.query.value_or(QueryConstraint::weighted_sum(net.c));
    const double delta1 = settings.delta1.value_or(opf_sensitivity_bound(net.c, settings.alpha));
    out.noise = calibrate_laplace(delta1, settings.eps, query.noise_dim(net.nodes));
    ChanceSpec chance = settings.method == ChanceMethod::Vertex ? ChanceSpec::vertex(settings.eta, settings.beta)
                                                                : ChanceSpec::individual(settings.eta);
    out.privatized = privatize(program, out.noise, query, chance, seed);
    out.rule = solve_privatized(out.privatized).rule;
    out.release = release_query(out.rule, query, out.noise, derive_seed(seed, 2));
    return out;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool cost_attainable(double value, const std::pair<double, double>& range) {
    const double tol = 1e-6 * (1.0 + std::abs(range.second));
    return value >= range.first - tol && value <= range.second + tol;
}

}  // namespace

StrategyResult evaluate_opf(const PowerNetwork& net, Strategy strategy, const OpfPrivacySettings& settings, Index draws,
                            std::uint64_t seed) {
    if (draws < 1) throw ValidationError("evaluate_opf: draws must be >= 1");
    const ConicProgram program = build_opf(net);
    const Solution base = solve(program);
    if (!base.optimal()) throw SolveFailure("opf: base program " + std::string(to_string(base.status)));
    const double optimum = net.c.dot(base.x);
    const auto range = opf_cost_range(net);
    const double delta1 = settings.delta1.value_or(opf_sensitivity_bound(net.c, settings.alpha));

    switch (strategy) {
        case Strategy::Output: {
            const NoiseSpec noise = calibrate_laplace(delta1, settings.eps);
            const Matrix zeta = sample_noise(noise, seed, draws);
            Vector losses = zeta.col(0);
            Index bad = 0;
            for (Index s = 0; s < draws; ++s) bad += cost_attainable(optimum + losses(s), range) ? 0 : 1;
            return summarize(strategy, losses, bad);
        }
        case Strategy::Input: {
            // identity query on d: one element moves by alpha
            const NoiseSpec noise = calibrate_laplace(settings.alpha, settings.eps, net.nodes);
            Vector losses(draws);
            std::vector<char> bad(static_cast<std::size_t>(draws), 0);
            auto build = [&net](const Vector& demand) {
                PowerNetwork copy = net;
                copy.d = demand;
                return build_opf(copy);
            };
            parallel_for(static_cast<std::size_t>(draws), [&](std::size_t s) {
                const Solution sol = input_perturbation(build, net.d, noise, derive_seed(seed, s));
                if (!sol.optimal()) {
                    losses(static_cast<Index>(s)) = kNaN;
                    bad[s] = 1;
                    return;
                }
                const double released = net.c.dot(sol.x);
                losses(static_cast<Index>(s)) = released - optimum;
                bad[s] = cost_attainable(released, range) ? 0 : 1;
            });
            Index count = 0;
            for (char b : bad) count += b;
            return summarize(strategy, losses, count);
        }
        case Strategy::Program: {
            PrivateOpf priv;
            try {
                priv = privatize_opf(net, settings, seed);
            } catch (const SolveFailure& e) {
                StrategyResult r;
                r.strategy = strategy;
                r.status = "infeasible";
                r.loss_mean = r.loss_cvar = r.infeasibility = kNaN;
                return r;
            }
            const auto m = evaluate_rule_metrics(priv.rule, program, base, priv.noise, draws, derive_seed(seed, 3));
            Index bad = 0;
            for (bool f : m.feasible) bad += f ? 0 : 1;
            return summarize(strategy, m.losses, bad);
        }
    }
    throw ValidationError("evaluate_opf: unknown strategy");
}

OpfCvarResult evaluate_opf_cvar(const PowerNetwork& net, const OpfPrivacySettings& settings, double q,
                                Index scenarios, Index draws, std::uint64_t seed, double report_q) {
    if (scenarios < 1 || draws < 1) throw ValidationError("evaluate_opf_cvar: scenarios and draws must be >= 1");
    const ConicProgram program = build_opf(net);
    const Solution base = solve(program);
    if (!base.optimal()) throw SolveFailure("opf: base program " + std::string(to_string(base.status)));
    const QueryConstraint query = settings.query.value_or(QueryConstraint::weighted_sum(net.c));
    const double delta1 = settings.delta1.value_or(opf_sensitivity_bound(net.c, settings.alpha));
    const NoiseSpec noise = calibrate_laplace(delta1, settings.eps, query.noise_dim(net.nodes));
    const ChanceSpec chance = settings.method == ChanceMethod::Vertex ? ChanceSpec::vertex(settings.eta, settings.beta)
                                                                      : ChanceSpec::individual(settings.eta);
    const PrivatizedProgram privatized = privatize(program, noise, query, chance, seed);

    CvarSpec spec;
    spec.q = q;
    spec.loss = LinearLoss::relative_to(net.c, base.x);
    const CvarProgram cvar = augment_with_cvar(privatized, spec, sample_noise(noise, derive_seed(seed, 5), scenarios));

    OpfCvarResult out;
    out.q = q;
    out.report_q = report_q;
    const Solution sol = solve(cvar.privatized.program);
    if (!sol.optimal()) {
        out.result.strategy = Strategy::Program;
        out.result.status = sol.status == SolveStatus::PrimalInfeasible ? "infeasible" : std::string(to_string(sol.status));
        out.result.loss_mean = out.result.loss_cvar = out.result.infeasibility = out.var = kNaN;
        return out;
    }
    const DecisionRule rule = cvar.privatized.extract(sol.x);
    const auto m = evaluate_rule_metrics(rule, program, base, noise, draws, derive_seed(seed, 3));
    Index bad = 0;
    for (bool f : m.feasible) bad += f ? 0 : 1;
    out.result = summarize(Strategy::Program, m.losses, bad);
    out.result.loss_cvar = cvar_empirical(m.losses, report_q);
    out.var = var_empirical(m.losses, report_q);
    return out;
}

}  // namespace dpconic
