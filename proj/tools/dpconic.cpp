// dpconic: solve conic programs, estimate sensitivities, privatize programs
// and run batch experiments. Exit codes: 0 success, 2 invalid input,
// 3 solver failure.

#include "dpconic/errors.hpp"
#include "dpconic/experiment.hpp"
#include "dpconic/json_io.hpp"
#include "dpconic/ldr.hpp"
#include "dpconic/privacy.hpp"
#include "dpconic/solver.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

using namespace dpconic;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 2;
constexpr int kSolver = 3;

void emit(const nlohmann::json& doc, const std::string& out) {
    if (out.empty())
        std::cout << doc.dump(2) << '\n';
    else
        write_json_file(doc, out);
}

double parse_extended(const std::string& text, const char* what) {
    if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    throw ValidationError(std::string(what) + ": '" + text + "' is not a number");
}

std::vector<Index> parse_indices(const std::string& text) {
    std::vector<Index> out;
    std::stringstream in(text);
    std::string cell;
    while (std::getline(in, cell, ',')) {
        if (cell.empty()) continue;
        try {
            out.push_back(std::stol(cell));
        } catch (const std::exception&) {
            throw ValidationError("--support: '" + cell + "' is not an index");
        }
    }
    return out;
}

struct SolveArgs {
    std::string in, out;
    double tol = 1e-8;
    int max_iter = 200;
    bool verbose = false;
};

int run_solve(const SolveArgs& a) {
    SolverSettings settings;
    settings.tol = a.tol;
    settings.max_iter = a.max_iter;
    settings.verbose = a.verbose;
    const Solution sol = solve(load_program(a.in), settings);
    emit(solution_to_json(sol), a.out);
    return sol.status == SolveStatus::MaxIter ? kSolver : kOk;
}

struct SensitivityArgs {
    std::string app = "svm", alpha = "1", dataset, out;
    double gamma = 0.1, beta = 0.1;
    double universe = std::numeric_limits<double>::quiet_NaN();
    long S = 0;
    std::uint64_t seed = 1;
};

int run_sensitivity(const SensitivityArgs& a) {
    ExperimentConfig cfg;
    cfg.app = a.app;
    cfg.dataset = a.dataset;
    cfg.seed = a.seed;
    cfg.gamma = a.gamma;
    cfg.sens_beta = a.beta;
    if (cfg.app == "regression" || cfg.app == "ellipsoid") cfg.delta = 0.1;
    const double alpha = parse_extended(a.alpha, "--alpha");
    const bool universe_app = cfg.app == "svm" || cfg.app == "regression" || cfg.app == "ellipsoid";
    if (universe_app && !std::isinf(alpha))
        throw ValidationError("--alpha: " + cfg.app + " compares whole datasets of a universe; use --alpha inf");
    if (!universe_app) cfg.alpha = {alpha};
    const auto adj = experiment_adjacency(cfg, alpha, a.universe);
    const Index S = a.S > 0 ? a.S : sensitivity_sample_size(a.gamma, a.beta);
    const PrivacyParams report = estimate_sensitivity(adj.model, adj.p, S, a.seed, a.gamma, a.beta);
    nlohmann::json doc = sensitivity_report_json(report);
    doc["app"] = cfg.app;
    emit(doc, a.out);
    return kOk;
}

struct PrivatizeArgs {
    std::string in, out, noise = "laplace", query = "identity", support, method = "vertex";
    double scale = -1.0, sensitivity = -1.0, eps = 1.0, delta = 0.0, eta = 0.05, beta = 0.01;
    std::uint64_t seed = 1;
};

int run_privatize(const PrivatizeArgs& a) {
    const ConicProgram program = load_program(a.in);
    const auto support = parse_indices(a.support);
    QueryConstraint query;
    if (a.query == "identity")
        query = QueryConstraint::identity(support);
    else if (a.query == "sum")
        query = QueryConstraint::sum(support);
    else if (a.query == "cost")
        query = QueryConstraint::weighted_sum(program.c, {});
    else
        throw ValidationError("--query must be identity, sum or cost");
    const Index k = query.noise_dim(program.cols());

    NoiseSpec noise;
    if (a.scale >= 0.0) {
        noise = a.noise == "gaussian" ? NoiseSpec::gaussian(k, a.scale) : NoiseSpec::laplace(k, a.scale);
    } else if (a.sensitivity >= 0.0) {
        noise = a.noise == "gaussian" ? calibrate_gaussian(a.sensitivity, a.eps, a.delta, k)
                                      : calibrate_laplace(a.sensitivity, a.eps, k);
    } else {
        throw ValidationError("privatize: give --scale or --sensitivity");
    }
    if (a.noise != "laplace" && a.noise != "gaussian") throw ValidationError("--noise must be laplace or gaussian");
    ChanceSpec chance;
    if (a.method == "vertex")
        chance = ChanceSpec::vertex(a.eta, a.beta);
    else if (a.method == "individual")
        chance = ChanceSpec::individual(a.eta);
    else
        throw ValidationError("--method must be vertex or individual");

    const PrivatizedProgram priv = privatize(program, noise, query, chance, a.seed);
    nlohmann::json doc;
    doc["program"] = program_to_json(priv.program);
    doc["noise"] = {{"family", std::string(to_string(noise.family))}, {"dim", noise.dim}, {"scale", noise.scale}};
    doc["rule"] = {{"n", priv.layout.n}, {"k", priv.layout.k}, {"columns", priv.layout.columns}};
    doc["scenario_samples"] = priv.scenario_samples;
    emit(doc, a.out);
    return kOk;
}

struct ExperimentArgs {
    std::string config, output;
    long draws = 0;
    long long seed = -1;
};

int run_experiment_cmd(const ExperimentArgs& a) {
    const std::filesystem::path path(a.config);
    nlohmann::json doc = read_json_file(path);
    // flags override the file
    if (!a.output.empty()) doc["output"] = std::filesystem::absolute(a.output).string();
    if (a.draws > 0) doc["S_mc"] = a.draws;
    if (a.seed >= 0) doc["seed"] = static_cast<std::uint64_t>(a.seed);
    const ExperimentConfig cfg = experiment_config_from_json(doc, path.parent_path());
    if (cfg.output.empty()) throw ValidationError("experiment: no output directory (config 'output' or --output)");
    const ExperimentReport report = run_experiment(cfg);
    std::cout << write_report(report, cfg.output).string() << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Differentially private conic optimization via chance-constrained decision rules"};
    app.require_subcommand(1);

    SolveArgs solve_args;
    auto* solve_cmd = app.add_subcommand("solve", "Solve a conic program stored as JSON");
    solve_cmd->add_option("--in", solve_args.in, "program JSON")->required()->check(CLI::ExistingFile);
    solve_cmd->add_option("--out", solve_args.out, "solution JSON (stdout when omitted)");
    solve_cmd->add_option("--tol", solve_args.tol, "relative residual tolerance");
    solve_cmd->add_option("--max-iter", solve_args.max_iter, "iteration limit");
    solve_cmd->add_flag("--verbose", solve_args.verbose, "print the iteration log to stderr");

    SensitivityArgs sens_args;
    auto* sens_cmd = app.add_subcommand("sensitivity", "Estimate the query sensitivity of an application");
    sens_cmd->add_option("--app", sens_args.app, "opf | svm | regression | ellipsoid | simple-lp");
    sens_cmd->add_option("--alpha", sens_args.alpha, "adjacency radius, or inf for a dataset universe");
    sens_cmd->add_option("--gamma", sens_args.gamma, "confidence parameter");
    sens_cmd->add_option("--beta", sens_args.beta, "risk parameter");
    sens_cmd->add_option("--S", sens_args.S, "sample pairs (default from gamma and beta)");
    sens_cmd->add_option("--universe", sens_args.universe, "universe scale for svm, regression, ellipsoid");
    sens_cmd->add_option("--dataset", sens_args.dataset, "bundled name or file");
    sens_cmd->add_option("--seed", sens_args.seed, "seed");
    sens_cmd->add_option("--out", sens_args.out, "report JSON (stdout when omitted)");

    PrivatizeArgs priv_args;
    auto* priv_cmd = app.add_subcommand("privatize", "Emit the chance-constrained counterpart of a program");
    priv_cmd->add_option("--in", priv_args.in, "program JSON")->required()->check(CLI::ExistingFile);
    priv_cmd->add_option("--out", priv_args.out, "output JSON (stdout when omitted)");
    priv_cmd->add_option("--noise", priv_args.noise, "laplace | gaussian");
    priv_cmd->add_option("--scale", priv_args.scale, "noise scale (b or sigma)");
    priv_cmd->add_option("--sensitivity", priv_args.sensitivity, "calibrate the scale from this sensitivity");
    priv_cmd->add_option("--eps", priv_args.eps, "privacy loss");
    priv_cmd->add_option("--delta", priv_args.delta, "privacy failure probability (gaussian)");
    priv_cmd->add_option("--query", priv_args.query, "identity | sum | cost");
    priv_cmd->add_option("--support", priv_args.support, "comma separated variable indices");
    priv_cmd->add_option("--method", priv_args.method, "vertex | individual");
    priv_cmd->add_option("--eta", priv_args.eta, "joint violation probability");
    priv_cmd->add_option("--beta", priv_args.beta, "sample confidence of the vertex method");
    priv_cmd->add_option("--seed", priv_args.seed, "seed");

    ExperimentArgs exp_args;
    auto* exp_cmd = app.add_subcommand("experiment", "Run a batch experiment from a JSON config");
    exp_cmd->add_option("--config", exp_args.config, "config JSON")->required()->check(CLI::ExistingFile);
    exp_cmd->add_option("--output", exp_args.output, "output directory (overrides the config)");
    exp_cmd->add_option("--draws", exp_args.draws, "Monte Carlo draws (overrides S_mc)");
    exp_cmd->add_option("--seed", exp_args.seed, "seed (overrides the config)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }

    try {
        if (*solve_cmd) return run_solve(solve_args);
        if (*sens_cmd) return run_sensitivity(sens_args);
        if (*priv_cmd) return run_privatize(priv_args);
        if (*exp_cmd) return run_experiment_cmd(exp_args);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const ConflictingConstraints& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const SolveFailure& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kSolver;
    } catch (const NumericalBreakdown& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kSolver;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: malformed JSON: " << e.what() << '\n';
        return kInvalid;
    }
    return kInvalid;
}
