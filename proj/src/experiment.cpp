#include "dpconic/experiment.hpp"

#include "dpconic/apps/ellipsoid.hpp"
#include "dpconic/apps/opf.hpp"
#include "dpconic/apps/regression.hpp"
#include "dpconic/apps/simple_lp.hpp"
#include "dpconic/apps/svm.hpp"
#include "dpconic/csv.hpp"
#include "dpconic/errors.hpp"
#include "dpconic/json_io.hpp"
#include "dpconic/parallel.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace dpconic {

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

const std::set<std::string> kApps{"opf", "svm", "regression", "ellipsoid", "simple-lp"};

std::vector<double> number_or_list(const nlohmann::json& v, const char* key) {
    if (v.is_number()) return {v.get<double>()};
    if (v.is_array() && !v.empty()) {
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) throw ValidationError(std::string("config: ") + key + " must hold numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }
    // "inf" is accepted for the adjacency radius
    if (v.is_string() && v.get<std::string>() == "inf") return {kInf};
    throw ValidationError(std::string("config: ") + key + " must be a number or a nonempty list");
}

nlohmann::json list_json(const std::vector<double>& values) {
    nlohmann::json out = nlohmann::json::array();
    for (double v : values) {
        if (std::isinf(v))
            out.push_back("inf");
        else
            out.push_back(v);
    }
    return out;
}

void reject_unknown(const nlohmann::json& doc, const std::set<std::string>& known, const std::string& where) {
    for (const auto& item : doc.items())
        if (!known.count(item.key())) throw ValidationError("config: unknown key '" + item.key() + "' in " + where);
}

bool is_gaussian_app(const std::string& app) { return app == "regression" || app == "ellipsoid"; }

double option(const nlohmann::json& options, const char* key, double fallback) {
    if (!options.contains(key)) return fallback;
    if (!options[key].is_number()) throw ValidationError(std::string("config: options.") + key + " must be a number");
    return options[key].get<double>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

bool looks_like_file(const std::string& name) {
    const auto ext = std::filesystem::path(name).extension().string();
    return ext == ".json" || ext == ".csv";
}

// weighted sums default to the cost vector (the total cost query)
QueryConstraint parse_query(const nlohmann::json& q, const Vector& cost) {
    reject_unknown(q, {"kind", "support", "weights"}, "query");
    const std::string kind = q.value("kind", "weighted_sum");
    std::vector<Index> support;
    if (q.contains("support"))
        for (const auto& e : q["support"]) support.push_back(e.get<Index>());
    if (kind == "sum") return QueryConstraint::sum(support);
    if (kind == "identity") return QueryConstraint::identity(support);
    if (kind == "weighted_sum") {
        Vector w = q.contains("weights") ? vector_from_json(q["weights"]) : cost;
        if (!q.contains("weights") && !support.empty()) {
            w.resize(static_cast<Index>(support.size()));
            for (std::size_t i = 0; i < support.size(); ++i) w(static_cast<Index>(i)) = cost(support[i]);
        }
        return QueryConstraint::weighted_sum(w, support);
    }
    throw ValidationError("config: query kind must be weighted_sum, sum or identity");
}

// ------------------------------------------------------------ datasets

struct Datasets {
    std::string label;
    PowerNetwork network;
    LabeledPoints train, test;
    RegressionModel regression;
    bool wind = false;
    EllipsoidInstance polygon;
};

LabeledPoints labeled_from_csv(const std::filesystem::path& path, double lambda) {
    const NumericTable t = read_numeric_csv(path);
    const Index yc = t.column("y");
    LabeledPoints data;
    data.lambda = lambda;
    data.y = t.values.col(yc);
    data.X.resize(t.values.rows(), t.values.cols() - 1);
    for (Index j = 0, out = 0; j < t.values.cols(); ++j)
        if (j != yc) data.X.col(out++) = t.values.col(j);
    return data;
}

Datasets load_datasets(const ExperimentConfig& cfg) {
    Datasets ds;
    const auto& opt = cfg.options;
    const std::uint64_t data_seed = derive_seed(cfg.seed, 100);
    if (cfg.app == "opf") {
        const std::string name = cfg.dataset.empty() ? "net3" : cfg.dataset;
        ds.network = looks_like_file(name) ? load_network(name) : bundled_network(name);
        ds.label = ds.network.name;
    } else if (cfg.app == "svm") {
        const double lambda = option(opt, "lambda", 1e-5);
        if (cfg.dataset.empty() || cfg.dataset == "synthetic") {
            ds.train = synthetic_svm_data(static_cast<Index>(option(opt, "train", 100)), data_seed, lambda);
            ds.test = synthetic_svm_data(static_cast<Index>(option(opt, "test", 1000)), derive_seed(cfg.seed, 101),
                                         lambda);
            ds.label = "synthetic";
        } else {
            ds.train = labeled_from_csv(cfg.dataset, lambda);
            ds.test = opt.contains("test_path") ? labeled_from_csv(opt["test_path"].get<std::string>(), lambda)
                                                : ds.train;
            ds.label = std::filesystem::path(cfg.dataset).filename().string();
        }
        const auto scaler = MinMaxScaler::fit(ds.train.X);
        ds.train.X = scaler.apply(ds.train.X);
        ds.test.X = scaler.apply(ds.test.X);
        ds.train.check();
    } else if (cfg.app == "regression") {
        const double lambda = option(opt, "lambda", 1e-3);
        const std::string name = cfg.dataset.empty() ? "synthetic-cubic" : cfg.dataset;
        if (name == "synthetic-cubic") {
            ds.regression = synthetic_cubic_regression(static_cast<Index>(option(opt, "points", 100)), data_seed,
                                                       option(opt, "noise_sd", 15.0), lambda);
        } else if (name.rfind("wind:", 0) == 0) {
            const std::string curve = name.substr(5);
            const auto curves = bundled_power_curves();
            auto it = std::find_if(curves.begin(), curves.end(), [&](const PowerCurve& c) { return c.name == curve; });
            if (it == curves.end()) throw ValidationError("config: unknown power curve '" + curve + "'");
            ds.regression = build_wind_curve_dataset(*it, option(opt, "sigma", 0.05), data_seed,
                                                     static_cast<Index>(option(opt, "monotone_points", 10)), lambda);
            ds.wind = true;
        } else {
            const NumericTable t = read_numeric_csv(name);
            ds.regression.x = t.values.col(t.column("x"));
            ds.regression.y = t.values.col(t.column("y"));
            ds.regression.lambda = lambda;
            const std::string basis = opt.value("basis", "cubic");
            if (basis == "cubic")
                ds.regression.basis = Basis::cubic();
            else if (basis == "linear")
                ds.regression.basis = Basis::linear();
            else if (basis == "radial")
                ds.regression.basis = Basis::radial(vector_from_json(opt.at("centers")));
            else
                throw ValidationError("config: options.basis must be cubic, radial or linear");
            if (!opt.contains("monotone_at")) throw ValidationError("config: options.monotone_at is required");
            ds.regression.monotone_at = vector_from_json(opt["monotone_at"]);
        }
        ds.regression.check();
        ds.label = name;
    } else if (cfg.app == "ellipsoid") {
        const std::string name = cfg.dataset.empty() ? "hexagon" : cfg.dataset;
        if (name == "hexagon") {
            ds.polygon = bundled_polygon();
        } else if (name == "box") {
            ds.polygon = box_instance(option(opt, "half_width", 1.0));
        } else {
            const auto doc = read_json_file(name);
            const auto& rows = doc.at("A");
            ds.polygon.A.resize(static_cast<Index>(rows.size()), 2);
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (rows[i].size() != 2) throw ValidationError("ellipsoid: each row of A needs two entries");
                ds.polygon.A(static_cast<Index>(i), 0) = rows[i][0].get<double>();
                ds.polygon.A(static_cast<Index>(i), 1) = rows[i][1].get<double>();
            }
            ds.polygon.b = vector_from_json(doc.at("b"));
        }
        ds.polygon.check();
        ds.label = name;
    } else {
        ds.label = "interval";
    }
    return ds;
}

// ------------------------------------------------------------ grid points

struct Point {
    Index index = 0;
    double eps = 0.0;
    double alpha = 0.0;
    double universe = kNaN;
    double q = kNaN;
    std::uint64_t seed = 0;
};

double default_universe(const ExperimentConfig& cfg, const Datasets& ds) {
    if (cfg.app == "svm") return 0.05;
    if (cfg.app == "regression") return ds.wind ? 0.05 : 1.0;
    if (cfg.app == "ellipsoid") return 0.01;
    return kNaN;
}

bool uses_universe(const std::string& app) { return app == "svm" || app == "regression" || app == "ellipsoid"; }

std::vector<Point> grid(const ExperimentConfig& cfg, const Datasets& ds) {
    std::vector<Point> points;
    const std::vector<double> alphas = uses_universe(cfg.app) ? std::vector<double>{kInf} : cfg.alpha;
    std::vector<double> scales = cfg.universe;
    if (scales.empty()) scales.push_back(default_universe(cfg, ds));
    if (!uses_universe(cfg.app)) scales = {kNaN};
    std::vector<double> qs{kNaN};
    for (double q : cfg.cvar_q) qs.push_back(q);
    // q points of one cell share its seed so a CVaR sweep sees the same noise
    std::uint64_t cell = 0;
    for (double eps : cfg.eps)
        for (double alpha : alphas)
            for (double u : scales) {
                for (double q : qs) {
                    Point p;
                    p.index = static_cast<Index>(points.size());
                    p.eps = eps;
                    p.alpha = alpha;
                    p.universe = u;
                    p.q = q;
                    p.seed = derive_seed(cfg.seed, cell);
                    points.push_back(p);
                }
                ++cell;
            }
    return points;
}

ExperimentRow row_for(const ExperimentConfig& cfg, const Datasets& ds, const Point& p, Strategy s) {
    ExperimentRow r;
    r.app = cfg.app;
    r.dataset = ds.label;
    r.strategy = s;
    r.point = p.index;
    r.eps = p.eps;
    r.delta = cfg.delta;
    r.alpha = p.alpha;
    r.universe = p.universe;
    r.eta = cfg.eta;
    r.q = p.q;
    r.draws = cfg.draws;
    r.seed = p.seed;
    r.sensitivity = kNaN;
    r.var = kNaN;
    return r;
}

void fill(ExperimentRow& row, const StrategyResult& res) {
    row.loss_mean = res.loss_mean;
    row.loss_cvar = res.loss_cvar;
    row.infeasibility = res.infeasibility;
    row.status = res.status;
}

void fail(ExperimentRow& row, const std::string& status) {
    row.loss_mean = row.loss_cvar = row.infeasibility = kNaN;
    row.status = status;
}

ChanceSpec chance_for(const ExperimentConfig& cfg, ChanceMethod fallback) {
    const ChanceMethod m = cfg.method.value_or(fallback);
    return m == ChanceMethod::Vertex ? ChanceSpec::vertex(cfg.eta, cfg.chance_beta) : ChanceSpec::individual(cfg.eta);
}

PrivacyParams privacy_for(const ExperimentConfig& cfg, const Point& p) {
    PrivacyParams priv;
    priv.eps = p.eps;
    priv.delta = cfg.delta;
    priv.alpha = p.alpha;
    priv.gamma = cfg.gamma;
    priv.beta = cfg.sens_beta;
    priv.S = cfg.sensitivity_samples;
    return priv;
}

// Rows for every strategy at one point. `privatize` runs once and is shared.
template <class Priv, class Privatize, class Evaluate, class Sensitivity>
std::vector<ExperimentRow> run_shared(const ExperimentConfig& cfg, const Datasets& ds, const Point& p,
                                      Privatize&& privatize_fn, Evaluate&& evaluate_fn, Sensitivity&& sensitivity_of) {
    std::vector<ExperimentRow> rows;
    std::optional<Priv> priv;
    std::string failure;
    try {
        priv.emplace(privatize_fn());
    } catch (const ConflictingConstraints&) {
        failure = "conflicting";
    } catch (const SolveFailure& e) {
        failure = std::string(e.what()).find("infeasible") != std::string::npos ? "infeasible" : "solver_failure";
    } catch (const NumericalBreakdown&) {
        failure = "solver_failure";
    }
    for (Strategy s : cfg.strategies) {
        ExperimentRow row = row_for(cfg, ds, p, s);
        if (!priv) {
            fail(row, failure);
        } else {
            row.sensitivity = sensitivity_of(*priv);
            try {
                fill(row, evaluate_fn(*priv, s));
            } catch (const SolveFailure&) {
                fail(row, "solver_failure");
            } catch (const NumericalBreakdown&) {
                fail(row, "solver_failure");
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<ExperimentRow> run_point(const ExperimentConfig& cfg, const Datasets& ds, const Point& p) {
    const std::uint64_t eval_seed = derive_seed(p.seed, 3);
    if (cfg.app == "simple-lp") {
        SimpleLpSettings st;
        st.c = option(cfg.options, "c", 1.0);
        st.lower = option(cfg.options, "lower", 1.0);
        st.upper = option(cfg.options, "upper", 3.0);
        st.alpha = p.alpha;
        st.eps = p.eps;
        st.eta = cfg.eta;
        st.beta = cfg.chance_beta;
        st.delta1 = cfg.sensitivity;
        return run_shared<PrivateSimpleLp>(
            cfg, ds, p, [&] { return privatize_simple_lp(st, p.seed); },
            [&](const PrivateSimpleLp& priv, Strategy s) { return evaluate_simple_lp(priv, s, cfg.draws, eval_seed); },
            [&](const PrivateSimpleLp&) { return st.delta1.value_or(st.alpha); });
    }
    if (cfg.app == "opf") {
        OpfPrivacySettings st;
        st.eps = p.eps;
        st.alpha = p.alpha;
        st.eta = cfg.eta;
        st.beta = cfg.chance_beta;
        st.method = cfg.method.value_or(ChanceMethod::Vertex);
        st.delta1 = cfg.sensitivity;
        if (!cfg.query.is_null()) st.query = parse_query(cfg.query, ds.network.c);
        const double delta1 = st.delta1.value_or(opf_sensitivity_bound(ds.network.c, st.alpha));
        if (!std::isnan(p.q)) {
            ExperimentRow row = row_for(cfg, ds, p, Strategy::Program);
            row.sensitivity = delta1;
            try {
                const auto res = evaluate_opf_cvar(ds.network, st, p.q, cfg.cvar_scenarios, cfg.draws, p.seed,
                                                   cfg.cvar_report_q);
                fill(row, res.result);
                row.var = res.var;
            } catch (const ConflictingConstraints&) {
                fail(row, "conflicting");
            } catch (const SolveFailure&) {
                fail(row, "solver_failure");
            }
            return {row};
        }
        std::vector<ExperimentRow> rows;
        for (Strategy s : cfg.strategies) {
            ExperimentRow row = row_for(cfg, ds, p, s);
            row.sensitivity = s == Strategy::Input ? st.alpha : delta1;
            try {
                fill(row, evaluate_opf(ds.network, s, st, cfg.draws, p.seed));
            } catch (const ConflictingConstraints&) {
                fail(row, "conflicting");
            } catch (const SolveFailure&) {
                fail(row, "solver_failure");
            } catch (const NumericalBreakdown&) {
                fail(row, "solver_failure");
            }
            rows.push_back(std::move(row));
        }
        return rows;
    }
    if (cfg.app == "svm") {
        return run_shared<PrivateSvm>(
            cfg, ds, p,
            [&] {
                return privatize_svm(ds.train, privacy_for(cfg, p), chance_for(cfg, ChanceMethod::Individual), p.seed,
                                     cfg.sensitivity, p.universe);
            },
            [&](const PrivateSvm& priv, Strategy s) { return evaluate_svm(priv, s, ds.test, cfg.draws, eval_seed); },
            [](const PrivateSvm& priv) { return priv.privacy.delta_p; });
    }
    if (cfg.app == "regression") {
        const AdjacencyModel universe =
            ds.wind ? regression_relative_universe(ds.regression, p.universe)
                    : regression_circle_universe(ds.regression, 0.35 * p.universe, 8.0 * p.universe);
        return run_shared<PrivateRegression>(
            cfg, ds, p,
            [&] {
                return privatize_regression(ds.regression, privacy_for(cfg, p),
                                            chance_for(cfg, ChanceMethod::Individual), p.seed, cfg.sensitivity,
                                            universe);
            },
            [&](const PrivateRegression& priv, Strategy s) {
                return evaluate_regression(ds.regression, priv, s, cfg.draws, eval_seed);
            },
            [](const PrivateRegression& priv) { return priv.privacy.delta_p; });
    }
    // ellipsoid
    EllipsoidPrivacySettings st;
    st.eps = p.eps;
    st.delta = cfg.delta;
    st.range = p.universe;
    st.eta = cfg.eta;
    st.beta = cfg.chance_beta;
    st.objective_samples = static_cast<Index>(option(cfg.options, "objective_samples", 32));
    st.gamma = cfg.gamma;
    st.sens_beta = cfg.sens_beta;
    st.sensitivity_samples = cfg.sensitivity_samples;
    st.delta2 = cfg.sensitivity;
    return run_shared<PrivateEllipsoid>(
        cfg, ds, p, [&] { return privatize_ellipsoid(ds.polygon, st, p.seed); },
        [&](const PrivateEllipsoid& priv, Strategy s) { return evaluate_ellipsoid(priv, s, cfg.draws, eval_seed); },
        [](const PrivateEllipsoid& priv) { return priv.privacy.delta_p; });
}

}  // namespace

void ExperimentConfig::check() const {
    if (!kApps.count(app)) throw ValidationError("config: unknown app '" + app + "'");
    if (strategies.empty()) throw ValidationError("config: at least one strategy is required");
    for (double e : eps)
        if (!(e > 0.0 && std::isfinite(e))) throw ValidationError("config: eps must be finite and > 0");
    if (eps.empty()) throw ValidationError("config: eps grid is empty");
    if (is_gaussian_app(app)) {
        if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("config: " + app + " needs delta in (0, 1)");
    } else if (!(delta >= 0.0 && delta < 1.0)) {
        throw ValidationError("config: delta must lie in [0, 1)");
    }
    if (!uses_universe(app)) {
        if (alpha.empty()) throw ValidationError("config: alpha grid is empty");
        for (double a : alpha)
            if (!(a > 0.0 && std::isfinite(a))) throw ValidationError("config: " + app + " needs finite alpha > 0");
    }
    for (double u : universe)
        if (!(u > 0.0 && std::isfinite(u))) throw ValidationError("config: universe scales must be finite and > 0");
    if (!(gamma > 0.0 && gamma < 1.0) || !(sens_beta > 0.0 && sens_beta < 1.0))
        throw ValidationError("config: gamma and beta must lie in (0, 1)");
    if (sensitivity_samples < 0) throw ValidationError("config: S must be >= 0");
    if (sensitivity && !(*sensitivity >= 0.0 && std::isfinite(*sensitivity)))
        throw ValidationError("config: sensitivity must be finite and >= 0");
    if (!(eta > 0.0 && eta < 1.0) || !(chance_beta > 0.0 && chance_beta < 1.0))
        throw ValidationError("config: chance eta and beta must lie in (0, 1)");
    if (method && *method == ChanceMethod::Individual && (app == "ellipsoid" || app == "simple-lp"))
        throw ValidationError("config: " + app + " supports the vertex method only");
    if (method && *method == ChanceMethod::Vertex && app == "regression")
        throw ValidationError("config: regression supports the individual method only");
    if (!cvar_q.empty() && app != "opf") throw ValidationError("config: cvar grids are defined for opf only");
    for (double q : cvar_q)
        if (!(q > 0.0 && q < 1.0)) throw ValidationError("config: cvar q must lie in (0, 1)");
    if (!(cvar_report_q > 0.0 && cvar_report_q < 1.0)) throw ValidationError("config: cvar report_q must lie in (0, 1)");
    if (cvar_scenarios < 1) throw ValidationError("config: cvar scenarios must be >= 1");
    if (!query.is_null() && app != "opf") throw ValidationError("config: query is defined for opf only");
    if (draws < 1) throw ValidationError("config: S_mc must be >= 1");
    if (!options.is_object()) throw ValidationError("config: options must be an object");
    if (!dataset.empty() && looks_like_file(dataset) && !std::filesystem::exists(dataset))
        throw ValidationError("config: dataset file " + dataset + " does not exist");
    if (options.contains("test_path") && !std::filesystem::exists(options["test_path"].get<std::string>()))
        throw ValidationError("config: test file does not exist");
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
    if (!doc.is_object()) throw ValidationError("config: expected a JSON object");
    reject_unknown(doc,
                   {"app", "strategies", "privacy", "chance", "universe", "cvar", "query", "S_mc", "seed", "dataset",
                    "output", "options"},
                   "config");
    ExperimentConfig cfg;
    try {
        cfg.app = doc.at("app").get<std::string>();
        if (doc.contains("strategies")) {
            cfg.strategies.clear();
            for (const auto& s : doc["strategies"]) cfg.strategies.push_back(strategy_from_string(s.get<std::string>()));
        }
        if (doc.contains("privacy")) {
            const auto& p = doc["privacy"];
            reject_unknown(p, {"eps", "delta", "alpha", "gamma", "beta", "S", "sensitivity"}, "privacy");
            if (p.contains("eps")) cfg.eps = number_or_list(p["eps"], "eps");
            cfg.delta = p.value("delta", cfg.delta);
            if (p.contains("alpha")) cfg.alpha = number_or_list(p["alpha"], "alpha");
            cfg.gamma = p.value("gamma", cfg.gamma);
            cfg.sens_beta = p.value("beta", cfg.sens_beta);
            cfg.sensitivity_samples = p.value("S", cfg.sensitivity_samples);
            if (p.contains("sensitivity")) cfg.sensitivity = p["sensitivity"].get<double>();
        }
        if (doc.contains("chance")) {
            const auto& c = doc["chance"];
            reject_unknown(c, {"method", "eta", "beta"}, "chance");
            if (c.contains("method")) {
                const auto m = c["method"].get<std::string>();
                if (m == "vertex")
                    cfg.method = ChanceMethod::Vertex;
                else if (m == "individual")
                    cfg.method = ChanceMethod::Individual;
                else
                    throw ValidationError("config: chance method must be vertex or individual");
            }
            cfg.eta = c.value("eta", cfg.eta);
            cfg.chance_beta = c.value("beta", cfg.chance_beta);
        }
        if (doc.contains("universe")) cfg.universe = number_or_list(doc["universe"], "universe");
        if (doc.contains("cvar")) {
            const auto& c = doc["cvar"];
            reject_unknown(c, {"q", "scenarios", "report_q"}, "cvar");
            cfg.cvar_q = number_or_list(c.at("q"), "cvar.q");
            cfg.cvar_scenarios = c.value("scenarios", cfg.cvar_scenarios);
            cfg.cvar_report_q = c.value("report_q", cfg.cvar_report_q);
        }
        if (doc.contains("query")) cfg.query = doc["query"];
        cfg.draws = doc.value("S_mc", cfg.draws);
        cfg.seed = doc.value("seed", cfg.seed);
        if (doc.contains("dataset")) {
            const auto name = doc["dataset"].get<std::string>();
            cfg.dataset = looks_like_file(name) ? resolve(base_dir, name).string() : name;
        }
        if (doc.contains("output")) cfg.output = resolve(base_dir, doc["output"].get<std::string>());
        if (doc.contains("options")) {
            cfg.options = doc["options"];
            if (cfg.options.contains("test_path"))
                cfg.options["test_path"] = resolve(base_dir, cfg.options["test_path"].get<std::string>()).string();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    cfg.check();
    return cfg;
}

nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json doc;
    doc["app"] = cfg.app;
    doc["strategies"] = nlohmann::json::array();
    for (Strategy s : cfg.strategies) doc["strategies"].push_back(std::string(to_string(s)));
    doc["privacy"] = {{"eps", list_json(cfg.eps)},   {"delta", cfg.delta},    {"alpha", list_json(cfg.alpha)},
                      {"gamma", cfg.gamma},          {"beta", cfg.sens_beta}, {"S", cfg.sensitivity_samples}};
    if (cfg.sensitivity) doc["privacy"]["sensitivity"] = *cfg.sensitivity;
    doc["chance"] = {{"eta", cfg.eta}, {"beta", cfg.chance_beta}};
    if (cfg.method) doc["chance"]["method"] = *cfg.method == ChanceMethod::Vertex ? "vertex" : "individual";
    if (!cfg.universe.empty()) doc["universe"] = list_json(cfg.universe);
    if (!cfg.cvar_q.empty())
        doc["cvar"] = {{"q", list_json(cfg.cvar_q)}, {"scenarios", cfg.cvar_scenarios}, {"report_q", cfg.cvar_report_q}};
    if (!cfg.query.is_null()) doc["query"] = cfg.query;
    doc["S_mc"] = cfg.draws;
    doc["seed"] = cfg.seed;
    if (!cfg.dataset.empty()) doc["dataset"] = cfg.dataset;
    if (!cfg.output.empty()) doc["output"] = cfg.output.string();
    doc["options"] = cfg.options;
    return doc;
}

ExperimentAdjacency experiment_adjacency(const ExperimentConfig& config, double alpha, double universe) {
    config.check();
    const Datasets ds = load_datasets(config);
    if (std::isnan(universe)) universe = default_universe(config, ds);
    if (config.app == "simple-lp") {
        SimpleLpSettings st;
        st.c = option(config.options, "c", 1.0);
        st.lower = option(config.options, "lower", 1.0);
        st.upper = option(config.options, "upper", 3.0);
        st.alpha = alpha;
        return {simple_lp_adjacency(st), 1};
    }
    if (config.app == "opf") return {opf_adjacency(ds.network, alpha), 1};
    if (config.app == "svm") return {svm_universe(ds.train, universe), 1};
    if (config.app == "regression")
        return {ds.wind ? regression_relative_universe(ds.regression, universe)
                        : regression_circle_universe(ds.regression, 0.35 * universe, 8.0 * universe),
                2};
    return {ellipsoid_universe(ds.polygon, universe), 2};
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
    config.check();
    const Datasets ds = load_datasets(config);
    const std::vector<Point> points = grid(config, ds);

    std::vector<std::vector<ExperimentRow>> slots(points.size());
    parallel_for(points.size(), [&](std::size_t i) { slots[i] = run_point(config, ds, points[i]); });

    ExperimentReport report;
    for (auto& slot : slots)
        for (auto& row : slot) report.rows.push_back(std::move(row));

    nlohmann::json& m = report.manifest;
    m["version"] = kVersion;
    m["config"] = experiment_config_to_json(config);
    m["dataset"] = ds.label;
    m["seed"] = config.seed;
    m["points"] = nlohmann::json::array();
    for (const auto& p : points) {
        nlohmann::json entry{{"point", p.index}, {"seed", p.seed}, {"eps", p.eps}};
        entry["alpha"] = std::isinf(p.alpha) ? nlohmann::json("inf") : nlohmann::json(p.alpha);
        if (!std::isnan(p.universe)) entry["universe"] = p.universe;
        if (!std::isnan(p.q)) entry["q"] = p.q;
        m["points"].push_back(entry);
    }
    nlohmann::json sizes{{"S_mc", config.draws}};
    if (config.app == "svm" || config.app == "regression" || config.app == "ellipsoid")
        sizes["sensitivity_S"] = config.sensitivity_samples > 0 ? config.sensitivity_samples
                                                                : sensitivity_sample_size(config.gamma, config.sens_beta);
    if (!config.cvar_q.empty()) sizes["cvar_scenarios"] = config.cvar_scenarios;
    m["sample_sizes"] = sizes;
    std::map<std::string, Index> statuses;
    for (const auto& r : report.rows) ++statuses[r.status];
    m["statuses"] = statuses;
    m["rows"] = report.rows.size();
    return report;
}

std::string rows_to_csv(const std::vector<ExperimentRow>& rows) {
    std::ostringstream out;
    out << "app,dataset,strategy,point,eps,delta,alpha,universe,eta,q,draws,seed,sensitivity,loss_mean,loss_cvar,"
           "infeasibility,var,status\n";
    for (const auto& r : rows) {
        out << csv_cell(r.app) << ',' << csv_cell(r.dataset) << ',' << to_string(r.strategy) << ',' << r.point << ','
            << format_number(r.eps) << ',' << format_number(r.delta) << ',' << format_number(r.alpha) << ','
            << format_number(r.universe) << ',' << format_number(r.eta) << ',' << format_number(r.q) << ','
            << r.draws << ',' << r.seed << ',' << format_number(r.sensitivity) << ',' << format_number(r.loss_mean)
            << ',' << format_number(r.loss_cvar) << ',' << format_number(r.infeasibility) << ','
            << format_number(r.var) << ',' << csv_cell(r.status) << '\n';
    }
    return out.str();
}

std::filesystem::path write_report(const ExperimentReport& report, const std::filesystem::path& output) {
    if (output.empty()) throw ValidationError("write_report: output directory is empty");
    std::filesystem::create_directories(output);
    const auto csv = output / "results.csv";
    {
        std::ofstream out(csv, std::ios::binary);
        if (!out) throw ValidationError("write_report: cannot write " + csv.string());
        out << rows_to_csv(report.rows);
    }
    write_json_file(report.manifest, output / "manifest.json");
    return csv;
}

}  // namespace dpconic
