#include "dpconic/apps/regression.hpp"

#include "dpconic/errors.hpp"
#include "dpconic/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dpconic {

Vector Basis::value(double x) const {
    Vector v(size());
    if (kind == Kind::Cubic) {
        v << x, 0.5 * std::pow(x - 5.0, 3);
    } else if (kind == Kind::Linear) {
        v << x;
    } else {
        for (Index i = 0; i < centers.size(); ++i) v(i) = std::sqrt(1.0 + (centers(i) - x) * (centers(i) - x));
    }
    return v;
}

Vector Basis::derivative(double x) const {
    Vector v(size());
    if (kind == Kind::Cubic) {
        v << 1.0, 1.5 * (x - 5.0) * (x - 5.0);
    } else if (kind == Kind::Linear) {
        v << 1.0;
    } else {
        for (Index i = 0; i < centers.size(); ++i)
            v(i) = (x - centers(i)) / std::sqrt(1.0 + (centers(i) - x) * (centers(i) - x));
    }
    return v;
}

Matrix RegressionModel::design() const {
    Matrix Phi(points(), basis.size());
    for (Index i = 0; i < points(); ++i) Phi.row(i) = basis.value(x(i)).transpose();
    return Phi;
}

Matrix RegressionModel::monotonicity() const {
    Matrix C(monotone_at.size(), basis.size());
    for (Index i = 0; i < monotone_at.size(); ++i) C.row(i) = basis.derivative(monotone_at(i)).transpose();
    return C;
}

void RegressionModel::check() const {
    if (x.size() < 1 || y.size() != x.size()) throw ValidationError("regression: x and y must be nonempty and aligned");
    if (!x.allFinite() || !y.allFinite() || !monotone_at.allFinite())
        throw ValidationError("regression: non-finite data");
    if (basis.size() < 1) throw ValidationError("regression: empty basis");
    if (!(lambda >= 0.0)) throw ValidationError("regression: lambda must be >= 0");
}

double RegressionModel::fit_loss(const Vector& w) const { return (y - design() * w).squaredNorm(); }

double RegressionModel::loss(const Vector& w) const { return fit_loss(w) + lambda * w.squaredNorm(); }

double RegressionModel::objective_scale() const { return std::max(1.0, y.squaredNorm()); }

RegressionModel synthetic_cubic_regression(Index n, std::uint64_t seed, double noise_sd, double lambda) {
    if (n < 2) throw ValidationError("synthetic_cubic_regression: n must be >= 2");
    RegressionModel model;
    model.x.resize(n);
    model.y.resize(n);
    for (Index i = 0; i < n; ++i) {
        Rng rng(seed, static_cast<std::uint64_t>(i));
        const double x = 10.0 * rng.uniform();
        model.x(i) = x;
        model.y(i) = x + 0.5 * std::pow(x - 5.0, 3) + noise_sd * rng.normal();
    }
    model.basis = Basis::cubic();
    model.monotone_at.resize(2);
    model.monotone_at << 1.0, 9.0;
    model.lambda = lambda;
    return model;
}

PowerCurve synthetic_power_curve(std::string name, double cut_in, double rated, double steepness, double step,
                                 double max_speed) {
    if (!(cut_in >= 0.0 && rated > cut_in && steepness > 0.0 && step > 0.0 && max_speed > rated))
        throw ValidationError("synthetic_power_curve: need 0 <= cut_in < rated < max_speed, positive steepness");
    const double mid = 0.5 * (cut_in + rated);
    auto logistic = [&](double v) { return 1.0 / (1.0 + std::exp(-steepness * (v - mid))); };
    const double lo = logistic(cut_in), hi = logistic(rated);
    PowerCurve curve;
    curve.name = std::move(name);
    const auto count = static_cast<Index>(std::floor(max_speed / step + 1e-9)) + 1;
    curve.speeds.resize(count);
    curve.power.resize(count);
    for (Index i = 0; i < count; ++i) {
        const double v = step * static_cast<double>(i);
        curve.speeds(i) = v;
        curve.power(i) = v <= cut_in ? 0.0 : v >= rated ? 1.0 : (logistic(v) - lo) / (hi - lo);
    }
    return curve;
}

std::vector<PowerCurve> bundled_power_curves() {
    return {
        synthetic_power_curve("ramp-a", 3.0, 13.0, 0.6),  synthetic_power_curve("ramp-b", 3.5, 12.0, 0.8),
        synthetic_power_curve("ramp-c", 3.0, 14.0, 0.5),  synthetic_power_curve("ramp-d", 4.0, 12.5, 0.9),
        synthetic_power_curve("ramp-e", 2.5, 13.5, 0.55), synthetic_power_curve("ramp-f", 3.0, 11.0, 1.0),
    };
}

RegressionModel build_wind_curve_dataset(const PowerCurve& curve, double sigma, std::uint64_t seed, Index p,
                                         double lambda) {
    if (curve.speeds.size() < 1 || curve.power.size() != curve.speeds.size())
        throw ValidationError("wind curve: speeds and power must be nonempty and aligned");
    if (curve.power.minCoeff() < 0.0 || curve.power.maxCoeff() > 1.0)
        throw ValidationError("wind curve: power must be normalized to [0, 1]");
    if (!(sigma >= 0.0) || p < 1) throw ValidationError("wind curve: sigma >= 0 and p >= 1 required");
    RegressionModel model;
    model.x = curve.speeds;
    model.y.resize(curve.power.size());
    for (Index i = 0; i < model.y.size(); ++i) {
        Rng rng(seed, static_cast<std::uint64_t>(i));
        model.y(i) = std::clamp(curve.power(i) + sigma * rng.normal(), 0.0, 1.0);
    }
    Vector centers(4);
    centers << 3.0, 7.0, 11.0, 15.0;
    model.basis = Basis::radial(centers);
    // monotonicity points on their own stream, past the data streams
    Rng rng(seed, static_cast<std::uint64_t>(model.y.size()));
    model.monotone_at.resize(p);
    for (Index i = 0; i < p; ++i) model.monotone_at(i) = 3.0 + 7.0 * rng.uniform();
    model.lambda = lambda;
    return model;
}

ConicProgram build_monotone_regression(const RegressionModel& model) {
    model.check();
    const RegressionColumns col{model.basis.size()};
    const Index n = model.points(), mb = col.mb;
    ProgramBuilder builder(col.total());
    // (a s, a, .) with a = sqrt(kappa / 2): kappa s >= |.|^2, so s = loss / kappa
    // lies in [0, 1] (w = 0 is feasible) and the two heads stay comparable
    const double a = std::sqrt(0.5 * model.objective_scale());

    Matrix fit = Matrix::Zero(n + 2, col.total());
    Vector fit_b = Vector::Zero(n + 2);
    fit(0, col.s()) = -a;
    fit_b(1) = a;
    fit.block(2, 0, n, mb) = model.design();
    fit_b.tail(n) = model.y;
    builder.add_block(ConeKind::RotatedSecondOrder, fit, fit_b);

    Matrix ridge = Matrix::Zero(mb + 2, col.total());
    Vector ridge_b = Vector::Zero(mb + 2);
    ridge(0, col.r()) = -a;
    ridge_b(1) = a;
    ridge.block(2, 0, mb, mb) = -std::sqrt(model.lambda) * Matrix::Identity(mb, mb);
    builder.add_block(ConeKind::RotatedSecondOrder, ridge, ridge_b);

    const Index p = model.monotone_at.size();
    if (p > 0) {
        Matrix mono = Matrix::Zero(p, col.total());
        mono.leftCols(mb) = -model.monotonicity();
        builder.add_block(ConeKind::NonNeg, mono, Vector::Zero(p));
    }

    Vector c = Vector::Zero(col.total());
    c(col.s()) = 1.0;
    c(col.r()) = 1.0;
    builder.set_objective(c);

    std::vector<std::string> names;
    for (Index j = 0; j < mb; ++j) names.push_back("w[" + std::to_string(j) + "]");
    names.push_back("fit");
    names.push_back("ridge");
    builder.set_variable_names(std::move(names));
    return builder.build();
}

Vector fit_monotone_regression(const RegressionModel& model) {
    const Solution sol = solve(build_monotone_regression(model));
    if (!sol.optimal()) throw SolveFailure("regression: solver returned " + std::string(to_string(sol.status)));
    return sol.x.head(model.basis.size());
}

namespace {

AdjacencyModel regression_universe(const RegressionModel& model, std::function<void(RegressionModel&, Rng&)> move) {
    model.check();
    const Index n = model.points();
    auto draw = [model, move](Rng& rng) {
        RegressionModel copy = model;
        move(copy, rng);
        Vector flat(2 * copy.points());
        flat << copy.x, copy.y;
        return flat;
    };
    auto sampler = [draw](Rng& rng) {
        Vector a = draw(rng);
        Vector b = draw(rng);
        return std::make_pair(std::move(a), std::move(b));
    };
    auto query = [model, n](const Vector& flat) {
        RegressionModel copy = model;
        copy.x = flat.head(n);
        copy.y = flat.tail(n);
        return fit_monotone_regression(copy);
    };
    return AdjacencyModel(std::numeric_limits<double>::infinity(), sampler, query);
}

}  // namespace

AdjacencyModel regression_circle_universe(const RegressionModel& model, double sx, double sy) {
    if (!(sx >= 0.0 && sy >= 0.0)) throw ValidationError("regression universe: scales must be >= 0");
    return regression_universe(model, [sx, sy](RegressionModel& m, Rng& rng) {
        for (Index i = 0; i < m.points(); ++i) {
            const double r = rng.uniform();
            const double t = 2.0 * std::numbers::pi * rng.uniform();
            m.x(i) += sx * r * std::cos(t);
            m.y(i) += sy * r * std::sin(t);
        }
    });
}

AdjacencyModel regression_relative_universe(const RegressionModel& model, double fraction) {
    if (!(fraction >= 0.0)) throw ValidationError("regression universe: fraction must be >= 0");
    return regression_universe(model, [fraction](RegressionModel& m, Rng& rng) {
        for (Index i = 0; i < m.points(); ++i) m.y(i) *= 1.0 + fraction * (2.0 * rng.uniform() - 1.0);
    });
}

PrivateRegression privatize_regression(const RegressionModel& model, const PrivacyParams& privacy,
                                       const ChanceSpec& chance, std::uint64_t seed, std::optional<double> delta2,
                                       std::optional<AdjacencyModel> universe) {
    const RegressionColumns col{model.basis.size()};
    PrivateRegression out;
    out.program = build_monotone_regression(model);
    out.base = solve(out.program);
    if (!out.base.optimal()) throw SolveFailure("regression: base program " + std::string(to_string(out.base.status)));

    out.privacy = privacy;
    out.privacy.p = 2;
    if (delta2) {
        out.privacy.delta_p = *delta2;
    } else {
        const Index S = privacy.S > 0 ? privacy.S : sensitivity_sample_size(privacy.gamma, privacy.beta);
        const auto est = estimate_sensitivity(universe ? *universe : regression_circle_universe(model), 2, S,
                                              derive_seed(seed, 4), privacy.gamma, privacy.beta);
        out.privacy.delta_p = est.delta_p;
        out.privacy.S = est.S;
        out.privacy.failures = est.failures;
    }
    out.noise = calibrate_gaussian(out.privacy.delta_p, privacy.eps, privacy.delta, col.mb);

    std::vector<Index> support;
    for (Index j = 0; j < col.mb; ++j) support.push_back(j);
    const auto query = QueryConstraint::identity(support);
    PrivatizeOptions options;
    options.recourse.assign(static_cast<std::size_t>(col.total()), true);
    options.recourse[static_cast<std::size_t>(col.s())] = false;
    options.recourse[static_cast<std::size_t>(col.r())] = false;
    options.treatments[0] = BlockTreatment{BlockTreatment::Kind::ExpectationQuadratic};
    options.treatments[1] = BlockTreatment{BlockTreatment::Kind::ExpectationQuadratic};
    out.privatized = privatize(out.program, out.noise, query, chance, seed, options);
    out.rule = solve_privatized(out.privatized).rule;
    out.release = release_query(out.rule, query, out.noise, derive_seed(seed, 2));
    return out;
}

StrategyResult evaluate_regression(const RegressionModel& model, const PrivateRegression& priv, Strategy strategy,
                                   Index draws, std::uint64_t seed) {
    if (draws < 1) throw ValidationError("evaluate_regression: draws must be >= 1");
    const Index mb = model.basis.size();
    if (strategy == Strategy::Input) {
        StrategyResult r;
        r.strategy = strategy;
        r.status = "unsupported";
        r.loss_mean = r.loss_cvar = r.infeasibility = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    const Vector w_star = priv.base.x.head(mb);
    const Vector center = strategy == Strategy::Output ? w_star : Vector(priv.rule.xbar.head(mb));
    const double reference = model.loss(w_star);
    const Matrix Phi = model.design();
    const Matrix C = model.monotonicity();
    const Matrix zeta = sample_noise(priv.noise, seed, draws);

    Vector losses(draws);
    std::vector<char> bad(static_cast<std::size_t>(draws), 0);
    parallel_for(static_cast<std::size_t>(draws), [&](std::size_t s) {
        const auto i = static_cast<Index>(s);
        const Vector w = center + zeta.row(i).transpose();
        losses(i) = (model.y - Phi * w).squaredNorm() + model.lambda * w.squaredNorm() - reference;
        bad[s] = C.rows() > 0 && (C * w).minCoeff() < -1e-9 ? 1 : 0;
    });
    Index count = 0;
    for (char b : bad) count += b;
    return summarize(strategy, losses, count);
}

}  // namespace dpconic
