#include "dpconic/apps/svm.hpp"

#include "dpconic/errors.hpp"
#include "dpconic/parallel.hpp"

#include <cmath>
#include <numbers>

namespace dpconic {

void LabeledPoints::check() const {
    if (X.rows() < 2 || X.cols() < 1) throw ValidationError("svm data: need at least two points with features");
    if (y.size() != X.rows()) throw ValidationError("svm data: one label per point");
    bool pos = false, neg = false;
    for (Index i = 0; i < y.size(); ++i) {
        if (y(i) == 1.0)
            pos = true;
        else if (y(i) == -1.0)
            neg = true;
        else
            throw ValidationError("svm data: labels must be +1 or -1");
    }
    if (!pos || !neg) throw ValidationError("svm data: both classes must be present");
    if (!(lambda > 0.0)) throw ValidationError("svm data: lambda must be > 0");
    if (!X.allFinite()) throw ValidationError("svm data: non-finite features");
}

MinMaxScaler MinMaxScaler::fit(const Matrix& X) {
    if (X.rows() < 1) throw ValidationError("min-max: no rows");
    MinMaxScaler s{X.colwise().minCoeff(), X.colwise().maxCoeff()};
    for (Index j = 0; j < X.cols(); ++j)
        if (!(s.hi(j) > s.lo(j))) s.hi(j) = s.lo(j) + 1.0;
    return s;
}

Matrix MinMaxScaler::apply(const Matrix& X) const {
    return ((X.rowwise() - lo).array().rowwise() / (hi - lo).array()).matrix();
}

LabeledPoints synthetic_svm_data(Index m, std::uint64_t seed, double lambda) {
    if (m < 2) throw ValidationError("synthetic_svm_data: m must be >= 2");
    LabeledPoints data;
    data.X.resize(m, 2);
    data.y.resize(m);
    data.lambda = lambda;
    const double sd = std::sqrt(0.5);
    for (Index i = 0; i < m; ++i) {
        Rng rng(seed, static_cast<std::uint64_t>(i));
        const bool positive = i % 2 == 0;
        const double center = positive ? 1.0 : 3.0;
        data.X(i, 0) = center + sd * rng.normal();
        data.X(i, 1) = center + sd * rng.normal();
        data.y(i) = positive ? 1.0 : -1.0;
    }
    return data;
}

ConicProgram build_svm(const LabeledPoints& data) {
    data.check();
    const SvmColumns col{data.n(), data.m()};
    const Index n = col.n, m = col.m;
    ProgramBuilder builder(col.total());

    Matrix epi = Matrix::Zero(n + 2, col.total());
    Vector epi_b = Vector::Zero(n + 2);
    epi(0, col.u()) = -1.0;
    epi_b(1) = 0.5;
    // u >= lambda |w|^2 keeps u on the scale of the objective
    for (Index j = 0; j < n; ++j) epi(2 + j, col.w(j)) = -std::sqrt(data.lambda);
    builder.add_block(ConeKind::RotatedSecondOrder, epi, epi_b);

    // y_i (w'x_i - b) + z_i - 1 >= 0
    Matrix margin = Matrix::Zero(m, col.total());
    for (Index i = 0; i < m; ++i) {
        margin.row(i).head(n) = -data.y(i) * data.X.row(i);
        margin(i, col.b()) = data.y(i);
        margin(i, col.z(i)) = -1.0;
    }
    builder.add_block(ConeKind::NonNeg, margin, Vector::Constant(m, -1.0));

    Matrix slack_rows = Matrix::Zero(m, col.total());
    for (Index i = 0; i < m; ++i) slack_rows(i, col.z(i)) = -1.0;
    builder.add_block(ConeKind::NonNeg, slack_rows, Vector::Zero(m));

    Vector c = Vector::Zero(col.total());
    c(col.u()) = 1.0;
    c.segment(col.z(0), m).setConstant(1.0 / static_cast<double>(m));
    builder.set_objective(c);

    std::vector<std::string> names;
    for (Index j = 0; j < n; ++j) names.push_back("w[" + std::to_string(j) + "]");
    names.push_back("b");
    for (Index i = 0; i < m; ++i) names.push_back("z[" + std::to_string(i) + "]");
    names.push_back("u");
    builder.set_variable_names(std::move(names));
    return builder.build();
}

int classify(const Vector& w, double b, const Vector& x) {
    if (w.size() != x.size()) throw ValidationError("classify: dimension mismatch");
    return w.dot(x) - b >= 0.0 ? 1 : -1;
}

double accuracy(const Vector& w, double b, const Matrix& X, const Vector& y) {
    if (X.rows() != y.size() || X.rows() == 0) throw ValidationError("accuracy: shape mismatch");
    Index hits = 0;
    for (Index i = 0; i < X.rows(); ++i) hits += classify(w, b, X.row(i).transpose()) == static_cast<int>(y(i)) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(X.rows());
}

namespace {

Vector solve_hyperplane(const LabeledPoints& data) {
    const Solution sol = solve(build_svm(data));
    if (!sol.optimal()) throw SolveFailure("svm: solver returned " + std::string(to_string(sol.status)));
    return sol.x.head(data.n() + 1);
}

}  // namespace

AdjacencyModel svm_universe(const LabeledPoints& data, double radius) {
    data.check();
    if (data.n() < 2) throw ValidationError("svm_universe: needs at least two features");
    if (!(radius > 0.0)) throw ValidationError("svm_universe: radius must be > 0");
    const Index m = data.m(), n = data.n();
    auto draw = [data, radius](Rng& rng) {
        Matrix X = data.X;
        for (Index i = 0; i < X.rows(); ++i) {
            const double r = radius * rng.uniform();
            const double t = 2.0 * std::numbers::pi * rng.uniform();
            X(i, 0) += r * std::sin(t);
            X(i, 1) += r * std::cos(t);
        }
        return Vector(Eigen::Map<const Vector>(X.data(), X.size()));
    };
    auto sampler = [draw](Rng& rng) {
        Vector a = draw(rng);
        Vector b = draw(rng);
        return std::make_pair(std::move(a), std::move(b));
    };
    auto query = [data, m, n](const Vector& flat) {
        LabeledPoints copy = data;
        copy.X = Eigen::Map<const Matrix>(flat.data(), m, n);
        return solve_hyperplane(copy);
    };
    return AdjacencyModel(std::numeric_limits<double>::infinity(), sampler, query);
}

PrivateSvm privatize_svm(const LabeledPoints& data, const PrivacyParams& privacy, const ChanceSpec& chance,
                         std::uint64_t seed, std::optional<double> delta1, double radius) {
    const SvmColumns col{data.n(), data.m()};
    PrivateSvm out;
    out.program = build_svm(data);
    const ConicProgram& program = out.program;
    out.base = solve(program);
    if (!out.base.optimal()) throw SolveFailure("svm: base program " + std::string(to_string(out.base.status)));

    out.privacy = privacy;
    if (delta1) {
        out.privacy.delta_p = *delta1;
        out.privacy.p = 1;
    } else {
        const Index S = privacy.S > 0 ? privacy.S : sensitivity_sample_size(privacy.gamma, privacy.beta);
        const auto est = estimate_sensitivity(svm_universe(data, radius), 1, S, derive_seed(seed, 4), privacy.gamma,
                                              privacy.beta);
        out.privacy.delta_p = est.delta_p;
        out.privacy.S = est.S;
        out.privacy.failures = est.failures;
        out.privacy.p = 1;
    }
    out.noise = calibrate_laplace(out.privacy.delta_p, privacy.eps, col.n + 1);

    std::vector<Index> support;
    for (Index j = 0; j <= col.n; ++j) support.push_back(j);
    PrivatizeOptions options;
    options.recourse.assign(static_cast<std::size_t>(col.total()), true);
    options.recourse[static_cast<std::size_t>(col.u())] = false;
    options.treatments[0] = BlockTreatment{BlockTreatment::Kind::ExpectationQuadratic};
    out.privatized = privatize(program, out.noise, QueryConstraint::identity(support), chance, seed, options);
    out.rule = solve_privatized(out.privatized).rule;
    out.release = release_query(out.rule, QueryConstraint::identity(support), out.noise, derive_seed(seed, 2));
    return out;
}

StrategyResult evaluate_svm(const PrivateSvm& priv, Strategy strategy, const LabeledPoints& test, Index draws,
                            std::uint64_t seed, Vector* accuracies) {
    if (draws < 1) throw ValidationError("evaluate_svm: draws must be >= 1");
    const Index n = test.n();
    if (strategy == Strategy::Input) {
        StrategyResult r;
        r.strategy = strategy;
        r.status = "unsupported";
        r.loss_mean = r.loss_cvar = r.infeasibility = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    const Vector& x_star = priv.base.x;
    const double reference = accuracy(x_star.head(n), x_star(n), test.X, test.y);
    const Matrix zeta = sample_noise(priv.noise, seed, draws);

    // margin and slack rows follow the n + 2 epigraph rows
    const Index first = n + 2;
    const Index rows = priv.program.rows() - first;
    Vector acc(draws), losses(draws);
    std::vector<char> bad(static_cast<std::size_t>(draws), 0);
    parallel_for(static_cast<std::size_t>(draws), [&](std::size_t s) {
        const auto i = static_cast<Index>(s);
        const Vector z = zeta.row(i).transpose();
        Vector x;
        if (strategy == Strategy::Output) {
            x = x_star;
            x.head(n + 1) += z;
        } else {
            x = priv.rule.evaluate(z);
        }
        acc(i) = accuracy(x.head(n), x(n), test.X, test.y);
        losses(i) = reference - acc(i);
        const Vector sl = priv.program.b.segment(first, rows) - priv.program.A.middleRows(first, rows) * x;
        bad[s] = sl.minCoeff() < -1e-6 ? 1 : 0;
    });
    Index count = 0;
    for (char b : bad) count += b;
    if (accuracies) *accuracies = acc;
    return summarize(strategy, losses, count);
}

}  // namespace dpconic
