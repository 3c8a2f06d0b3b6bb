#include <doctest.h>

#include "dpconic/apps/ellipsoid.hpp"
#include "dpconic/apps/opf.hpp"
#include "dpconic/apps/regression.hpp"
#include "dpconic/apps/simple_lp.hpp"
#include "dpconic/apps/svm.hpp"
#include "dpconic/errors.hpp"
#include "dpconic/stats.hpp"

#include <cmath>
#include <numbers>

using namespace dpconic;

namespace {

Vector vec(std::initializer_list<double> values) {
    Vector v(static_cast<Index>(values.size()));
    Index i = 0;
    for (double x : values) v(i++) = x;
    return v;
}

// binomial standard error at rate p over n draws
double binomial_se(double p, Index n) { return std::sqrt(p * (1.0 - p) / static_cast<double>(n)); }

// two nodes, one line; injections at node 1 flow back to the slack node 0
PowerNetwork two_node(Vector c, Vector d, double fmax = 10.0) {
    PowerNetwork net;
    net.name = "two";
    net.nodes = 2;
    net.lines = 1;
    net.c = std::move(c);
    net.d = std::move(d);
    net.xmin = Vector::Zero(2);
    net.xmax = Vector::Constant(2, 5.0);
    net.fmax = Vector::Constant(1, fmax);
    net.F = Matrix(1, 2);
    net.F << 0.0, -1.0;
    return net;
}

}  // namespace

TEST_CASE("strategy names and summaries") {
    for (auto s : {Strategy::Input, Strategy::Output, Strategy::Program})
        CHECK(strategy_from_string(to_string(s)) == s);
    CHECK_THROWS_AS(strategy_from_string("bogus"), ValidationError);

    const double nan = std::numeric_limits<double>::quiet_NaN();
    const auto r = summarize(Strategy::Output, vec({1.0, nan, 3.0}), 1);
    CHECK(r.loss_mean == doctest::Approx(2.0));
    CHECK(r.infeasibility == doctest::Approx(1.0 / 3.0));
    CHECK(r.draws == 3);
}

TEST_CASE("rule metrics of the deterministic rule") {
    const auto program = build_simple_lp(1.0, 1.0, 2.0);
    const auto base = solve(program);
    REQUIRE(base.optimal());
    const DecisionRule rule{base.x, Matrix::Zero(1, 1)};
    const auto m = evaluate_rule_metrics(rule, program, base, NoiseSpec::laplace(1, 1.0), 500, 3);
    CHECK(m.mean_loss == 0.0);
    CHECK(m.infeasibility_rate == 0.0);
}

TEST_CASE("simple lp strategies") {
    SimpleLpSettings st;
    const auto priv = privatize_simple_lp(st, 1);
    CHECK(std::abs(priv.base.x(0) - st.lower) <= 1e-7);
    // the nominal point moves inside [l, u] by the box radius
    CHECK(priv.rule.xbar(0) > st.lower);
    CHECK(priv.rule.xbar(0) < st.upper);

    const Index draws = 10000;
    const auto out = evaluate_simple_lp(priv, Strategy::Output, draws, 5);
    const auto in = evaluate_simple_lp(priv, Strategy::Input, draws, 5);
    const auto prog = evaluate_simple_lp(priv, Strategy::Program, draws, 5);
    CHECK(std::abs(out.infeasibility - 0.5) <= 0.03);
    CHECK(in.infeasibility == out.infeasibility);
    // released values coincide wherever the perturbed LP has a solution
    for (Index s = 0; s < draws; ++s)
        if (!std::isnan(in.losses(s))) CHECK(std::abs(in.losses(s) - out.losses(s)) <= 1e-7);
    CHECK(prog.infeasibility <= st.eta + 3.0 * binomial_se(st.eta, draws));
    CHECK(prog.loss_mean > out.loss_mean);

    SimpleLpSettings bad = st;
    bad.upper = bad.lower;
    CHECK_THROWS_AS(privatize_simple_lp(bad, 1), ValidationError);
}

TEST_CASE("simple lp sensitivity equals the adjacency radius") {
    SimpleLpSettings st;
    st.alpha = 0.4;
    const auto est = estimate_sensitivity(simple_lp_adjacency(st), 1, 2000, 9);
    CHECK(est.delta_p <= st.alpha + 1e-7);
    CHECK(est.delta_p >= 0.98 * st.alpha);
}

TEST_CASE("opf toy networks") {
    const auto cheap = solve(build_opf(two_node(vec({1, 2}), vec({1, 0}))));
    REQUIRE(cheap.optimal());
    CHECK(std::abs(cheap.x(0) - 1.0) <= 1e-7);
    CHECK(std::abs(cheap.x(1)) <= 1e-7);
    CHECK(std::abs(cheap.objective - 1.0) <= 1e-7);

    const auto idle = solve(build_opf(two_node(vec({1, 2}), vec({0, 0}))));
    REQUIRE(idle.optimal());
    CHECK(idle.x.cwiseAbs().maxCoeff() <= 1e-7);

    // demand at node 1 beyond what the line can carry and generator 1 can make
    PowerNetwork congested = two_node(vec({1, 2}), vec({0, 8}), 1.0);
    CHECK(solve(build_opf(congested)).status == SolveStatus::PrimalInfeasible);

    PowerNetwork short_net = two_node(vec({1, 2}), vec({6, 6}));
    CHECK_THROWS_AS(build_opf(short_net), ValidationError);
}

TEST_CASE("opf network json round trip") {
    const auto net = bundled_network("net3");
    const auto again = network_from_json(network_to_json(net));
    CHECK(again.name == net.name);
    CHECK((again.F - net.F).cwiseAbs().maxCoeff() == 0.0);
    CHECK((again.d - net.d).cwiseAbs().maxCoeff() == 0.0);
    auto doc = network_to_json(net);
    doc["c"] = nlohmann::json::array({1.0});
    CHECK_THROWS_AS(network_from_json(doc), ValidationError);
}

TEST_CASE("opf sensitivity bound") {
    CHECK(opf_sensitivity_bound(vec({1, 2, 3}), 2.0) == 6.0);
    CHECK(opf_sensitivity_bound(vec({1, 2, 3}), 0.0) == 0.0);
    for (const char* name : {"net3", "net4", "net5"}) {
        const auto net = bundled_network(name);
        for (double alpha : {1.0, 10.0}) {
            const auto est = estimate_sensitivity(opf_adjacency(net, alpha), 1, 100, 4);
            CHECK(est.delta_p <= opf_sensitivity_bound(net.c, alpha) + 1e-6);
        }
    }
}

TEST_CASE("private opf") {
    const auto net = bundled_network("net3");
    OpfPrivacySettings st;
    const auto priv = privatize_opf(net, st, 11);
    // every released dispatch balances demand
    const Matrix zeta = sample_noise(priv.noise, 3, 2000);
    for (Index s = 0; s < zeta.rows(); ++s)
        CHECK(std::abs(priv.rule.evaluate(zeta.row(s).transpose()).sum() - net.d.sum()) <= 1e-8);
    const auto prog = evaluate_opf(net, Strategy::Program, st, 1000, 5);
    CHECK(prog.status == "ok");
    CHECK(prog.infeasibility <= st.eta + 3.0 * binomial_se(st.eta, 1000));

    double previous = -1e300;
    for (double alpha : {1.0, 3.0, 10.0}) {
        st.alpha = alpha;
        const auto r = evaluate_opf(net, Strategy::Program, st, 1000, 5);
        REQUIRE(r.status == "ok");
        CHECK(r.loss_mean >= previous - 1e-9);
        previous = r.loss_mean;
    }

    // zero noise: the release is the deterministic cost
    OpfPrivacySettings quiet;
    quiet.delta1 = 0.0;
    const auto exact = privatize_opf(net, quiet, 1);
    CHECK(std::abs(exact.release.released(0) - net.c.dot(exact.base.x)) <= 1e-5 * net.c.dot(exact.base.x));
}

TEST_CASE("svm on a one-dimensional pair") {
    LabeledPoints data;
    data.X = Matrix(2, 1);
    data.X << 0.0, 2.0;
    data.y = vec({-1, 1});
    data.lambda = 1e-4;
    const auto sol = solve(build_svm(data));
    REQUIRE(sol.optimal());
    const double w = sol.x(0), b = sol.x(1);
    CHECK(b / w == doctest::Approx(1.0).epsilon(1e-6));

    // grid oracle on lambda w^2 + mean hinge
    auto objective = [&](double ww, double bb) {
        double hinge = 0.0;
        for (Index i = 0; i < 2; ++i) hinge += std::max(0.0, 1.0 - data.y(i) * (ww * data.X(i, 0) - bb));
        return data.lambda * ww * ww + hinge / 2.0;
    };
    double best = 1e300;
    for (int i = 0; i <= 400; ++i)
        for (int j = 0; j <= 400; ++j) best = std::min(best, objective(i * 0.01, j * 0.01 - 1.0));
    CHECK(std::abs(sol.objective - best) <= 1e-4);
    CHECK(objective(w, b) == doctest::Approx(sol.objective).epsilon(1e-6));

    LabeledPoints one_class = data;
    one_class.y = vec({1, 1});
    CHECK_THROWS_AS(build_svm(one_class), ValidationError);
}

TEST_CASE("classify") {
    const Vector w = vec({1, 0});
    CHECK(classify(w, 0.0, vec({2, 0})) == 1);
    CHECK(classify(w, 0.0, vec({-2, 0})) == -1);
    CHECK(classify(w, 0.0, vec({0, 0})) == 1);
    CHECK_THROWS_AS(classify(w, 0.0, vec({1})), ValidationError);
}

TEST_CASE("svm on the synthetic classes") {
    auto train = synthetic_svm_data(100, 7);
    auto test = synthetic_svm_data(1000, 8);
    const auto scaler = MinMaxScaler::fit(train.X);
    train.X = scaler.apply(train.X);
    test.X = scaler.apply(test.X);
    const auto sol = solve(build_svm(train));
    REQUIRE(sol.optimal());
    CHECK(accuracy(sol.x.head(2), sol.x(2), test.X, test.y) >= 0.97);

    // program perturbation with a given sensitivity (estimation is exercised elsewhere)
    PrivacyParams privacy;
    const auto priv = privatize_svm(train, privacy, ChanceSpec::individual(0.05), 7, 25.0);
    const auto out = evaluate_svm(priv, Strategy::Output, test, 100, 3);
    const auto prog = evaluate_svm(priv, Strategy::Program, test, 100, 3);
    CHECK(prog.loss_mean + 0.2 <= out.loss_mean);
    CHECK(priv.rule.xbar.head(2).norm() >= 10.0 * sol.x.head(2).norm());
    CHECK(evaluate_svm(priv, Strategy::Input, test, 10, 3).status == "unsupported");

    // the released increment is the raw draw, whatever the data
    const Matrix draw = sample_noise(priv.noise, derive_seed(7, 2), 1);
    CHECK((priv.release.increment - draw.row(0).transpose()).cwiseAbs().maxCoeff() == 0.0);

    const auto quiet = privatize_svm(train, privacy, ChanceSpec::individual(0.05), 7, 0.0);
    CHECK((quiet.rule.xbar.head(3) - sol.x.head(3)).norm() <= 1e-3 * (1.0 + sol.x.head(3).norm()));
}

TEST_CASE("regression basis and monotonicity rows") {
    const Basis radial = Basis::radial(vec({3, 7, 11, 15}));
    for (Index i = 0; i < 4; ++i) CHECK(radial.value(radial.centers(i))(i) == 1.0);
    CHECK(radial.value(3.0)(1) == doctest::Approx(std::sqrt(17.0)));

    const double h = 1e-5;
    for (const Basis& basis : {Basis::cubic(), radial, Basis::linear()}) {
        for (double u : {0.5, 1.0, 3.3, 9.0}) {
            const Vector fd = (basis.value(u + h) - basis.value(u - h)) / (2.0 * h);
            CHECK((fd - basis.derivative(u)).cwiseAbs().maxCoeff() <= 1e-6);
        }
    }
    // the cubic's derivative row is 24 at both 1 and 9
    const auto model = synthetic_cubic_regression(100, 11);
    const Matrix C = model.monotonicity();
    CHECK(C(0, 1) == doctest::Approx(24.0));
    CHECK(C(1, 1) == doctest::Approx(24.0));
}

TEST_CASE("monotone regression fits") {
    RegressionModel line;
    line.x = vec({0, 1, 2, 3, 4});
    line.y = line.x;
    line.basis = Basis::linear();
    line.monotone_at = vec({1.0});
    line.lambda = 0.0;
    const Vector w = fit_monotone_regression(line);
    CHECK(std::abs(w(0) - 1.0) <= 1e-6);
    CHECK(line.loss(w) <= 1e-8);

    // decreasing data against an increasing constraint: the row binds
    RegressionModel down = line;
    down.y = -line.x;
    const Vector wd = fit_monotone_regression(down);
    CHECK(std::abs((down.monotonicity() * wd)(0)) <= 1e-6);

    // the constraint is inactive in truth: unconstrained normal equations
    const auto model = synthetic_cubic_regression(100, 11);
    const Matrix P = model.design();
    const Vector ls =
        (P.transpose() * P + model.lambda * Matrix::Identity(2, 2)).ldlt().solve(P.transpose() * model.y);
    const Vector wc = fit_monotone_regression(model);
    CHECK((wc - ls).cwiseAbs().maxCoeff() <= 1e-5);
    CHECK(std::abs(wc(0) - 1.0) <= 0.3);
    CHECK(std::abs(wc(1) - 1.0) <= 0.1);
}

TEST_CASE("wind curve datasets") {
    const auto curve = bundled_power_curves().front();
    const auto exact = build_wind_curve_dataset(curve, 0.0, 1);
    CHECK((exact.y - curve.power).cwiseAbs().maxCoeff() == 0.0);
    const auto noisy = build_wind_curve_dataset(curve, 0.1, 1);
    CHECK(noisy.y.minCoeff() >= 0.0);
    CHECK(noisy.y.maxCoeff() <= 1.0);
    CHECK(noisy.monotone_at.size() == 10);
    CHECK(noisy.monotone_at.minCoeff() >= 3.0);
    CHECK(noisy.monotone_at.maxCoeff() <= 10.0);
    CHECK((fit_monotone_regression(noisy).transpose() * noisy.monotonicity().transpose()).minCoeff() >= -1e-7);
}

TEST_CASE("private monotone regression") {
    const auto model = synthetic_cubic_regression(100, 11);
    PrivacyParams privacy;
    privacy.eps = 1.0;
    privacy.delta = 0.01;
    privacy.S = 199;
    const double eta = 0.03;
    const auto priv = privatize_regression(model, privacy, ChanceSpec::individual(eta), 5);
    CHECK(priv.privacy.delta_p > 0.0);
    CHECK(priv.noise.family == NoiseFamily::Gaussian);

    const Index draws = 500;
    const auto out = evaluate_regression(model, priv, Strategy::Output, draws, 9);
    const auto prog = evaluate_regression(model, priv, Strategy::Program, draws, 9);
    CHECK(prog.infeasibility <= eta + 3.0 * binomial_se(eta, draws));
    CHECK(out.infeasibility > prog.infeasibility);
    CHECK(prog.loss_mean >= out.loss_mean);

    const Matrix draw = sample_noise(priv.noise, derive_seed(5, 2), 1);
    CHECK((priv.release.increment - draw.row(0).transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("maximum volume ellipse") {
    const auto square = box_instance(1.0);
    const auto sol = solve(build_ellipsoid(square));
    REQUIRE(sol.optimal());
    CHECK(std::abs(sol.x(EllipsoidColumns::t()) - 1.0) <= 1e-5);
    const Ellipse e = ellipse_from(sol.x);
    CHECK(e.z.norm() <= 1e-5);
    CHECK((e.Y - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-5);

    // grid oracle over axis-aligned ellipses: centre (z1, z2), semi-axes (a, b)
    double best = 0.0;
    for (int i = -10; i <= 10; ++i)
        for (int j = -10; j <= 10; ++j) {
            const double z1 = i * 0.1, z2 = j * 0.1;
            const double a = 1.0 - std::abs(z1), b = 1.0 - std::abs(z2);
            best = std::max(best, std::sqrt(a * b));
        }
    CHECK(std::abs(best - sol.x(EllipsoidColumns::t())) <= 1e-5);

    CHECK(max_volume_ellipse(box_instance(2.0)).Y.determinant() == doctest::Approx(4.0).epsilon(1e-5));

    // the hexagon's optimum beats every contained axis-aligned candidate
    const auto hex = bundled_polygon();
    const auto hs = solve(build_ellipsoid(hex));
    REQUIRE(hs.optimal());
    double grid = 0.0;
    for (int i = -20; i <= 20; ++i)
        for (int j = -20; j <= 20; ++j)
            for (int a = 1; a <= 30; ++a)
                for (int b = 1; b <= 30; ++b) {
                    Ellipse cand{vec({i * 0.02, j * 0.02}), Matrix::Zero(2, 2)};
                    cand.Y(0, 0) = a * 0.04;
                    cand.Y(1, 1) = b * 0.04;
                    if (cand.inside(hex)) grid = std::max(grid, std::sqrt(cand.Y.determinant()));
                }
    CHECK(hs.x(EllipsoidColumns::t()) >= grid - 1e-6);
    CHECK(ellipse_from(hs.x).inside(hex, 1e-6));

    EllipsoidInstance slab;
    slab.A = Matrix(3, 2);
    slab.A << 1, 0, -1, 0, 2, 0;
    slab.b = vec({1, 1, 3});
    CHECK_THROWS_AS(build_ellipsoid(slab), ValidationError);
}

TEST_CASE("ellipse hypograph is tight at det") {
    Rng rng(3);
    const auto program = build_ellipsoid(box_instance(1.0));
    for (int trial = 0; trial < 20; ++trial) {
        const double a = 0.1 + rng.uniform(), b = 0.1 + rng.uniform(), off = 0.5 * (rng.uniform() - 0.5);
        Ellipse e{vec({0, 0}), Matrix(2, 2)};
        e.Y << a, off, off, b;
        Vector x = ellipse_to(e);
        x(EllipsoidColumns::t()) = std::sqrt(e.Y.determinant());
        const Vector slack = program.b.head(4) - program.A.topRows(4) * x;
        const double det_gap = 2.0 * slack(0) * slack(1) - slack.tail(2).squaredNorm();
        CHECK(std::abs(det_gap) <= 1e-9);
        CHECK(x(EllipsoidColumns::t()) * x(EllipsoidColumns::t()) == doctest::Approx(e.Y.determinant()).epsilon(1e-12));
    }
}

TEST_CASE("private ellipse") {
    const auto hex = bundled_polygon();
    EllipsoidPrivacySettings st;
    const auto priv = privatize_ellipsoid(hex, st, 3);
    const Index draws = 500;
    Vector areas;
    const auto prog = evaluate_ellipsoid(priv, Strategy::Program, draws, 9, &areas);
    const auto out = evaluate_ellipsoid(priv, Strategy::Output, draws, 9);
    CHECK(1.0 - prog.infeasibility >= 1.0 - st.eta - 3.0 * binomial_se(st.eta, draws));
    CHECK(out.infeasibility > prog.infeasibility);
    CHECK(areas.mean() <= max_volume_ellipse(hex).area());

    // released Y is Ybar plus [zeta_{3:4} zeta_{5:6}] column by column
    const Matrix draw = sample_noise(priv.noise, derive_seed(3, 2), 1);
    const Ellipse released = ellipse_from(priv.release.released);
    const Ellipse nominal = ellipse_from(priv.rule.xbar);
    CHECK(std::abs(released.Y(1, 0) - nominal.Y(1, 0) - draw(0, 3)) <= 1e-12);
    CHECK(std::abs(released.Y(0, 1) - nominal.Y(0, 1) - draw(0, 4)) <= 1e-12);

    EllipsoidPrivacySettings quiet = st;
    quiet.delta2 = 0.0;
    const auto exact = privatize_ellipsoid(hex, quiet, 3);
    CHECK((exact.rule.xbar.head(6) - exact.base.x.head(6)).cwiseAbs().maxCoeff() <= 1e-4);
}
