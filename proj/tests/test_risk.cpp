#include <doctest.h>

#include "dpconic/errors.hpp"
#include "dpconic/risk.hpp"
#include "dpconic/stats.hpp"

#include <algorithm>
#include <cmath>

using namespace dpconic;

namespace {

Vector vec(std::initializer_list<double> values) {
    Vector v(static_cast<Index>(values.size()));
    Index i = 0;
    for (double x : values) v(i++) = x;
    return v;
}

// min over a fine grid of g + sum [l - g]^+ / ((1 - q) S), plus every loss
// value (the objective is piecewise linear with kinks there)
double cvar_brute_force(const Vector& losses, double q) {
    const double m = (1.0 - q) * static_cast<double>(losses.size());
    auto objective = [&](double g) { return g + (losses.array() - g).max(0.0).sum() / m; };
    double best = objective(losses(0));
    for (Index s = 0; s < losses.size(); ++s) best = std::min(best, objective(losses(s)));
    const double lo = losses.minCoeff() - 1.0, hi = losses.maxCoeff() + 1.0;
    for (int i = 0; i <= 20000; ++i) best = std::min(best, objective(lo + (hi - lo) * i / 20000.0));
    return best;
}

ConicProgram dispatch(const Vector& c, double demand, double cap) {
    const Index n = c.size();
    ProgramBuilder b(n);
    b.add_block(ConeKind::Zero, Matrix::Ones(1, n), Vector::Constant(1, demand));
    b.add_block(ConeKind::NonNeg, -Matrix::Identity(n, n), Vector::Zero(n));
    b.add_block(ConeKind::NonNeg, Matrix::Identity(n, n), Vector::Constant(n, cap));
    b.set_objective(c);
    return b.build();
}

}  // namespace

TEST_CASE("cvar_empirical on small sets") {
    CHECK(cvar_empirical(vec({1, 2, 3, 4}), 0.75) == 4.0);
    CHECK(cvar_empirical(vec({1, 2, 3, 4}), 0.5) == 3.5);
    CHECK(cvar_empirical(vec({1, 2, 3, 4}), 1e-12) == doctest::Approx(2.5));
    for (double q : {0.1, 0.5, 0.93}) CHECK(cvar_empirical(Vector::Constant(7, 3.25), q) == doctest::Approx(3.25));
    CHECK(cvar_empirical(vec({5}), 0.3) == 5.0);
    CHECK_THROWS_AS(cvar_empirical(Vector(), 0.5), ValidationError);
    CHECK_THROWS_AS(cvar_empirical(vec({1}), 1.0), ValidationError);
    CHECK(var_empirical(vec({1, 2, 3, 4}), 0.75) == 4.0);
    CHECK(var_empirical(vec({1, 2, 3, 4}), 0.6) == 3.0);
}

TEST_CASE("cvar_empirical matches the brute-force minimum") {
    Rng rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        const Index S = 5 + trial;
        Vector losses(S);
        for (Index s = 0; s < S; ++s) losses(s) = rng.laplace() + 0.3 * rng.normal();
        for (double q : {0.05, 0.37, 0.5, 0.8, 0.95}) {
            const double value = cvar_empirical(losses, q);
            CHECK(std::abs(value - cvar_brute_force(losses, q)) <= 1e-9 * (1.0 + std::abs(value)));
            CHECK(value >= losses.mean() - 1e-12);
            // the reported VaR attains the minimum
            const double g = var_empirical(losses, q);
            const double at_g = g + (losses.array() - g).max(0.0).sum() / ((1.0 - q) * static_cast<double>(S));
            CHECK(std::abs(at_g - value) <= 1e-9 * (1.0 + std::abs(value)));
        }
        double previous = -1e300;
        for (double q = 0.01; q < 1.0; q += 0.07) {
            const double value = cvar_empirical(losses, q);
            CHECK(value >= previous - 1e-12);
            previous = value;
        }
    }
}

TEST_CASE("optimality loss") {
    const Vector base = vec({1.0, 2.0, 0.5});
    const Vector w = vec({3.0, -1.0, 2.0});
    const auto noise = NoiseSpec::laplace(2, 0.8);

    const DecisionRule exact{base, Matrix::Zero(3, 2)};
    const auto zero = optimality_loss(exact, base, w, noise, 100, 1);
    CHECK(zero.mean == 0.0);
    CHECK(zero.samples.cwiseAbs().maxCoeff() == 0.0);

    DecisionRule shifted{base + vec({0.1, 0.0, 0.2}), Matrix::Zero(3, 2)};
    const auto nominal = optimality_loss(shifted, base, w, NoiseSpec::laplace(2, 0.0), 10, 1);
    CHECK(nominal.mean == doctest::Approx(0.7));

    // E[X zeta] = 0: the mean converges to the nominal gap
    shifted.X << 1.0, 0.5, -0.3, 0.2, 0.0, 1.1;
    const Index S = 1000000;
    const auto mc = optimality_loss(shifted, base, w, noise, S, 42);
    const double se = std::sqrt(sample_variance(mc.samples) / static_cast<double>(S));
    CHECK(std::abs(mc.mean - 0.7) <= 3.0 * se);

    CHECK_THROWS_AS(optimality_loss(shifted, base, vec({1.0}), noise, 10, 1), ValidationError);
}

TEST_CASE("cvar program at a frozen rule reproduces the sorted tail") {
    const Vector c = vec({1.0, 2.0, 3.0});
    const auto program = dispatch(c, 6.0, 4.0);
    const auto base = solve(program);
    REQUIRE(base.optimal());
    const auto noise = NoiseSpec::laplace(1, 0.1);
    const auto priv = privatize(program, noise, QueryConstraint::sum({0}), ChanceSpec::vertex(0.05), 9);
    const auto rule = solve_privatized(priv).rule;

    const Matrix zeta = sample_noise(noise, 77, 200);
    Vector losses(zeta.rows());
    for (Index s = 0; s < zeta.rows(); ++s) losses(s) = c.dot(rule.evaluate(zeta.row(s).transpose()) - base.x);

    for (double q : {0.5, 0.9, 0.95}) {
        CvarSpec spec;
        spec.q = q;
        spec.loss = LinearLoss::relative_to(c, base.x);
        const auto cvar = augment_with_cvar(priv, spec, zeta);
        const auto frozen = freeze_rule(cvar.privatized.program, cvar.privatized.layout, rule);
        SolverSettings settings;
        settings.tol = 1e-10;
        const auto sol = solve(frozen, settings);
        REQUIRE(sol.optimal());
        INFO("q " << q);
        CHECK(std::abs(cvar.cvar_value(sol.x) - cvar_empirical(losses, q)) <= 1e-9);
    }

    // a single sample: the CVaR term is that loss for every q
    CvarSpec one;
    one.q = 0.3;
    one.loss = LinearLoss::relative_to(c, base.x);
    const auto single = augment_with_cvar(priv, one, zeta.topRows(1));
    const auto sol = solve(freeze_rule(single.privatized.program, single.privatized.layout, rule));
    REQUIRE(sol.optimal());
    CHECK(std::abs(single.cvar_value(sol.x) - losses(0)) <= 1e-7);
}

TEST_CASE("co-optimized cvar trades mean for tail") {
    // generator 0 carries the released noise; the balance recourse goes to
    // generator 1 or 2, whose costs differ
    const Vector c = vec({1.0, 2.0, 3.0});
    const auto program = dispatch(c, 6.0, 4.0);
    const auto base = solve(program);
    REQUIRE(base.optimal());
    const auto noise = NoiseSpec::laplace(1, 0.2);
    const auto priv = privatize(program, noise, QueryConstraint::sum({0}), ChanceSpec::vertex(0.05), 9);
    const Matrix zeta = sample_noise(noise, 5, 400);
    const auto expected = solve_privatized(priv).rule;

    CvarSpec spec;
    spec.q = 0.95;
    spec.loss = LinearLoss::relative_to(c, base.x);
    const auto cvar = augment_with_cvar(priv, spec, zeta);
    const auto sol = solve(cvar.privatized.program);
    REQUIRE(sol.optimal());
    const auto hedged = cvar.privatized.extract(sol.x);
    // query constraint untouched
    CHECK(std::abs(hedged.X(0, 0) - 1.0) <= 1e-9);
    CHECK(std::abs(hedged.X.col(0).sum()) <= 1e-8);

    const auto a = optimality_loss(expected, base.x, c, noise, 20000, 3);
    const auto b = optimality_loss(hedged, base.x, c, noise, 20000, 3);
    CHECK(cvar_empirical(b.samples, 0.95) <= cvar_empirical(a.samples, 0.95) + 1e-6);
    CHECK(b.mean >= a.mean - 1e-6);

    CHECK_THROWS_AS(augment_with_cvar(priv, spec, Matrix::Zero(3, 2)), ValidationError);
    spec.loss.weights = vec({1.0});
    CHECK_THROWS_AS(augment_with_cvar(priv, spec, zeta), ValidationError);
}
