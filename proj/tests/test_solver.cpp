#include <doctest.h>

#include "dpconic/errors.hpp"
#include "dpconic/solver.hpp"
#include "random_programs.hpp"

#include <cmath>

using namespace dpconic;

namespace {

Vector vec(std::initializer_list<double> values) {
    Vector v(static_cast<Index>(values.size()));
    Index i = 0;
    for (double x : values) v(i++) = x;
    return v;
}

double worst(const KktReport& r) { return std::max({r.primal, r.dual, r.gap, r.complementarity}); }

}  // namespace

TEST_CASE("settings are checked") {
    SolverSettings s;
    CHECK_NOTHROW(s.check());
    s.tol = 1.0;
    CHECK_THROWS_AS(s.check(), ValidationError);
    s = {};
    s.max_iter = 0;
    CHECK_THROWS_AS(s.check(), ValidationError);
    s = {};
    s.stall_iters = 0;
    CHECK_THROWS_AS(s.check(), ValidationError);
}

TEST_CASE("a run that stalls short of tol reports reduced accuracy") {
    const auto program = build_simple_lp(1.0, 1.0, 2.0);
    CHECK_FALSE(solve(program).reduced_accuracy);
    SolverSettings s;
    s.tol = 1e-300;
    const auto loose = solve(program, s);
    CHECK(loose.status == SolveStatus::Optimal);
    CHECK(loose.reduced_accuracy);
    CHECK(loose.iterations < s.max_iter);
    CHECK(std::abs(loose.x(0) - 1.0) <= 1e-6);

    s.reduced_tol = 1e-300;
    CHECK(solve(program, s).status == SolveStatus::MaxIter);
}

TEST_CASE("simple LP optimum sits on the lower bound") {
    const auto sol = solve(build_simple_lp(1.0, 1.0, 2.0));
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(std::abs(sol.x(0) - 1.0) <= 1e-7);
    CHECK(worst(kkt_report(build_simple_lp(1.0, 1.0, 2.0), sol)) <= 1e-7);

    const auto flipped = solve(build_simple_lp(-1.0, 0.0, 4.0));
    REQUIRE(flipped.optimal());
    CHECK(std::abs(flipped.x(0) - 4.0) <= 1e-7);

    const auto flat = solve(build_simple_lp(0.0, 0.0, 1.0));
    REQUIRE(flat.optimal());
    CHECK(std::abs(flat.objective) <= 1e-8);
    CHECK(flat.x(0) >= -1e-8);
    CHECK(flat.x(0) <= 1.0 + 1e-8);
}

TEST_CASE("projection onto a point via SOC") {
    // min t  s.t. (t, x - g) in SOC(3), x free
    const Vector g = vec({1.5, -2.0});
    ConicProgram p;
    p.A = Matrix::Zero(3, 3);
    p.A(0, 0) = -1.0;
    p.A(1, 1) = -1.0;
    p.A(2, 2) = -1.0;
    p.b = vec({0.0, -g(0), -g(1)});
    p.c = vec({1, 0, 0});
    p.cones = ConeSpec{{ConeKind::SecondOrder, 3}};
    const auto sol = solve(p);
    REQUIRE(sol.optimal());
    CHECK(std::abs(sol.x(0)) <= 1e-6);
    CHECK(std::abs(sol.x(1) - g(0)) <= 1e-5);
    CHECK(std::abs(sol.x(2) - g(1)) <= 1e-5);
}

TEST_CASE("least squares through a rotated cone matches normal equations") {
    // points (0,0),(1,1), basis phi(x)=x:  min u  s.t. (u, 1/2, y - Phi w) in RSOC
    const Vector xs = vec({0.0, 1.0, 2.0, 3.0});
    const Vector ys = vec({0.1, 1.2, 1.9, 3.2});
    for (int npts : {2, 4}) {
        const Vector x = xs.head(npts);
        const Vector y = npts == 2 ? vec({0.0, 1.0}) : Vector(ys);
        ConicProgram p;
        p.A = Matrix::Zero(2 + npts, 2);
        p.A(0, 0) = -1.0;
        p.A.block(2, 1, npts, 1) = x;
        p.b = Vector::Zero(2 + npts);
        p.b(1) = 0.5;
        p.b.tail(npts) = y;
        p.c = vec({1, 0});
        p.cones = ConeSpec{{ConeKind::RotatedSecondOrder, 2 + npts}};
        const auto sol = solve(p);
        REQUIRE(sol.optimal());
        const double w_oracle = x.dot(y) / x.dot(x);
        CHECK(std::abs(sol.x(1) - w_oracle) <= 1e-6);
        CHECK(std::abs(sol.x(0) - (y - w_oracle * x).squaredNorm()) <= 1e-6);
    }
}

TEST_CASE("infeasible and unbounded programs give certificates") {
    ConicProgram infeasible;  // x >= 1 and x <= 0
    infeasible.A = Matrix(2, 1);
    infeasible.A << -1, 1;
    infeasible.b = vec({-1, 0});
    infeasible.c = vec({1});
    infeasible.cones = ConeSpec{{ConeKind::NonNeg, 2}};
    const auto a = solve(infeasible);
    CHECK(a.status == SolveStatus::PrimalInfeasible);
    // certificate: y >= 0, A'y = 0, b'y < 0
    CHECK(a.y.minCoeff() >= -1e-9);
    CHECK(std::abs((infeasible.A.transpose() * a.y)(0)) <= 1e-7);
    CHECK(infeasible.b.dot(a.y) < 0.0);

    ConicProgram unbounded;  // min -x s.t. x >= 0
    unbounded.A = Matrix::Constant(1, 1, -1.0);
    unbounded.b = vec({0});
    unbounded.c = vec({-1});
    unbounded.cones = ConeSpec{{ConeKind::NonNeg, 1}};
    CHECK(solve(unbounded).status == SolveStatus::DualInfeasible);

    ConicProgram eq_conflict;  // x = 1 and x = 2
    eq_conflict.A = Matrix::Ones(2, 1);
    eq_conflict.b = vec({1, 2});
    eq_conflict.c = vec({0});
    eq_conflict.cones = ConeSpec{{ConeKind::Zero, 2}};
    CHECK(solve(eq_conflict).status == SolveStatus::PrimalInfeasible);
}

TEST_CASE("kkt_report flags perturbed points") {
    const auto p = build_simple_lp(1.0, 1.0, 2.0);
    auto sol = solve(p);
    REQUIRE(sol.optimal());
    CHECK(worst(kkt_report(p, sol)) <= 1e-7);
    sol.x(0) += 0.1;
    const auto r = kkt_report(p, sol);
    // y = (1, 0) so (b - Ax)'y = x - 1 = 0.1
    CHECK(std::max(r.primal, r.complementarity) > 1e-3);
    CHECK(std::abs(r.complementarity - 0.1 / 2.1) <= 1e-6);

    ConicProgram zero;
    zero.A = Matrix::Zero(2, 2);
    zero.b = Vector::Zero(2);
    zero.c = Vector::Zero(2);
    zero.cones = ConeSpec{{ConeKind::NonNeg, 2}};
    Solution z;
    z.x = Vector::Zero(2);
    z.y = Vector::Zero(2);
    CHECK(worst(kkt_report(zero, z)) == 0.0);
    z.x = Vector::Zero(3);
    CHECK_THROWS_AS(kkt_report(zero, z), ValidationError);
}

TEST_CASE("solver rejects invalid programs") {
    auto p = build_simple_lp(1.0, 0.0, 1.0);
    p.b = Vector::Zero(3);
    CHECK_THROWS_AS(solve(p), ValidationError);
}

TEST_CASE("random LP and SOCP instances reach tight KKT residuals") {
    std::mt19937_64 gen(20240611);
    int solved = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = testing_support::random_program(gen, trial % 2 == 1);
        const auto sol = solve(p);
        INFO("trial " << trial << " n=" << p.cols() << " m=" << p.rows());
        REQUIRE(sol.status == SolveStatus::Optimal);
        CHECK(worst(kkt_report(p, sol)) <= 1e-6);
        ++solved;
    }
    CHECK(solved == 200);
}

TEST_CASE("dual of a random LP has the same optimal value") {
    std::mt19937_64 gen(7);
    for (int trial = 0; trial < 20; ++trial) {
        auto p = testing_support::random_program(gen, false);
        // drop equality rows: keep the inequality-only part
        const Index z = p.cones.zero_dim();
        ConicProgram primal;
        primal.A = p.A.bottomRows(p.rows() - z);
        primal.b = p.b.tail(p.rows() - z);
        primal.cones = ConeSpec{{ConeKind::NonNeg, primal.A.rows()}};
        // bounded objective: c in the cone generated by rows
        std::mt19937_64 g2(trial);
        std::uniform_real_distribution<double> u(0.1, 1.0);
        Vector y0(primal.A.rows());
        for (Index i = 0; i < y0.size(); ++i) y0(i) = u(g2);
        primal.c = -primal.A.transpose() * y0;

        // dual: min b'y  s.t.  -c - A'y = 0,  y >= 0
        const Index m = primal.A.rows(), n = primal.A.cols();
        ConicProgram dual;
        dual.A = Matrix::Zero(n + m, m);
        dual.A.topRows(n) = primal.A.transpose();
        dual.A.bottomRows(m) = -Matrix::Identity(m, m);
        dual.b = Vector::Zero(n + m);
        dual.b.head(n) = -primal.c;
        dual.c = primal.b;
        dual.cones = ConeSpec{{ConeKind::Zero, n}, {ConeKind::NonNeg, m}};

        const auto ps = solve(primal);
        const auto ds = solve(dual);
        REQUIRE(ps.optimal());
        REQUIRE(ds.optimal());
        CHECK(std::abs(ps.objective + ds.objective) <= 1e-6 * (1.0 + std::abs(ps.objective)));
    }
}

TEST_CASE("solves are deterministic") {
    std::mt19937_64 gen(99);
    const auto p = testing_support::random_program(gen, true);
    const auto a = solve(p);
    const auto b = solve(p);
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
    CHECK(a.iterations == b.iterations);
}
