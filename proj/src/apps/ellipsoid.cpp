#include "dpconic/apps/ellipsoid.hpp"

#include "dpconic/errors.hpp"
#include "dpconic/parallel.hpp"

#include <cmath>
#include <numbers>

namespace dpconic {

namespace {

using Col = EllipsoidColumns;

// max of d'x over the polyhedron
Solution support_lp(const EllipsoidInstance& inst, const Vector& d) {
    ProgramBuilder builder(2);
    builder.add_block(ConeKind::NonNeg, inst.A, inst.b);
    builder.set_objective(-d);
    return solve(builder.build());
}

}  // namespace

void EllipsoidInstance::check() const {
    if (A.cols() != 2) throw ValidationError("ellipsoid: only the planar case (n = 2) is supported");
    if (A.rows() < 3 || b.size() != A.rows()) throw ValidationError("ellipsoid: need at least 3 rows with matching b");
    if (!A.allFinite() || !b.allFinite()) throw ValidationError("ellipsoid: non-finite data");
    for (Index j = 0; j < 2; ++j) {
        for (double sign : {1.0, -1.0}) {
            Vector d = Vector::Zero(2);
            d(j) = sign;
            const Solution sol = support_lp(*this, d);
            if (sol.status == SolveStatus::DualInfeasible)
                throw ValidationError("ellipsoid: polyhedron is unbounded");
            if (sol.status == SolveStatus::PrimalInfeasible) throw ValidationError("ellipsoid: polyhedron is empty");
            if (!sol.optimal())
                throw ValidationError("ellipsoid: bounding LP returned " + std::string(to_string(sol.status)));
        }
    }
}

EllipsoidInstance box_instance(double half_width) {
    if (!(half_width > 0.0)) throw ValidationError("box_instance: half width must be > 0");
    EllipsoidInstance inst;
    inst.A.resize(4, 2);
    inst.A << 1, 0, -1, 0, 0, 1, 0, -1;
    inst.b = Vector::Constant(4, half_width);
    return inst;
}

EllipsoidInstance bundled_polygon() {
    // outward normals at 0.2 + j pi/3, offsets around 1
    EllipsoidInstance inst;
    inst.A.resize(6, 2);
    inst.b.resize(6);
    inst.b << 1.0, 1.2, 1.0, 1.1, 1.0, 0.9;
    for (Index j = 0; j < 6; ++j) {
        const double angle = 0.2 + static_cast<double>(j) * std::numbers::pi / 3.0;
        inst.A(j, 0) = std::cos(angle);
        inst.A(j, 1) = std::sin(angle);
    }
    return inst;
}

ConicProgram build_ellipsoid(const EllipsoidInstance& inst, bool psd_block) {
    inst.check();
    const Index cols = Col::total();
    const double r2 = std::sqrt(2.0);
    ProgramBuilder builder(cols);

    Matrix det = Matrix::Zero(4, cols);
    det(0, Col::y11()) = -1.0;
    det(1, Col::y22()) = -1.0;
    det(2, Col::t()) = -r2;
    det(3, Col::y12()) = -1.0 / r2;
    det(3, Col::y21()) = -1.0 / r2;
    builder.add_block(ConeKind::RotatedSecondOrder, det, Vector::Zero(4));

    // a 2x2 symmetric matrix is PSD iff its trace dominates |(Y11 - Y22, 2 Y12)|
    Matrix psd = Matrix::Zero(3, cols);
    psd(0, Col::y11()) = psd(0, Col::y22()) = -1.0;
    psd(1, Col::y11()) = -1.0;
    psd(1, Col::y22()) = 1.0;
    psd(2, Col::y12()) = psd(2, Col::y21()) = -1.0;
    if (psd_block) builder.add_block(ConeKind::SecondOrder, psd, Vector::Zero(3));

    for (Index i = 0; i < inst.m(); ++i) {
        const double a1 = inst.A(i, 0), a2 = inst.A(i, 1);
        Matrix row = Matrix::Zero(3, cols);
        Vector rhs = Vector::Zero(3);
        rhs(0) = inst.b(i);
        row(0, Col::z(0)) = a1;
        row(0, Col::z(1)) = a2;
        // (Y'a)_1 = Y11 a1 + Y21 a2, (Y'a)_2 = Y12 a1 + Y22 a2
        row(1, Col::y11()) = -a1;
        row(1, Col::y21()) = -a2;
        row(2, Col::y12()) = -a1;
        row(2, Col::y22()) = -a2;
        builder.add_block(ConeKind::SecondOrder, row, rhs);
    }

    Vector c = Vector::Zero(cols);
    c(Col::t()) = -1.0;
    builder.set_objective(c);
    builder.set_variable_names({"z[0]", "z[1]", "Y11", "Y21", "Y12", "Y22", "t"});
    return builder.build();
}

double Ellipse::area() const { return std::numbers::pi * std::abs(Y.determinant()); }

bool Ellipse::inside(const EllipsoidInstance& inst, double tol) const {
    const Eigen::Matrix2d H = 0.5 * (Y + Y.transpose());
    if (H.trace() < -tol || H.determinant() < -tol) return false;
    if (H(0, 0) < -tol || H(1, 1) < -tol) return false;
    for (Index i = 0; i < inst.m(); ++i) {
        const Vector a = inst.A.row(i).transpose();
        if ((Y.transpose() * a).norm() > inst.b(i) - a.dot(z) + tol) return false;
    }
    return true;
}

Ellipse ellipse_from(const Vector& x) {
    if (x.size() < 6) throw ValidationError("ellipse_from: need at least six entries");
    Ellipse e;
    e.z = x.head(2);
    e.Y.resize(2, 2);
    e.Y << x(Col::y11()), x(Col::y12()), x(Col::y21()), x(Col::y22());
    return e;
}

Vector ellipse_to(const Ellipse& e) {
    Vector x = Vector::Zero(Col::total());
    x.head(2) = e.z;
    x(Col::y11()) = e.Y(0, 0);
    x(Col::y21()) = e.Y(1, 0);
    x(Col::y12()) = e.Y(0, 1);
    x(Col::y22()) = e.Y(1, 1);
    return x;
}

Ellipse max_volume_ellipse(const EllipsoidInstance& inst) {
    const Solution sol = solve(build_ellipsoid(inst));
    if (!sol.optimal()) throw SolveFailure("ellipsoid: solver returned " + std::string(to_string(sol.status)));
    return ellipse_from(sol.x);
}

AdjacencyModel ellipsoid_universe(const EllipsoidInstance& inst, double g) {
    inst.check();
    if (!(g >= 0.0)) throw ValidationError("ellipsoid_universe: range must be >= 0");
    auto draw = [inst, g](Rng& rng) {
        Vector b = inst.b;
        for (Index i = 0; i < b.size(); ++i) b(i) += g * std::abs(inst.b(i)) * (2.0 * rng.uniform() - 1.0);
        return b;
    };
    auto sampler = [draw](Rng& rng) {
        Vector a = draw(rng);
        Vector b = draw(rng);
        return std::make_pair(std::move(a), std::move(b));
    };
    auto query = [inst](const Vector& b) {
        EllipsoidInstance copy = inst;
        copy.b = b;
        const Solution sol = solve(build_ellipsoid(copy));
        if (!sol.optimal()) throw SolveFailure("ellipsoid: solver returned " + std::string(to_string(sol.status)));
        return Vector(sol.x.head(6));
    };
    return AdjacencyModel(std::numeric_limits<double>::infinity(), sampler, query);
}

PrivateEllipsoid privatize_ellipsoid(const EllipsoidInstance& inst, const EllipsoidPrivacySettings& settings,
                                     std::uint64_t seed) {
    PrivateEllipsoid out;
    out.instance = inst;
    out.program = build_ellipsoid(inst);
    out.base = solve(out.program);
    if (!out.base.optimal()) throw SolveFailure("ellipsoid: base program " + std::string(to_string(out.base.status)));

    out.privacy.eps = settings.eps;
    out.privacy.delta = settings.delta;
    out.privacy.alpha = std::numeric_limits<double>::infinity();
    out.privacy.p = 2;
    out.privacy.gamma = settings.gamma;
    out.privacy.beta = settings.sens_beta;
    if (settings.delta2) {
        out.privacy.delta_p = *settings.delta2;
    } else {
        const Index S = settings.sensitivity_samples > 0 ? settings.sensitivity_samples
                                                         : sensitivity_sample_size(settings.gamma, settings.sens_beta);
        const auto est = estimate_sensitivity(ellipsoid_universe(inst, settings.range), 2, S, derive_seed(seed, 4),
                                              settings.gamma, settings.sens_beta);
        out.privacy.delta_p = est.delta_p;
        out.privacy.S = est.S;
        out.privacy.failures = est.failures;
    }
    const Index k = 6;
    out.noise = calibrate_gaussian(out.privacy.delta_p, settings.eps, settings.delta, k);

    // z + zeta_{1:2}, Y + [zeta_{3:4} zeta_{5:6}]: every entry of the six rows pinned
    std::vector<PinnedEntry> pins;
    for (Index i = 0; i < k; ++i)
        for (Index j = 0; j < k; ++j) pins.push_back({i, j, i == j ? 1.0 : 0.0});
    const auto query = QueryConstraint::fixed_recourse(k, std::move(pins));

    PrivatizeOptions options;
    options.recourse.assign(static_cast<std::size_t>(Col::total()), true);
    options.recourse[static_cast<std::size_t>(Col::t())] = false;
    BlockTreatment average{BlockTreatment::Kind::SampleAverage};
    average.epigraph_var = Col::t();
    average.samples = settings.objective_samples;
    options.treatments[0] = average;
    out.privatized = privatize(build_ellipsoid(inst, settings.psd_over_box), out.noise, query,
                               ChanceSpec::vertex(settings.eta, settings.beta), seed, options);
    out.rule = solve_privatized(out.privatized).rule;
    out.release = release_query(out.rule, query, out.noise, derive_seed(seed, 2));
    return out;
}

StrategyResult evaluate_ellipsoid(const PrivateEllipsoid& priv, Strategy strategy, Index draws, std::uint64_t seed,
                                  Vector* areas) {
    if (draws < 1) throw ValidationError("evaluate_ellipsoid: draws must be >= 1");
    if (strategy == Strategy::Input) {
        StrategyResult r;
        r.strategy = strategy;
        r.status = "unsupported";
        r.loss_mean = r.loss_cvar = r.infeasibility = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    const double reference = ellipse_from(priv.base.x).area();
    const Vector center = strategy == Strategy::Output ? Vector(priv.base.x.head(6)) : Vector(priv.rule.xbar.head(6));
    const Matrix zeta = sample_noise(priv.noise, seed, draws);
    Vector area(draws), losses(draws);
    std::vector<char> bad(static_cast<std::size_t>(draws), 0);
    parallel_for(static_cast<std::size_t>(draws), [&](std::size_t s) {
        const auto i = static_cast<Index>(s);
        const Ellipse e = ellipse_from(center + zeta.row(i).transpose());
        area(i) = e.area();
        losses(i) = reference - area(i);
        bad[s] = e.inside(priv.instance) ? 0 : 1;
    });
    Index count = 0;
    for (char b : bad) count += b;
    if (areas) *areas = area;
    return summarize(strategy, losses, count);
}

}  // namespace dpconic
