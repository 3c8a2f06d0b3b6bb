#pragma once

// Maximum volume ellipsoid {Y u + z : |u| <= 1} inside {x : a_i'x <= b_i} in
// the plane:
//   max t  s.t.  t^2 <= det sym(Y),  sym(Y) PSD,  |Y'a_i| <= b_i - a_i'z
// with sym(Y) = (Y + Y')/2. Y is kept entrywise so perturbed (asymmetric)
// matrices stay representable; the optimum is symmetric.

#include "dpconic/apps/metrics.hpp"
#include "dpconic/ldr.hpp"
#include "dpconic/privacy.hpp"

#include <optional>

namespace dpconic {

struct EllipsoidInstance {
    /// m x 2 rows a_i'.
    Matrix A;
    Vector b;

    Index m() const { return A.rows(); }
    /// Shapes, finiteness, and a bounded nonempty polyhedron (max and min of
    /// each coordinate solved as LPs). Throws ValidationError otherwise.
    void check() const;
};

/// The square [-h, h]^2.
EllipsoidInstance box_instance(double half_width = 1.0);
/// An irregular hexagon around the origin used by the experiments.
EllipsoidInstance bundled_polygon();

/// Column order (z1, z2, Y11, Y21, Y12, Y22, t): the first six match the
/// noise layout z + zeta_{1:2}, Y + [zeta_{3:4} zeta_{5:6}].
struct EllipsoidColumns {
    static constexpr Index z(Index j) { return j; }
    static constexpr Index y11() { return 2; }
    static constexpr Index y21() { return 3; }
    static constexpr Index y12() { return 4; }
    static constexpr Index y22() { return 5; }
    static constexpr Index t() { return 6; }
    static constexpr Index total() { return 7; }
};

/// Blocks: RSOC (Y11, Y22, sqrt2 t, (Y12 + Y21)/sqrt2), SOC (Y11 + Y22,
/// Y11 - Y22, Y12 + Y21) unless `psd_block` is false (the RSOC implies it),
/// then SOC (b_i - a_i'z, Y'a_i) per row.
ConicProgram build_ellipsoid(const EllipsoidInstance& inst, bool psd_block = true);

struct Ellipse {
    Vector z;
    Matrix Y;

    /// pi |det Y|.
    double area() const;
    /// sym(Y) PSD and |Y'a_i| <= b_i - a_i'z + tol for every row.
    bool inside(const EllipsoidInstance& inst, double tol = 1e-9) const;
};

Ellipse ellipse_from(const Vector& x);
/// Packs (z, Y) in column order; t is left at zero.
Vector ellipse_to(const Ellipse& e);

/// Solves build_ellipsoid; SolveFailure unless optimal.
Ellipse max_volume_ellipse(const EllipsoidInstance& inst);

/// Universe: b_i ranges over [b_i - g |b_i|, b_i + g |b_i|] uniformly and
/// independently, all pairs adjacent. The query is (z*, Y11, Y21, Y12, Y22).
AdjacencyModel ellipsoid_universe(const EllipsoidInstance& inst, double g);

struct PrivateEllipsoid {
    EllipsoidInstance instance;
    ConicProgram program;
    Solution base;
    PrivacyParams privacy;
    NoiseSpec noise;
    PrivatizedProgram privatized;
    DecisionRule rule;
    QueryRelease release;
};

struct EllipsoidPrivacySettings {
    double eps = 1.0;
    double delta = 0.1;
    /// Relative width of the b range.
    double range = 0.01;
    double eta = 0.1;
    double beta = 0.01;
    /// Sample-average copies of the det objective.
    Index objective_samples = 32;
    double gamma = 0.1;
    double sens_beta = 0.1;
    Index sensitivity_samples = 0;
    std::optional<double> delta2;
    /// Hold PSD of sym(Y) over the whole noise box as well. Off by default:
    /// the box is far more conservative than the containment rows need, and
    /// the sampled hypographs already keep sym(Y) PSD at their draws.
    bool psd_over_box = false;
};

/// Gaussian noise of dimension 6 with fixed recourse on (z, Y); the det
/// objective is a sample average over per-draw hypographs, and the
/// containment blocks are held over the 64 vertices of the noise box.
PrivateEllipsoid privatize_ellipsoid(const EllipsoidInstance& inst, const EllipsoidPrivacySettings& settings,
                                     std::uint64_t seed);

/// Loss is the area lost against the non-private ellipse; infeasible when
/// the released ellipse is not inside the polyhedron.
StrategyResult evaluate_ellipsoid(const PrivateEllipsoid& priv, Strategy strategy, Index draws, std::uint64_t seed,
                                  Vector* areas = nullptr);

}  // namespace dpconic
