#pragma once

// Monotone regression h(x) = w'phi(x):
//   min |y - Phi w|^2 + lambda |w|^2  s.t.  C w >= 0,  C_i = phi'(u_i)'
// with variables (w, s, r): s and r are the epigraphs of the two squares,
// divided by kappa = max(1, |y|^2) so the program's optimum lies in [0, 1].

#include "dpconic/apps/metrics.hpp"
#include "dpconic/ldr.hpp"
#include "dpconic/privacy.hpp"

#include <optional>
#include <string>

namespace dpconic {

struct Basis {
    enum class Kind {
        /// (x, (x - 5)^3 / 2)
        Cubic,
        /// sqrt(1 + (mu_i - x)^2) per center
        Radial,
        /// (x)
        Linear,
    };
    Kind kind = Kind::Cubic;
    Vector centers;

    static Basis cubic() { return {}; }
    static Basis radial(Vector centers) { return {Kind::Radial, std::move(centers)}; }
    static Basis linear() { return {Kind::Linear, {}}; }

    Index size() const { return kind == Kind::Cubic ? 2 : kind == Kind::Linear ? 1 : centers.size(); }
    Vector value(double x) const;
    Vector derivative(double x) const;
};

struct RegressionModel {
    Vector x;
    Vector y;
    Basis basis;
    /// Points where h' >= 0 is required.
    Vector monotone_at;
    double lambda = 1e-3;

    Index points() const { return x.size(); }
    /// n x m_b matrix of phi(x_i)'.
    Matrix design() const;
    /// p x m_b matrix of phi'(u_i)'.
    Matrix monotonicity() const;
    void check() const;

    double fit_loss(const Vector& w) const;
    /// |y - Phi w|^2 + lambda |w|^2
    double loss(const Vector& w) const;
    /// kappa: the program objective is loss / kappa.
    double objective_scale() const;
};

/// 100 points x ~ U(0, 10), y = x + (x - 5)^3 / 2 + N(0, sd^2), cubic basis,
/// monotonicity at u = 1 and u = 9.
RegressionModel synthetic_cubic_regression(Index n, std::uint64_t seed, double noise_sd = 15.0,
                                           double lambda = 1e-3);

/// Normalized power curve sampled at `speeds`: zero below cut-in, one from
/// rated speed on, a logistic ramp in between rescaled to hit both ends.
struct PowerCurve {
    std::string name;
    Vector speeds;
    Vector power;
};

PowerCurve synthetic_power_curve(std::string name, double cut_in, double rated, double steepness,
                                 double step = 0.25, double max_speed = 20.0);
/// Six synthetic turbines with different ramps.
std::vector<PowerCurve> bundled_power_curves();

/// Points perturbed by N(0, sigma^2), clamped to [0, 1]; radial bases at
/// {3, 7, 11, 15}; p = 10 monotonicity points drawn from U(3, 10).
RegressionModel build_wind_curve_dataset(const PowerCurve& curve, double sigma, std::uint64_t seed,
                                         Index p = 10, double lambda = 1e-3);

struct RegressionColumns {
    Index mb;
    Index w(Index j) const { return j; }
    Index s() const { return mb; }
    Index r() const { return mb + 1; }
    Index total() const { return mb + 2; }
};

/// Blocks: RSOC (a s, a, y - Phi w), RSOC (a r, a, sqrt(lambda) w) with
/// a = sqrt(kappa / 2), NonNeg C w.
ConicProgram build_monotone_regression(const RegressionModel& model);

/// Least-squares weights (plus the ridge term) of the monotone program.
Vector fit_monotone_regression(const RegressionModel& model);

/// Universe of datasets, every pair adjacent (alpha = infinity); the query is
/// w*. Circle law: point i is (x_i + sx r cos t, y_i + sy r sin t) with
/// r ~ U(0, 1), t ~ U(0, 2 pi). Relative law: y_i (1 + U(-f, f)).
AdjacencyModel regression_circle_universe(const RegressionModel& model, double sx = 0.35, double sy = 8.0);
AdjacencyModel regression_relative_universe(const RegressionModel& model, double fraction);

struct PrivateRegression {
    ConicProgram program;
    Solution base;
    PrivacyParams privacy;
    NoiseSpec noise;
    PrivatizedProgram privatized;
    DecisionRule rule;
    QueryRelease release;
};

/// Gaussian noise of dimension m_b calibrated to Delta_2 (estimated over
/// `universe` with privacy.S samples, or the sample-size rule, unless
/// `delta2` is given). Both squares are replaced by their expectations and
/// the rows C(wbar + zeta) >= 0 are chance-constrained.
PrivateRegression privatize_regression(const RegressionModel& model, const PrivacyParams& privacy,
                                       const ChanceSpec& chance, std::uint64_t seed,
                                       std::optional<double> delta2 = std::nullopt,
                                       std::optional<AdjacencyModel> universe = std::nullopt);

/// Loss is model.loss(w) - model.loss(w*); infeasible when C w >= 0 fails at
/// the released weights. Output releases w* + zeta, program wbar + zeta.
StrategyResult evaluate_regression(const RegressionModel& model, const PrivateRegression& priv, Strategy strategy,
                                   Index draws, std::uint64_t seed);

}  // namespace dpconic
