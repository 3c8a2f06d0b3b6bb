#pragma once

// Noise mechanisms, their calibration, the two baseline strategies (output
// and input perturbation) and Monte Carlo sensitivity estimation.

#include "dpconic/conic.hpp"
#include "dpconic/rng.hpp"
#include "dpconic/solver.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <limits>
#include <utility>

namespace dpconic {

enum class NoiseFamily { Laplace, Gaussian };

std::string_view to_string(NoiseFamily family);

/// Zero-mean noise with i.i.d. coordinates. `scale` is the Laplace scale s
/// (variance 2 s^2) or the Gaussian standard deviation. Scale 0 is the point
/// mass at zero and is accepted for zero-noise limits.
struct NoiseSpec {
    NoiseFamily family = NoiseFamily::Laplace;
    Index dim = 1;
    double scale = 1.0;

    static NoiseSpec laplace(Index dim, double scale) { return {NoiseFamily::Laplace, dim, scale}; }
    static NoiseSpec gaussian(Index dim, double sigma) { return {NoiseFamily::Gaussian, dim, sigma}; }

    double stddev() const;
    Matrix covariance() const;
    /// F with F F' = covariance (diagonal here).
    Matrix factor() const;
    void check() const;
};

/// count x dim matrix of i.i.d. rows; the stream of row r is fixed by
/// (seed, r), so a prefix of a longer draw equals a shorter draw.
Matrix sample_noise(const NoiseSpec& spec, std::uint64_t seed, Index count);

/// How the Laplace mechanism reads Lap(b): the usual scale b = sensitivity/eps,
/// or the rate reading b = eps/sensitivity.
enum class LaplaceConvention { Scale, Rate };

NoiseSpec calibrate_laplace(double delta1, double eps, Index dim = 1,
                            LaplaceConvention convention = LaplaceConvention::Scale);
NoiseSpec calibrate_gaussian(double delta2, double eps, double delta, Index dim = 1);

/// ceil(1 / (gamma beta) - 1).
Index sensitivity_sample_size(double gamma, double beta);

struct PrivacyParams {
    double eps = 1.0;
    double delta = 0.0;
    double alpha = 1.0;  // may be +infinity (whole dataset universe)
    int p = 1;
    double delta_p = 0.0;
    double gamma = 0.1;
    double beta = 0.1;
    Index S = 0;
    Index failures = 0;

    void check() const;
};

nlohmann::json sensitivity_report_json(const PrivacyParams& params);

/// Adjacent dataset pairs plus the query map. A dataset is the vector of its
/// private coordinates.
class AdjacencyModel {
public:
    using Sampler = std::function<std::pair<Vector, Vector>(Rng&)>;
    /// Solves the program built on a dataset and evaluates the query; throws
    /// SolveFailure when the solve does not reach optimality.
    using Query = std::function<Vector(const Vector&)>;

    AdjacencyModel(double alpha, Sampler sampler, Query query)
        : alpha_(alpha), sampler_(std::move(sampler)), query_(std::move(query)) {}

    double alpha() const { return alpha_; }
    std::pair<Vector, Vector> sample_pair(Rng& rng) const { return sampler_(rng); }
    Vector query(const Vector& dataset) const { return query_(dataset); }

private:
    double alpha_;
    Sampler sampler_;
    Query query_;
};

/// D' = D + r u with u uniform on the unit sphere and r = alpha U^{1/d}, i.e.
/// uniform in the alpha-ball around D; the pair satisfies |D - D'| <= alpha.
Vector ball_neighbor(const Vector& dataset, double alpha, Rng& rng);

/// Pairs (D, ball_neighbor(D)) around a fixed D, with alpha finite.
AdjacencyModel::Sampler ball_sampler(Vector dataset, double alpha);

/// Delta_p = max_s |q(D_s) - q(D'_s)|_p over S sampled pairs. Sample s uses
/// the stream (seed, s). Failed solves on fewer than 1% of the samples are
/// dropped and counted; otherwise SolveFailure carries the first index.
PrivacyParams estimate_sensitivity(const AdjacencyModel& model, int p, Index S, std::uint64_t seed,
                                   double gamma = 0.1, double beta = 0.1);

Vector output_perturbation(const Vector& query_value, const NoiseSpec& spec, std::uint64_t seed);

/// Builds the program on dataset + noise and solves it. Failed solves are
/// returned with their status; a numerical breakdown is reported as MaxIter.
Solution input_perturbation(const std::function<ConicProgram(const Vector&)>& build, const Vector& dataset,
                            const NoiseSpec& spec, std::uint64_t seed, const SolverSettings& settings = {});

/// Laplace: |q - q'|_1 <= eps * scale (the density ratio never exceeds
/// e^eps). Gaussian: |q - q'|_2 <= the Delta_2 the scale was calibrated for.
bool privacy_ratio_check(const Vector& q_d, const Vector& q_d_prime, const NoiseSpec& spec, double eps,
                         double delta);

}  // namespace dpconic
