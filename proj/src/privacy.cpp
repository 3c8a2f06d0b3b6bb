#include "dpconic/privacy.hpp"

#include "dpconic/errors.hpp"
#include "dpconic/parallel.hpp"

#include <cmath>
#include <numbers>
#include <optional>

namespace dpconic {

std::string_view to_string(NoiseFamily family) {
    return family == NoiseFamily::Laplace ? "laplace" : "gaussian";
}

double NoiseSpec::stddev() const {
    return family == NoiseFamily::Laplace ? std::numbers::sqrt2 * scale : scale;
}

Matrix NoiseSpec::covariance() const {
    const double sd = stddev();
    return Matrix::Identity(dim, dim) * (sd * sd);
}

Matrix NoiseSpec::factor() const { return Matrix::Identity(dim, dim) * stddev(); }

void NoiseSpec::check() const {
    if (dim < 1) throw ValidationError("noise dimension must be >= 1");
    if (!(scale >= 0.0) || !std::isfinite(scale)) throw ValidationError("noise scale must be finite and >= 0");
}

Matrix sample_noise(const NoiseSpec& spec, std::uint64_t seed, Index count) {
    spec.check();
    if (count < 1) throw ValidationError("sample_noise: count must be >= 1");
    Matrix out(count, spec.dim);
    for (Index r = 0; r < count; ++r) {
        Rng rng(seed, static_cast<std::uint64_t>(r));
        for (Index j = 0; j < spec.dim; ++j) {
            const double unit = spec.family == NoiseFamily::Laplace ? rng.laplace() : rng.normal();
            out(r, j) = spec.scale * unit;
        }
    }
    return out;
}

NoiseSpec calibrate_laplace(double delta1, double eps, Index dim, LaplaceConvention convention) {
    if (!(delta1 >= 0.0) || !std::isfinite(delta1))
        throw ValidationError("calibrate_laplace: sensitivity must be finite and >= 0");
    if (!(eps > 0.0)) throw ValidationError("calibrate_laplace: eps must be positive");
    // a zero sensitivity needs no noise; the rate form has no such value
    if (delta1 == 0.0 && convention == LaplaceConvention::Rate)
        throw ValidationError("calibrate_laplace: rate convention needs a positive sensitivity");
    const double scale = convention == LaplaceConvention::Scale ? delta1 / eps : eps / delta1;
    return NoiseSpec::laplace(dim, scale);
}

NoiseSpec calibrate_gaussian(double delta2, double eps, double delta, Index dim) {
    if (!(delta2 >= 0.0) || !std::isfinite(delta2))
        throw ValidationError("calibrate_gaussian: sensitivity must be finite and >= 0");
    if (!(eps > 0.0)) throw ValidationError("calibrate_gaussian: eps must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("calibrate_gaussian: delta must lie in (0, 1)");
    return NoiseSpec::gaussian(dim, std::sqrt(2.0 * std::log(1.25 / delta)) * delta2 / eps);
}

namespace {

// ceil with a relative guard against round-off landing just above an integer
Index guarded_ceil(double value) {
    const double nearest = std::round(value);
    if (std::abs(value - nearest) <= 1e-9 * std::max(1.0, std::abs(value))) return static_cast<Index>(nearest);
    return static_cast<Index>(std::ceil(value));
}

}  // namespace

Index sensitivity_sample_size(double gamma, double beta) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("sensitivity_sample_size: gamma must lie in (0, 1)");
    if (!(beta > 0.0 && beta < 1.0)) throw ValidationError("sensitivity_sample_size: beta must lie in (0, 1)");
    return guarded_ceil(1.0 / (gamma * beta) - 1.0);
}

void PrivacyParams::check() const {
    if (!(eps > 0.0)) throw ValidationError("eps must be positive");
    if (!(delta >= 0.0 && delta < 1.0)) throw ValidationError("delta must lie in [0, 1)");
    if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
    if (p != 1 && p != 2) throw ValidationError("norm order p must be 1 or 2");
    if (!(gamma > 0.0 && gamma < 1.0) || !(beta > 0.0 && beta < 1.0))
        throw ValidationError("gamma and beta must lie in (0, 1)");
}

nlohmann::json sensitivity_report_json(const PrivacyParams& params) {
    nlohmann::json doc;
    doc["p"] = params.p;
    doc["alpha"] = std::isfinite(params.alpha) ? nlohmann::json(params.alpha) : nlohmann::json("inf");
    doc["gamma"] = params.gamma;
    doc["beta"] = params.beta;
    doc["S"] = params.S;
    doc["delta_p"] = params.delta_p;
    doc["failures"] = params.failures;
    return doc;
}

Vector ball_neighbor(const Vector& dataset, double alpha, Rng& rng) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ValidationError("ball_neighbor: alpha must be finite");
    const Index d = dataset.size();
    Vector direction(d);
    double norm = 0.0;
    while (norm == 0.0) {
        for (Index i = 0; i < d; ++i) direction(i) = rng.normal();
        norm = direction.norm();
    }
    const double radius = alpha * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
    Vector out = dataset + (radius / norm) * direction;
    // keep |D - D'| <= alpha despite rounding in the sum
    const double actual = (out - dataset).norm();
    if (actual > alpha) out = dataset + (out - dataset) * (alpha / actual);
    return out;
}

AdjacencyModel::Sampler ball_sampler(Vector dataset, double alpha) {
    return [dataset = std::move(dataset), alpha](Rng& rng) {
        return std::make_pair(dataset, ball_neighbor(dataset, alpha, rng));
    };
}

PrivacyParams estimate_sensitivity(const AdjacencyModel& model, int p, Index S, std::uint64_t seed, double gamma,
                                   double beta) {
    if (p != 1 && p != 2) throw ValidationError("estimate_sensitivity: p must be 1 or 2");
    if (S < 1) throw ValidationError("estimate_sensitivity: S must be >= 1");

    std::vector<std::optional<double>> gaps(static_cast<std::size_t>(S));
    parallel_for(static_cast<std::size_t>(S), [&](std::size_t s) {
        Rng rng(seed, s);
        auto [d, d_prime] = model.sample_pair(rng);
        try {
            const Vector diff = model.query(d) - model.query(d_prime);
            gaps[s] = p == 1 ? diff.lpNorm<1>() : diff.norm();
        } catch (const SolveFailure&) {
        } catch (const NumericalBreakdown&) {
        }
    });

    PrivacyParams out;
    out.p = p;
    out.alpha = model.alpha();
    out.gamma = gamma;
    out.beta = beta;
    out.S = S;
    long first_failure = -1;
    for (std::size_t s = 0; s < gaps.size(); ++s) {
        if (gaps[s]) {
            out.delta_p = std::max(out.delta_p, *gaps[s]);
        } else {
            ++out.failures;
            if (first_failure < 0) first_failure = static_cast<long>(s);
        }
    }
    if (out.failures * 100 >= S && out.failures > 0)
        throw SolveFailure("estimate_sensitivity: " + std::to_string(out.failures) + " of " + std::to_string(S) +
                               " sampled datasets could not be solved",
                           first_failure);
    return out;
}

Vector output_perturbation(const Vector& query_value, const NoiseSpec& spec, std::uint64_t seed) {
    if (query_value.size() != spec.dim) throw ValidationError("output_perturbation: dimension mismatch");
    return query_value + sample_noise(spec, seed, 1).row(0).transpose();
}

Solution input_perturbation(const std::function<ConicProgram(const Vector&)>& build, const Vector& dataset,
                            const NoiseSpec& spec, std::uint64_t seed, const SolverSettings& settings) {
    if (dataset.size() != spec.dim) throw ValidationError("input_perturbation: dimension mismatch");
    const Vector noisy = dataset + sample_noise(spec, seed, 1).row(0).transpose();
    const ConicProgram program = build(noisy);
    try {
        return solve(program, settings);
    } catch (const NumericalBreakdown&) {
        Solution failed;
        failed.status = SolveStatus::MaxIter;
        failed.x = Vector::Constant(program.cols(), std::numeric_limits<double>::quiet_NaN());
        return failed;
    }
}

bool privacy_ratio_check(const Vector& q_d, const Vector& q_d_prime, const NoiseSpec& spec, double eps,
                         double delta) {
    if (q_d.size() != q_d_prime.size() || q_d.size() != spec.dim)
        throw ValidationError("privacy_ratio_check: dimension mismatch");
    const Vector diff = q_d - q_d_prime;
    const double slack = 1e-12;
    if (spec.family == NoiseFamily::Laplace)
        return diff.lpNorm<1>() <= eps * spec.scale * (1.0 + slack);
    if (!(delta > 0.0 && delta < 1.0)) return false;
    const double calibrated = spec.scale * eps / std::sqrt(2.0 * std::log(1.25 / delta));
    return diff.norm() <= calibrated * (1.0 + slack);
}

}  // namespace dpconic
