#pragma once

#include "dpconic/conic.hpp"

namespace dpconic {

double normal_cdf(double x);
/// Inverse standard normal CDF for p in (0, 1).
double normal_quantile(double p);

double mean(const Vector& v);
/// Unbiased sample variance; 0 for fewer than two values.
double sample_variance(const Vector& v);

/// Standard error of a Bernoulli frequency estimated from n draws.
double binomial_standard_error(double p, Index n);

}  // namespace dpconic
