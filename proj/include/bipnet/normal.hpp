#pragma once

namespace bipnet {

/// Standard normal distribution function.
double normal_cdf(double x);

/// Upper tail 1 - Phi(x), accurate far into the tail.
double normal_sf(double x);

/// Standard normal quantile, absolute error below 1e-12 on (1e-300, 1 - 1e-16).
double normal_quantile(double prob);

}  // namespace bipnet
