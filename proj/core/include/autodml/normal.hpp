#pragma once

namespace autodml {

// Inverse standard normal CDF on (0,1), accurate to ~1e-15 (Wichura's
// rational approximations, three branches). Throws DomainError outside (0,1).
double normal_quantile(double p);

// Standard normal CDF, used by tests as an independent oracle for the
// quantile via bisection.
double normal_cdf(double x);

}  // namespace autodml
