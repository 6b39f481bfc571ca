#pragma once

// Exact binomial tail oracle (log-space summation) and the Clopper-Pearson
// interval built on it. Independent of the Chernoff construction it checks;
// practical for n up to a few thousand.

#include <cstdint>

namespace mdinet::testsupport {

double log_binomial_pmf(std::int64_t k, std::int64_t n, double p);
double binomial_cdf(std::int64_t k, std::int64_t n, double p);          // P(X <= k)
double binomial_upper_tail(std::int64_t k, std::int64_t n, double p);   // P(X >= k)

struct ExactInterval {
    double lower = 0.0;
    double upper = 1.0;
};

/// Clopper-Pearson two-sided interval at total failure probability epsilon.
ExactInterval clopper_pearson(std::int64_t observed, std::int64_t trials, double epsilon);

}  // namespace mdinet::testsupport
