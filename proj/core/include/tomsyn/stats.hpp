#pragma once

#include <vector>

namespace tomsyn {

double mean_of(const std::vector<double>& xs);

// Unbiased (n-1) sample standard deviation; 0 when fewer than two values.
double sample_std(const std::vector<double>& xs);

// Two-tailed Welch t-test p-value for the difference in means. Requires at
// least two values per side (UsageError otherwise). When both samples have
// zero variance the test degenerates: p = 1 if the means are equal, else 0.
double significance(const std::vector<double>& a, const std::vector<double>& b);

// One-tailed one-sample t-test p-value for "mean(xs) > mu0". Requires at
// least two values. Zero variance degenerates to p = 0 if mean > mu0, else 1.
double significance_above(const std::vector<double>& xs, double mu0);

}  // namespace tomsyn
