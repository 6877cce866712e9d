#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vprobe/common.hpp"

namespace vprobe {

/// 1 when the two distributions have different majority answers (lowest index wins ties).
int mismatch(std::span<const double> p, std::span<const double> q);

/// Jensen-Shannon divergence in bits, in [0, 1]. Zero-probability terms contribute nothing.
double js_divergence(std::span<const double> p, std::span<const double> q);
/// Square root of js_divergence; a metric on distributions bounded by 1.
double js_distance(std::span<const double> p, std::span<const double> q);

/// Earth mover's distance on an ordinal scale with ground cost |i - j|,
/// via the cumulative-distribution closed form.
double emd_ordinal(std::span<const double> p, std::span<const double> q);

struct AlignmentScore {
  double value = 0.0;  // 1 - emd / (K - 1)
  double emd = 0.0;
  std::size_t n_options = 0;
};

AlignmentScore alignment(std::span<const double> p, std::span<const double> q_human);

/// Element-wise mean of equally sized distributions.
Distribution mean_distribution(std::span<const Distribution> reps);

struct Correlation {
  double r = 0.0;
  double p_value = 1.0;  // two-sided, Student t with n - 2 degrees of freedom
  std::size_t n = 0;
};

Correlation pearson(std::span<const double> xs, std::span<const double> ys);
/// Pearson correlation of average ranks.
Correlation spearman(std::span<const double> xs, std::span<const double> ys);

/// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> xs);

/// Two-sided p-value of a correlation coefficient r over n pairs.
double correlation_p_value(double r, std::size_t n);

/// Probability mass on the low and high halves of the scale. For odd K the middle option is split evenly.
struct PoleWeights {
  double low = 0.0;
  double high = 0.0;
};

PoleWeights pole_weights(std::span<const double> p);

}  // namespace vprobe
