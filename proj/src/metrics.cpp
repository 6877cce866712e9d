#include "vprobe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <boost/math/distributions/students_t.hpp>

#include "vprobe/scoring.hpp"

namespace vprobe {

namespace {

void require_same_size(std::span<const double> p, std::span<const double> q, const char* what) {
  if (p.size() != q.size()) {
    throw PreconditionError(std::string(what) + ": size mismatch (" + std::to_string(p.size()) + " vs " +
                            std::to_string(q.size()) + ")");
  }
  if (p.empty()) throw PreconditionError(std::string(what) + ": empty distribution");
}

void require_distribution(std::span<const double> p, const char* what) {
  if (!is_distribution(p, 1e-6)) throw PreconditionError(std::string(what) + ": input is not a probability vector");
}

// p * log2(p / m), with 0 * log 0 = 0.
double kl_term(double p, double m) { return p > 0.0 ? p * std::log2(p / m) : 0.0; }

}  // namespace

int mismatch(std::span<const double> p, std::span<const double> q) {
  require_same_size(p, q, "mismatch");
  return majority_answer(p) != majority_answer(q) ? 1 : 0;
}

double js_divergence(std::span<const double> p, std::span<const double> q) {
  require_same_size(p, q, "js_divergence");
  require_distribution(p, "js_divergence");
  require_distribution(q, "js_divergence");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (m <= 0.0) continue;
    // Each per-option pair is non-negative; clamping removes rounding noise near p == q.
    total += std::max(0.0, kl_term(p[i], m) + kl_term(q[i], m));
  }
  return std::clamp(0.5 * total, 0.0, 1.0);
}

double js_distance(std::span<const double> p, std::span<const double> q) { return std::sqrt(js_divergence(p, q)); }

double emd_ordinal(std::span<const double> p, std::span<const double> q) {
  require_same_size(p, q, "emd_ordinal");
  double cdf_p = 0.0;
  double cdf_q = 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < p.size(); ++k) {
    cdf_p += p[k];
    cdf_q += q[k];
    total += std::abs(cdf_p - cdf_q);
  }
  return total;
}

AlignmentScore alignment(std::span<const double> p, std::span<const double> q_human) {
  require_same_size(p, q_human, "alignment");
  if (p.size() < 2) throw PreconditionError("alignment needs at least 2 options");
  AlignmentScore s;
  s.n_options = p.size();
  s.emd = emd_ordinal(p, q_human);
  const double span = static_cast<double>(p.size() - 1);
  s.value = std::clamp((span - s.emd) / span, 0.0, 1.0);
  return s;
}

Distribution mean_distribution(std::span<const Distribution> reps) {
  if (reps.empty()) throw PreconditionError("mean of an empty list of distributions");
  Distribution out(reps.front().size(), 0.0);
  for (const auto& r : reps) {
    if (r.size() != out.size()) throw PreconditionError("mean of distributions with different sizes");
    for (std::size_t i = 0; i < r.size(); ++i) out[i] += r[i];
  }
  for (double& v : out) v /= static_cast<double>(reps.size());
  return out;
}

double correlation_p_value(double r, std::size_t n) {
  if (n < 3) throw PreconditionError("correlation p-value needs at least 3 pairs");
  if (std::abs(r) >= 1.0) return 0.0;
  const double dof = static_cast<double>(n - 2);
  const double t = r * std::sqrt(dof / ((1.0 + r) * (1.0 - r)));
  boost::math::students_t_distribution<double> dist(dof);
  return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 0.0, 1.0);
}

Correlation pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw PreconditionError("pearson: xs and ys differ in length");
  if (xs.size() < 3) throw PreconditionError("pearson: needs at least 3 pairs");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) throw UndefinedCorrelationError("correlation undefined: zero variance");
  Correlation c;
  c.n = xs.size();
  c.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  c.p_value = correlation_p_value(c.r, c.n);
  return c;
}

std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> idx(xs.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && xs[idx[j + 1]] == xs[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

Correlation spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw PreconditionError("spearman: xs and ys differ in length");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson(rx, ry);
}

PoleWeights pole_weights(std::span<const double> p) {
  if (p.size() < 2) throw PreconditionError("pole weights need at least 2 options");
  const std::size_t k = p.size();
  const std::size_t half = k / 2;
  PoleWeights w;
  for (std::size_t i = 0; i < half; ++i) w.low += p[i];
  for (std::size_t i = k - half; i < k; ++i) w.high += p[i];
  if (k % 2 == 1) {
    w.low += 0.5 * p[half];
    w.high += 0.5 * p[half];
  }
  return w;
}

}  // namespace vprobe
