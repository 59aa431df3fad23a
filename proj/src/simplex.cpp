#include "sasq/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace sasq {

namespace {

void require_finite(const Vec& z, const char* who) {
  if (z.empty()) throw std::invalid_argument(std::string(who) + ": empty input");
  for (double v : z)
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(who) + ": non-finite input");
}

// Shift by the max so the result depends only on score gaps. Downstream
// arithmetic then cancels any common offset of the input exactly.
Vec shift_by_max(const Vec& z) {
  const double m = *std::max_element(z.begin(), z.end());
  Vec d(z.size());
  for (size_t i = 0; i < z.size(); ++i) d[i] = z[i] - m;
  return d;
}

// Threshold of the projection, computed on max-shifted scores. Descending
// sort with ties broken by original index so checkpoints reproduce.
SparsemaxThreshold threshold_shifted(const Vec& d) {
  const int n = static_cast<int>(d.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return d[i] > d[j]; });

  int k = 1;
  double cum = 0.0;
  double cum_at_k = d[order[0]];
  for (int j = 0; j < n; ++j) {
    cum += d[order[j]];
    if (1.0 + (j + 1) * d[order[j]] > cum) {
      k = j + 1;
      cum_at_k = cum;
    }
  }
  return {k, (cum_at_k - 1.0) / k};
}

}  // namespace

SparsemaxThreshold sparsemax_threshold(const Vec& z) {
  require_finite(z, "sparsemax_threshold");
  const double m = *std::max_element(z.begin(), z.end());
  SparsemaxThreshold t = threshold_shifted(shift_by_max(z));
  t.tau += m;
  return t;
}

Vec sparsemax(const Vec& z) {
  require_finite(z, "sparsemax");
  const Vec d = shift_by_max(z);
  const SparsemaxThreshold t = threshold_shifted(d);
  Vec p(z.size());
  for (size_t i = 0; i < z.size(); ++i) p[i] = std::max(d[i] - t.tau, 0.0);
  return p;
}

std::vector<int> sparsemax_support(const Vec& z) {
  require_finite(z, "sparsemax_support");
  const Vec d = shift_by_max(z);
  const SparsemaxThreshold t = threshold_shifted(d);
  std::vector<int> support;
  for (size_t i = 0; i < z.size(); ++i)
    if (d[i] - t.tau > 0.0) support.push_back(static_cast<int>(i));
  return support;
}

Vec sparsemax_jvp(const Vec& z, const Vec& v) {
  require_finite(z, "sparsemax_jvp");
  if (v.size() != z.size()) throw std::invalid_argument("sparsemax_jvp: size mismatch");
  const std::vector<int> support = sparsemax_support(z);
  double mean = 0.0;
  for (int i : support) mean += v[i];
  mean /= static_cast<double>(support.size());
  Vec out(z.size(), 0.0);
  for (int i : support) out[i] = v[i] - mean;
  return out;
}

Vec softmax(const Vec& z) {
  require_finite(z, "softmax");
  const Vec d = shift_by_max(z);
  Vec p(z.size());
  double sum = 0.0;
  for (size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(d[i]);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

Vec softmax_jvp(const Vec& z, const Vec& v) {
  require_finite(z, "softmax_jvp");
  if (v.size() != z.size()) throw std::invalid_argument("softmax_jvp: size mismatch");
  const Vec p = softmax(z);
  const double pv = dot(p, v);
  Vec out(z.size());
  for (size_t i = 0; i < z.size(); ++i) out[i] = p[i] * (v[i] - pv);
  return out;
}

Vec oracle_simplex_projection(const Vec& z) {
  require_finite(z, "oracle_simplex_projection");
  const int n = static_cast<int>(z.size());
  if (n > 20) throw std::length_error("oracle_simplex_projection: n > 20");

  Vec best;
  double best_dist = std::numeric_limits<double>::infinity();
  // Every nonempty support set; the equality-constrained projection on a
  // fixed support S is z_i - (sum_S z - 1)/|S| on S and 0 elsewhere.
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    double sum = 0.0;
    int size = 0;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) {
        sum += z[i];
        ++size;
      }
    const double shift = (sum - 1.0) / size;
    Vec cand(n, 0.0);
    bool feasible = true;
    double dist = 0.0;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        cand[i] = z[i] - shift;
        if (cand[i] < 0.0) {
          feasible = false;
          break;
        }
        dist += shift * shift;
      } else {
        dist += z[i] * z[i];
      }
    }
    if (feasible && dist < best_dist) {
      best_dist = dist;
      best = std::move(cand);
    }
  }
  return best;
}

}  // namespace sasq
