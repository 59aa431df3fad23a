#ifndef SASQ_ATTENTION_HPP
#define SASQ_ATTENTION_HPP

#include <string>

#include "sasq/linalg.hpp"

namespace sasq {

// One frame as an M x N grid of K-dimensional feature vectors, stored
// location-major: data[loc * K + k], loc = row * N + col.
struct FeatureCube {
  int M = 0, N = 0, K = 0;
  Vec data;

  FeatureCube() = default;
  FeatureCube(int m, int n, int k)
      : M(m), N(n), K(k), data(static_cast<size_t>(m) * n * k, 0.0) {}

  int locations() const { return M * N; }
  double* loc(int i) { return data.data() + static_cast<size_t>(i) * K; }
  const double* loc(int i) const { return data.data() + static_cast<size_t>(i) * K; }
  double& at(int i, int k) { return data[static_cast<size_t>(i) * K + k]; }
  double at(int i, int k) const { return data[static_cast<size_t>(i) * K + k]; }
};

// Location-shared scoring parameters: one scalar score per grid cell.
struct AttentionParams {
  Vec w_f;  // K, weights on the cell's feature vector
  Vec w_h;  // D, weights on the recurrent hidden state
  double b = 0.0;
};

enum class Normalizer { Sparse, Soft, None };

const char* to_string(Normalizer kind);
Normalizer normalizer_from_string(const std::string& s);

// e_i = tanh(w_f . X_i + w_h . h + b) per location
Vec attention_scores(const AttentionParams& params, const FeatureCube& cube, const Vec& h);

struct AttendResult {
  Vec map;      // M*N simplex point
  Vec context;  // K, attention-weighted sum of location features
};

AttendResult attend(const Vec& scores, const FeatureCube& cube, Normalizer kind);

struct AttendGrads {
  Vec scores;
  Vec cube;  // layout matches FeatureCube::data
};

// Exact gradients through map = normalize(scores), context = sum_i map_i X_i.
// Both normalizer Jacobians are symmetric, so their JVPs serve as VJPs.
AttendGrads attend_backward(const Vec& scores, const FeatureCube& cube, Normalizer kind,
                            const Vec& upstream_context, const Vec& upstream_map);

struct ScoreGrads {
  Vec w_f;
  Vec w_h;
  double b = 0.0;
  Vec h;  // gradient into the hidden state the scores read
};

// Backward of attention_scores; feature gradients are dropped because the
// cube is input data here.
ScoreGrads attention_scores_backward(const AttentionParams& params, const FeatureCube& cube,
                                     const Vec& h, const Vec& scores, const Vec& upstream);

}  // namespace sasq

#endif
