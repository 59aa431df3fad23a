#include "sasq/attention.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "sasq/simplex.hpp"

namespace sasq {

const char* to_string(Normalizer kind) {
  switch (kind) {
    case Normalizer::Sparse: return "sparse";
    case Normalizer::Soft: return "soft";
    case Normalizer::None: return "none";
  }
  return "?";
}

Normalizer normalizer_from_string(const std::string& s) {
  if (s == "sparse") return Normalizer::Sparse;
  if (s == "soft") return Normalizer::Soft;
  if (s == "none") return Normalizer::None;
  throw std::invalid_argument("unknown normalizer: " + s);
}

Vec attention_scores(const AttentionParams& params, const FeatureCube& cube, const Vec& h) {
  if (static_cast<int>(params.w_f.size()) != cube.K)
    throw std::invalid_argument("attention_scores: w_f/K mismatch");
  if (params.w_h.size() != h.size())
    throw std::invalid_argument("attention_scores: w_h/h mismatch");
  const double shared = dot(params.w_h, h) + params.b;
  const int L = cube.locations();
  Vec e(L);
  for (int i = 0; i < L; ++i)
    e[i] = std::tanh(dot(params.w_f.data(), cube.loc(i), cube.K) + shared);
  return e;
}

AttendResult attend(const Vec& scores, const FeatureCube& cube, Normalizer kind) {
  const int L = cube.locations();
  if (static_cast<int>(scores.size()) != L)
    throw std::invalid_argument("attend: scores/location mismatch");

  AttendResult r;
  switch (kind) {
    case Normalizer::Sparse: r.map = sparsemax(scores); break;
    case Normalizer::Soft: r.map = softmax(scores); break;
    case Normalizer::None: r.map.assign(L, 1.0 / L); break;
  }
  r.context.assign(cube.K, 0.0);
  for (int i = 0; i < L; ++i) {
    const double w = r.map[i];
    if (w == 0.0) continue;
    const double* x = cube.loc(i);
    for (int k = 0; k < cube.K; ++k) r.context[k] += w * x[k];
  }
  return r;
}

AttendGrads attend_backward(const Vec& scores, const FeatureCube& cube, Normalizer kind,
                            const Vec& upstream_context, const Vec& upstream_map) {
  const int L = cube.locations();
  if (static_cast<int>(scores.size()) != L ||
      static_cast<int>(upstream_context.size()) != cube.K ||
      static_cast<int>(upstream_map.size()) != L)
    throw std::invalid_argument("attend_backward: shape mismatch");

  // d(loss)/d(map_i) picks up the context path: context = sum_i map_i X_i
  Vec dmap(L);
  for (int i = 0; i < L; ++i)
    dmap[i] = upstream_map[i] + dot(upstream_context.data(), cube.loc(i), cube.K);

  AttendGrads g;
  switch (kind) {
    case Normalizer::Sparse: g.scores = sparsemax_jvp(scores, dmap); break;
    case Normalizer::Soft: g.scores = softmax_jvp(scores, dmap); break;
    case Normalizer::None: g.scores.assign(L, 0.0); break;
  }

  Vec map;
  switch (kind) {
    case Normalizer::Sparse: map = sparsemax(scores); break;
    case Normalizer::Soft: map = softmax(scores); break;
    case Normalizer::None: map.assign(L, 1.0 / L); break;
  }
  g.cube.assign(cube.data.size(), 0.0);
  for (int i = 0; i < L; ++i) {
    const double w = map[i];
    if (w == 0.0) continue;
    for (int k = 0; k < cube.K; ++k)
      g.cube[static_cast<size_t>(i) * cube.K + k] = w * upstream_context[k];
  }
  return g;
}

ScoreGrads attention_scores_backward(const AttentionParams& params, const FeatureCube& cube,
                                     const Vec& h, const Vec& scores, const Vec& upstream) {
  const int L = cube.locations();
  if (static_cast<int>(scores.size()) != L || upstream.size() != scores.size())
    throw std::invalid_argument("attention_scores_backward: shape mismatch");

  ScoreGrads g;
  g.w_f.assign(params.w_f.size(), 0.0);
  g.w_h.assign(params.w_h.size(), 0.0);
  g.h.assign(h.size(), 0.0);

  double dshared = 0.0;
  for (int i = 0; i < L; ++i) {
    const double dpre = upstream[i] * (1.0 - scores[i] * scores[i]);
    if (dpre == 0.0) continue;
    dshared += dpre;
    const double* x = cube.loc(i);
    for (int k = 0; k < cube.K; ++k) g.w_f[k] += dpre * x[k];
  }
  g.b = dshared;
  for (size_t d = 0; d < h.size(); ++d) {
    g.w_h[d] = dshared * h[d];
    g.h[d] = dshared * params.w_h[d];
  }
  return g;
}

}  // namespace sasq
