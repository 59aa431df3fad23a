#ifndef SASQ_NN_HPP
#define SASQ_NN_HPP

#include <cstdint>

#include "sasq/linalg.hpp"
#include "sasq/rng.hpp"

namespace sasq {

// ---- dense layer ----

struct DenseLayer {
  Mat W;  // out x in
  Vec b;  // out
};

struct DenseGrads {
  Mat W;
  Vec b;
  Vec x;
};

Vec dense_forward(const DenseLayer& layer, const Vec& x);
DenseGrads dense_backward(const DenseLayer& layer, const Vec& x, const Vec& upstream);

// ---- LSTM cell ----

// Single-layer forget-gate LSTM, gates over the concatenation [x; h].
struct LstmParams {
  Mat Wi, Wf, Wg, Wo;  // each D x (I+D)
  Vec bi, bf, bg, bo;  // each D

  int hidden_size() const { return static_cast<int>(bi.size()); }
  int input_size() const { return Wi.cols - hidden_size(); }
};

struct LstmState {
  Vec h;
  Vec c;
};

LstmState lstm_zero_state(int hidden);

// Everything the backward pass reads.
struct LstmCache {
  Vec xh;  // [x; h_prev]
  Vec c_prev;
  Vec i, f, g, o;
  Vec c_new, tanh_c_new;
};

struct LstmGrads {
  Mat Wi, Wf, Wg, Wo;
  Vec bi, bf, bg, bo;
};

LstmGrads lstm_zero_grads(const LstmParams& p);

LstmState lstm_step(const LstmParams& p, const Vec& x, const LstmState& state, LstmCache& cache);

// Accumulates parameter gradients into `grads`; returns gradients for the
// step input and the previous state through dx / dprev.
void lstm_backward(const LstmParams& p, const LstmCache& cache, const Vec& upstream_h,
                   const Vec& upstream_c, LstmGrads& grads, Vec& dx, LstmState& dprev);

// ---- initialization, optimizer, loss ----

// Uniform Xavier: entries i.i.d. on +-sqrt(6/(fan_in+fan_out)).
Mat xavier_init(int fan_in, int fan_out, Rng& rng);

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::int64_t t = 0;
  Vec m;
  Vec v;

  explicit AdamState(size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// In-place Adam step over a flat parameter vector.
void adam_update(AdamState& state, const AdamConfig& cfg, Vec& params, const Vec& grads);

struct L1Loss {
  double loss;
  double dpred;
};

// |pred - target| with subgradient sign(pred - target), sign(0) := 0.
L1Loss l1_loss(double pred, double target);

}  // namespace sasq

#endif
