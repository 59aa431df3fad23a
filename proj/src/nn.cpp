#include "sasq/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace sasq {

namespace {

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// pre = W [x;h] + b, elementwise activated
void gate(const Mat& W, const Vec& b, const Vec& xh, Vec& out, bool is_tanh) {
  matvec(W, xh, out);
  for (int r = 0; r < W.rows; ++r) {
    out[r] += b[r];
    out[r] = is_tanh ? std::tanh(out[r]) : logistic(out[r]);
  }
}

}  // namespace

Vec dense_forward(const DenseLayer& layer, const Vec& x) {
  Vec y = matvec(layer.W, x);
  for (size_t i = 0; i < y.size(); ++i) y[i] += layer.b[i];
  return y;
}

DenseGrads dense_backward(const DenseLayer& layer, const Vec& x, const Vec& upstream) {
  if (static_cast<int>(upstream.size()) != layer.W.rows)
    throw std::invalid_argument("dense_backward: upstream size mismatch");
  DenseGrads g;
  g.W = Mat(layer.W.rows, layer.W.cols);
  add_outer(g.W, upstream, x);
  g.b = upstream;
  matvec_t_acc(layer.W, upstream, g.x);
  return g;
}

LstmState lstm_zero_state(int hidden) {
  return {Vec(hidden, 0.0), Vec(hidden, 0.0)};
}

LstmGrads lstm_zero_grads(const LstmParams& p) {
  LstmGrads g;
  g.Wi = Mat(p.Wi.rows, p.Wi.cols);
  g.Wf = Mat(p.Wf.rows, p.Wf.cols);
  g.Wg = Mat(p.Wg.rows, p.Wg.cols);
  g.Wo = Mat(p.Wo.rows, p.Wo.cols);
  g.bi = Vec(p.bi.size(), 0.0);
  g.bf = Vec(p.bf.size(), 0.0);
  g.bg = Vec(p.bg.size(), 0.0);
  g.bo = Vec(p.bo.size(), 0.0);
  return g;
}

LstmState lstm_step(const LstmParams& p, const Vec& x, const LstmState& state, LstmCache& cache) {
  const int D = p.hidden_size();
  const int I = p.input_size();
  if (static_cast<int>(x.size()) != I) throw std::invalid_argument("lstm_step: input size mismatch");
  if (static_cast<int>(state.h.size()) != D || static_cast<int>(state.c.size()) != D)
    throw std::invalid_argument("lstm_step: state size mismatch");

  cache.xh.resize(I + D);
  std::copy(x.begin(), x.end(), cache.xh.begin());
  std::copy(state.h.begin(), state.h.end(), cache.xh.begin() + I);
  cache.c_prev = state.c;

  gate(p.Wi, p.bi, cache.xh, cache.i, false);
  gate(p.Wf, p.bf, cache.xh, cache.f, false);
  gate(p.Wg, p.bg, cache.xh, cache.g, true);
  gate(p.Wo, p.bo, cache.xh, cache.o, false);

  cache.c_new.resize(D);
  cache.tanh_c_new.resize(D);
  LstmState next;
  next.h.resize(D);
  next.c.resize(D);
  for (int d = 0; d < D; ++d) {
    cache.c_new[d] = cache.f[d] * state.c[d] + cache.i[d] * cache.g[d];
    cache.tanh_c_new[d] = std::tanh(cache.c_new[d]);
    next.c[d] = cache.c_new[d];
    next.h[d] = cache.o[d] * cache.tanh_c_new[d];
  }
  return next;
}

void lstm_backward(const LstmParams& p, const LstmCache& cache, const Vec& upstream_h,
                   const Vec& upstream_c, LstmGrads& grads, Vec& dx, LstmState& dprev) {
  const int D = p.hidden_size();
  const int I = p.input_size();
  if (static_cast<int>(upstream_h.size()) != D || static_cast<int>(upstream_c.size()) != D)
    throw std::invalid_argument("lstm_backward: upstream size mismatch");
  if (static_cast<int>(cache.xh.size()) != I + D)
    throw std::invalid_argument("lstm_backward: cache mismatch");

  Vec dpre_i(D), dpre_f(D), dpre_g(D), dpre_o(D);
  dprev.c.resize(D);
  for (int d = 0; d < D; ++d) {
    const double do_ = upstream_h[d] * cache.tanh_c_new[d];
    const double dc = upstream_c[d] +
                      upstream_h[d] * cache.o[d] * (1.0 - cache.tanh_c_new[d] * cache.tanh_c_new[d]);
    const double di = dc * cache.g[d];
    const double df = dc * cache.c_prev[d];
    const double dg = dc * cache.i[d];
    dprev.c[d] = dc * cache.f[d];
    dpre_i[d] = di * cache.i[d] * (1.0 - cache.i[d]);
    dpre_f[d] = df * cache.f[d] * (1.0 - cache.f[d]);
    dpre_g[d] = dg * (1.0 - cache.g[d] * cache.g[d]);
    dpre_o[d] = do_ * cache.o[d] * (1.0 - cache.o[d]);
  }

  add_outer(grads.Wi, dpre_i, cache.xh);
  add_outer(grads.Wf, dpre_f, cache.xh);
  add_outer(grads.Wg, dpre_g, cache.xh);
  add_outer(grads.Wo, dpre_o, cache.xh);
  add_scaled(grads.bi, dpre_i, 1.0);
  add_scaled(grads.bf, dpre_f, 1.0);
  add_scaled(grads.bg, dpre_g, 1.0);
  add_scaled(grads.bo, dpre_o, 1.0);

  Vec dxh(I + D, 0.0);
  matvec_t_acc(p.Wi, dpre_i, dxh);
  matvec_t_acc(p.Wf, dpre_f, dxh);
  matvec_t_acc(p.Wg, dpre_g, dxh);
  matvec_t_acc(p.Wo, dpre_o, dxh);

  dx.assign(dxh.begin(), dxh.begin() + I);
  dprev.h.assign(dxh.begin() + I, dxh.end());
}

Mat xavier_init(int fan_in, int fan_out, Rng& rng) {
  if (fan_in < 1 || fan_out < 1) throw std::invalid_argument("xavier_init: zero fan");
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  Mat m(fan_out, fan_in);
  for (double& v : m.a) v = rng.uniform(-bound, bound);
  return m;
}

void adam_update(AdamState& state, const AdamConfig& cfg, Vec& params, const Vec& grads) {
  if (params.size() != grads.size() || state.m.size() != params.size())
    throw std::invalid_argument("adam_update: shape mismatch");
  state.t += 1;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (size_t j = 0; j < params.size(); ++j) {
    state.m[j] = cfg.beta1 * state.m[j] + (1.0 - cfg.beta1) * grads[j];
    state.v[j] = cfg.beta2 * state.v[j] + (1.0 - cfg.beta2) * grads[j] * grads[j];
    const double mhat = state.m[j] / c1;
    const double vhat = state.v[j] / c2;
    params[j] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
  }
}

L1Loss l1_loss(double pred, double target) {
  if (!std::isfinite(pred) || !std::isfinite(target))
    throw std::invalid_argument("l1_loss: non-finite input");
  const double diff = pred - target;
  const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
  return {std::abs(diff), sign};
}

}  // namespace sasq
