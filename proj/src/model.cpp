#include "sasq/model.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "sasq/simplex.hpp"

namespace sasq {

namespace {

void append(Vec& out, const Vec& v) { out.insert(out.end(), v.begin(), v.end()); }
void append(Vec& out, const Mat& m) { out.insert(out.end(), m.a.begin(), m.a.end()); }

void take(const Vec& theta, size_t& pos, Vec& v) {
  if (pos + v.size() > theta.size()) throw std::invalid_argument("unflatten: vector too short");
  for (size_t i = 0; i < v.size(); ++i) v[i] = theta[pos + i];
  pos += v.size();
}

void take(const Vec& theta, size_t& pos, Mat& m) { take(theta, pos, m.a); }

void take(const Vec& theta, size_t& pos, double& x) {
  if (pos >= theta.size()) throw std::invalid_argument("unflatten: vector too short");
  x = theta[pos++];
}

Vec xavier_vec(int fan_in, Rng& rng) {
  Mat m = xavier_init(fan_in, 1, rng);
  return m.a;
}

}  // namespace

size_t ModelParams::param_count() const {
  const size_t gate = lstm.Wi.a.size() + lstm.bi.size();
  return attention.w_f.size() + attention.w_h.size() + 1 + 4 * gate + head1.W.a.size() +
         head1.b.size() + head2.W.a.size() + head2.b.size();
}

Vec ModelParams::flatten() const {
  Vec out;
  out.reserve(param_count());
  append(out, attention.w_f);
  append(out, attention.w_h);
  out.push_back(attention.b);
  append(out, lstm.Wi);
  append(out, lstm.bi);
  append(out, lstm.Wf);
  append(out, lstm.bf);
  append(out, lstm.Wg);
  append(out, lstm.bg);
  append(out, lstm.Wo);
  append(out, lstm.bo);
  append(out, head1.W);
  append(out, head1.b);
  append(out, head2.W);
  append(out, head2.b);
  return out;
}

void ModelParams::unflatten(const Vec& theta) {
  if (theta.size() != param_count())
    throw std::invalid_argument("unflatten: parameter count mismatch");
  size_t pos = 0;
  take(theta, pos, attention.w_f);
  take(theta, pos, attention.w_h);
  take(theta, pos, attention.b);
  take(theta, pos, lstm.Wi);
  take(theta, pos, lstm.bi);
  take(theta, pos, lstm.Wf);
  take(theta, pos, lstm.bf);
  take(theta, pos, lstm.Wg);
  take(theta, pos, lstm.bg);
  take(theta, pos, lstm.Wo);
  take(theta, pos, lstm.bo);
  take(theta, pos, head1.W);
  take(theta, pos, head1.b);
  take(theta, pos, head2.W);
  take(theta, pos, head2.b);
}

ModelParams init_model(const ModelDims& dims, Normalizer kind, bool use_lstm, bool linear_head,
                       std::uint64_t seed) {
  if (dims.M < 1 || dims.N < 1 || dims.K < 1 || dims.D < 1 || dims.fcn_hidden < 1)
    throw std::invalid_argument("init_model: dimensions must be positive");
  ModelParams m;
  m.dims = dims;
  m.kind = kind;
  m.use_lstm = use_lstm;
  m.linear_head = linear_head;
  m.seed = seed;

  Rng rng(seed);
  m.attention.w_f = xavier_vec(dims.K, rng);
  m.attention.w_h = xavier_vec(dims.D, rng);
  m.attention.b = 0.0;

  const int gate_in = dims.K + dims.D;
  m.lstm.Wi = xavier_init(gate_in, dims.D, rng);
  m.lstm.Wf = xavier_init(gate_in, dims.D, rng);
  m.lstm.Wg = xavier_init(gate_in, dims.D, rng);
  m.lstm.Wo = xavier_init(gate_in, dims.D, rng);
  m.lstm.bi.assign(dims.D, 0.0);
  m.lstm.bf.assign(dims.D, 1.0);  // open forget gates so early training keeps memory
  m.lstm.bg.assign(dims.D, 0.0);
  m.lstm.bo.assign(dims.D, 0.0);

  m.head1.W = xavier_init(m.head_input(), dims.fcn_hidden, rng);
  m.head1.b.assign(dims.fcn_hidden, 0.0);
  m.head2.W = xavier_init(dims.fcn_hidden, 1, rng);
  m.head2.b.assign(1, 0.0);
  return m;
}

Vec ModelGrads::flatten() const {
  Vec out;
  append(out, attention_w_f);
  append(out, attention_w_h);
  out.push_back(attention_b);
  append(out, lstm.Wi);
  append(out, lstm.bi);
  append(out, lstm.Wf);
  append(out, lstm.bf);
  append(out, lstm.Wg);
  append(out, lstm.bg);
  append(out, lstm.Wo);
  append(out, lstm.bo);
  append(out, head1_W);
  append(out, head1_b);
  append(out, head2_W);
  append(out, head2_b);
  return out;
}

ModelGrads zero_grads(const ModelParams& model) {
  ModelGrads g;
  g.attention_w_f.assign(model.attention.w_f.size(), 0.0);
  g.attention_w_h.assign(model.attention.w_h.size(), 0.0);
  g.attention_b = 0.0;
  g.lstm = lstm_zero_grads(model.lstm);
  g.head1_W = Mat(model.head1.W.rows, model.head1.W.cols);
  g.head1_b.assign(model.head1.b.size(), 0.0);
  g.head2_W = Mat(model.head2.W.rows, model.head2.W.cols);
  g.head2_b.assign(model.head2.b.size(), 0.0);
  return g;
}

StepResult forward_step(const ModelParams& model, const FeatureCube& cube, const LstmState& state,
                        StepCache& cache) {
  const ModelDims& d = model.dims;
  if (cube.M != d.M || cube.N != d.N || cube.K != d.K)
    throw std::invalid_argument("forward_step: cube shape mismatch");
  if (static_cast<int>(state.h.size()) != d.D || static_cast<int>(state.c.size()) != d.D)
    throw std::invalid_argument("forward_step: state size mismatch");

  cache.cube = &cube;
  cache.h_prev = state.h;
  if (model.kind == Normalizer::None)
    cache.scores.assign(cube.locations(), 0.0);  // uniform map; scorer unused
  else
    cache.scores = attention_scores(model.attention, cube, state.h);

  AttendResult att = attend(cache.scores, cube, model.kind);
  cache.map = std::move(att.map);
  cache.context = std::move(att.context);

  StepResult out;
  if (model.use_lstm) {
    out.state = lstm_step(model.lstm, cache.context, state, cache.lstm);
    cache.head_in = out.state.h;
  } else {
    out.state = state;
    cache.head_in = cache.context;
  }

  Vec a1 = dense_forward(model.head1, cache.head_in);
  if (!model.linear_head)
    for (double& v : a1) v = std::tanh(v);
  cache.z1 = std::move(a1);
  cache.pred = dot(model.head2.W.row(0), cache.z1.data(), model.head2.W.cols) + model.head2.b[0];

  out.steering = cache.pred;
  out.map = cache.map;
  return out;
}

void backward_step(const ModelParams& model, const StepCache& cache, double upstream_pred,
                   LstmState& dstate, ModelGrads& grads) {
  const int hidden = model.dims.fcn_hidden;

  // head2: pred = w2 . z1 + b2
  Vec dz1(hidden);
  for (int j = 0; j < hidden; ++j) {
    grads.head2_W(0, j) += upstream_pred * cache.z1[j];
    dz1[j] = upstream_pred * model.head2.W(0, j);
  }
  grads.head2_b[0] += upstream_pred;

  Vec da1 = std::move(dz1);
  if (!model.linear_head)
    for (int j = 0; j < hidden; ++j) da1[j] *= 1.0 - cache.z1[j] * cache.z1[j];

  add_outer(grads.head1_W, da1, cache.head_in);
  add_scaled(grads.head1_b, da1, 1.0);
  Vec dhead_in;
  matvec_t_acc(model.head1.W, da1, dhead_in);

  Vec dcontext;
  LstmState dprev;
  if (model.use_lstm) {
    Vec dh = std::move(dhead_in);
    add_scaled(dh, dstate.h, 1.0);
    lstm_backward(model.lstm, cache.lstm, dh, dstate.c, grads.lstm, dcontext, dprev);
  } else {
    dcontext = std::move(dhead_in);
    dprev = lstm_zero_state(model.dims.D);
  }

  Vec no_map_upstream(cache.map.size(), 0.0);
  AttendGrads ag = attend_backward(cache.scores, *cache.cube, model.kind, dcontext, no_map_upstream);

  if (model.kind != Normalizer::None) {
    ScoreGrads sg =
        attention_scores_backward(model.attention, *cache.cube, cache.h_prev, cache.scores, ag.scores);
    add_scaled(grads.attention_w_f, sg.w_f, 1.0);
    add_scaled(grads.attention_w_h, sg.w_h, 1.0);
    grads.attention_b += sg.b;
    if (model.use_lstm) add_scaled(dprev.h, sg.h, 1.0);
  }

  dstate = std::move(dprev);
}

void run_frames(const ModelParams& model, const std::vector<FeatureCube>& frames, int begin,
                int end, LstmState& state, Vec& preds, std::vector<Vec>* maps) {
  StepCache cache;
  for (int t = begin; t < end; ++t) {
    StepResult r = forward_step(model, frames[t], state, cache);
    state = std::move(r.state);
    preds.push_back(r.steering);
    if (maps) maps->push_back(std::move(r.map));
  }
}

PredictionTrace predict_sequence(const ModelParams& model, const Sequence& seq, int delay_frames) {
  if (delay_frames < 0) throw std::invalid_argument("predict_sequence: negative delay");
  const int T = seq.length();
  if (delay_frames >= T)
    throw std::invalid_argument("predict_sequence: delay must be shorter than the sequence");
  const int usable = T - delay_frames;

  PredictionTrace trace;
  trace.preds.reserve(usable);
  trace.maps.reserve(usable);
  LstmState state = lstm_zero_state(model.dims.D);
  run_frames(model, seq.frames, 0, usable, state, trace.preds, &trace.maps);
  trace.targets.assign(seq.steering.begin() + delay_frames, seq.steering.end());
  return trace;
}

double trace_mae(const PredictionTrace& trace) {
  return mean_abs_error(trace.preds, trace.targets);
}

namespace {

// Window loss plus a discrete signature of every kink the loss crosses:
// the sparsemax support set at each step and the sign of each residual.
// A finite-difference pair is only comparable when signatures agree.
double window_loss(const ModelParams& model, const std::vector<FeatureCube>& frames,
                   const Vec& targets, std::vector<int>* signature) {
  LstmState state = lstm_zero_state(model.dims.D);
  StepCache cache;
  double loss = 0.0;
  for (size_t t = 0; t < frames.size(); ++t) {
    StepResult r = forward_step(model, frames[t], state, cache);
    state = std::move(r.state);
    L1Loss l = l1_loss(r.steering, targets[t]);
    loss += l.loss;
    if (signature) {
      signature->push_back(static_cast<int>(l.dpred));
      if (model.kind == Normalizer::Sparse)
        for (size_t i = 0; i < cache.map.size(); ++i)
          if (cache.map[i] > 0.0) signature->push_back(static_cast<int>(i) + 2);
      signature->push_back(-1);  // step separator
    }
  }
  return loss;
}

}  // namespace

GradcheckReport gradcheck_model(const ModelDims& dims, Normalizer kind, bool use_lstm,
                                std::uint64_t seed) {
  const int steps = 3;
  ModelParams model = init_model(dims, kind, use_lstm, false, seed);

  Rng rng(seed * 0x9e3779b97f4a7c15ULL + 1);
  std::vector<FeatureCube> frames;
  Vec targets;
  for (int t = 0; t < steps; ++t) {
    FeatureCube cube(dims.M, dims.N, dims.K);
    for (double& v : cube.data) v = rng.gaussian();
    frames.push_back(std::move(cube));
    targets.push_back(rng.uniform(-1.0, 1.0));
  }

  // Analytic pass.
  LstmState state = lstm_zero_state(dims.D);
  std::vector<StepCache> caches(steps);
  Vec residual_signs(steps);
  for (int t = 0; t < steps; ++t) {
    StepResult r = forward_step(model, frames[t], state, caches[t]);
    state = std::move(r.state);
    residual_signs[t] = l1_loss(r.steering, targets[t]).dpred;
  }
  ModelGrads grads = zero_grads(model);
  LstmState dstate = lstm_zero_state(dims.D);
  for (int t = steps - 1; t >= 0; --t)
    backward_step(model, caches[t], residual_signs[t], dstate, grads);

  const Vec analytic = grads.flatten();
  Vec theta = model.flatten();
  ModelParams probe = model;

  GradcheckReport report;
  for (size_t j = 0; j < theta.size(); ++j) {
    const double h = 1e-5 * std::max(1.0, std::abs(theta[j]));
    const double saved = theta[j];

    std::vector<int> sig_plus, sig_minus;
    theta[j] = saved + h;
    probe.unflatten(theta);
    const double lp = window_loss(probe, frames, targets, &sig_plus);
    theta[j] = saved - h;
    probe.unflatten(theta);
    const double lm = window_loss(probe, frames, targets, &sig_minus);
    theta[j] = saved;

    if (sig_plus != sig_minus) {
      ++report.skipped;
      continue;
    }
    const double numeric = (lp - lm) / (2.0 * h);
    const double rel =
        std::abs(analytic[j] - numeric) / std::max(1e-3, std::abs(analytic[j]) + std::abs(numeric));
    if (rel > report.max_rel_error) report.max_rel_error = rel;
    ++report.checked;
  }
  report.pass = report.checked > 0 && report.max_rel_error < report.tolerance;
  return report;
}

}  // namespace sasq
