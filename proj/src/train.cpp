#include "sasq/train.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "sasq/error.hpp"

namespace sasq {

namespace {

void check_config(const TrainConfig& cfg) {
  if (cfg.lr < 0.0 || !std::isfinite(cfg.lr))
    throw std::invalid_argument("train: learning rate must be finite and non-negative");
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be at least 1");
  if (cfg.bptt_window < 1) throw std::invalid_argument("train: window must be at least 1");
  if (cfg.delay_frames < 0) throw std::invalid_argument("train: negative delay");
}

void check_sequence(const Sequence& seq, const ModelParams& model, int delay) {
  if (seq.M() != model.dims.M || seq.N() != model.dims.N || seq.K() != model.dims.K)
    throw std::invalid_argument("train: sequence '" + seq.id + "' shape mismatch");
  if (delay >= seq.length())
    throw std::invalid_argument("train: delay must be shorter than sequence '" + seq.id + "'");
}

double pooled_mae(const ModelParams& model, const std::vector<Sequence>& seqs, int delay) {
  double abs_sum = 0.0;
  size_t count = 0;
  for (const Sequence& seq : seqs) {
    PredictionTrace tr = predict_sequence(model, seq, delay);
    for (size_t t = 0; t < tr.preds.size(); ++t) abs_sum += std::abs(tr.preds[t] - tr.targets[t]);
    count += tr.preds.size();
  }
  return abs_sum / static_cast<double>(count);
}

}  // namespace

TrainResult train(const ModelParams& init, const std::vector<Sequence>& train_seqs,
                  const std::vector<Sequence>& valid_seqs, const TrainConfig& cfg) {
  check_config(cfg);
  if (train_seqs.empty()) throw std::invalid_argument("train: no training sequences");
  for (const Sequence& s : train_seqs) check_sequence(s, init, cfg.delay_frames);
  for (const Sequence& s : valid_seqs) check_sequence(s, init, cfg.delay_frames);
  const std::vector<Sequence>& valid_pool = valid_seqs.empty() ? train_seqs : valid_seqs;

  ModelParams cur = init;
  Vec theta = cur.flatten();
  AdamConfig adam_cfg;
  adam_cfg.lr = cfg.lr;
  AdamState adam(theta.size());
  Rng shuffle_rng(cfg.seed);

  std::vector<int> order(train_seqs.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  result.model = cur;
  double best_valid = std::numeric_limits<double>::infinity();

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double train_abs_sum = 0.0;
    size_t train_count = 0;

    for (int idx : order) {
      const Sequence& seq = train_seqs[idx];
      const int usable = seq.length() - cfg.delay_frames;
      LstmState state = lstm_zero_state(cur.dims.D);

      for (int w0 = 0; w0 < usable; w0 += cfg.bptt_window) {
        const int w1 = std::min(w0 + cfg.bptt_window, usable);
        const int len = w1 - w0;

        // Forward over the window, carrying the incoming state.
        std::vector<StepCache> caches(len);
        Vec residual_signs(len);
        double window_abs = 0.0;
        LstmState s = state;
        for (int t = 0; t < len; ++t) {
          StepResult r = forward_step(cur, seq.frames[w0 + t], s, caches[t]);
          s = std::move(r.state);
          if (!std::isfinite(r.steering)) throw TrainingDivergedError(epoch);
          L1Loss l = l1_loss(r.steering, seq.steering[w0 + t + cfg.delay_frames]);
          window_abs += l.loss;
          residual_signs[t] = l.dpred;
        }
        train_abs_sum += window_abs;
        train_count += static_cast<size_t>(len);

        // Backward, cut at the window boundary: the state that entered the
        // window is treated as a constant.
        ModelGrads grads = zero_grads(cur);
        LstmState dstate = lstm_zero_state(cur.dims.D);
        for (int t = len - 1; t >= 0; --t)
          backward_step(cur, caches[t], residual_signs[t], dstate, grads);

        adam_update(adam, adam_cfg, theta, grads.flatten());
        cur.unflatten(theta);
        state = std::move(s);  // state from pre-update parameters carries on
      }
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_mae = train_abs_sum / static_cast<double>(train_count);
    stats.valid_mae = pooled_mae(cur, valid_pool, cfg.delay_frames);
    if (!std::isfinite(stats.valid_mae)) throw TrainingDivergedError(epoch);
    result.history.push_back(stats);

    if (stats.valid_mae < best_valid) {
      best_valid = stats.valid_mae;
      result.model = cur;
    }
  }
  return result;
}

}  // namespace sasq
