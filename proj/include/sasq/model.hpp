#ifndef SASQ_MODEL_HPP
#define SASQ_MODEL_HPP

#include <cstdint>

#include "sasq/attention.hpp"
#include "sasq/dataset.hpp"
#include "sasq/nn.hpp"

namespace sasq {

struct ModelDims {
  int M = 7, N = 7, K = 16;
  int D = 32;           // LSTM hidden size
  int fcn_hidden = 32;  // width of the first head layer
};

// Full parameter bundle: attention scorer, LSTM core, two-layer head.
// The LSTM block is allocated even when use_lstm is off so the flatten
// order, checkpoint layout, and seeded init stream never depend on flags.
struct ModelParams {
  ModelDims dims;
  Normalizer kind = Normalizer::Sparse;
  bool use_lstm = true;
  bool linear_head = false;
  std::uint64_t seed = 0;

  AttentionParams attention;
  LstmParams lstm;
  DenseLayer head1, head2;

  int head_input() const { return use_lstm ? dims.D : dims.K; }
  size_t param_count() const;
  Vec flatten() const;
  void unflatten(const Vec& theta);
};

ModelParams init_model(const ModelDims& dims, Normalizer kind, bool use_lstm, bool linear_head,
                       std::uint64_t seed);

// Gradients in the same layout (and flatten order) as ModelParams.
struct ModelGrads {
  Vec attention_w_f, attention_w_h;
  double attention_b = 0.0;
  LstmGrads lstm;
  Mat head1_W;
  Vec head1_b;
  Mat head2_W;
  Vec head2_b;

  Vec flatten() const;
};

ModelGrads zero_grads(const ModelParams& model);

struct StepCache {
  const FeatureCube* cube = nullptr;
  Vec h_prev;  // hidden state the scores read
  Vec scores;
  Vec map;
  Vec context;
  LstmCache lstm;
  Vec head_in;
  Vec z1;  // head1 output after activation
  double pred = 0.0;
};

struct StepResult {
  double steering = 0.0;
  Vec map;
  LstmState state;
};

StepResult forward_step(const ModelParams& model, const FeatureCube& cube, const LstmState& state,
                        StepCache& cache);

// Backward through one step. upstream_pred is dLoss/dpred; dstate carries
// gradients arriving from the following step and is replaced with the
// gradients leaving toward the preceding one.
void backward_step(const ModelParams& model, const StepCache& cache, double upstream_pred,
                   LstmState& dstate, ModelGrads& grads);

struct PredictionTrace {
  Vec preds;
  std::vector<Vec> maps;
  Vec targets;
};

// Runs frames [begin, end) carrying `state`; appends to the trace.
void run_frames(const ModelParams& model, const std::vector<FeatureCube>& frames, int begin,
                int end, LstmState& state, Vec& preds, std::vector<Vec>* maps);

// Prediction at frame t is paired with the label at t + delay_frames.
PredictionTrace predict_sequence(const ModelParams& model, const Sequence& seq, int delay_frames);

double trace_mae(const PredictionTrace& trace);

struct GradcheckReport {
  double max_rel_error = 0.0;
  int checked = 0;
  int skipped = 0;  // coordinates whose perturbation crossed a kink
  double tolerance = 1e-4;
  bool pass = false;
};

// Compares every parameter gradient of a 3-step window against central
// finite differences. Coordinates where the sparsemax support or an L1 sign
// flips between the two evaluations are excluded (the derivative is not
// defined across those boundaries).
GradcheckReport gradcheck_model(const ModelDims& dims, Normalizer kind, bool use_lstm,
                                std::uint64_t seed);

}  // namespace sasq

#endif
