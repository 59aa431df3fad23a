#ifndef SASQ_TRAIN_HPP
#define SASQ_TRAIN_HPP

#include "sasq/model.hpp"

namespace sasq {

struct TrainConfig {
  double lr = 1e-4;
  int epochs = 30;
  int bptt_window = 20;    // frames per truncated-BPTT segment
  int delay_frames = 0;    // prediction at t is scored against the label at t+delay
  std::uint64_t seed = 1;  // drives the per-epoch sequence shuffle
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_mae = 0.0;
  double valid_mae = 0.0;
};

struct TrainResult {
  ModelParams model;  // best validation checkpoint
  std::vector<EpochStats> history;
};

// Truncated BPTT with one Adam step per window. Sequences are visited in a
// seeded shuffled order each epoch; within a sequence windows run in time
// order with the LSTM state carried across window boundaries and gradients
// cut at them. Throws TrainingDivergedError when a loss goes non-finite.
TrainResult train(const ModelParams& init, const std::vector<Sequence>& train_seqs,
                  const std::vector<Sequence>& valid_seqs, const TrainConfig& cfg);

}  // namespace sasq

#endif
