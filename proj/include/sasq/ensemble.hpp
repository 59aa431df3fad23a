#ifndef SASQ_ENSEMBLE_HPP
#define SASQ_ENSEMBLE_HPP

#include <cstdint>
#include <string>

#include "sasq/train.hpp"

namespace sasq {

enum class DataMode { SameData, Bootstrap };

const char* to_string(DataMode mode);
DataMode data_mode_from_string(const std::string& s);

struct Ensemble {
  std::vector<ModelParams> members;
  DataMode mode = DataMode::SameData;

  int size() const { return static_cast<int>(members.size()); }
};

struct MemberTrainInfo {
  std::vector<EpochStats> history;
  std::vector<std::string> sequence_ids;  // data the member trained on, in draw order
};

struct EnsembleTrainResult {
  Ensemble ensemble;
  std::vector<MemberTrainInfo> members;
};

// Trains one member per seed. Seeds must be distinct: they are the only
// source of member diversity under SameData. Bootstrap mode additionally
// resamples whole sequences with replacement (seeded per member).
EnsembleTrainResult train_ensemble(const ModelDims& dims, Normalizer kind, bool use_lstm,
                                   bool linear_head, const std::vector<std::uint64_t>& seeds,
                                   DataMode mode, const std::vector<Sequence>& train_seqs,
                                   const std::vector<Sequence>& valid_seqs,
                                   const TrainConfig& base);

struct AggregateTrace {
  Vec preds;  // pointwise mean over members
  Vec targets;
  std::vector<PredictionTrace> member_traces;
};

AggregateTrace aggregate_predict(const Ensemble& ens, const Sequence& seq, int delay_frames);

// Per-member attention maps over every frame of a sequence.
std::vector<std::vector<Vec>> member_maps(const Ensemble& ens, const Sequence& seq);

struct CorrelationResult {
  Mat corr;                         // size x size, Pearson over flattened maps
  std::vector<bool> degenerate;     // member's map stream has zero variance
};

// Pairwise Pearson correlation of members' attention maps across all frames
// and locations of the given sequences. Degenerate (zero-variance) members
// get correlation 0 against everyone and are flagged.
CorrelationResult attention_correlation(const Ensemble& ens, const std::vector<Sequence>& seqs);

double mean_offdiag(const Mat& corr);

struct SparsityStats {
  double mean_support_size = 0.0;  // average count of strictly positive weights
  double zero_fraction = 0.0;      // 1 - mean_support / locations
};

SparsityStats sparsity_stats(const ModelParams& model, const std::vector<Sequence>& seqs);

}  // namespace sasq

#endif
