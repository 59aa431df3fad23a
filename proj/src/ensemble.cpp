#include "sasq/ensemble.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace sasq {

const char* to_string(DataMode mode) {
  return mode == DataMode::SameData ? "same" : "bootstrap";
}

DataMode data_mode_from_string(const std::string& s) {
  if (s == "same") return DataMode::SameData;
  if (s == "bootstrap") return DataMode::Bootstrap;
  throw std::invalid_argument("unknown data mode: " + s);
}

EnsembleTrainResult train_ensemble(const ModelDims& dims, Normalizer kind, bool use_lstm,
                                   bool linear_head, const std::vector<std::uint64_t>& seeds,
                                   DataMode mode, const std::vector<Sequence>& train_seqs,
                                   const std::vector<Sequence>& valid_seqs,
                                   const TrainConfig& base) {
  if (seeds.empty()) throw std::invalid_argument("train_ensemble: no member seeds");
  std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
  if (unique.size() != seeds.size())
    throw std::invalid_argument("train_ensemble: member seeds must be distinct");
  if (train_seqs.empty()) throw std::invalid_argument("train_ensemble: no training sequences");

  EnsembleTrainResult result;
  result.ensemble.mode = mode;

  for (std::uint64_t seed : seeds) {
    ModelParams init = init_model(dims, kind, use_lstm, linear_head, seed);
    TrainConfig cfg = base;
    cfg.seed = seed;

    MemberTrainInfo info;
    std::vector<Sequence> member_data;
    const std::vector<Sequence>* data = &train_seqs;
    if (mode == DataMode::Bootstrap) {
      // Whole-sequence resample with replacement, same count, seeded so the
      // draw is reproducible and distinct per member.
      Rng rng(seed ^ 0xb0075742a9ULL);
      member_data.reserve(train_seqs.size());
      for (size_t i = 0; i < train_seqs.size(); ++i)
        member_data.push_back(train_seqs[rng.uniform_int(static_cast<int>(train_seqs.size()))]);
      data = &member_data;
    }
    for (const Sequence& s : *data) info.sequence_ids.push_back(s.id);

    TrainResult tr = train(init, *data, valid_seqs, cfg);
    info.history = std::move(tr.history);
    result.ensemble.members.push_back(std::move(tr.model));
    result.members.push_back(std::move(info));
  }
  return result;
}

AggregateTrace aggregate_predict(const Ensemble& ens, const Sequence& seq, int delay_frames) {
  if (ens.members.empty()) throw std::invalid_argument("aggregate_predict: empty ensemble");

  AggregateTrace out;
  for (const ModelParams& m : ens.members)
    out.member_traces.push_back(predict_sequence(m, seq, delay_frames));
  out.targets = out.member_traces.front().targets;

  const size_t T = out.targets.size();
  out.preds.assign(T, 0.0);
  for (const PredictionTrace& tr : out.member_traces)
    for (size_t t = 0; t < T; ++t) out.preds[t] += tr.preds[t];
  const double inv = 1.0 / static_cast<double>(ens.members.size());
  for (double& p : out.preds) p *= inv;
  return out;
}

std::vector<std::vector<Vec>> member_maps(const Ensemble& ens, const Sequence& seq) {
  std::vector<std::vector<Vec>> maps;
  for (const ModelParams& m : ens.members) {
    LstmState state = lstm_zero_state(m.dims.D);
    Vec preds;
    std::vector<Vec> member;
    run_frames(m, seq.frames, 0, seq.length(), state, preds, &member);
    maps.push_back(std::move(member));
  }
  return maps;
}

CorrelationResult attention_correlation(const Ensemble& ens, const std::vector<Sequence>& seqs) {
  const int n = ens.size();
  if (n < 2)
    throw std::invalid_argument("attention_correlation: need at least two members");
  if (seqs.empty()) throw std::invalid_argument("attention_correlation: no sequences");

  // Flatten each member's maps over all sequences, frames, and locations.
  std::vector<Vec> streams(n);
  for (const Sequence& seq : seqs) {
    std::vector<std::vector<Vec>> maps = member_maps(ens, seq);
    for (int m = 0; m < n; ++m)
      for (const Vec& frame : maps[m])
        streams[m].insert(streams[m].end(), frame.begin(), frame.end());
  }

  const size_t len = streams[0].size();
  Vec means(n, 0.0), sds(n, 0.0);
  CorrelationResult result;
  result.degenerate.assign(n, false);
  for (int m = 0; m < n; ++m) {
    double sum = 0.0;
    for (double v : streams[m]) sum += v;
    means[m] = sum / static_cast<double>(len);
    double ss = 0.0;
    for (double v : streams[m]) ss += (v - means[m]) * (v - means[m]);
    sds[m] = std::sqrt(ss);
    if (sds[m] == 0.0) result.degenerate[m] = true;
  }

  result.corr = Mat(n, n);
  for (int a = 0; a < n; ++a) {
    result.corr(a, a) = 1.0;
    for (int b = a + 1; b < n; ++b) {
      double r = 0.0;
      if (!result.degenerate[a] && !result.degenerate[b]) {
        double cov = 0.0;
        for (size_t t = 0; t < len; ++t)
          cov += (streams[a][t] - means[a]) * (streams[b][t] - means[b]);
        r = cov / (sds[a] * sds[b]);
      }
      result.corr(a, b) = r;
      result.corr(b, a) = r;
    }
  }
  return result;
}

double mean_offdiag(const Mat& corr) {
  if (corr.rows < 2) throw std::invalid_argument("mean_offdiag: need a 2x2 matrix or larger");
  double sum = 0.0;
  int count = 0;
  for (int a = 0; a < corr.rows; ++a)
    for (int b = 0; b < corr.cols; ++b)
      if (a != b) {
        sum += corr(a, b);
        ++count;
      }
  return sum / count;
}

SparsityStats sparsity_stats(const ModelParams& model, const std::vector<Sequence>& seqs) {
  if (seqs.empty()) throw std::invalid_argument("sparsity_stats: no sequences");
  double support_sum = 0.0;
  size_t frames = 0;
  int locations = 0;
  Ensemble one;
  one.members.push_back(model);
  for (const Sequence& seq : seqs) {
    locations = seq.M() * seq.N();
    std::vector<std::vector<Vec>> maps = member_maps(one, seq);
    for (const Vec& map : maps[0]) {
      int support = 0;
      for (double w : map)
        if (w > 0.0) ++support;
      support_sum += support;
      ++frames;
    }
  }
  SparsityStats stats;
  stats.mean_support_size = support_sum / static_cast<double>(frames);
  stats.zero_fraction = 1.0 - stats.mean_support_size / locations;
  return stats;
}

}  // namespace sasq
