// Acceptance gate: one pass/fail line per criterion, exit 0 iff all pass.
// Heavyweight training artifacts are shared: criteria 5-8 reuse one set of
// trained models, criterion 9 trains its own low-noise trio.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "sasq/checkpoint.hpp"
#include "sasq/dataset.hpp"
#include "sasq/ensemble.hpp"
#include "sasq/gradcheck.hpp"
#include "sasq/rng.hpp"
#include "sasq/simplex.hpp"
#include "sasq/train.hpp"

using namespace sasq;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double median5(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[2];
}

// ---- criteria 1-4: simplex and gradient properties ------------------------

void criterion1() {
  Clock::time_point t0 = Clock::now();
  CheckResult r = check_oracle_equivalence(500, 901);
  double secs = seconds_since(t0);
  report(1, r.pass && secs < 5.0,
         fmt("sparsemax equals brute-force simplex projection (max err %.2e over %d draws, "
             "%.2f s)",
             r.max_err, r.checked, secs));
}

void criterion2() {
  bool ok = true;
  std::string detail = "worked sparsemax values reproduced";

  Vec a = sparsemax({0.5, 0.3, 0.1});
  const Vec ea = {8.0 / 15.0, 5.0 / 15.0, 2.0 / 15.0};
  for (int i = 0; i < 3; ++i) ok = ok && std::abs(a[i] - ea[i]) <= 1e-12;

  Vec b = sparsemax({1.0, 0.1, -0.5});
  int zeros = 0;
  for (double v : b) zeros += v == 0.0;
  ok = ok && zeros == 1 && std::abs(b[0] - 0.95) <= 1e-12 && std::abs(b[1] - 0.05) <= 1e-12 &&
       b[2] == 0.0;

  Vec c = sparsemax({10.0, 0.0});
  ok = ok && c[0] == 1.0 && c[1] == 0.0;

  if (!ok) detail = "a worked sparsemax value is off";
  report(2, ok, detail);
}

void criterion3() {
  Clock::time_point t0 = Clock::now();
  std::vector<CheckResult> rs;
  rs.push_back(check_jvp(Normalizer::Soft, 50, 902));
  rs.push_back(check_jvp(Normalizer::Sparse, 50, 903));
  rs.push_back(check_dense_fd(20, 904));
  rs.push_back(check_lstm_fd(20, 905));
  const ModelDims dims{3, 3, 4, 6, 6};
  for (Normalizer kind : {Normalizer::Sparse, Normalizer::Soft})
    for (int i = 0; i < 20; ++i) {
      CheckResult r = check_pipeline(dims, kind, true, 910 + i);
      if (i == 0 || r.max_err > rs.back().max_err) {
        if (i > 0) rs.pop_back();
        rs.push_back(r);
      }
    }
  double worst = 0.0;
  bool ok = true;
  for (const CheckResult& r : rs) {
    worst = std::max(worst, r.max_err);
    ok = ok && r.max_err < 1e-4;
  }
  double secs = seconds_since(t0);
  report(3, ok && secs < 30.0,
         fmt("JVP/dense/LSTM/pipeline gradients match finite differences (worst rel err "
             "%.2e, tol 1e-4, %.1f s)",
             worst, secs));
}

void criterion4() {
  Rng rng(906);
  bool ok = true;
  double worst_sum = 0.0, worst_idem = 0.0;
  for (int i = 0; i < 10000 && ok; ++i) {
    const int n = 2 + i % 7;
    // dyadic coordinates make translation exactly representable
    Vec z(n);
    for (double& v : z) v = std::round(rng.gaussian() * 1048576.0) / 1048576.0;

    for (int kind = 0; kind < 2; ++kind) {
      Vec p = kind == 0 ? sparsemax(z) : softmax(z);
      double sum = 0.0;
      for (double v : p) {
        ok = ok && v >= 0.0;
        sum += v;
      }
      worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
      ok = ok && std::abs(sum - 1.0) <= 1e-9;
    }

    const double shift = (i % 2 ? -2.0 : 0.5) + (i % 8) * 0.25;
    Vec zs = z;
    for (double& v : zs) v += shift;
    Vec p0 = sparsemax(z), p1 = sparsemax(zs);
    for (int j = 0; j < n; ++j) ok = ok && p0[j] == p1[j];  // exact translation invariance

    Vec q = softmax(z);  // a strictly positive simplex point
    Vec pq = sparsemax(q);
    for (int j = 0; j < n; ++j) worst_idem = std::max(worst_idem, std::abs(pq[j] - q[j]));
    Vec ps = sparsemax(p0);  // a simplex point with zeros
    for (int j = 0; j < n; ++j) worst_idem = std::max(worst_idem, std::abs(ps[j] - p0[j]));
    ok = ok && worst_idem <= 1e-9;
  }
  report(4, ok,
         fmt("10000-input invariants hold: nonnegative, unit sum (worst %.2e), exact sparsemax "
             "translation invariance, idempotent on simplex points (worst %.2e)",
             worst_sum, worst_idem));
}

// ---- criteria 5-8: the shared synthetic-task study -------------------------

struct Study {
  std::vector<Sequence> train_seqs, valid_seqs, test_seqs;
  std::map<std::string, std::vector<ModelParams>> models;  // kind name -> per-seed models
  double train_seconds = 0.0;
};

Study run_study() {
  Study st;
  GeneratorConfig g;
  g.M = 3;
  g.N = 3;
  g.K = 16;
  g.frames = 4000;
  g.mode = CueMode::MovingCue;
  g.cue_horizon = 10;
  g.noise_sigma = 0.5;
  g.smooth_window = 21;
  for (int i = 0; i < 6; ++i) {
    g.seed = 11 + i;
    g.id = "tr" + std::to_string(i);
    st.train_seqs.push_back(generate_sequence(g));
  }
  g.seed = 17;
  g.id = "va";
  st.valid_seqs.push_back(generate_sequence(g));
  g.seed = 18;
  g.id = "te";
  st.test_seqs.push_back(generate_sequence(g));

  const ModelDims dims{3, 3, 16, 16, 16};
  TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.epochs = 30;
  cfg.bptt_window = 20;
  cfg.delay_frames = 10;

  Clock::time_point t0 = Clock::now();
  const std::pair<std::string, Normalizer> kinds[] = {
      {"sparse", Normalizer::Sparse}, {"soft", Normalizer::Soft}, {"none", Normalizer::None}};
  for (const auto& [name, kind] : kinds)
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      cfg.seed = seed;
      ModelParams init = init_model(dims, kind, true, false, seed);
      st.models[name].push_back(train(init, st.train_seqs, st.valid_seqs, cfg).model);
    }
  st.train_seconds = seconds_since(t0);
  return st;
}

Ensemble first3(const Study& st, const std::string& kind) {
  Ensemble ens;
  ens.mode = DataMode::SameData;
  ens.members.assign(st.models.at(kind).begin(), st.models.at(kind).begin() + 3);
  return ens;
}

void criterion5(const Study& st) {
  bool ok = true;
  double worst_slack = 1e9;
  for (const char* kind : {"sparse", "soft"}) {
    Ensemble ens = first3(st, kind);
    for (const Sequence& seq : st.test_seqs)
      for (int d : {0, 5, 10, 15, 20}) {
        AggregateTrace at = aggregate_predict(ens, seq, d);
        double agg = mean_abs_error(at.preds, at.targets);
        double members = 0.0;
        for (const PredictionTrace& t : at.member_traces) members += trace_mae(t);
        members /= static_cast<double>(at.member_traces.size());
        ok = ok && agg <= members + 1e-12;
        worst_slack = std::min(worst_slack, members - agg);
      }
  }
  report(5, ok,
         fmt("aggregate MAE <= mean member MAE for every sequence and delay (min slack %.2e, "
             "tol 1e-12)",
             worst_slack));
}

void criterion6(const Study& st) {
  std::map<std::string, double> med;
  for (const auto& [name, models] : st.models) {
    std::vector<double> maes;
    for (const ModelParams& m : models)
      maes.push_back(trace_mae(predict_sequence(m, st.test_seqs[0], 10)));
    med[name] = median5(maes);
  }
  const bool ok = med["sparse"] < med["none"] && med["sparse"] <= med["soft"];
  report(6, ok,
         fmt("median test MAE over 5 seeds: sparse %.4f < none %.4f and sparse <= soft %.4f "
             "(15 training runs in %.0f s)",
             med["sparse"], med["none"], med["soft"], st.train_seconds));
}

void criterion7(const Study& st) {
  SparsityStats sp = sparsity_stats(st.models.at("sparse")[0], st.test_seqs);
  SparsityStats so = sparsity_stats(st.models.at("soft")[0], st.test_seqs);
  const bool ok = sp.zero_fraction > 0.0 && so.zero_fraction == 0.0;
  report(7, ok,
         fmt("trained sparse attention zero-fraction %.3f > 0; soft zero-fraction %.1f exactly 0",
             sp.zero_fraction, so.zero_fraction));
}

void criterion8(const Study& st) {
  double v[2];
  int i = 0;
  for (const char* kind : {"sparse", "soft"}) {
    Ensemble ens = first3(st, kind);
    CorrelationResult cr = attention_correlation(ens, st.test_seqs);
    v[i++] = mean_offdiag(cr.corr);
  }
  report(8, v[0] < v[1],
         fmt("mean off-diagonal attention correlation: sparse ensemble %.4f < soft ensemble %.4f",
             v[0], v[1]));
}

// ---- criteria 9-10: CLI mechanics -----------------------------------------

struct TempDir {
  fs::path dir;
  TempDir() {
    dir = fs::temp_directory_path() / "sasq_acceptance";
    fs::create_directories(dir);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

int run_cli(const TempDir& td, const std::string& args) {
  const std::string cmd =
      std::string(SASQ_BIN) + " " + args + " > " + td.path("cli.log") + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion9(const TempDir& td) {
  // A low-noise copy of the task, so trained models read the cue with little
  // temporal smoothing and the delay sweep bottoms out at the training horizon.
  GeneratorConfig g;
  g.M = 3;
  g.N = 3;
  g.K = 16;
  g.frames = 4000;
  g.mode = CueMode::MovingCue;
  g.cue_horizon = 10;
  g.noise_sigma = 0.02;
  g.smooth_window = 9;
  std::vector<Sequence> tr, va, te;
  for (int i = 0; i < 6; ++i) {
    g.seed = 11 + i;
    g.id = "tr" + std::to_string(i);
    tr.push_back(generate_sequence(g));
  }
  g.seed = 17;
  g.id = "va";
  va.push_back(generate_sequence(g));
  g.seed = 18;
  g.id = "te";
  te.push_back(generate_sequence(g));
  write_dataset(te[0], td.path("acc9_te.sasq"));

  const ModelDims dims{3, 3, 16, 16, 16};
  TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.epochs = 30;
  cfg.bptt_window = 20;
  cfg.delay_frames = 10;
  cfg.seed = 1;
  const std::pair<std::string, Normalizer> kinds[] = {
      {"sparse", Normalizer::Sparse}, {"soft", Normalizer::Soft}, {"none", Normalizer::None}};
  std::string models_arg;
  for (const auto& [name, kind] : kinds) {
    Ensemble one;
    one.members.push_back(train(init_model(dims, kind, true, false, 1), tr, va, cfg).model);
    write_checkpoint(one, td.path("acc9_" + name + ".ckpt"));
    models_arg += " --model " + td.path("acc9_" + name + ".ckpt");
  }

  bool ok = run_cli(td, "eval --data " + td.path("acc9_te.sasq") + models_arg + " --out " +
                            td.path("acc9_eval.csv")) == 0;

  // header + per-model rows: delay -> mae
  std::map<std::string, std::map<int, double>> rows;
  std::istringstream in(slurp(td.path("acc9_eval.csv")));
  std::string line;
  std::getline(in, line);
  ok = ok && line == "model_id,member_id,delay_frames,mae";
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string model, member, delay, mae;
    std::getline(ls, model, ',');
    std::getline(ls, member, ',');
    std::getline(ls, delay, ',');
    std::getline(ls, mae, ',');
    rows[model][std::stoi(delay)] = std::stod(mae);
  }
  ok = ok && rows.size() == 3;
  std::string argmins;
  for (const auto& [model, by_delay] : rows) {
    ok = ok && by_delay.size() == 5;
    int best = -1;
    double best_mae = 1e18;
    for (const auto& [d, mae] : by_delay)
      if (mae < best_mae) {
        best_mae = mae;
        best = d;
      }
    argmins += (argmins.empty() ? "" : ", ") + model + "@" + std::to_string(best);
    ok = ok && best == 10;
  }
  report(9, ok,
         fmt("eval over delays {0,5,10,15,20} wrote 5 MAE rows per model; minimum at the "
             "10-frame training horizon (%s)",
             argmins.c_str()));
}

void criterion10(const TempDir& td) {
  bool ok = true;

  const std::string gen = "generate --out %s --frames 240 --mn 3 --k 4 --seed 55";
  ok = ok && run_cli(td, fmt(gen.c_str(), td.path("c10a.sasq").c_str())) == 0;
  ok = ok && run_cli(td, fmt(gen.c_str(), td.path("c10b.sasq").c_str())) == 0;
  ok = ok && slurp(td.path("c10a.sasq")) == slurp(td.path("c10b.sasq"));

  const std::string tr = "train --data " + td.path("c10a.sasq") +
                         " --out %s --lr 1e-3 --epochs 2 --bptt 10 --delay-frames 5 --seed 7";
  ok = ok && run_cli(td, fmt(tr.c_str(), td.path("c10a.ckpt").c_str())) == 0;
  const std::string ckpt = slurp(td.path("c10a.ckpt"));
  const std::string csv = slurp(td.path("c10a.ckpt.metrics.csv"));
  ok = ok && run_cli(td, fmt(tr.c_str(), td.path("c10a.ckpt").c_str())) == 0;
  ok = ok && slurp(td.path("c10a.ckpt")) == ckpt && slurp(td.path("c10a.ckpt.metrics.csv")) == csv;
  ok = ok && !ckpt.empty() && !csv.empty();

  // checkpoint round trip reproduces predictions bit-for-bit
  Sequence seq = read_dataset(td.path("c10a.sasq"));
  Ensemble loaded = read_checkpoint(td.path("c10a.ckpt"));
  write_checkpoint(loaded, td.path("c10_rt.ckpt"));
  Ensemble round = read_checkpoint(td.path("c10_rt.ckpt"));
  PredictionTrace p0 = predict_sequence(loaded.members[0], seq, 5);
  PredictionTrace p1 = predict_sequence(round.members[0], seq, 5);
  ok = ok && p0.preds.size() == p1.preds.size();
  for (size_t i = 0; ok && i < p0.preds.size(); ++i) ok = p0.preds[i] == p1.preds[i];

  report(10, ok,
         "repeated CLI runs are byte-identical (dataset, checkpoint, metrics CSV); checkpoint "
         "round trip reproduces predictions bit-for-bit");
}

}  // namespace

int main() {
  Clock::time_point t0 = Clock::now();
  criterion1();
  criterion2();
  criterion3();
  criterion4();

  Study st = run_study();
  criterion5(st);
  criterion6(st);
  criterion7(st);
  criterion8(st);

  TempDir td;
  criterion9(td);
  criterion10(td);

  std::printf("acceptance: %d/10 criteria passed (%.0f s total)\n", 10 - g_failures,
              seconds_since(t0));
  return g_failures == 0 ? 0 : 1;
}
