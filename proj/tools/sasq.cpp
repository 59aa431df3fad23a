// sasq: command-line front end for the sparse-attention steering pipeline.
// Subcommands: generate, train, train-ensemble, eval, analyze-attention,
// gradcheck. Exit codes: 0 success, 1 I/O, 2 usage/validation, 3 training
// divergence, 4 verification failure.
#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sasq/checkpoint.hpp"
#include "sasq/error.hpp"
#include "sasq/gradcheck.hpp"
#include "sasq/pgm.hpp"

using namespace sasq;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

// Reproducibility record written next to every artifact. All fields are
// deterministic for identical flags and inputs except duration_seconds,
// which is a side field excluded from determinism comparisons.
class Manifest {
 public:
  explicit Manifest(std::string command) : start_(std::chrono::steady_clock::now()) {
    j_["command"] = std::move(command);
    j_["version"] = kVersion;
    j_["config"] = json::object();
    j_["inputs"] = json::array();
    j_["outputs"] = json::array();
  }
  json& config() { return j_["config"]; }
  json& root() { return j_; }
  void add_input(const std::string& p) { j_["inputs"].push_back(p); }
  void add_output(const std::string& p) { j_["outputs"].push_back(p); }

  void write(const std::string& path) {
    j_["duration_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out << j_.dump(2) << "\n";
    if (!out) throw std::runtime_error("write failed: " + path);
  }

 private:
  json j_;
  std::chrono::steady_clock::time_point start_;
};

std::ofstream open_csv(const std::string& path, const char* header) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);  // binary keeps LF endings
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << header << "\n";
  return out;
}

std::vector<Sequence> load_sequences(const std::vector<std::string>& paths) {
  std::vector<Sequence> seqs;
  seqs.reserve(paths.size());
  for (const std::string& p : paths) seqs.push_back(read_dataset(p));
  return seqs;
}

// ---- generate ----

struct GenerateArgs {
  std::string out;
  int frames = 2000;
  std::uint64_t seed = 1;
  std::string mode = "static";
  int mn = 7;
  int k = 16;
  double sigma = 0.5;
  int horizon = 10;
  double hz = 20.0;
  int smooth = 21;
};

int run_generate(const GenerateArgs& a) {
  Manifest m("generate");
  GeneratorConfig cfg;
  cfg.M = a.mn;
  cfg.N = a.mn;
  cfg.K = a.k;
  cfg.frames = a.frames;
  cfg.frame_rate_hz = a.hz;
  cfg.mode = a.mode == "moving" ? CueMode::MovingCue : CueMode::StaticCue;
  cfg.cue_horizon = a.horizon;
  cfg.noise_sigma = a.sigma;
  cfg.smooth_window = a.smooth;
  cfg.seed = a.seed;
  cfg.id = stem(a.out);

  Sequence seq = generate_sequence(cfg);
  write_dataset(seq, a.out);

  m.config() = {{"frames", a.frames}, {"seed", a.seed},       {"mode", a.mode},
                {"mn", a.mn},         {"k", a.k},             {"sigma", a.sigma},
                {"horizon", a.horizon}, {"hz", a.hz},         {"smooth", a.smooth}};
  m.root()["seeds"] = {a.seed};
  m.add_output(a.out);
  m.write(a.out + ".manifest.json");

  std::printf("wrote %d frames (%dx%dx%d) to %s\n", seq.length(), seq.M(), seq.N(), seq.K(),
              a.out.c_str());
  return 0;
}

// ---- train / train-ensemble ----

struct TrainArgs {
  std::vector<std::string> data;
  std::vector<std::string> valid_data;
  std::string out;
  std::string metrics;  // defaults to <out>.metrics.csv
  std::string attention = "sparse";
  bool no_lstm = false;
  bool linear_head = false;
  double lr = 1e-4;
  int epochs = 30;
  int bptt = 20;
  int delay_frames = 0;
  std::uint64_t seed = 1;

  // ensemble extras
  int n = 3;
  bool n_given = false;
  std::vector<std::uint64_t> seeds;
  std::string mode = "same";
};

TrainConfig to_config(const TrainArgs& a) {
  TrainConfig cfg;
  cfg.lr = a.lr;
  cfg.epochs = a.epochs;
  cfg.bptt_window = a.bptt;
  cfg.delay_frames = a.delay_frames;
  cfg.seed = a.seed;
  return cfg;
}

void fill_train_manifest(Manifest& m, const TrainArgs& a, const ModelDims& dims) {
  m.config() = {{"attention", a.attention},
                {"use_lstm", !a.no_lstm},
                {"linear_head", a.linear_head},
                {"lr", a.lr},
                {"epochs", a.epochs},
                {"bptt", a.bptt},
                {"delay_frames", a.delay_frames},
                {"dims", {{"M", dims.M}, {"N", dims.N}, {"K", dims.K}, {"D", dims.D},
                          {"fcn_hidden", dims.fcn_hidden}}}};
  for (const std::string& p : a.data) m.add_input(p);
  for (const std::string& p : a.valid_data) m.add_input(p);
}

int run_train(const TrainArgs& a) {
  Manifest m("train");
  const std::vector<Sequence> train_seqs = load_sequences(a.data);
  const std::vector<Sequence> valid_seqs = load_sequences(a.valid_data);
  const ModelDims dims{train_seqs[0].M(), train_seqs[0].N(), train_seqs[0].K(), 32, 32};
  const Normalizer kind = normalizer_from_string(a.attention);

  const ModelParams init = init_model(dims, kind, !a.no_lstm, a.linear_head, a.seed);
  const TrainResult r = train(init, train_seqs, valid_seqs, to_config(a));

  Ensemble ens;
  ens.members.push_back(r.model);
  write_checkpoint(ens, a.out);

  const std::string metrics = a.metrics.empty() ? a.out + ".metrics.csv" : a.metrics;
  std::ofstream csv = open_csv(metrics, "epoch,train_mae,valid_mae");
  for (const EpochStats& e : r.history)
    csv << e.epoch << "," << fmt9(e.train_mae) << "," << fmt9(e.valid_mae) << "\n";
  csv.close();

  fill_train_manifest(m, a, dims);
  m.config()["seed"] = a.seed;
  m.root()["seeds"] = {a.seed};
  m.add_output(a.out);
  m.add_output(metrics);
  m.write(a.out + ".manifest.json");

  double best = r.history.front().valid_mae;
  for (const EpochStats& e : r.history) best = std::min(best, e.valid_mae);
  std::printf("trained %d epochs; best validation MAE %s; checkpoint %s\n", a.epochs,
              fmt9(best).c_str(), a.out.c_str());
  return 0;
}

int run_train_ensemble(const TrainArgs& a) {
  Manifest m("train-ensemble");
  std::vector<std::uint64_t> seeds = a.seeds;
  if (seeds.empty())
    for (int i = 1; i <= a.n; ++i) seeds.push_back(static_cast<std::uint64_t>(i));
  else if (a.n_given && static_cast<int>(seeds.size()) != a.n)
    throw std::invalid_argument("--seeds lists " + std::to_string(seeds.size()) +
                                " seeds but --n is " + std::to_string(a.n));

  const std::vector<Sequence> train_seqs = load_sequences(a.data);
  const std::vector<Sequence> valid_seqs = load_sequences(a.valid_data);
  const ModelDims dims{train_seqs[0].M(), train_seqs[0].N(), train_seqs[0].K(), 32, 32};
  const Normalizer kind = normalizer_from_string(a.attention);
  const DataMode mode = data_mode_from_string(a.mode);

  const EnsembleTrainResult r = train_ensemble(dims, kind, !a.no_lstm, a.linear_head, seeds, mode,
                                               train_seqs, valid_seqs, to_config(a));
  write_checkpoint(r.ensemble, a.out);

  const std::string metrics = a.metrics.empty() ? a.out + ".metrics.csv" : a.metrics;
  std::ofstream csv = open_csv(metrics, "member,epoch,train_mae,valid_mae");
  for (size_t i = 0; i < r.members.size(); ++i)
    for (const EpochStats& e : r.members[i].history)
      csv << i << "," << e.epoch << "," << fmt9(e.train_mae) << "," << fmt9(e.valid_mae) << "\n";
  csv.close();

  fill_train_manifest(m, a, dims);
  m.config()["n"] = static_cast<int>(seeds.size());
  m.config()["mode"] = a.mode;
  m.root()["seeds"] = seeds;
  json prov = json::array();
  for (const MemberTrainInfo& info : r.members) prov.push_back(info.sequence_ids);
  m.root()["provenance"] = prov;  // per-member training sequences, in draw order
  m.add_output(a.out);
  m.add_output(metrics);
  m.write(a.out + ".manifest.json");

  std::printf("trained %zu members (%s data); checkpoint %s\n", seeds.size(), a.mode.c_str(),
              a.out.c_str());
  return 0;
}

// ---- eval ----

struct EvalArgs {
  std::vector<std::string> data;
  std::vector<std::string> models;
  std::vector<int> delays = {0, 5, 10, 15, 20};
  std::string out;
  std::string trace;
};

int run_eval(const EvalArgs& a) {
  Manifest m("eval");
  const std::vector<Sequence> seqs = load_sequences(a.data);
  std::ofstream csv = open_csv(a.out, "model_id,member_id,delay_frames,mae");
  std::ofstream trace;
  if (!a.trace.empty())
    trace = open_csv(a.trace, "t,prediction,target");

  bool first_model = true;
  for (const std::string& model_path : a.models) {
    const Ensemble ens = read_checkpoint(model_path);
    const std::string id = stem(model_path);
    bool first_delay = true;
    for (int d : a.delays) {
      Vec member_abs(ens.size(), 0.0);
      double agg_abs = 0.0;
      size_t count = 0;
      for (const Sequence& seq : seqs) {
        const AggregateTrace tr = aggregate_predict(ens, seq, d);
        for (size_t t = 0; t < tr.preds.size(); ++t) {
          agg_abs += std::abs(tr.preds[t] - tr.targets[t]);
          for (int i = 0; i < ens.size(); ++i)
            member_abs[i] += std::abs(tr.member_traces[i].preds[t] - tr.targets[t]);
        }
        count += tr.preds.size();
        // trace rows cover the first model at the first delay, sequences in
        // input order, t restarting per sequence
        if (trace.is_open() && first_model && first_delay)
          for (size_t t = 0; t < tr.preds.size(); ++t)
            trace << t << "," << fmt9(tr.preds[t]) << "," << fmt9(tr.targets[t]) << "\n";
      }
      if (ens.size() > 1)
        for (int i = 0; i < ens.size(); ++i)
          csv << id << "," << i << "," << d << ","
              << fmt9(member_abs[i] / static_cast<double>(count)) << "\n";
      csv << id << ",aggregate," << d << "," << fmt9(agg_abs / static_cast<double>(count))
          << "\n";
      first_delay = false;
    }
    first_model = false;
  }
  csv.close();
  if (trace.is_open()) trace.close();

  m.config()["delays"] = a.delays;
  for (const std::string& p : a.data) m.add_input(p);
  for (const std::string& p : a.models) m.add_input(p);
  m.add_output(a.out);
  if (!a.trace.empty()) m.add_output(a.trace);
  m.write(a.out + ".manifest.json");

  std::printf("evaluated %zu model(s) at %zu delay(s); metrics %s\n", a.models.size(),
              a.delays.size(), a.out.c_str());
  return 0;
}

// ---- analyze-attention ----

struct AnalyzeArgs {
  std::vector<std::string> data;
  std::string model;
  std::string out_dir = ".";
  std::vector<int> dump_frames;
  bool skip_corr = false;
};

int run_analyze(const AnalyzeArgs& a) {
  Manifest m("analyze-attention");
  const std::vector<Sequence> seqs = load_sequences(a.data);
  const Ensemble ens = read_checkpoint(a.model);
  fs::create_directories(a.out_dir);
  const auto in_dir = [&](const std::string& name) { return (fs::path(a.out_dir) / name).string(); };

  m.config()["skip_corr"] = a.skip_corr;
  m.config()["dump_maps"] = a.dump_frames;
  for (const std::string& p : a.data) m.add_input(p);
  m.add_input(a.model);

  if (!a.skip_corr) {
    const CorrelationResult corr = attention_correlation(ens, seqs);
    std::string header = "member";
    for (int i = 0; i < ens.size(); ++i) header += ",m" + std::to_string(i);
    header += ",degenerate";
    std::ofstream csv = open_csv(in_dir("correlation.csv"), header.c_str());
    for (int i = 0; i < ens.size(); ++i) {
      csv << i;
      for (int j = 0; j < ens.size(); ++j) csv << "," << fmt9(corr.corr(i, j));
      csv << "," << (corr.degenerate[i] ? 1 : 0) << "\n";
    }
    csv.close();
    m.add_output(in_dir("correlation.csv"));
    m.root()["mean_offdiag"] = mean_offdiag(corr.corr);
  }

  std::ofstream csv = open_csv(in_dir("sparsity.csv"), "member,mean_support_size,zero_fraction");
  for (int i = 0; i < ens.size(); ++i) {
    const SparsityStats st = sparsity_stats(ens.members[i], seqs);
    csv << i << "," << fmt9(st.mean_support_size) << "," << fmt9(st.zero_fraction) << "\n";
  }
  csv.close();
  m.add_output(in_dir("sparsity.csv"));

  if (!a.dump_frames.empty()) {
    const Sequence& seq = seqs[0];  // frame indices refer to the first sequence
    const std::vector<std::vector<Vec>> maps = member_maps(ens, seq);
    for (int f : a.dump_frames) {
      if (f < 0 || f >= seq.length())
        throw std::invalid_argument("--dump-maps frame " + std::to_string(f) +
                                    " outside sequence of length " + std::to_string(seq.length()));
      for (int i = 0; i < ens.size(); ++i) {
        const std::string path =
            in_dir("map_m" + std::to_string(i) + "_f" + std::to_string(f) + ".pgm");
        export_attention_pgm(maps[i][f], seq.M(), seq.N(), path);
        m.add_output(path);
      }
    }
  }

  m.write(in_dir("analyze-attention.manifest.json"));
  std::printf("analyzed %d member(s) over %zu sequence(s); outputs in %s\n", ens.size(),
              seqs.size(), a.out_dir.c_str());
  return 0;
}

// ---- gradcheck ----

struct GradcheckArgs {
  std::uint64_t seed = 1;
  std::string kind = "all";
  bool inject_fault = false;
};

// Deliberately corrupts one dense gradient so the comparison machinery must
// trip; exists to prove the failure path reaches exit code 4.
CheckResult injected_fault_check(std::uint64_t seed) {
  CheckResult out;
  out.name = "injected-fault";
  out.tolerance = 1e-4;
  Rng rng(seed);
  DenseLayer layer{xavier_init(3, 2, rng), {0.1, -0.2}};
  const Vec x = {0.4, -0.7, 0.3};
  const Vec u = {1.0, -0.5};
  const Vec y = dense_forward(layer, x);
  Vec up(2);
  for (int r = 0; r < 2; ++r) {
    const double th = std::tanh(y[r]);
    up[r] = u[r] * (1.0 - th * th);
  }
  const DenseGrads g = dense_backward(layer, x, up);
  const double wrong = -g.W(0, 0);  // wrong-sign gradient under test

  const double h = 1e-5 * std::max(1.0, std::abs(layer.W(0, 0)));
  DenseLayer probe = layer;
  probe.W(0, 0) = layer.W(0, 0) + h;
  Vec yp = dense_forward(probe, x);
  probe.W(0, 0) = layer.W(0, 0) - h;
  Vec ym = dense_forward(probe, x);
  double lp = 0.0, lm = 0.0;
  for (int r = 0; r < 2; ++r) {
    lp += u[r] * std::tanh(yp[r]);
    lm += u[r] * std::tanh(ym[r]);
  }
  const double fd = (lp - lm) / (2.0 * h);
  out.max_err = std::abs(wrong - fd) / std::max(1e-3, std::abs(wrong) + std::abs(fd));
  out.checked = 1;
  out.pass = out.max_err < out.tolerance;
  return out;
}

int run_gradcheck(const GradcheckArgs& a) {
  std::vector<CheckResult> results;
  results.push_back(check_oracle_equivalence(500, a.seed));
  if (a.kind == "all" || a.kind == "soft") results.push_back(check_jvp(Normalizer::Soft, 50, a.seed + 1));
  if (a.kind == "all" || a.kind == "sparse")
    results.push_back(check_jvp(Normalizer::Sparse, 50, a.seed + 2));
  results.push_back(check_dense_fd(20, a.seed + 3));
  results.push_back(check_lstm_fd(20, a.seed + 4));

  std::vector<Normalizer> kinds;
  if (a.kind == "all")
    kinds = {Normalizer::Sparse, Normalizer::Soft, Normalizer::None};
  else
    kinds = {normalizer_from_string(a.kind)};
  const ModelDims small{3, 3, 4, 6, 6};
  for (Normalizer k : kinds) {
    results.push_back(check_pipeline(small, k, true, a.seed + 5));
    results.push_back(check_pipeline(small, k, false, a.seed + 6));
  }
  if (a.inject_fault) results.push_back(injected_fault_check(a.seed + 7));

  bool all_pass = true;
  for (const CheckResult& r : results) {
    std::printf("[%s] %-22s max err %.3g  (tol %.0e, %d checked, %d skipped)\n",
                r.pass ? "ok" : "FAIL", r.name.c_str(), r.max_err, r.tolerance, r.checked,
                r.skipped);
    all_pass = all_pass && r.pass;
  }
  std::printf("gradcheck: %s\n", all_pass ? "PASS" : "FAIL");
  return all_pass ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse-attention steering pipeline"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  int rc = 0;

  GenerateArgs gen;
  CLI::App* g = app.add_subcommand("generate", "Generate a synthetic driving sequence");
  g->add_option("--out", gen.out, "Output dataset path")->required();
  g->add_option("--frames", gen.frames, "Frame count");
  g->add_option("--seed", gen.seed, "Generator seed");
  g->add_option("--mode", gen.mode, "Cue mode")->check(CLI::IsMember({"static", "moving"}));
  g->add_option("--mn", gen.mn, "Grid side length (M = N)");
  g->add_option("--k", gen.k, "Feature channels per cell");
  g->add_option("--sigma", gen.sigma, "Feature noise sigma");
  g->add_option("--horizon", gen.horizon, "Cue lead in frames");
  g->add_option("--hz", gen.hz, "Frame rate");
  g->add_option("--smooth", gen.smooth, "Steering smoothing window");
  g->callback([&] { rc = run_generate(gen); });

  TrainArgs tr;
  CLI::App* t = app.add_subcommand("train", "Train a single model");
  t->add_option("--data", tr.data, "Training dataset(s)")->required();
  t->add_option("--valid-data", tr.valid_data, "Validation dataset(s)");
  t->add_option("--out", tr.out, "Checkpoint path")->required();
  t->add_option("--metrics", tr.metrics, "Per-epoch CSV path (default <out>.metrics.csv)");
  t->add_option("--attention", tr.attention, "Attention normalizer")
      ->check(CLI::IsMember({"sparse", "soft", "none"}));
  t->add_flag("--no-lstm", tr.no_lstm, "Feed the context vector straight to the head");
  t->add_flag("--linear-head", tr.linear_head, "Drop the head's tanh (diagnostic)")->group("");
  t->add_option("--lr", tr.lr, "Adam learning rate");
  t->add_option("--epochs", tr.epochs, "Training epochs");
  t->add_option("--bptt", tr.bptt, "Truncated-BPTT window");
  t->add_option("--delay-frames", tr.delay_frames, "Predict the label this many frames ahead");
  t->add_option("--seed", tr.seed, "Init and shuffle seed");
  t->callback([&] { rc = run_train(tr); });

  TrainArgs te;
  CLI::App* e = app.add_subcommand("train-ensemble", "Train an N-member ensemble");
  e->add_option("--data", te.data, "Training dataset(s)")->required();
  e->add_option("--valid-data", te.valid_data, "Validation dataset(s)");
  e->add_option("--out", te.out, "Ensemble checkpoint path")->required();
  e->add_option("--metrics", te.metrics, "Per-epoch CSV path (default <out>.metrics.csv)");
  e->add_option("--attention", te.attention, "Attention normalizer")
      ->check(CLI::IsMember({"sparse", "soft", "none"}));
  e->add_flag("--no-lstm", te.no_lstm, "Feed the context vector straight to the head");
  e->add_flag("--linear-head", te.linear_head, "Drop the head's tanh (diagnostic)")->group("");
  e->add_option("--lr", te.lr, "Adam learning rate");
  e->add_option("--epochs", te.epochs, "Training epochs");
  e->add_option("--bptt", te.bptt, "Truncated-BPTT window");
  e->add_option("--delay-frames", te.delay_frames, "Predict the label this many frames ahead");
  CLI::Option* n_opt = e->add_option("--n", te.n, "Member count (default 3)");
  e->add_option("--seeds", te.seeds, "Member seeds (default 1..n)")->delimiter(',');
  e->add_option("--mode", te.mode, "Training-data mode")
      ->check(CLI::IsMember({"same", "bootstrap"}));
  e->callback([&] {
    te.n_given = n_opt->count() > 0;
    rc = run_train_ensemble(te);
  });

  EvalArgs ev;
  CLI::App* v = app.add_subcommand("eval", "Delay-sweep MAE evaluation");
  v->add_option("--data", ev.data, "Evaluation dataset(s)")->required();
  v->add_option("--model", ev.models, "Model checkpoint(s)")->required();
  v->add_option("--delays", ev.delays, "Delay offsets in frames (default 0,5,10,15,20)")
      ->delimiter(',');
  v->add_option("--out", ev.out, "Metrics CSV path")->required();
  v->add_option("--trace", ev.trace, "Per-frame prediction CSV (first model, first delay)");
  v->callback([&] { rc = run_eval(ev); });

  AnalyzeArgs an;
  CLI::App* z = app.add_subcommand("analyze-attention", "Correlation, sparsity, and map dumps");
  z->add_option("--data", an.data, "Dataset(s) to attend over")->required();
  z->add_option("--model", an.model, "Ensemble checkpoint")->required();
  z->add_option("--out-dir", an.out_dir, "Output directory");
  z->add_option("--dump-maps", an.dump_frames, "Frames of the first sequence to render as PGM")
      ->delimiter(',');
  z->add_flag("--skip-corr", an.skip_corr, "Skip the correlation matrix (allows 1-member input)");
  z->callback([&] { rc = run_analyze(an); });

  GradcheckArgs gc;
  CLI::App* c = app.add_subcommand("gradcheck", "Verify gradients and the projection oracle");
  c->add_option("--seed", gc.seed, "Suite seed");
  c->add_option("--kind", gc.kind, "Restrict pipeline checks to one normalizer")
      ->check(CLI::IsMember({"all", "sparse", "soft", "none"}));
  c->add_flag("--inject-gradient-fault", gc.inject_fault, "Corrupt one gradient on purpose")
      ->group("");
  c->callback([&] { rc = run_gradcheck(gc); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& h) {
    return app.exit(h);
  } catch (const CLI::CallForAllHelp& h) {
    return app.exit(h);
  } catch (const CLI::CallForVersion& h) {
    return app.exit(h);
  } catch (const CLI::ParseError& p) {
    app.exit(p);
    return 2;
  } catch (const TrainingDivergedError& d) {
    std::fprintf(stderr, "error: %s\n", d.what());
    return 3;
  } catch (const std::invalid_argument& i) {
    std::fprintf(stderr, "error: %s\n", i.what());
    return 2;
  } catch (const std::exception& x) {
    std::fprintf(stderr, "error: %s\n", x.what());
    return 1;
  }
  return rc;
}
