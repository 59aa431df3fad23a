#include "sasq/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "sasq/error.hpp"
#include "sasq/rng.hpp"

namespace sasq {

namespace {

constexpr char kMagic[4] = {'S', 'A', 'S', 'Q'};
constexpr std::uint16_t kVersion = 1;

void validate(const GeneratorConfig& cfg) {
  if (cfg.M < 1 || cfg.N < 1 || cfg.K < 1) throw std::invalid_argument("generate: dims must be >= 1");
  if (cfg.frames < 1) throw std::invalid_argument("generate: frame count must be >= 1");
  if (cfg.frame_rate_hz <= 0.0) throw std::invalid_argument("generate: frame rate must be > 0");
  if (cfg.cue_horizon < 0) throw std::invalid_argument("generate: cue horizon must be >= 0");
  if (cfg.noise_sigma < 0.0) throw std::invalid_argument("generate: sigma must be >= 0");
  if (cfg.smooth_window < 1) throw std::invalid_argument("generate: smoothing window must be >= 1");
}

// trailing moving average over the last `window` samples
Vec smooth(const Vec& w, int window) {
  const int T = static_cast<int>(w.size());
  Vec s(T);
  double acc = 0.0;
  for (int t = 0; t < T; ++t) {
    acc += w[t];
    if (t >= window) acc -= w[t - window];
    s[t] = acc / std::min(t + 1, window);
  }
  return s;
}

template <class T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in, std::uint64_t& offset, const char* what) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw FormatError(std::string("truncated while reading ") + what, offset);
  offset += sizeof(T);
  return v;
}

}  // namespace

int static_cue_location(int M, int N) { return (M / 2) * N + (N / 2); }

std::pair<int, int> moving_cue_locations(int M, int N) {
  return {(M / 3) * N + (N / 3), (2 * M / 3) * N + (2 * N / 3)};
}

Sequence generate_sequence(const GeneratorConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.seed);
  const int T = cfg.frames;

  // Gaussian random walk, smoothed, rescaled so min -> -1 and max -> +1.
  Vec walk(T);
  double acc = 0.0;
  for (int t = 0; t < T; ++t) {
    acc += rng.gaussian();
    walk[t] = acc;
  }
  Vec s = smooth(walk, cfg.smooth_window);
  const auto [mn_it, mx_it] = std::minmax_element(s.begin(), s.end());
  const double mn = *mn_it, mx = *mx_it;
  if (mx > mn) {
    for (double& v : s) v = 2.0 * (v - mn) / (mx - mn) - 1.0;
  } else {
    std::fill(s.begin(), s.end(), 0.0);
  }

  const int cue_static = static_cue_location(cfg.M, cfg.N);
  const auto [cue_pos, cue_neg] = moving_cue_locations(cfg.M, cfg.N);

  Sequence seq;
  seq.id = cfg.id;
  seq.frame_rate_hz = cfg.frame_rate_hz;
  seq.steering = s;
  seq.frames.reserve(T);
  for (int t = 0; t < T; ++t) {
    FeatureCube cube(cfg.M, cfg.N, cfg.K);
    for (double& v : cube.data) v = cfg.noise_sigma * rng.gaussian();
    const double cued = s[std::min(t + cfg.cue_horizon, T - 1)];
    const int loc = cfg.mode == CueMode::StaticCue ? cue_static
                                                   : (cued >= 0.0 ? cue_pos : cue_neg);
    cube.at(loc, 0) = cued;
    seq.frames.push_back(std::move(cube));
  }
  return seq;
}

int delay_frames_for(double delay_seconds, double frame_rate_hz) {
  if (delay_seconds < 0.0) throw std::invalid_argument("align_delay: delay must be >= 0");
  return static_cast<int>(std::floor(delay_seconds * frame_rate_hz + 0.5));
}

DelayAlignment align_delay(const Sequence& seq, double delay_seconds) {
  DelayAlignment a;
  a.delay_frames = delay_frames_for(delay_seconds, seq.frame_rate_hz);
  const int T = seq.length();
  if (a.delay_frames >= T)
    throw std::invalid_argument("align_delay: delay of " + std::to_string(a.delay_frames) +
                                " frames >= sequence length " + std::to_string(T));
  a.pairs.reserve(T - a.delay_frames);
  for (int t = 0; t + a.delay_frames < T; ++t) a.pairs.emplace_back(t, t + a.delay_frames);
  return a;
}

void write_dataset(const Sequence& seq, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out.write(kMagic, 4);
  put<std::uint16_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(seq.length()));
  put<std::uint16_t>(out, static_cast<std::uint16_t>(seq.M()));
  put<std::uint16_t>(out, static_cast<std::uint16_t>(seq.N()));
  put<std::uint16_t>(out, static_cast<std::uint16_t>(seq.K()));
  put<float>(out, static_cast<float>(seq.frame_rate_hz));
  for (int t = 0; t < seq.length(); ++t) {
    for (double v : seq.frames[t].data) put<float>(out, static_cast<float>(v));
    put<float>(out, static_cast<float>(seq.steering[t]));
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

Sequence read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for read: " + path);
  std::uint64_t offset = 0;

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("bad magic, not a SASQ dataset", 0);
  offset += 4;

  const auto version = get<std::uint16_t>(in, offset, "version");
  if (version != kVersion)
    throw FormatError("unsupported SASQ version " + std::to_string(version), offset - 2);
  const auto frame_count = get<std::uint32_t>(in, offset, "frame count");
  const int M = get<std::uint16_t>(in, offset, "M");
  const int N = get<std::uint16_t>(in, offset, "N");
  const int K = get<std::uint16_t>(in, offset, "K");
  if (M < 1 || N < 1 || K < 1) throw FormatError("zero dimension in header", offset - 6);
  const float rate = get<float>(in, offset, "frame rate");
  if (!(rate > 0.0f)) throw FormatError("non-positive frame rate", offset - 4);

  Sequence seq;
  seq.id = std::filesystem::path(path).stem().string();
  seq.frame_rate_hz = rate;
  seq.frames.reserve(frame_count);
  seq.steering.reserve(frame_count);
  const size_t cells = static_cast<size_t>(M) * N * K;
  std::vector<float> buf(cells + 1);
  for (std::uint32_t t = 0; t < frame_count; ++t) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
    if (!in) throw FormatError("truncated mid-frame " + std::to_string(t),
                               offset + static_cast<std::uint64_t>(in.gcount()));
    offset += buf.size() * 4;
    FeatureCube cube(M, N, K);
    for (size_t i = 0; i < cells; ++i) cube.data[i] = buf[i];
    seq.frames.push_back(std::move(cube));
    // steering normalised to [-1, 1] on load
    seq.steering.push_back(std::clamp(static_cast<double>(buf[cells]), -1.0, 1.0));
  }
  return seq;
}

double mean_abs_error(const Vec& pred, const Vec& target) {
  if (pred.size() != target.size() || pred.empty())
    throw std::invalid_argument("mean_abs_error: size mismatch or empty");
  double s = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - target[i]);
  return s / static_cast<double>(pred.size());
}

}  // namespace sasq
