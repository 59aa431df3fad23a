#ifndef SASQ_DATASET_HPP
#define SASQ_DATASET_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sasq/attention.hpp"

namespace sasq {

// Ordered frames with steering labels in [-1, 1].
struct Sequence {
  std::string id;
  double frame_rate_hz = 20.0;
  std::vector<FeatureCube> frames;
  Vec steering;

  int length() const { return static_cast<int>(frames.size()); }
  int M() const { return frames.empty() ? 0 : frames[0].M; }
  int N() const { return frames.empty() ? 0 : frames[0].N; }
  int K() const { return frames.empty() ? 0 : frames[0].K; }
};

enum class CueMode { StaticCue, MovingCue };

// Synthetic stand-in for a featurized driving recording: a smoothed steering
// walk plus feature cubes of pure noise, except one cue cell whose channel 0
// leaks the steering value `horizon` frames ahead.
struct GeneratorConfig {
  int M = 7, N = 7, K = 16;
  int frames = 2000;
  double frame_rate_hz = 20.0;
  CueMode mode = CueMode::StaticCue;
  int cue_horizon = 10;
  double noise_sigma = 0.5;
  int smooth_window = 21;
  std::uint64_t seed = 1;
  std::string id = "synthetic";
};

Sequence generate_sequence(const GeneratorConfig& cfg);

// Cue cells used by the generator, exposed for tests and analysis.
int static_cue_location(int M, int N);
std::pair<int, int> moving_cue_locations(int M, int N);  // {loc for s>=0, loc for s<0}

struct DelayAlignment {
  int delay_frames = 0;
  std::vector<std::pair<int, int>> pairs;  // (input frame, target frame)
};

// delay_frames = round(seconds * rate), ties away from zero (i.e. up).
DelayAlignment align_delay(const Sequence& seq, double delay_seconds);
int delay_frames_for(double delay_seconds, double frame_rate_hz);

// SASQ binary container, 32-bit payload, little-endian.
void write_dataset(const Sequence& seq, const std::string& path);
Sequence read_dataset(const std::string& path);

double mean_abs_error(const Vec& pred, const Vec& target);

}  // namespace sasq

#endif
