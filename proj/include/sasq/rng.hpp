#ifndef SASQ_RNG_HPP
#define SASQ_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace sasq {

// mt19937_64 engine with hand-pinned value mappings. The std distribution
// classes leave their output sequences implementation-defined; checkpoints
// and frozen test values need the exact stream to survive a toolchain bump.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // [0, 1), 53-bit resolution
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller, second value cached
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // [0, n)
  int uniform_int(int n) {
    const int v = static_cast<int>(uniform() * n);
    return v >= n ? n - 1 : v;
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      const int j = uniform_int(i + 1);
      std::swap(v[i], v[static_cast<size_t>(j)]);
    }
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace sasq

#endif
