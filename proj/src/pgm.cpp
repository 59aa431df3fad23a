#include "sasq/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace sasq {

void export_attention_pgm(const Vec& map, int M, int N, const std::string& path) {
  if (static_cast<int>(map.size()) != M * N || M < 1 || N < 1)
    throw std::invalid_argument("export_attention_pgm: map/grid mismatch");

  const bool all_equal = std::all_of(map.begin(), map.end(),
                                     [&](double v) { return v == map[0]; });
  const double mx = *std::max_element(map.begin(), map.end());

  std::vector<unsigned char> pixels(map.size());
  for (size_t i = 0; i < map.size(); ++i) {
    if (all_equal) {
      pixels[i] = 128;
    } else {
      const double scaled = std::floor(map[i] * 255.0 / mx);
      pixels[i] = static_cast<unsigned char>(std::clamp(scaled, 0.0, 255.0));
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << "P5\n" << N << " " << M << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace sasq
