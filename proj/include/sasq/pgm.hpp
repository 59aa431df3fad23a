#ifndef SASQ_PGM_HPP
#define SASQ_PGM_HPP

#include <string>

#include "sasq/linalg.hpp"

namespace sasq {

// Binary PGM (P5) render of an M x N attention map, max-normalized so the
// brightest cell is 255. All-equal maps render mid-gray 128.
void export_attention_pgm(const Vec& map, int M, int N, const std::string& path);

}  // namespace sasq

#endif
