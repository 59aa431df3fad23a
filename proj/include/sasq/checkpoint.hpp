#ifndef SASQ_CHECKPOINT_HPP
#define SASQ_CHECKPOINT_HPP

#include <string>

#include "sasq/ensemble.hpp"

namespace sasq {

// Versioned text checkpoint holding 1..N members. Doubles are printed with
// 17 significant digits so a write/read round trip is bit-exact. Single
// models are stored as one-member ensembles.
void write_checkpoint(const Ensemble& ens, const std::string& path);
Ensemble read_checkpoint(const std::string& path);

}  // namespace sasq

#endif
