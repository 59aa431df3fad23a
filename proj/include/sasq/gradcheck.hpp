#ifndef SASQ_GRADCHECK_HPP
#define SASQ_GRADCHECK_HPP

#include <cstdint>
#include <string>

#include "sasq/model.hpp"

namespace sasq {

// One verification suite's outcome. max_err is a relative error except for
// the oracle-equivalence check, where it is the absolute projection gap.
struct CheckResult {
  std::string name;
  double max_err = 0.0;
  double tolerance = 0.0;
  int checked = 0;
  int skipped = 0;  // cases discarded because a perturbation crossed a kink
  bool pass = false;
};

// sparsemax against the brute-force support-enumeration projection on
// Gaussian score vectors of length 2..6.
CheckResult check_oracle_equivalence(int draws, std::uint64_t seed);

// Normalizer JVP against central finite differences. kind must be Sparse or
// Soft; sparsemax cases whose support changes under the probe are skipped.
CheckResult check_jvp(Normalizer kind, int instances, std::uint64_t seed);

// Dense layer under a tanh readout, all parameters and the input checked
// against central finite differences.
CheckResult check_dense_fd(int instances, std::uint64_t seed);

// One LSTM step with loss u.h' + v.c', checked over parameters, input, and
// both incoming state vectors.
CheckResult check_lstm_fd(int instances, std::uint64_t seed);

// Full-pipeline gradcheck (wraps gradcheck_model into a CheckResult).
CheckResult check_pipeline(const ModelDims& dims, Normalizer kind, bool use_lstm,
                           std::uint64_t seed);

}  // namespace sasq

#endif
