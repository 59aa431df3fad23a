#include "sasq/checkpoint.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sasq/error.hpp"

namespace sasq {

namespace {

constexpr int kVersion = 1;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] void fail(std::istream& in, const std::string& msg) {
  const auto pos = in.tellg();
  throw FormatError("checkpoint: " + msg, pos < 0 ? 0 : static_cast<size_t>(pos));
}

std::string expect_key(std::istream& in, const char* key) {
  std::string k, v;
  if (!(in >> k >> v) || k != key) fail(in, std::string("expected field '") + key + "'");
  return v;
}

long expect_int(std::istream& in, const char* key) {
  std::string v = expect_key(in, key);
  try {
    return std::stol(v);
  } catch (const std::exception&) {
    fail(in, std::string("field '") + key + "' is not an integer");
  }
}

std::uint64_t expect_u64(std::istream& in, const char* key) {
  std::string v = expect_key(in, key);
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    fail(in, std::string("field '") + key + "' is not an integer");
  }
}

}  // namespace

void write_checkpoint(const Ensemble& ens, const std::string& path) {
  if (ens.members.empty()) throw std::invalid_argument("write_checkpoint: empty ensemble");
  std::ofstream out(path, std::ios::binary);  // binary: keep LF line endings everywhere
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);

  out << "sasq-checkpoint " << kVersion << "\n";
  out << "members " << ens.members.size() << "\n";
  out << "data_mode " << to_string(ens.mode) << "\n";
  for (size_t i = 0; i < ens.members.size(); ++i) {
    const ModelParams& m = ens.members[i];
    out << "member " << i << "\n";
    out << "kind " << to_string(m.kind) << "\n";
    out << "use_lstm " << (m.use_lstm ? 1 : 0) << "\n";
    out << "linear_head " << (m.linear_head ? 1 : 0) << "\n";
    out << "M " << m.dims.M << "\nN " << m.dims.N << "\nK " << m.dims.K << "\n";
    out << "D " << m.dims.D << "\nfcn_hidden " << m.dims.fcn_hidden << "\n";
    out << "seed " << m.seed << "\n";
    const Vec theta = m.flatten();
    out << "params " << theta.size() << "\n";
    for (size_t j = 0; j < theta.size(); ++j)
      out << fmt17(theta[j]) << ((j % 8 == 7 || j + 1 == theta.size()) ? "\n" : " ");
  }
  out << "end\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

Ensemble read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);

  std::string magic;
  long version = 0;
  if (!(in >> magic >> version) || magic != "sasq-checkpoint")
    fail(in, "not a checkpoint file");
  if (version != kVersion)
    fail(in, "unsupported version " + std::to_string(version));

  const long count = expect_int(in, "members");
  if (count < 1) fail(in, "member count must be positive");

  Ensemble ens;
  ens.mode = data_mode_from_string(expect_key(in, "data_mode"));
  for (long i = 0; i < count; ++i) {
    if (expect_int(in, "member") != i) fail(in, "member index out of order");
    ModelParams m;
    try {
      m.kind = normalizer_from_string(expect_key(in, "kind"));
    } catch (const std::invalid_argument& e) {
      fail(in, e.what());
    }
    m.use_lstm = expect_int(in, "use_lstm") != 0;
    m.linear_head = expect_int(in, "linear_head") != 0;
    m.dims.M = static_cast<int>(expect_int(in, "M"));
    m.dims.N = static_cast<int>(expect_int(in, "N"));
    m.dims.K = static_cast<int>(expect_int(in, "K"));
    m.dims.D = static_cast<int>(expect_int(in, "D"));
    m.dims.fcn_hidden = static_cast<int>(expect_int(in, "fcn_hidden"));
    if (m.dims.M < 1 || m.dims.N < 1 || m.dims.K < 1 || m.dims.D < 1 || m.dims.fcn_hidden < 1)
      fail(in, "dimensions must be positive");
    m.seed = expect_u64(in, "seed");

    // Allocate shapes, then overwrite from the stored flat vector.
    ModelParams shaped = init_model(m.dims, m.kind, m.use_lstm, m.linear_head, m.seed);
    const long stored = expect_int(in, "params");
    if (stored != static_cast<long>(shaped.param_count()))
      fail(in, "parameter count does not match dimensions");
    Vec theta(static_cast<size_t>(stored));
    for (long j = 0; j < stored; ++j) {
      if (!(in >> theta[static_cast<size_t>(j)])) fail(in, "truncated parameter block");
      if (!std::isfinite(theta[static_cast<size_t>(j)])) fail(in, "non-finite parameter");
    }
    shaped.unflatten(theta);
    ens.members.push_back(std::move(shaped));
  }
  std::string tail;
  if (!(in >> tail) || tail != "end") fail(in, "missing end marker");
  return ens;
}

}  // namespace sasq
