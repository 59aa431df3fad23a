#ifndef SASQ_ERROR_HPP
#define SASQ_ERROR_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sasq {

// Malformed or truncated file; offset is the byte position of the defect.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& msg, std::uint64_t offset)
      : std::runtime_error(msg + " (byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

// Training produced a non-finite loss; epoch is 1-based.
class TrainingDivergedError : public std::runtime_error {
 public:
  explicit TrainingDivergedError(int epoch)
      : std::runtime_error("training diverged at epoch " + std::to_string(epoch)),
        epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

}  // namespace sasq

#endif
