#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

namespace himpc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector/matrix sizes do not agree with the problem dimensions.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A factorization failed. `step()` names the time index when one applies.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what, std::optional<int> step = {})
      : Error(what), step_(step) {}
  [[nodiscard]] std::optional<int> step() const noexcept { return step_; }

 private:
  std::optional<int> step_;
};

/// Invalid arguments or preconditions (empty data, bad parameters, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

inline void require_size(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": expected size " + std::to_string(want) +
                         ", got " + std::to_string(got));
  }
}

inline bool all_finite(const Eigen::Ref<const Mat>& m) { return m.allFinite(); }

/// (M + M^T) / 2, built without reading M while it is being written.
inline Mat symmetrized(const Mat& m) {
  Mat out = m.transpose();
  out += m;
  out *= 0.5;
  return out;
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index is
/// visited exactly once; callers write results into per-index slots so the
/// outcome never depends on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int threads = 0);

enum class LogLevel { Quiet = 0, Warn = 1, Info = 2, Debug = 3 };

void set_log_level(LogLevel level);
LogLevel log_level();
/// Writes one line to stderr when `level` is enabled.
void log(LogLevel level, const std::string& message);

/// Stable 64-bit seed derived from a base seed and a list of indices.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts);

}  // namespace himpc
