#pragma once

#include <functional>
#include <string>
#include <vector>

#include "himpc/common.hpp"

namespace himpc {

/// Returns f(x) and writes the gradient into `grad` (already sized).
using Objective = std::function<double(const Vec& x, Vec& grad)>;

struct LbfgsOptions {
  int memory = 10;
  int max_iterations = 200;
  /// Stop when ||grad||_2 <= gradient_tolerance.
  double gradient_tolerance = 1e-6;
  /// Sufficient-decrease and curvature constants of the strong Wolfe conditions.
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search_evals = 30;
};

struct LbfgsTraceEntry {
  int iteration = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double seconds = 0.0;
};

enum class LbfgsStatus { GradientTolerance, MaxIterations, LineSearchFailed, NoProgress };

std::string to_string(LbfgsStatus status);

struct LbfgsResult {
  Vec x;            // best point seen
  double f = 0.0;
  Vec grad;
  int iterations = 0;
  int evaluations = 0;
  LbfgsStatus status = LbfgsStatus::MaxIterations;
  /// Entry 0 is the starting point; one entry per accepted step after that.
  std::vector<LbfgsTraceEntry> trace;
};

/// Limited-memory BFGS. Throws InvalidArgument when f(x0) or its gradient is
/// not finite.
LbfgsResult lbfgs_minimize(const Objective& objective, const Vec& x0,
                           const LbfgsOptions& options = {});

}  // namespace himpc
