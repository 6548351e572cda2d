#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hencky {

/// Raised when an objective returns NaN or infinity at a trial point.
class NonFiniteEnergy : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LbfgsOptions {
  int max_iters = 2000;
  /// Stop when the max-norm of the gradient falls below this value.
  double gradient_tolerance = 1e-10;
  double function_tolerance = 1e-14;
  double parameter_tolerance = 1e-14;
  bool record_history = false;
};

struct LbfgsOutcome {
  double cost = 0.0;
  int iterations = 0;
  bool hit_max_iters = false;
  std::vector<double> history;
  std::string message;
};

/// Objective with gradient. The gradient span is empty when only the value is requested.
using Objective = std::function<double(std::span<const double> x, std::span<double> gradient)>;

/// Limited-memory BFGS with a Wolfe line search, minimizing in place.
LbfgsOutcome minimize_lbfgs(const Objective& objective, std::vector<double>& x,
                            const LbfgsOptions& options);

}  // namespace hencky
