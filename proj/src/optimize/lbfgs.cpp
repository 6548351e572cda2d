#include "hencky/optimize.hpp"

#include <ceres/ceres.h>

#include <cmath>

namespace hencky {

namespace {

class ObjectiveAdapter final : public ceres::FirstOrderFunction {
 public:
  ObjectiveAdapter(const Objective& objective, int size, bool* non_finite)
      : objective_(objective), size_(size), non_finite_(non_finite) {}

  bool Evaluate(const double* parameters, double* cost, double* gradient) const override {
    const auto n = static_cast<std::size_t>(size_);
    std::span<const double> x(parameters, n);
    std::span<double> g = gradient ? std::span<double>(gradient, n) : std::span<double>();
    *cost = objective_(x, g);
    bool finite = std::isfinite(*cost);
    for (double v : g) finite = finite && std::isfinite(v);
    if (!finite) *non_finite_ = true;
    return finite;
  }

  int NumParameters() const override { return size_; }

 private:
  const Objective& objective_;
  int size_;
  bool* non_finite_;
};

class HistoryRecorder final : public ceres::IterationCallback {
 public:
  explicit HistoryRecorder(std::vector<double>* out) : out_(out) {}
  ceres::CallbackReturnType operator()(const ceres::IterationSummary& summary) override {
    out_->push_back(summary.cost);
    return ceres::SOLVER_CONTINUE;
  }

 private:
  std::vector<double>* out_;
};

}  // namespace

LbfgsOutcome minimize_lbfgs(const Objective& objective, std::vector<double>& x,
                            const LbfgsOptions& options) {
  LbfgsOutcome outcome;
  if (x.empty()) {
    outcome.cost = objective(x, {});
    return outcome;
  }

  bool non_finite = false;
  // GradientProblem takes ownership of the function.
  ceres::GradientProblem problem(
      new ObjectiveAdapter(objective, static_cast<int>(x.size()), &non_finite));

  ceres::GradientProblemSolver::Options opts;
  opts.line_search_direction_type = ceres::LBFGS;
  opts.max_num_iterations = options.max_iters;
  opts.gradient_tolerance = options.gradient_tolerance;
  opts.function_tolerance = options.function_tolerance;
  opts.parameter_tolerance = options.parameter_tolerance;
  opts.logging_type = ceres::SILENT;
  opts.minimizer_progress_to_stdout = false;

  HistoryRecorder recorder(&outcome.history);
  if (options.record_history) opts.callbacks.push_back(&recorder);

  ceres::GradientProblemSolver::Summary summary;
  ceres::Solve(opts, problem, x.data(), &summary);

  // A rejected non-finite trial step is only fatal if the start point itself was bad.
  if (non_finite && !std::isfinite(summary.initial_cost)) {
    throw NonFiniteEnergy("objective is not finite at the starting point");
  }
  if (non_finite && summary.termination_type == ceres::FAILURE && summary.iterations.size() <= 1) {
    throw NonFiniteEnergy("objective produced non-finite values: " + summary.message);
  }

  outcome.cost = summary.final_cost;
  outcome.iterations = static_cast<int>(summary.iterations.size());
  outcome.hit_max_iters = summary.termination_type == ceres::NO_CONVERGENCE;
  outcome.message = summary.message;
  return outcome;
}

}  // namespace hencky
