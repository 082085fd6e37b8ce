#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "mixedbo/space.hpp"
#include "mixedbo/surrogate.hpp"

namespace mixedbo {

enum class AcquisitionKind { kEi, kConstrainedEi, kUcb };

// Non-owning view of the fitted models; all models must outlive the spec and
// are safe for concurrent evaluation.
struct AcquisitionSpec {
  AcquisitionKind kind = AcquisitionKind::kEi;
  double incumbent = 0.0;  // ei / constrained_ei (maximization units)
  double beta = 1.0;       // ucb
  const GPModel* objective_model = nullptr;
  std::vector<const GPModel*> constraint_models;  // constrained_ei only
};

struct AcqEval {
  double value = 0.0;
  Eigen::VectorXd grad_x;  // per continuous parameter, original units
};

AcqEval evaluate(const AcquisitionSpec& spec, const SearchSpace& space,
                 const DesignPoint& point, bool with_grad_x);

// Values for a batch of designs; posterior queries are issued in chunks of at
// most 32 designs.
Eigen::VectorXd evaluate_batch(const AcquisitionSpec& spec, const SearchSpace& space,
                               const std::vector<DesignPoint>& points);

// The acquisition evaluated at a relaxed vector through the kernel's smooth
// extension. Gradient covers every relaxed coordinate the surrogate is smooth
// in (zeros on mixed-kernel categorical blocks).
struct RelaxedAcqEval {
  double value = 0.0;
  Eigen::VectorXd grad_r;  // relaxed layout
};
RelaxedAcqEval evaluate_relaxed(const AcquisitionSpec& spec, const SearchSpace& space,
                                const std::vector<double>& relaxed, bool with_grad);

// UCB exploration weight schedule: beta_t = 0.2 * d_eff * log(2 t).
double ucb_beta(int iteration, std::size_t d_eff);

// Callable bundle handed to the estimators and acquisition optimizers; keeps
// them independent of the surrogate types. All callables must be safe for
// concurrent invocation. eval_relaxed is null when the surrogate is not
// smooth over the full relaxed layout.
struct AcqOracle {
  std::function<AcqEval(const DesignPoint&, bool)> eval;
  std::function<Eigen::VectorXd(const std::vector<DesignPoint>&)> eval_batch;
  std::function<RelaxedAcqEval(const std::vector<double>&, bool)> eval_relaxed;
  bool smooth_relaxed = false;
};

AcqOracle make_oracle(const AcquisitionSpec& spec, const SearchSpace& space);

}  // namespace mixedbo
