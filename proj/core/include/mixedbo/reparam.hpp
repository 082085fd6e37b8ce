#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mixedbo/acquisition.hpp"
#include "mixedbo/rng.hpp"
#include "mixedbo/space.hpp"

namespace mixedbo {

// Flattened layout of the per-parameter distribution vector: one slot per
// binary/ordinal parameter, C slots per categorical, in discrete-parameter
// declaration order.
struct ThetaLayout {
  std::vector<std::size_t> offsets;  // per discrete parameter
  std::size_t size = 0;
};
ThetaLayout theta_layout(const SearchSpace& space);
std::size_t theta_dim(const SearchSpace& space);

// Parameters of p(Z | theta): binary theta in [0,1], ordinal theta in
// [0, C-1], categorical theta on the (C-1)-simplex.
struct DistributionParams {
  std::vector<double> theta;
};

// Unconstrained-box parameters, mapped to theta by the tau transform:
// binary in [0,1], ordinal in [0, C-1], categorical slots in [0,1].
struct RawParams {
  std::vector<double> phi;
  double tau = 0.1;
};

struct TransformResult {
  DistributionParams theta;
  // Block-diagonal jacobian d theta / d phi, one block per discrete
  // parameter (1x1 for binary/ordinal, CxC for categorical).
  std::vector<Eigen::MatrixXd> jacobian;
};

// theta = g(phi): sigmoid((phi-1/2)/tau) for binary, floor(phi) +
// sigmoid((frac-1/2)/tau) for ordinal, softmax((phi-0.5)/tau) per
// categorical block. Ordinal theta is capped at C-1 (reachable only at
// phi = C-1 exactly); the capped branch has zero derivative.
TransformResult transform(const SearchSpace& space, const RawParams& raw);

// phi box bounds per slot (same layout as theta).
void phi_bounds(const SearchSpace& space, std::vector<double>* lo, std::vector<double>* hi);

struct ZeroProbabilityError : std::runtime_error {
  explicit ZeroProbabilityError(const std::string& what) : std::runtime_error(what) {}
};
struct SpaceTooLargeError : std::runtime_error {
  explicit SpaceTooLargeError(const std::string& what) : std::runtime_error(what) {}
};

// A discrete assignment: one level per discrete parameter, in
// discrete-parameter declaration order.
using DiscreteAssignment = std::vector<double>;

DesignPoint assemble_design(const SearchSpace& space, const std::vector<double>& x_continuous,
                            const DiscreteAssignment& z);
DiscreteAssignment discrete_part(const SearchSpace& space, const DesignPoint& p);
std::vector<double> continuous_part(const SearchSpace& space, const DesignPoint& p);

struct LogProbResult {
  double log_prob = 0.0;
  // Score d log p / d theta. Categorical components are projected onto the
  // simplex tangent (mean subtracted) so the score has zero expectation;
  // the offset is a multiple of the ones vector and vanishes under the
  // softmax chain rule.
  Eigen::VectorXd score;
};
LogProbResult log_prob(const SearchSpace& space, const DistributionParams& theta,
                       const DiscreteAssignment& z);

// Probability masses of one discrete parameter's distribution (length C).
std::vector<double> marginal_pmf(const SearchSpace& space, const DistributionParams& theta,
                                 std::size_t discrete_index);

// n iid draws from p(Z | theta). Sampling uses the same inverse-uniform maps
// as saa_sample, so the two samplers share one law by construction.
std::vector<DiscreteAssignment> sample(const SearchSpace& space,
                                       const DistributionParams& theta, std::size_t n,
                                       Rng& rng);

// Fixed base uniforms for sample-average approximation, shape N x d_z.
struct BaseSampleSet {
  Eigen::MatrixXd uniforms;
  std::uint64_t seed = 0;
};
BaseSampleSet make_base_samples(const SearchSpace& space, std::size_t n, std::uint64_t seed);

// z = h(theta, u) per row of the base set; deterministic in (theta, base).
std::vector<DiscreteAssignment> saa_sample(const SearchSpace& space,
                                           const DistributionParams& theta,
                                           const BaseSampleSet& base);

// All discrete configurations (lexicographic, first parameter slowest).
// Throws SpaceTooLargeError above the cap.
std::vector<DiscreteAssignment> enumerate_discrete(const SearchSpace& space,
                                                   std::uint64_t cap = 4096);

struct AnalyticPo {
  double value = 0.0;
  Eigen::VectorXd grad_theta;
  Eigen::VectorXd grad_x;
};
// Exact probabilistic objective: sum over all discrete configurations of
// p(z|theta) * af(x, z), with exact gradients. |Z| capped at 4096.
AnalyticPo analytic_po(const AcqOracle& af, const SearchSpace& space,
                       const std::vector<double>& x, const DistributionParams& theta,
                       std::uint64_t cap = 4096);

// Monte Carlo estimate (1/N) sum af(x, z_i); surrogate calls are chunked
// through the oracle's batch path.
double mc_po(const AcqOracle& af, const SearchSpace& space, const std::vector<double>& x,
             const std::vector<DiscreteAssignment>& samples);

struct BaselineState {
  double value = 0.0;
  double decay = 0.7;
  bool initialized = false;
};
BaselineState update_baseline(const BaselineState& state, double batch_mean_af);

struct McPoGrad {
  Eigen::VectorXd grad_theta;
  Eigen::VectorXd grad_x;
  double batch_mean_af = 0.0;
};
// Score-function estimator of the PO gradient with an optional baseline
// (applied to grad_theta only) and the pathwise average for grad_x.
McPoGrad mc_po_grad(const AcqOracle& af, const SearchSpace& space,
                    const std::vector<double>& x, const DistributionParams& theta,
                    const std::vector<DiscreteAssignment>& samples,
                    const BaselineState& baseline);

// grad_phi = J^T grad_theta for the block jacobian returned by transform.
Eigen::VectorXd chain_to_phi(const SearchSpace& space, const TransformResult& tr,
                             const Eigen::VectorXd& grad_theta);

}  // namespace mixedbo
