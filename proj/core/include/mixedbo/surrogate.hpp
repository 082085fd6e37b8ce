#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixedbo/space.hpp"

namespace mixedbo {

// Kernel over mixed inputs.
//
// mixed_sum_product (used when the surrogate may see discrete inputs):
//   k_ord  = matern52(|binary diff| / binary_lengthscale)
//            * matern52_ard(ordinal+continuous diffs, ard_lengthscales)
//   k_cat  = exp(-sum_i w_i * [z_i != z'_i])           (1 at identity)
//   k      = os0 * k_cat * k_ord + os1 * k_cat + os2 * k_ord
// with terms dropped when their parameter group is empty. Inputs are
// normalized: continuous to [0,1], ordinal index to [0,1], binary as {0,1},
// categorical compared by raw index.
//
// matern_onehot (smooth everywhere; required by continuous relaxation over
// categoricals): ARD matern52 over the normalized one-hot layout.
enum class KernelStructure { kMixedSumProduct, kMaternOneHot };

struct KernelConfig {
  KernelStructure structure = KernelStructure::kMixedSumProduct;
  double binary_lengthscale = 1.0;          // isotropic, mixed structure only
  std::vector<double> ard_lengthscales;     // ord+cont dims (mixed) or all dims (onehot)
  std::vector<double> categorical_weights;  // one per categorical parameter
  std::vector<double> outputscales;         // one per additive term
};

struct DimensionMismatchError : std::runtime_error {
  explicit DimensionMismatchError(const std::string& what) : std::runtime_error(what) {}
};
struct CholeskyFailure : std::runtime_error {
  explicit CholeskyFailure(const std::string& what) : std::runtime_error(what) {}
};
struct FitFailure : std::runtime_error {
  explicit FitFailure(const std::string& what) : std::runtime_error(what) {}
};

// Feature encodings used by the kernels. Layouts:
//   mixed:  [continuous... | binary... | ordinal... | categorical index...]
//   onehot: the relaxed layout, continuous/ordinal normalized to unit scale
Eigen::VectorXd encode_point(const SearchSpace& space, const DesignPoint& p,
                             KernelStructure structure);
// Encodes a relaxed vector. For the mixed structure the categorical blocks
// are collapsed to their argmax index (the kernel is not smooth there);
// binary/ordinal coordinates keep their fractional values.
Eigen::VectorXd encode_relaxed(const SearchSpace& space,
                               const std::vector<double>& relaxed,
                               KernelStructure structure);
std::size_t feature_dim(const SearchSpace& space, KernelStructure structure);

KernelConfig default_kernel_config(const SearchSpace& space, KernelStructure structure);

Eigen::MatrixXd build_kernel_matrix(const KernelConfig& cfg, const SearchSpace& space,
                                    const std::vector<DesignPoint>& a,
                                    const std::vector<DesignPoint>& b);

// Packed hyperparameter vector over which the marginal likelihood is
// optimized: [log binary_ls?][log ard_ls...][log cat_w...][log outputscales...]
// [log noise][mean]. The mean constant lives in standardized target units.
struct HyperPacking {
  std::size_t size = 0;
  std::size_t ard_offset = 0;
  std::size_t cat_offset = 0;
  std::size_t os_offset = 0;
  std::size_t noise_index = 0;
  std::size_t mean_index = 0;
  bool has_binary = false;
};
HyperPacking hyper_packing(const SearchSpace& space, KernelStructure structure);
Eigen::VectorXd pack_hypers(const KernelConfig& cfg, double mean, double noise,
                            const SearchSpace& space);
void unpack_hypers(const Eigen::VectorXd& h, const SearchSpace& space,
                   KernelStructure structure, KernelConfig* cfg, double* mean,
                   double* noise);

struct LmlResult {
  double value = 0.0;
  Eigen::VectorXd gradient;  // wrt the packed vector above
};

// Exact Gaussian log marginal likelihood of standardized targets, with the
// gradient from the usual trace identities. Jitter escalates from
// 1e-8*trace(K)/n by factors of 10 up to 1e-4*trace(K)/n, then throws.
LmlResult log_marginal_likelihood(const KernelConfig& cfg, double mean, double noise,
                                  const SearchSpace& space,
                                  const std::vector<DesignPoint>& points,
                                  const Eigen::VectorXd& targets,
                                  bool with_gradient = true);

struct Posterior {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
  // Present when requested: one row per query, one column per continuous
  // parameter (original units).
  std::optional<Eigen::MatrixXd> dmean_dx;
  std::optional<Eigen::MatrixXd> dvariance_dx;
};

class GPModel {
 public:
  GPModel() = default;

  const SearchSpace& space() const { return space_; }
  const KernelConfig& kernel() const { return kernel_; }
  double mean_constant() const { return mean_constant_; }
  double noise_variance() const { return noise_variance_; }
  double target_mean() const { return target_mean_; }
  double target_std() const { return target_std_; }
  double jitter() const { return jitter_; }
  const std::vector<DesignPoint>& train_inputs() const { return train_inputs_; }
  const Eigen::VectorXd& train_targets_std() const { return targets_std_; }
  const Eigen::MatrixXd& cholesky_factor() const { return chol_; }

  // Prior variance at distance (original target units).
  double prior_variance() const;

  bool smooth_in_all_relaxed_dims() const;

  // Predictive mean/variance in original target units; optional analytic
  // derivatives with respect to the continuous coordinates.
  Posterior posterior(const std::vector<DesignPoint>& points, bool with_gradients) const;

  // Posterior evaluated at a relaxed vector, with derivatives with respect to
  // every relaxed coordinate the kernel is smooth in (zeros elsewhere).
  struct RelaxedEval {
    double mean = 0.0;
    double variance = 0.0;
    Eigen::VectorXd dmean_dr;
    Eigen::VectorXd dvariance_dr;
  };
  RelaxedEval posterior_relaxed(const std::vector<double>& relaxed, bool with_gradients) const;

  // ARD lengthscale associated with parameter `index`, for trust-region
  // shaping. Continuous/ordinal parameters only.
  double lengthscale_for_parameter(std::size_t index) const;

  std::string to_json() const;
  static GPModel from_json(const std::string& text);

  // Builds a model from explicit hyperparameters (targets raw, standardized
  // internally). Used by fit_gp and deserialization.
  static GPModel build(const SearchSpace& space, const KernelConfig& cfg, double mean,
                       double noise, const std::vector<DesignPoint>& points,
                       const std::vector<double>& raw_targets);

 private:
  struct FeatureEval;  // internal helper, defined in the .cpp

  SearchSpace space_;
  KernelConfig kernel_;
  double mean_constant_ = 0.0;
  double noise_variance_ = 1e-2;
  std::vector<DesignPoint> train_inputs_;
  Eigen::MatrixXd train_features_;
  Eigen::VectorXd targets_std_;
  Eigen::MatrixXd chol_;   // lower triangular L, L L^T = K + noise I + jitter I
  Eigen::VectorXd alpha_;  // (K + ...)^{-1} (y - mean)
  double target_mean_ = 0.0;
  double target_std_ = 1.0;
  double jitter_ = 0.0;
};

struct FitOptions {
  KernelStructure structure = KernelStructure::kMixedSumProduct;
  int restarts = 5;    // 1 default start + restarts-1 randomized
  int steps = 100;     // optimizer steps per start
  double learning_rate = 0.08;
};

// Standardizes targets and maximizes the marginal likelihood over
// log-hyperparameters with a projected multi-start first-order scheme.
// Deterministic given the seed.
GPModel fit_gp(const SearchSpace& space, const std::vector<DesignPoint>& points,
               const std::vector<double>& raw_targets, std::uint64_t seed,
               const FitOptions& options = {});

}  // namespace mixedbo
