#include "mixedbo/surrogate.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "mixedbo/rng.hpp"

namespace mixedbo {
namespace {

constexpr double kSqrt5 = 2.23606797749978969;
constexpr double kVarianceFloor = 1e-12;
constexpr double kLogTwoPi = 1.8378770664093454836;

double matern52(double r) {
  const double a = kSqrt5 * r;
  return (1.0 + a + a * a / 3.0) * std::exp(-a);
}

// g(r) = -m'(r)/r = (5/3)(1 + sqrt5 r) exp(-sqrt5 r); finite at r = 0.
double matern52_g(double r) {
  return (5.0 / 3.0) * (1.0 + kSqrt5 * r) * std::exp(-kSqrt5 * r);
}

struct FeatureGroups {
  std::size_t m = 0;
  std::vector<std::size_t> ard_dims;        // feature indices under ARD lengthscales
  std::vector<std::size_t> bin_dims;        // isotropic binary features (mixed)
  std::vector<std::size_t> cat_dims;        // categorical index features (mixed)
  bool onehot = false;
};

FeatureGroups feature_groups(const SearchSpace& space, KernelStructure structure) {
  FeatureGroups g;
  if (structure == KernelStructure::kMaternOneHot) {
    g.onehot = true;
    g.m = space.relaxed_length();
    g.ard_dims.resize(g.m);
    for (std::size_t d = 0; d < g.m; ++d) g.ard_dims[d] = d;
    return g;
  }
  g.m = space.num_continuous() + space.num_binary() + space.num_ordinal() +
        space.num_categorical();
  const std::size_t bin_start = space.num_continuous();
  const std::size_t ord_start = bin_start + space.num_binary();
  const std::size_t cat_start = ord_start + space.num_ordinal();
  for (std::size_t d = 0; d < space.num_continuous(); ++d) g.ard_dims.push_back(d);
  for (std::size_t d = 0; d < space.num_binary(); ++d) g.bin_dims.push_back(bin_start + d);
  for (std::size_t d = 0; d < space.num_ordinal(); ++d) g.ard_dims.push_back(ord_start + d);
  for (std::size_t d = 0; d < space.num_categorical(); ++d) g.cat_dims.push_back(cat_start + d);
  return g;
}

// Ordering of parameters within the mixed feature layout.
std::vector<std::size_t> mixed_feature_of_parameter(const SearchSpace& space) {
  std::vector<std::size_t> map(space.size());
  std::size_t cont = 0, bin = 0, ord = 0, cat = 0;
  const std::size_t bin_start = space.num_continuous();
  const std::size_t ord_start = bin_start + space.num_binary();
  const std::size_t cat_start = ord_start + space.num_ordinal();
  for (std::size_t i = 0; i < space.size(); ++i) {
    switch (space.parameter(i).kind) {
      case ParameterKind::kContinuous: map[i] = cont++; break;
      case ParameterKind::kBinary: map[i] = bin_start + bin++; break;
      case ParameterKind::kOrdinal: map[i] = ord_start + ord++; break;
      case ParameterKind::kCategorical: map[i] = cat_start + cat++; break;
    }
  }
  return map;
}

enum class TermLayout { kOrdinalOnly, kCategoricalOnly, kFull };

TermLayout term_layout(const SearchSpace& space) {
  const bool has_cat = space.num_categorical() > 0;
  const bool has_other = space.num_continuous() + space.num_binary() + space.num_ordinal() > 0;
  if (has_cat && has_other) return TermLayout::kFull;
  if (has_cat) return TermLayout::kCategoricalOnly;
  return TermLayout::kOrdinalOnly;
}

std::size_t num_terms(const SearchSpace& space, KernelStructure structure) {
  if (structure == KernelStructure::kMaternOneHot) return 1;
  return term_layout(space) == TermLayout::kFull ? 3 : 1;
}

// Pairwise component matrices between two feature sets.
struct KernelParts {
  Eigen::MatrixXd r_ard;   // ARD matern argument
  Eigen::MatrixXd r_bin;   // isotropic binary matern argument
  Eigen::MatrixXd m_ard;   // matern52(r_ard), ones if no ARD dims
  Eigen::MatrixXd m_bin;   // matern52(r_bin), ones if no binary dims
  Eigen::MatrixXd k_cat;   // exp(-weighted mismatch), ones if no categoricals
  Eigen::MatrixXd k;       // combined kernel
};

void check_config(const KernelConfig& cfg, const SearchSpace& space,
                  const FeatureGroups& groups) {
  if (cfg.ard_lengthscales.size() != groups.ard_dims.size()) {
    throw DimensionMismatchError("ard_lengthscales has " +
                                 std::to_string(cfg.ard_lengthscales.size()) +
                                 " entries, kernel needs " +
                                 std::to_string(groups.ard_dims.size()));
  }
  if (cfg.structure == KernelStructure::kMixedSumProduct &&
      cfg.categorical_weights.size() != space.num_categorical()) {
    throw DimensionMismatchError("categorical_weights size mismatch");
  }
  if (cfg.outputscales.size() != num_terms(space, cfg.structure)) {
    throw DimensionMismatchError("outputscales size mismatch");
  }
}

KernelParts kernel_parts(const KernelConfig& cfg, const SearchSpace& space,
                         const FeatureGroups& groups, const Eigen::MatrixXd& fa,
                         const Eigen::MatrixXd& fb) {
  const Eigen::Index na = fa.rows(), nb = fb.rows();
  KernelParts parts;

  Eigen::MatrixXd r2_ard = Eigen::MatrixXd::Zero(na, nb);
  for (std::size_t j = 0; j < groups.ard_dims.size(); ++j) {
    const std::size_t d = groups.ard_dims[j];
    const double inv_l = 1.0 / cfg.ard_lengthscales[j];
    const Eigen::MatrixXd diff =
        (fa.col(d) * Eigen::RowVectorXd::Ones(nb) -
         Eigen::VectorXd::Ones(na) * fb.col(d).transpose()) *
        inv_l;
    r2_ard += diff.cwiseProduct(diff);
  }
  parts.r_ard = r2_ard.cwiseSqrt();
  if (groups.ard_dims.empty()) {
    parts.m_ard = Eigen::MatrixXd::Ones(na, nb);
  } else {
    parts.m_ard = parts.r_ard.unaryExpr([](double r) { return matern52(r); });
  }

  if (!groups.bin_dims.empty()) {
    Eigen::MatrixXd r2_bin = Eigen::MatrixXd::Zero(na, nb);
    const double inv_l = 1.0 / cfg.binary_lengthscale;
    for (std::size_t d : groups.bin_dims) {
      const Eigen::MatrixXd diff =
          (fa.col(d) * Eigen::RowVectorXd::Ones(nb) -
           Eigen::VectorXd::Ones(na) * fb.col(d).transpose()) *
          inv_l;
      r2_bin += diff.cwiseProduct(diff);
    }
    parts.r_bin = r2_bin.cwiseSqrt();
    parts.m_bin = parts.r_bin.unaryExpr([](double r) { return matern52(r); });
  } else {
    parts.r_bin = Eigen::MatrixXd::Zero(na, nb);
    parts.m_bin = Eigen::MatrixXd::Ones(na, nb);
  }

  if (!groups.cat_dims.empty()) {
    Eigen::MatrixXd hw = Eigen::MatrixXd::Zero(na, nb);
    for (std::size_t c = 0; c < groups.cat_dims.size(); ++c) {
      const std::size_t d = groups.cat_dims[c];
      const double w = cfg.categorical_weights[c];
      for (Eigen::Index i = 0; i < na; ++i) {
        for (Eigen::Index j = 0; j < nb; ++j) {
          if (fa(i, d) != fb(j, d)) hw(i, j) += w;
        }
      }
    }
    parts.k_cat = (-hw).array().exp().matrix();
  } else {
    parts.k_cat = Eigen::MatrixXd::Ones(na, nb);
  }

  const Eigen::MatrixXd k_ord = parts.m_bin.cwiseProduct(parts.m_ard);
  if (cfg.structure == KernelStructure::kMaternOneHot) {
    parts.k = cfg.outputscales[0] * parts.m_ard;
  } else {
    switch (term_layout(space)) {
      case TermLayout::kFull:
        parts.k = cfg.outputscales[0] * parts.k_cat.cwiseProduct(k_ord) +
                  cfg.outputscales[1] * parts.k_cat + cfg.outputscales[2] * k_ord;
        break;
      case TermLayout::kCategoricalOnly:
        parts.k = cfg.outputscales[0] * parts.k_cat;
        break;
      case TermLayout::kOrdinalOnly:
        parts.k = cfg.outputscales[0] * k_ord;
        break;
    }
  }
  return parts;
}

double prior_amplitude(const KernelConfig& cfg) {
  double s = 0.0;
  for (double os : cfg.outputscales) s += os;
  return s;
}

// Coefficient multiplying d(k_ord) in dK, elementwise.
Eigen::MatrixXd ord_coeff(const KernelConfig& cfg, const SearchSpace& space,
                          const KernelParts& parts) {
  if (cfg.structure == KernelStructure::kMaternOneHot) {
    return Eigen::MatrixXd::Constant(parts.k.rows(), parts.k.cols(), cfg.outputscales[0]);
  }
  switch (term_layout(space)) {
    case TermLayout::kFull:
      return cfg.outputscales[0] * parts.k_cat +
             Eigen::MatrixXd::Constant(parts.k.rows(), parts.k.cols(), cfg.outputscales[2]);
    case TermLayout::kOrdinalOnly:
      return Eigen::MatrixXd::Constant(parts.k.rows(), parts.k.cols(), cfg.outputscales[0]);
    case TermLayout::kCategoricalOnly:
      return Eigen::MatrixXd::Zero(parts.k.rows(), parts.k.cols());
  }
  return {};
}

Eigen::MatrixXd cat_coeff(const KernelConfig& cfg, const SearchSpace& space,
                          const KernelParts& parts) {
  const Eigen::MatrixXd k_ord = parts.m_bin.cwiseProduct(parts.m_ard);
  switch (term_layout(space)) {
    case TermLayout::kFull:
      return cfg.outputscales[0] * k_ord +
             Eigen::MatrixXd::Constant(parts.k.rows(), parts.k.cols(), cfg.outputscales[1]);
    case TermLayout::kCategoricalOnly:
      return Eigen::MatrixXd::Constant(parts.k.rows(), parts.k.cols(), cfg.outputscales[0]);
    case TermLayout::kOrdinalOnly:
      return Eigen::MatrixXd::Zero(parts.k.rows(), parts.k.cols());
  }
  return {};
}

struct CholResult {
  Eigen::MatrixXd lower;
  double jitter = 0.0;
};

CholResult cholesky_with_jitter(const Eigen::MatrixXd& k_noise) {
  const Eigen::Index n = k_noise.rows();
  const double base = k_noise.trace() / static_cast<double>(n);
  Eigen::LLT<Eigen::MatrixXd> llt(k_noise);
  if (llt.info() == Eigen::Success) return {llt.matrixL(), 0.0};
  for (double rel = 1e-8; rel <= 1e-4 * (1.0 + 1e-12); rel *= 10.0) {
    const double jitter = rel * base;
    llt.compute(k_noise + jitter * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() == Eigen::Success) return {llt.matrixL(), jitter};
  }
  throw CholeskyFailure("cholesky failed after jitter escalation");
}

}  // namespace

std::size_t feature_dim(const SearchSpace& space, KernelStructure structure) {
  return feature_groups(space, structure).m;
}

Eigen::VectorXd encode_point(const SearchSpace& space, const DesignPoint& p,
                             KernelStructure structure) {
  validate(space, p);
  if (structure == KernelStructure::kMaternOneHot) {
    const RelaxedPoint r = one_hot_encode(space, p);
    return encode_relaxed(space, r.values, structure);
  }
  const auto map = mixed_feature_of_parameter(space);
  Eigen::VectorXd f(feature_dim(space, structure));
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& desc = space.parameter(i);
    const double v = p.values[i];
    switch (desc.kind) {
      case ParameterKind::kContinuous: f[map[i]] = to_unit(desc, v); break;
      case ParameterKind::kBinary: f[map[i]] = v; break;
      case ParameterKind::kOrdinal:
        f[map[i]] = v / static_cast<double>(desc.cardinality - 1);
        break;
      case ParameterKind::kCategorical: f[map[i]] = v; break;
    }
  }
  return f;
}

Eigen::VectorXd encode_relaxed(const SearchSpace& space,
                               const std::vector<double>& relaxed,
                               KernelStructure structure) {
  if (relaxed.size() != space.relaxed_length()) {
    throw LayoutMismatchError("relaxed vector length mismatch");
  }
  if (structure == KernelStructure::kMaternOneHot) {
    Eigen::VectorXd f(space.relaxed_length());
    for (std::size_t i = 0; i < space.size(); ++i) {
      const auto& desc = space.parameter(i);
      const std::size_t off = space.relaxed_offset(i);
      switch (desc.kind) {
        case ParameterKind::kContinuous: f[off] = to_unit(desc, relaxed[off]); break;
        case ParameterKind::kBinary: f[off] = relaxed[off]; break;
        case ParameterKind::kOrdinal:
          f[off] = relaxed[off] / static_cast<double>(desc.cardinality - 1);
          break;
        case ParameterKind::kCategorical:
          for (int c = 0; c < desc.cardinality; ++c) {
            f[off + static_cast<std::size_t>(c)] = relaxed[off + static_cast<std::size_t>(c)];
          }
          break;
      }
    }
    return f;
  }
  const auto map = mixed_feature_of_parameter(space);
  Eigen::VectorXd f(feature_dim(space, structure));
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& desc = space.parameter(i);
    const std::size_t off = space.relaxed_offset(i);
    switch (desc.kind) {
      case ParameterKind::kContinuous: f[map[i]] = to_unit(desc, relaxed[off]); break;
      case ParameterKind::kBinary: f[map[i]] = relaxed[off]; break;
      case ParameterKind::kOrdinal:
        f[map[i]] = relaxed[off] / static_cast<double>(desc.cardinality - 1);
        break;
      case ParameterKind::kCategorical: {
        int best = 0;
        double best_v = relaxed[off];
        for (int c = 1; c < desc.cardinality; ++c) {
          if (relaxed[off + static_cast<std::size_t>(c)] > best_v) {
            best_v = relaxed[off + static_cast<std::size_t>(c)];
            best = c;
          }
        }
        f[map[i]] = static_cast<double>(best);
        break;
      }
    }
  }
  return f;
}

KernelConfig default_kernel_config(const SearchSpace& space, KernelStructure structure) {
  const FeatureGroups groups = feature_groups(space, structure);
  KernelConfig cfg;
  cfg.structure = structure;
  cfg.binary_lengthscale = 0.5;
  cfg.ard_lengthscales.assign(groups.ard_dims.size(), 0.5);
  if (structure == KernelStructure::kMixedSumProduct) {
    cfg.categorical_weights.assign(space.num_categorical(), 1.0);
  }
  cfg.outputscales.assign(num_terms(space, structure), 1.0);
  return cfg;
}

Eigen::MatrixXd build_kernel_matrix(const KernelConfig& cfg, const SearchSpace& space,
                                    const std::vector<DesignPoint>& a,
                                    const std::vector<DesignPoint>& b) {
  const FeatureGroups groups = feature_groups(space, cfg.structure);
  check_config(cfg, space, groups);
  Eigen::MatrixXd fa(a.size(), groups.m), fb(b.size(), groups.m);
  for (std::size_t i = 0; i < a.size(); ++i) fa.row(i) = encode_point(space, a[i], cfg.structure);
  for (std::size_t i = 0; i < b.size(); ++i) fb.row(i) = encode_point(space, b[i], cfg.structure);
  return kernel_parts(cfg, space, groups, fa, fb).k;
}

HyperPacking hyper_packing(const SearchSpace& space, KernelStructure structure) {
  const FeatureGroups groups = feature_groups(space, structure);
  HyperPacking p;
  p.has_binary = !groups.bin_dims.empty() && structure == KernelStructure::kMixedSumProduct;
  std::size_t idx = p.has_binary ? 1 : 0;
  p.ard_offset = idx;
  idx += groups.ard_dims.size();
  p.cat_offset = idx;
  if (structure == KernelStructure::kMixedSumProduct) idx += space.num_categorical();
  p.os_offset = idx;
  idx += num_terms(space, structure);
  p.noise_index = idx++;
  p.mean_index = idx++;
  p.size = idx;
  return p;
}

Eigen::VectorXd pack_hypers(const KernelConfig& cfg, double mean, double noise,
                            const SearchSpace& space) {
  const HyperPacking p = hyper_packing(space, cfg.structure);
  Eigen::VectorXd h(p.size);
  if (p.has_binary) h[0] = std::log(cfg.binary_lengthscale);
  for (std::size_t i = 0; i < cfg.ard_lengthscales.size(); ++i) {
    h[p.ard_offset + i] = std::log(cfg.ard_lengthscales[i]);
  }
  for (std::size_t i = 0; i < cfg.categorical_weights.size(); ++i) {
    h[p.cat_offset + i] = std::log(cfg.categorical_weights[i]);
  }
  for (std::size_t i = 0; i < cfg.outputscales.size(); ++i) {
    h[p.os_offset + i] = std::log(cfg.outputscales[i]);
  }
  h[p.noise_index] = std::log(noise);
  h[p.mean_index] = mean;
  return h;
}

void unpack_hypers(const Eigen::VectorXd& h, const SearchSpace& space,
                   KernelStructure structure, KernelConfig* cfg, double* mean,
                   double* noise) {
  const HyperPacking p = hyper_packing(space, structure);
  if (static_cast<std::size_t>(h.size()) != p.size) {
    throw DimensionMismatchError("hyperparameter vector size mismatch");
  }
  const FeatureGroups groups = feature_groups(space, structure);
  cfg->structure = structure;
  cfg->binary_lengthscale = p.has_binary ? std::exp(h[0]) : 1.0;
  cfg->ard_lengthscales.resize(groups.ard_dims.size());
  for (std::size_t i = 0; i < cfg->ard_lengthscales.size(); ++i) {
    cfg->ard_lengthscales[i] = std::exp(h[p.ard_offset + i]);
  }
  cfg->categorical_weights.assign(
      structure == KernelStructure::kMixedSumProduct ? space.num_categorical() : 0, 1.0);
  for (std::size_t i = 0; i < cfg->categorical_weights.size(); ++i) {
    cfg->categorical_weights[i] = std::exp(h[p.cat_offset + i]);
  }
  cfg->outputscales.resize(num_terms(space, structure));
  for (std::size_t i = 0; i < cfg->outputscales.size(); ++i) {
    cfg->outputscales[i] = std::exp(h[p.os_offset + i]);
  }
  *noise = std::exp(h[p.noise_index]);
  *mean = h[p.mean_index];
}

namespace {

// Cached training-set matrices that do not depend on the hyperparameters.
struct LmlContext {
  const SearchSpace* space;
  FeatureGroups groups;
  Eigen::MatrixXd features;                 // n x m
  std::vector<Eigen::MatrixXd> ard_sqdiff;  // per ARD dim
  Eigen::MatrixXd bin_sqdist;               // sum over binary dims
  std::vector<Eigen::MatrixXd> cat_mismatch;
  Eigen::VectorXd targets;

  LmlContext(const SearchSpace& sp, KernelStructure structure,
             const std::vector<DesignPoint>& points, const Eigen::VectorXd& y)
      : space(&sp), groups(feature_groups(sp, structure)), targets(y) {
    const Eigen::Index n = static_cast<Eigen::Index>(points.size());
    features.resize(n, groups.m);
    for (Eigen::Index i = 0; i < n; ++i) {
      features.row(i) = encode_point(sp, points[static_cast<std::size_t>(i)], structure);
    }
    ard_sqdiff.reserve(groups.ard_dims.size());
    for (std::size_t d : groups.ard_dims) {
      const Eigen::MatrixXd diff = features.col(d) * Eigen::RowVectorXd::Ones(n) -
                                   Eigen::VectorXd::Ones(n) * features.col(d).transpose();
      ard_sqdiff.push_back(diff.cwiseProduct(diff));
    }
    bin_sqdist = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t d : groups.bin_dims) {
      const Eigen::MatrixXd diff = features.col(d) * Eigen::RowVectorXd::Ones(n) -
                                   Eigen::VectorXd::Ones(n) * features.col(d).transpose();
      bin_sqdist += diff.cwiseProduct(diff);
    }
    for (std::size_t d : groups.cat_dims) {
      Eigen::MatrixXd mask(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
          mask(i, j) = features(i, d) != features(j, d) ? 1.0 : 0.0;
        }
      }
      cat_mismatch.push_back(std::move(mask));
    }
  }
};

LmlResult lml_eval(const LmlContext& ctx, const KernelConfig& cfg, double mean,
                   double noise, bool with_gradient) {
  const SearchSpace& space = *ctx.space;
  const Eigen::Index n = ctx.features.rows();
  const HyperPacking packing = hyper_packing(space, cfg.structure);

  // component matrices from cached squared differences
  Eigen::MatrixXd r2_ard = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t j = 0; j < ctx.ard_sqdiff.size(); ++j) {
    r2_ard += ctx.ard_sqdiff[j] / (cfg.ard_lengthscales[j] * cfg.ard_lengthscales[j]);
  }
  const Eigen::MatrixXd r_ard = r2_ard.cwiseSqrt();
  Eigen::MatrixXd m_ard;
  if (ctx.ard_sqdiff.empty()) {
    m_ard = Eigen::MatrixXd::Ones(n, n);
  } else {
    m_ard = r_ard.unaryExpr([](double r) { return matern52(r); });
  }

  Eigen::MatrixXd r_bin, m_bin;
  if (!ctx.groups.bin_dims.empty()) {
    r_bin = (ctx.bin_sqdist / (cfg.binary_lengthscale * cfg.binary_lengthscale)).cwiseSqrt();
    m_bin = r_bin.unaryExpr([](double r) { return matern52(r); });
  } else {
    r_bin = Eigen::MatrixXd::Zero(n, n);
    m_bin = Eigen::MatrixXd::Ones(n, n);
  }

  Eigen::MatrixXd k_cat;
  if (!ctx.cat_mismatch.empty()) {
    Eigen::MatrixXd hw = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t c = 0; c < ctx.cat_mismatch.size(); ++c) {
      hw += cfg.categorical_weights[c] * ctx.cat_mismatch[c];
    }
    k_cat = (-hw).array().exp().matrix();
  } else {
    k_cat = Eigen::MatrixXd::Ones(n, n);
  }

  const Eigen::MatrixXd k_ord = m_bin.cwiseProduct(m_ard);
  Eigen::MatrixXd kf;
  if (cfg.structure == KernelStructure::kMaternOneHot) {
    kf = cfg.outputscales[0] * m_ard;
  } else {
    switch (term_layout(space)) {
      case TermLayout::kFull:
        kf = cfg.outputscales[0] * k_cat.cwiseProduct(k_ord) + cfg.outputscales[1] * k_cat +
             cfg.outputscales[2] * k_ord;
        break;
      case TermLayout::kCategoricalOnly: kf = cfg.outputscales[0] * k_cat; break;
      case TermLayout::kOrdinalOnly: kf = cfg.outputscales[0] * k_ord; break;
    }
  }

  const Eigen::MatrixXd k_noise = kf + noise * Eigen::MatrixXd::Identity(n, n);
  const CholResult chol = cholesky_with_jitter(k_noise);
  const Eigen::MatrixXd& lower = chol.lower;

  const Eigen::VectorXd resid = ctx.targets.array() - mean;
  const Eigen::VectorXd alpha = lower.transpose().triangularView<Eigen::Upper>().solve(
      lower.triangularView<Eigen::Lower>().solve(resid));

  double logdet = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) logdet += std::log(lower(i, i));
  logdet *= 2.0;

  LmlResult out;
  out.value = -0.5 * resid.dot(alpha) - 0.5 * logdet -
              0.5 * static_cast<double>(n) * kLogTwoPi;
  if (!with_gradient) return out;

  Eigen::MatrixXd kinv = Eigen::MatrixXd::Identity(n, n);
  lower.triangularView<Eigen::Lower>().solveInPlace(kinv);
  lower.transpose().triangularView<Eigen::Upper>().solveInPlace(kinv);
  // trace-identity factor: dL/d eta = 0.5 * <A, dK/d eta> with A = aa^T - K^-1
  const Eigen::MatrixXd a_mat = alpha * alpha.transpose() - kinv;

  auto contract = [&](const Eigen::MatrixXd& dk) {
    return 0.5 * a_mat.cwiseProduct(dk).sum();
  };

  // coefficient in front of d(k_ord) / d(k_cat)
  Eigen::MatrixXd coeff_ord, coeff_cat;
  if (cfg.structure == KernelStructure::kMaternOneHot) {
    coeff_ord = Eigen::MatrixXd::Constant(n, n, cfg.outputscales[0]);
    coeff_cat = Eigen::MatrixXd::Zero(n, n);
  } else {
    switch (term_layout(space)) {
      case TermLayout::kFull:
        coeff_ord = cfg.outputscales[0] * k_cat +
                    Eigen::MatrixXd::Constant(n, n, cfg.outputscales[2]);
        coeff_cat = cfg.outputscales[0] * k_ord +
                    Eigen::MatrixXd::Constant(n, n, cfg.outputscales[1]);
        break;
      case TermLayout::kCategoricalOnly:
        coeff_ord = Eigen::MatrixXd::Zero(n, n);
        coeff_cat = Eigen::MatrixXd::Constant(n, n, cfg.outputscales[0]);
        break;
      case TermLayout::kOrdinalOnly:
        coeff_ord = Eigen::MatrixXd::Constant(n, n, cfg.outputscales[0]);
        coeff_cat = Eigen::MatrixXd::Zero(n, n);
        break;
    }
  }

  out.gradient.resize(packing.size);

  const Eigen::MatrixXd g_ard = r_ard.unaryExpr([](double r) { return matern52_g(r); });
  if (packing.has_binary) {
    const Eigen::MatrixXd g_bin = r_bin.unaryExpr([](double r) { return matern52_g(r); });
    const Eigen::MatrixXd dm_bin =
        g_bin.cwiseProduct(ctx.bin_sqdist) /
        (cfg.binary_lengthscale * cfg.binary_lengthscale);
    out.gradient[0] = contract(coeff_ord.cwiseProduct(m_ard).cwiseProduct(dm_bin));
  }
  for (std::size_t j = 0; j < ctx.ard_sqdiff.size(); ++j) {
    const double inv_l2 = 1.0 / (cfg.ard_lengthscales[j] * cfg.ard_lengthscales[j]);
    const Eigen::MatrixXd dm_ard = g_ard.cwiseProduct(ctx.ard_sqdiff[j]) * inv_l2;
    out.gradient[packing.ard_offset + j] =
        contract(coeff_ord.cwiseProduct(m_bin).cwiseProduct(dm_ard));
  }
  for (std::size_t c = 0; c < ctx.cat_mismatch.size(); ++c) {
    const Eigen::MatrixXd dk_cat =
        -cfg.categorical_weights[c] * ctx.cat_mismatch[c].cwiseProduct(k_cat);
    out.gradient[packing.cat_offset + c] = contract(coeff_cat.cwiseProduct(dk_cat));
  }
  if (cfg.structure == KernelStructure::kMaternOneHot) {
    out.gradient[packing.os_offset] = contract(cfg.outputscales[0] * m_ard);
  } else {
    switch (term_layout(space)) {
      case TermLayout::kFull:
        out.gradient[packing.os_offset + 0] =
            contract(cfg.outputscales[0] * k_cat.cwiseProduct(k_ord));
        out.gradient[packing.os_offset + 1] = contract(cfg.outputscales[1] * k_cat);
        out.gradient[packing.os_offset + 2] = contract(cfg.outputscales[2] * k_ord);
        break;
      case TermLayout::kCategoricalOnly:
        out.gradient[packing.os_offset] = contract(cfg.outputscales[0] * k_cat);
        break;
      case TermLayout::kOrdinalOnly:
        out.gradient[packing.os_offset] = contract(cfg.outputscales[0] * k_ord);
        break;
    }
  }
  out.gradient[packing.noise_index] =
      0.5 * noise * (alpha.squaredNorm() - kinv.trace());
  out.gradient[packing.mean_index] = alpha.sum();
  return out;
}

}  // namespace

LmlResult log_marginal_likelihood(const KernelConfig& cfg, double mean, double noise,
                                  const SearchSpace& space,
                                  const std::vector<DesignPoint>& points,
                                  const Eigen::VectorXd& targets, bool with_gradient) {
  if (points.empty()) throw std::invalid_argument("log_marginal_likelihood needs >= 1 observation");
  if (static_cast<Eigen::Index>(points.size()) != targets.size()) {
    throw DimensionMismatchError("points/targets size mismatch");
  }
  const FeatureGroups groups = feature_groups(space, cfg.structure);
  check_config(cfg, space, groups);
  LmlContext ctx(space, cfg.structure, points, targets);
  return lml_eval(ctx, cfg, mean, noise, with_gradient);
}

double GPModel::prior_variance() const {
  return prior_amplitude(kernel_) * target_std_ * target_std_;
}

bool GPModel::smooth_in_all_relaxed_dims() const {
  return kernel_.structure == KernelStructure::kMaternOneHot ||
         space_.num_categorical() == 0;
}

GPModel GPModel::build(const SearchSpace& space, const KernelConfig& cfg, double mean,
                       double noise, const std::vector<DesignPoint>& points,
                       const std::vector<double>& raw_targets) {
  if (points.size() != raw_targets.size()) {
    throw DimensionMismatchError("points/targets size mismatch");
  }
  GPModel model;
  model.space_ = space;
  model.kernel_ = cfg;
  model.mean_constant_ = mean;
  model.noise_variance_ = noise;
  model.train_inputs_ = points;

  const Eigen::Index n = static_cast<Eigen::Index>(points.size());
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = raw_targets[static_cast<std::size_t>(i)];
  model.target_mean_ = y.mean();
  const double var = (y.array() - model.target_mean_).square().sum() /
                     std::max<double>(1.0, static_cast<double>(n - 1));
  model.target_std_ = std::sqrt(var);
  if (!(model.target_std_ > 1e-12)) model.target_std_ = 1.0;  // degenerate data
  model.targets_std_ = (y.array() - model.target_mean_) / model.target_std_;

  const FeatureGroups groups = feature_groups(space, cfg.structure);
  check_config(cfg, space, groups);
  model.train_features_.resize(n, groups.m);
  for (Eigen::Index i = 0; i < n; ++i) {
    model.train_features_.row(i) =
        encode_point(space, points[static_cast<std::size_t>(i)], cfg.structure);
  }
  const KernelParts parts =
      kernel_parts(cfg, space, groups, model.train_features_, model.train_features_);
  const Eigen::MatrixXd k_noise =
      parts.k + noise * Eigen::MatrixXd::Identity(n, n);
  const CholResult chol = cholesky_with_jitter(k_noise);
  model.chol_ = chol.lower;
  model.jitter_ = chol.jitter;
  const Eigen::VectorXd resid = model.targets_std_.array() - mean;
  model.alpha_ = model.chol_.transpose().triangularView<Eigen::Upper>().solve(
      model.chol_.triangularView<Eigen::Lower>().solve(resid));
  return model;
}

Posterior GPModel::posterior(const std::vector<DesignPoint>& points,
                             bool with_gradients) const {
  const FeatureGroups groups = feature_groups(space_, kernel_.structure);
  const Eigen::Index q = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd fq(q, groups.m);
  for (Eigen::Index i = 0; i < q; ++i) {
    fq.row(i) = encode_point(space_, points[static_cast<std::size_t>(i)], kernel_.structure);
  }

  const KernelParts parts = kernel_parts(kernel_, space_, groups, fq, train_features_);
  const Eigen::MatrixXd& kq = parts.k;  // q x n
  const double prior_var_std = prior_amplitude(kernel_) + jitter_;

  Posterior out;
  out.mean.resize(q);
  out.variance.resize(q);
  const Eigen::MatrixXd v =
      chol_.triangularView<Eigen::Lower>().solve(kq.transpose());  // n x q
  for (Eigen::Index i = 0; i < q; ++i) {
    const double mean_std = mean_constant_ + kq.row(i).dot(alpha_);
    double var_std = prior_var_std - v.col(i).squaredNorm();
    var_std = std::max(var_std, kVarianceFloor);
    out.mean[i] = target_mean_ + target_std_ * mean_std;
    out.variance[i] = target_std_ * target_std_ * var_std;
  }

  if (!with_gradients) return out;

  const std::size_t n_cont = space_.num_continuous();
  Eigen::MatrixXd dmean(q, n_cont), dvar(q, n_cont);
  const auto map = kernel_.structure == KernelStructure::kMixedSumProduct
                       ? mixed_feature_of_parameter(space_)
                       : std::vector<std::size_t>{};
  // feature index and unit scale for each continuous parameter
  std::vector<std::size_t> feat_of_cont(n_cont);
  std::vector<double> scale_of_cont(n_cont);
  for (std::size_t c = 0; c < n_cont; ++c) {
    const std::size_t pi = space_.continuous_indices()[c];
    const auto& desc = space_.parameter(pi);
    feat_of_cont[c] = kernel_.structure == KernelStructure::kMixedSumProduct
                          ? map[pi]
                          : space_.relaxed_offset(pi);
    scale_of_cont[c] = 1.0 / (desc.upper - desc.lower);
  }
  // position of a feature dim within the ARD lengthscale vector
  std::vector<int> ard_pos(groups.m, -1);
  for (std::size_t j = 0; j < groups.ard_dims.size(); ++j) {
    ard_pos[groups.ard_dims[j]] = static_cast<int>(j);
  }

  const Eigen::Index n = train_features_.rows();
  const Eigen::MatrixXd coeff = ord_coeff(kernel_, space_, parts);
  for (Eigen::Index i = 0; i < q; ++i) {
    Eigen::MatrixXd dk(n, n_cont);  // dk_*(j)/df_c for this query
    for (std::size_t c = 0; c < n_cont; ++c) {
      const std::size_t d = feat_of_cont[c];
      const int j_ard = ard_pos[d];
      const double inv_l2 =
          1.0 / (kernel_.ard_lengthscales[static_cast<std::size_t>(j_ard)] *
                 kernel_.ard_lengthscales[static_cast<std::size_t>(j_ard)]);
      for (Eigen::Index t = 0; t < n; ++t) {
        const double delta = fq(i, d) - train_features_(t, d);
        const double dm_ard = -matern52_g(parts.r_ard(i, t)) * delta * inv_l2;
        dk(t, c) = coeff(i, t) * parts.m_bin(i, t) * dm_ard;
      }
    }
    const Eigen::VectorXd w = v.col(i);
    const Eigen::MatrixXd dv = chol_.triangularView<Eigen::Lower>().solve(dk);
    for (std::size_t c = 0; c < n_cont; ++c) {
      const double dmean_std = dk.col(c).dot(alpha_);
      const double dvar_std = -2.0 * w.dot(dv.col(c));
      dmean(i, c) = target_std_ * dmean_std * scale_of_cont[c];
      dvar(i, c) = target_std_ * target_std_ * dvar_std * scale_of_cont[c];
    }
  }
  out.dmean_dx = std::move(dmean);
  out.dvariance_dx = std::move(dvar);
  return out;
}

GPModel::RelaxedEval GPModel::posterior_relaxed(const std::vector<double>& relaxed,
                                                bool with_gradients) const {
  const FeatureGroups groups = feature_groups(space_, kernel_.structure);
  Eigen::MatrixXd fq(1, groups.m);
  fq.row(0) = encode_relaxed(space_, relaxed, kernel_.structure);

  const KernelParts parts = kernel_parts(kernel_, space_, groups, fq, train_features_);
  const double prior_var_std = prior_amplitude(kernel_) + jitter_;
  const Eigen::VectorXd kq = parts.k.row(0);
  const Eigen::VectorXd w = chol_.triangularView<Eigen::Lower>().solve(kq);

  RelaxedEval out;
  const double mean_std = mean_constant_ + kq.dot(alpha_);
  const double var_std = std::max(prior_var_std - w.squaredNorm(), kVarianceFloor);
  out.mean = target_mean_ + target_std_ * mean_std;
  out.variance = target_std_ * target_std_ * var_std;
  if (!with_gradients) return out;

  const std::size_t rl = space_.relaxed_length();
  out.dmean_dr = Eigen::VectorXd::Zero(rl);
  out.dvariance_dr = Eigen::VectorXd::Zero(rl);

  std::vector<int> ard_pos(groups.m, -1);
  for (std::size_t j = 0; j < groups.ard_dims.size(); ++j) {
    ard_pos[groups.ard_dims[j]] = static_cast<int>(j);
  }
  std::vector<int> is_bin(groups.m, 0);
  for (std::size_t d : groups.bin_dims) is_bin[d] = 1;

  const auto map = kernel_.structure == KernelStructure::kMixedSumProduct
                       ? mixed_feature_of_parameter(space_)
                       : std::vector<std::size_t>{};
  const Eigen::Index n = train_features_.rows();
  const Eigen::MatrixXd coeff = ord_coeff(kernel_, space_, parts);

  // gradient of the kernel column with respect to one feature dim
  auto dk_column = [&](std::size_t d) {
    Eigen::VectorXd dk(n);
    if (ard_pos[d] >= 0) {
      const double l = kernel_.ard_lengthscales[static_cast<std::size_t>(ard_pos[d])];
      for (Eigen::Index t = 0; t < n; ++t) {
        const double delta = fq(0, d) - train_features_(t, d);
        const double dm = -matern52_g(parts.r_ard(0, t)) * delta / (l * l);
        dk[t] = coeff(0, t) * parts.m_bin(0, t) * dm;
      }
    } else if (is_bin[d]) {
      const double l = kernel_.binary_lengthscale;
      for (Eigen::Index t = 0; t < n; ++t) {
        const double delta = fq(0, d) - train_features_(t, d);
        const double dm = -matern52_g(parts.r_bin(0, t)) * delta / (l * l);
        dk[t] = coeff(0, t) * parts.m_ard(0, t) * dm;
      }
    } else {
      dk.setZero();  // categorical index feature: not smooth
    }
    return dk;
  };

  for (std::size_t i = 0; i < space_.size(); ++i) {
    const auto& desc = space_.parameter(i);
    const std::size_t off = space_.relaxed_offset(i);
    if (kernel_.structure == KernelStructure::kMixedSumProduct &&
        desc.kind == ParameterKind::kCategorical) {
      continue;  // zeros: argmax collapse has no smooth direction
    }
    const std::size_t block = desc.kind == ParameterKind::kCategorical
                                  ? static_cast<std::size_t>(desc.cardinality)
                                  : 1;
    for (std::size_t b = 0; b < block; ++b) {
      const std::size_t d = kernel_.structure == KernelStructure::kMixedSumProduct
                                ? map[i]
                                : off + b;
      double scale = 1.0;
      switch (desc.kind) {
        case ParameterKind::kContinuous: scale = 1.0 / (desc.upper - desc.lower); break;
        case ParameterKind::kOrdinal:
          scale = 1.0 / static_cast<double>(desc.cardinality - 1);
          break;
        default: scale = 1.0; break;
      }
      const Eigen::VectorXd dk = dk_column(d);
      const Eigen::VectorXd dw = chol_.triangularView<Eigen::Lower>().solve(dk);
      out.dmean_dr[off + b] = target_std_ * dk.dot(alpha_) * scale;
      out.dvariance_dr[off + b] =
          target_std_ * target_std_ * (-2.0 * w.dot(dw)) * scale;
    }
  }
  return out;
}

double GPModel::lengthscale_for_parameter(std::size_t index) const {
  const auto& desc = space_.parameter(index);
  if (kernel_.structure == KernelStructure::kMaternOneHot) {
    return kernel_.ard_lengthscales[space_.relaxed_offset(index)];
  }
  if (desc.kind == ParameterKind::kBinary) return kernel_.binary_lengthscale;
  if (desc.kind != ParameterKind::kContinuous && desc.kind != ParameterKind::kOrdinal) {
    throw std::invalid_argument("no ARD lengthscale for categorical parameters");
  }
  const auto map = mixed_feature_of_parameter(space_);
  // ARD vector covers continuous then ordinal features in layout order
  const std::size_t d = map[index];
  const FeatureGroups groups = feature_groups(space_, kernel_.structure);
  for (std::size_t j = 0; j < groups.ard_dims.size(); ++j) {
    if (groups.ard_dims[j] == d) return kernel_.ard_lengthscales[j];
  }
  throw std::logic_error("lengthscale lookup failed");
}

GPModel fit_gp(const SearchSpace& space, const std::vector<DesignPoint>& points,
               const std::vector<double>& raw_targets, std::uint64_t seed,
               const FitOptions& options) {
  if (points.size() < 2) throw std::invalid_argument("fit_gp needs >= 2 observations");
  if (points.size() != raw_targets.size()) {
    throw DimensionMismatchError("points/targets size mismatch");
  }

  const Eigen::Index n = static_cast<Eigen::Index>(points.size());
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = raw_targets[static_cast<std::size_t>(i)];
  const double t_mean = y.mean();
  double t_std = std::sqrt((y.array() - t_mean).square().sum() /
                           std::max<double>(1.0, static_cast<double>(n - 1)));
  if (!(t_std > 1e-12)) t_std = 1.0;
  const Eigen::VectorXd y_std = (y.array() - t_mean) / t_std;

  const HyperPacking packing = hyper_packing(space, options.structure);
  LmlContext ctx(space, options.structure, points, y_std);

  Eigen::VectorXd lo(packing.size), hi(packing.size);
  {
    const double log_ls_lo = std::log(0.005), log_ls_hi = std::log(10.0);
    const double log_w_lo = std::log(1e-3), log_w_hi = std::log(20.0);
    const double log_os_lo = std::log(0.01), log_os_hi = std::log(100.0);
    if (packing.has_binary) { lo[0] = log_ls_lo; hi[0] = log_ls_hi; }
    for (std::size_t i = packing.ard_offset; i < packing.cat_offset; ++i) {
      lo[i] = log_ls_lo; hi[i] = log_ls_hi;
    }
    for (std::size_t i = packing.cat_offset; i < packing.os_offset; ++i) {
      lo[i] = log_w_lo; hi[i] = log_w_hi;
    }
    for (std::size_t i = packing.os_offset; i < packing.noise_index; ++i) {
      lo[i] = log_os_lo; hi[i] = log_os_hi;
    }
    lo[packing.noise_index] = std::log(1e-6);
    hi[packing.noise_index] = std::log(1.0);
    lo[packing.mean_index] = -3.0;
    hi[packing.mean_index] = 3.0;
  }

  const KernelConfig defaults = default_kernel_config(space, options.structure);
  Eigen::VectorXd start0 = pack_hypers(defaults, 0.0, 1e-2, space);

  Rng rng = make_rng(derive_seed(seed, 0x666974ULL));
  auto random_start = [&]() {
    Eigen::VectorXd h(packing.size);
    auto logu = [&](double a, double b) { return std::log(a) + (std::log(b) - std::log(a)) * uniform01(rng); };
    if (packing.has_binary) h[0] = logu(0.05, 2.0);
    for (std::size_t i = packing.ard_offset; i < packing.cat_offset; ++i) h[i] = logu(0.05, 2.0);
    for (std::size_t i = packing.cat_offset; i < packing.os_offset; ++i) h[i] = logu(0.1, 5.0);
    for (std::size_t i = packing.os_offset; i < packing.noise_index; ++i) h[i] = logu(0.2, 5.0);
    h[packing.noise_index] = logu(1e-5, 0.1);
    h[packing.mean_index] = 0.0;
    return h;
  };

  double best_lml = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_h;
  int failures = 0;

  for (int restart = 0; restart < options.restarts; ++restart) {
    Eigen::VectorXd h = restart == 0 ? start0 : random_start();
    Eigen::VectorXd m1 = Eigen::VectorXd::Zero(packing.size);
    Eigen::VectorXd m2 = Eigen::VectorXd::Zero(packing.size);
    bool ok = true;
    KernelConfig cfg;
    double mean = 0.0, noise = 1e-2;
    for (int step = 0; step < options.steps; ++step) {
      unpack_hypers(h, space, options.structure, &cfg, &mean, &noise);
      LmlResult res;
      try {
        res = lml_eval(ctx, cfg, mean, noise, true);
      } catch (const CholeskyFailure&) {
        ok = false;
        break;
      }
      if (!res.gradient.allFinite()) { ok = false; break; }
      m1 = 0.9 * m1 + 0.1 * res.gradient;
      m2 = 0.999 * m2 + 0.001 * res.gradient.cwiseProduct(res.gradient);
      const double c1 = 1.0 - std::pow(0.9, step + 1);
      const double c2 = 1.0 - std::pow(0.999, step + 1);
      for (std::size_t i = 0; i < packing.size; ++i) {
        const double update = options.learning_rate * (m1[i] / c1) /
                              (std::sqrt(m2[i] / c2) + 1e-8);
        h[i] = std::clamp(h[i] + update, lo[i], hi[i]);
      }
    }
    if (!ok) { ++failures; continue; }
    unpack_hypers(h, space, options.structure, &cfg, &mean, &noise);
    double final_lml;
    try {
      final_lml = lml_eval(ctx, cfg, mean, noise, false).value;
    } catch (const CholeskyFailure&) {
      ++failures;
      continue;
    }
    if (final_lml > best_lml) {
      best_lml = final_lml;
      best_h = h;
    }
  }

  if (!best_h.size()) throw FitFailure("all restarts failed: " + std::to_string(failures));

  KernelConfig cfg;
  double mean = 0.0, noise = 1e-2;
  unpack_hypers(best_h, space, options.structure, &cfg, &mean, &noise);
  return GPModel::build(space, cfg, mean, noise, points, raw_targets);
}

std::string GPModel::to_json() const {
  nlohmann::json j;
  j["structure"] = kernel_.structure == KernelStructure::kMaternOneHot ? "matern_onehot"
                                                                       : "mixed_sum_product";
  j["binary_lengthscale"] = kernel_.binary_lengthscale;
  j["ard_lengthscales"] = kernel_.ard_lengthscales;
  j["categorical_weights"] = kernel_.categorical_weights;
  j["outputscales"] = kernel_.outputscales;
  j["mean_constant"] = mean_constant_;
  j["noise_variance"] = noise_variance_;
  j["space"] = nlohmann::json::parse(space_to_json(space_));
  nlohmann::json xs = nlohmann::json::array();
  nlohmann::json ys = nlohmann::json::array();
  for (std::size_t i = 0; i < train_inputs_.size(); ++i) {
    xs.push_back(train_inputs_[i].values);
    ys.push_back(target_mean_ + target_std_ * targets_std_[static_cast<Eigen::Index>(i)]);
  }
  j["train_inputs"] = std::move(xs);
  j["train_targets"] = std::move(ys);
  return j.dump();
}

GPModel GPModel::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  const SearchSpace space = space_from_json(j.at("space").dump());
  KernelConfig cfg;
  cfg.structure = j.at("structure").get<std::string>() == "matern_onehot"
                      ? KernelStructure::kMaternOneHot
                      : KernelStructure::kMixedSumProduct;
  cfg.binary_lengthscale = j.at("binary_lengthscale").get<double>();
  cfg.ard_lengthscales = j.at("ard_lengthscales").get<std::vector<double>>();
  cfg.categorical_weights = j.at("categorical_weights").get<std::vector<double>>();
  cfg.outputscales = j.at("outputscales").get<std::vector<double>>();
  std::vector<DesignPoint> points;
  for (const auto& row : j.at("train_inputs")) {
    points.push_back(DesignPoint{row.get<std::vector<double>>()});
  }
  const auto targets = j.at("train_targets").get<std::vector<double>>();
  return GPModel::build(space, cfg, j.at("mean_constant").get<double>(),
                        j.at("noise_variance").get<double>(), points, targets);
}

}  // namespace mixedbo
