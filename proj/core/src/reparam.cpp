#include "mixedbo/reparam.hpp"

#include <algorithm>
#include <cmath>

#include "mixedbo/sobol.hpp"

namespace mixedbo {
namespace {

double sigmoid(double t) {
  if (t >= 0.0) {
    const double e = std::exp(-t);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}

const ParameterDescriptor& discrete_param(const SearchSpace& space, std::size_t j) {
  return space.parameter(space.discrete_indices()[j]);
}

// Inverse-uniform map h(theta, u) shared by sample() and saa_sample().
double draw_component(const ParameterDescriptor& desc, const double* theta_block,
                      double u) {
  switch (desc.kind) {
    case ParameterKind::kBinary:
      return u < theta_block[0] ? 1.0 : 0.0;
    case ParameterKind::kOrdinal: {
      const double k = std::floor(theta_block[0]);
      const double frac = theta_block[0] - k;
      return k + (u < frac ? 1.0 : 0.0);
    }
    case ParameterKind::kCategorical: {
      double cum = 0.0;
      int last_positive = 0;
      for (int c = 0; c < desc.cardinality; ++c) {
        if (theta_block[c] > 0.0) last_positive = c;
        cum += theta_block[c];
        if (u < cum) return static_cast<double>(c);
      }
      return static_cast<double>(last_positive);  // u beyond cum by roundoff
    }
    default:
      throw std::logic_error("draw_component on continuous parameter");
  }
}

}  // namespace

ThetaLayout theta_layout(const SearchSpace& space) {
  ThetaLayout layout;
  layout.offsets.reserve(space.num_discrete());
  for (std::size_t i : space.discrete_indices()) {
    layout.offsets.push_back(layout.size);
    const auto& p = space.parameter(i);
    layout.size += p.kind == ParameterKind::kCategorical
                       ? static_cast<std::size_t>(p.cardinality)
                       : 1;
  }
  return layout;
}

std::size_t theta_dim(const SearchSpace& space) { return theta_layout(space).size; }

TransformResult transform(const SearchSpace& space, const RawParams& raw) {
  if (!(raw.tau > 0.0)) throw std::invalid_argument("transform needs tau > 0");
  const ThetaLayout layout = theta_layout(space);
  if (raw.phi.size() != layout.size) {
    throw LayoutMismatchError("raw parameter vector length mismatch");
  }
  TransformResult out;
  out.theta.theta.resize(layout.size);
  out.jacobian.reserve(space.num_discrete());
  const double inv_tau = 1.0 / raw.tau;

  for (std::size_t j = 0; j < space.num_discrete(); ++j) {
    const auto& desc = discrete_param(space, j);
    const std::size_t off = layout.offsets[j];
    switch (desc.kind) {
      case ParameterKind::kBinary: {
        const double s = sigmoid((raw.phi[off] - 0.5) * inv_tau);
        out.theta.theta[off] = s;
        Eigen::MatrixXd jac(1, 1);
        jac(0, 0) = s * (1.0 - s) * inv_tau;
        out.jacobian.push_back(std::move(jac));
        break;
      }
      case ParameterKind::kOrdinal: {
        const double floor_phi = std::floor(raw.phi[off]);
        const double frac = raw.phi[off] - floor_phi;
        const double s = sigmoid((frac - 0.5) * inv_tau);
        double theta = floor_phi + s;
        double dtheta = s * (1.0 - s) * inv_tau;
        const double top = static_cast<double>(desc.cardinality - 1);
        if (theta > top) {  // phi at the upper box corner
          theta = top;
          dtheta = 0.0;
        }
        out.theta.theta[off] = theta;
        Eigen::MatrixXd jac(1, 1);
        jac(0, 0) = dtheta;
        out.jacobian.push_back(std::move(jac));
        break;
      }
      case ParameterKind::kCategorical: {
        const int c_n = desc.cardinality;
        Eigen::VectorXd logits(c_n);
        for (int c = 0; c < c_n; ++c) {
          logits[c] = (raw.phi[off + static_cast<std::size_t>(c)] - 0.5) * inv_tau;
        }
        const double max_logit = logits.maxCoeff();
        Eigen::VectorXd expv = (logits.array() - max_logit).exp();
        const double denom = expv.sum();
        Eigen::VectorXd theta = expv / denom;
        for (int c = 0; c < c_n; ++c) {
          out.theta.theta[off + static_cast<std::size_t>(c)] = theta[c];
        }
        Eigen::MatrixXd jac = (theta.asDiagonal().toDenseMatrix() -
                               theta * theta.transpose()) *
                              inv_tau;
        out.jacobian.push_back(std::move(jac));
        break;
      }
      default:
        break;
    }
  }
  return out;
}

void phi_bounds(const SearchSpace& space, std::vector<double>* lo, std::vector<double>* hi) {
  const ThetaLayout layout = theta_layout(space);
  lo->assign(layout.size, 0.0);
  hi->assign(layout.size, 1.0);
  for (std::size_t j = 0; j < space.num_discrete(); ++j) {
    const auto& desc = discrete_param(space, j);
    if (desc.kind == ParameterKind::kOrdinal) {
      (*hi)[layout.offsets[j]] = static_cast<double>(desc.cardinality - 1);
    }
  }
}

DesignPoint assemble_design(const SearchSpace& space, const std::vector<double>& x_continuous,
                            const DiscreteAssignment& z) {
  if (x_continuous.size() != space.num_continuous() || z.size() != space.num_discrete()) {
    throw LayoutMismatchError("assemble_design part sizes mismatch");
  }
  DesignPoint p;
  p.values.resize(space.size());
  for (std::size_t c = 0; c < x_continuous.size(); ++c) {
    p.values[space.continuous_indices()[c]] = x_continuous[c];
  }
  for (std::size_t j = 0; j < z.size(); ++j) {
    p.values[space.discrete_indices()[j]] = z[j];
  }
  return p;
}

DiscreteAssignment discrete_part(const SearchSpace& space, const DesignPoint& p) {
  DiscreteAssignment z(space.num_discrete());
  for (std::size_t j = 0; j < z.size(); ++j) z[j] = p.values[space.discrete_indices()[j]];
  return z;
}

std::vector<double> continuous_part(const SearchSpace& space, const DesignPoint& p) {
  std::vector<double> x(space.num_continuous());
  for (std::size_t c = 0; c < x.size(); ++c) x[c] = p.values[space.continuous_indices()[c]];
  return x;
}

LogProbResult log_prob(const SearchSpace& space, const DistributionParams& theta,
                       const DiscreteAssignment& z) {
  const ThetaLayout layout = theta_layout(space);
  if (theta.theta.size() != layout.size || z.size() != space.num_discrete()) {
    throw LayoutMismatchError("log_prob input sizes mismatch");
  }
  LogProbResult out;
  out.score = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.size));
  for (std::size_t j = 0; j < space.num_discrete(); ++j) {
    const auto& desc = discrete_param(space, j);
    const std::size_t off = layout.offsets[j];
    const double zj = z[j];
    switch (desc.kind) {
      case ParameterKind::kBinary: {
        const double t = theta.theta[off];
        const double p = zj == 1.0 ? t : 1.0 - t;
        if (!(p > 0.0)) throw ZeroProbabilityError("binary value has zero probability");
        out.log_prob += std::log(p);
        out.score[static_cast<Eigen::Index>(off)] = zj == 1.0 ? 1.0 / t : -1.0 / (1.0 - t);
        break;
      }
      case ParameterKind::kOrdinal: {
        const double t = theta.theta[off];
        const double k = std::floor(t);
        const double frac = t - k;
        double p, score;
        if (zj == k + 1.0) {
          p = frac;
          score = frac > 0.0 ? 1.0 / frac : 0.0;
        } else if (zj == k) {
          p = 1.0 - frac;
          score = -1.0 / (1.0 - frac);
        } else {
          p = 0.0;
          score = 0.0;
        }
        if (!(p > 0.0)) throw ZeroProbabilityError("ordinal value has zero probability");
        out.log_prob += std::log(p);
        out.score[static_cast<Eigen::Index>(off)] = score;
        break;
      }
      case ParameterKind::kCategorical: {
        const int zc = static_cast<int>(zj);
        const double p = theta.theta[off + static_cast<std::size_t>(zc)];
        if (!(p > 0.0)) throw ZeroProbabilityError("categorical value has zero probability");
        out.log_prob += std::log(p);
        // tangent-projected score: e_z / theta_z - 1
        for (int c = 0; c < desc.cardinality; ++c) {
          out.score[static_cast<Eigen::Index>(off + static_cast<std::size_t>(c))] =
              (c == zc ? 1.0 / p : 0.0) - 1.0;
        }
        break;
      }
      default:
        break;
    }
  }
  return out;
}

std::vector<double> marginal_pmf(const SearchSpace& space, const DistributionParams& theta,
                                 std::size_t discrete_index) {
  const ThetaLayout layout = theta_layout(space);
  const auto& desc = discrete_param(space, discrete_index);
  const std::size_t off = layout.offsets[discrete_index];
  std::vector<double> pmf(static_cast<std::size_t>(desc.levels()), 0.0);
  switch (desc.kind) {
    case ParameterKind::kBinary:
      pmf[0] = 1.0 - theta.theta[off];
      pmf[1] = theta.theta[off];
      break;
    case ParameterKind::kOrdinal: {
      const double t = theta.theta[off];
      const double k = std::floor(t);
      const double frac = t - k;
      const int ki = static_cast<int>(k);
      pmf[static_cast<std::size_t>(ki)] = 1.0 - frac;
      if (frac > 0.0 && ki + 1 < desc.cardinality) {
        pmf[static_cast<std::size_t>(ki + 1)] = frac;
      }
      break;
    }
    case ParameterKind::kCategorical:
      for (int c = 0; c < desc.cardinality; ++c) {
        pmf[static_cast<std::size_t>(c)] = theta.theta[off + static_cast<std::size_t>(c)];
      }
      break;
    default:
      break;
  }
  return pmf;
}

std::vector<DiscreteAssignment> sample(const SearchSpace& space,
                                       const DistributionParams& theta, std::size_t n,
                                       Rng& rng) {
  const ThetaLayout layout = theta_layout(space);
  if (theta.theta.size() != layout.size) {
    throw LayoutMismatchError("theta vector length mismatch");
  }
  std::vector<DiscreteAssignment> out(n, DiscreteAssignment(space.num_discrete()));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < space.num_discrete(); ++j) {
      const auto& desc = discrete_param(space, j);
      out[i][j] = draw_component(desc, theta.theta.data() + layout.offsets[j], uniform01(rng));
    }
  }
  return out;
}

BaseSampleSet make_base_samples(const SearchSpace& space, std::size_t n, std::uint64_t seed) {
  BaseSampleSet base;
  base.seed = seed;
  const std::size_t d_z = space.num_discrete();
  base.uniforms.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d_z));
  if (d_z == 0) return base;
  SobolSequence seq(d_z, seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> u = seq.next();
    for (std::size_t j = 0; j < d_z; ++j) {
      base.uniforms(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = u[j];
    }
  }
  return base;
}

std::vector<DiscreteAssignment> saa_sample(const SearchSpace& space,
                                           const DistributionParams& theta,
                                           const BaseSampleSet& base) {
  const ThetaLayout layout = theta_layout(space);
  if (theta.theta.size() != layout.size) {
    throw LayoutMismatchError("theta vector length mismatch");
  }
  if (static_cast<std::size_t>(base.uniforms.cols()) != space.num_discrete()) {
    throw LayoutMismatchError("base sample set has wrong number of columns");
  }
  const std::size_t n = static_cast<std::size_t>(base.uniforms.rows());
  std::vector<DiscreteAssignment> out(n, DiscreteAssignment(space.num_discrete()));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < space.num_discrete(); ++j) {
      const auto& desc = discrete_param(space, j);
      out[i][j] = draw_component(desc, theta.theta.data() + layout.offsets[j],
                                 base.uniforms(static_cast<Eigen::Index>(i),
                                               static_cast<Eigen::Index>(j)));
    }
  }
  return out;
}

std::vector<DiscreteAssignment> enumerate_discrete(const SearchSpace& space,
                                                   std::uint64_t cap) {
  const std::uint64_t count = space.discrete_configurations(cap);
  if (count > cap) {
    throw SpaceTooLargeError("discrete space exceeds enumeration cap " + std::to_string(cap));
  }
  std::vector<DiscreteAssignment> out;
  out.reserve(count);
  DiscreteAssignment current(space.num_discrete(), 0.0);
  const std::size_t d_z = space.num_discrete();
  if (d_z == 0) {
    out.push_back(current);
    return out;
  }
  for (;;) {
    out.push_back(current);
    // odometer: last parameter varies fastest
    std::size_t j = d_z;
    while (j > 0) {
      --j;
      const int levels = discrete_param(space, j).levels();
      if (current[j] + 1.0 < static_cast<double>(levels)) {
        current[j] += 1.0;
        break;
      }
      current[j] = 0.0;
      if (j == 0) return out;
    }
  }
}

AnalyticPo analytic_po(const AcqOracle& af, const SearchSpace& space,
                       const std::vector<double>& x, const DistributionParams& theta,
                       std::uint64_t cap) {
  const std::vector<DiscreteAssignment> configs = enumerate_discrete(space, cap);
  const ThetaLayout layout = theta_layout(space);

  AnalyticPo out;
  out.grad_theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.size));
  out.grad_x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.num_continuous()));

  for (const DiscreteAssignment& z : configs) {
    // joint mass; skip zero-mass configurations (point-mass thetas)
    double p = 1.0;
    for (std::size_t j = 0; j < space.num_discrete() && p > 0.0; ++j) {
      const auto pmf = marginal_pmf(space, theta, j);
      p *= pmf[static_cast<std::size_t>(z[j])];
    }
    if (!(p > 0.0)) continue;
    const AcqEval ev = af.eval(assemble_design(space, x, z), true);
    const LogProbResult lp = log_prob(space, theta, z);
    out.value += p * ev.value;
    out.grad_theta += p * ev.value * lp.score;
    out.grad_x += p * ev.grad_x;
  }
  return out;
}

double mc_po(const AcqOracle& af, const SearchSpace& space, const std::vector<double>& x,
             const std::vector<DiscreteAssignment>& samples) {
  if (samples.empty()) throw std::invalid_argument("mc_po needs >= 1 sample");
  std::vector<DesignPoint> designs;
  designs.reserve(samples.size());
  for (const auto& z : samples) designs.push_back(assemble_design(space, x, z));
  return af.eval_batch(designs).mean();
}

BaselineState update_baseline(const BaselineState& state, double batch_mean_af) {
  BaselineState next = state;
  if (!state.initialized) {
    next.value = batch_mean_af;
    next.initialized = true;
  } else {
    next.value = state.decay * state.value + (1.0 - state.decay) * batch_mean_af;
  }
  return next;
}

McPoGrad mc_po_grad(const AcqOracle& af, const SearchSpace& space,
                    const std::vector<double>& x, const DistributionParams& theta,
                    const std::vector<DiscreteAssignment>& samples,
                    const BaselineState& baseline) {
  if (samples.empty()) throw std::invalid_argument("mc_po_grad needs >= 1 sample");
  const ThetaLayout layout = theta_layout(space);
  const double beta = baseline.initialized ? baseline.value : 0.0;

  McPoGrad out;
  out.grad_theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.size));
  out.grad_x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.num_continuous()));

  double sum_af = 0.0;
  for (const auto& z : samples) {
    const AcqEval ev = af.eval(assemble_design(space, x, z), true);
    const LogProbResult lp = log_prob(space, theta, z);
    sum_af += ev.value;
    out.grad_theta += (ev.value - beta) * lp.score;
    out.grad_x += ev.grad_x;
  }
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  out.grad_theta *= inv_n;
  out.grad_x *= inv_n;
  out.batch_mean_af = sum_af * inv_n;
  return out;
}

Eigen::VectorXd chain_to_phi(const SearchSpace& space, const TransformResult& tr,
                             const Eigen::VectorXd& grad_theta) {
  const ThetaLayout layout = theta_layout(space);
  Eigen::VectorXd grad_phi = Eigen::VectorXd::Zero(grad_theta.size());
  for (std::size_t j = 0; j < space.num_discrete(); ++j) {
    const std::size_t off = layout.offsets[j];
    const Eigen::MatrixXd& jac = tr.jacobian[j];
    const Eigen::Index block = jac.rows();
    grad_phi.segment(static_cast<Eigen::Index>(off), block) =
        jac.transpose() * grad_theta.segment(static_cast<Eigen::Index>(off), block);
  }
  return grad_phi;
}

}  // namespace mixedbo
