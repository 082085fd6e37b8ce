#include "mixedbo/acquisition.hpp"

#include <cmath>
#include <stdexcept>

namespace mixedbo {
namespace {

constexpr double kSigmaFloor = 1e-9;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
constexpr double kInvSqrt2 = 0.70710678118654752440;

double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

struct EiParts {
  double value = 0.0;
  double dmu = 0.0;     // d EI / d mean
  double dsigma = 0.0;  // d EI / d sigma
};

EiParts ei_parts(double mu, double sigma, double incumbent) {
  EiParts p;
  if (sigma < kSigmaFloor) {
    p.value = std::max(mu - incumbent, 0.0);
    p.dmu = mu > incumbent ? 1.0 : 0.0;
    p.dsigma = 0.0;
    return p;
  }
  const double u = (mu - incumbent) / sigma;
  p.value = sigma * (u * normal_cdf(u) + normal_pdf(u));
  p.dmu = normal_cdf(u);
  p.dsigma = normal_pdf(u);
  return p;
}

void check_spec(const AcquisitionSpec& spec) {
  if (spec.objective_model == nullptr) {
    throw std::invalid_argument("acquisition spec has no objective model");
  }
  if (spec.kind == AcquisitionKind::kUcb && !(spec.beta > 0.0)) {
    throw std::invalid_argument("ucb needs beta > 0");
  }
  if (spec.kind == AcquisitionKind::kConstrainedEi && spec.constraint_models.empty()) {
    throw std::invalid_argument("constrained ei needs at least one constraint model");
  }
}

// Generic evaluation on (mean, var, optional gradients) callbacks so the
// design-point and relaxed paths share the acquisition math.
template <typename Stats>
AcqEval evaluate_impl(const AcquisitionSpec& spec, bool with_grad, Stats&& stats) {
  // stats(model_index) -> {mean, var, dmean, dvar}; index 0 = objective,
  // 1..V = constraints. Gradient vectors may be empty when !with_grad.
  auto [mu, var, dmu, dvar] = stats(0);
  const double sigma = std::sqrt(std::max(var, 0.0));

  AcqEval out;
  const Eigen::Index gdim = dmu.size();
  if (with_grad) out.grad_x = Eigen::VectorXd::Zero(gdim);

  auto dsigma_vec = [&](double s, const Eigen::VectorXd& dv) -> Eigen::VectorXd {
    return dv / (2.0 * std::max(s, kSigmaFloor));
  };

  switch (spec.kind) {
    case AcquisitionKind::kEi: {
      const EiParts p = ei_parts(mu, sigma, spec.incumbent);
      out.value = p.value;
      if (with_grad) out.grad_x = p.dmu * dmu + p.dsigma * dsigma_vec(sigma, dvar);
      return out;
    }
    case AcquisitionKind::kUcb: {
      const double root_beta = std::sqrt(spec.beta);
      out.value = mu + root_beta * sigma;
      if (with_grad) out.grad_x = dmu + root_beta * dsigma_vec(sigma, dvar);
      return out;
    }
    case AcquisitionKind::kConstrainedEi: {
      const EiParts p = ei_parts(mu, sigma, spec.incumbent);
      double prob_all = 1.0;
      std::vector<double> probs(spec.constraint_models.size());
      std::vector<Eigen::VectorXd> dprobs;
      if (with_grad) dprobs.resize(spec.constraint_models.size());
      for (std::size_t v = 0; v < spec.constraint_models.size(); ++v) {
        auto [cm, cv, dcm, dcv] = stats(static_cast<int>(v) + 1);
        const double cs = std::max(std::sqrt(std::max(cv, 0.0)), kSigmaFloor);
        const double z = cm / cs;
        probs[v] = normal_cdf(z);
        prob_all *= probs[v];
        if (with_grad) {
          const Eigen::VectorXd ds = dsigma_vec(cs, dcv);
          dprobs[v] = normal_pdf(z) * (dcm / cs - cm / (cs * cs) * ds);
        }
      }
      out.value = p.value * prob_all;
      if (with_grad) {
        Eigen::VectorXd dei = p.dmu * dmu + p.dsigma * dsigma_vec(sigma, dvar);
        out.grad_x = dei * prob_all;
        for (std::size_t v = 0; v < spec.constraint_models.size(); ++v) {
          double rest = p.value;
          for (std::size_t w = 0; w < probs.size(); ++w) {
            if (w != v) rest *= probs[w];
          }
          out.grad_x += rest * dprobs[v];
        }
      }
      return out;
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace

AcqEval evaluate(const AcquisitionSpec& spec, const SearchSpace& space,
                 const DesignPoint& point, bool with_grad_x) {
  check_spec(spec);
  validate(space, point);
  const std::vector<DesignPoint> pts{point};

  auto stats = [&](int index) {
    const GPModel* model = index == 0
                               ? spec.objective_model
                               : spec.constraint_models[static_cast<std::size_t>(index - 1)];
    const Posterior post = model->posterior(pts, with_grad_x);
    Eigen::VectorXd dmu, dvar;
    if (with_grad_x) {
      dmu = post.dmean_dx->row(0);
      dvar = post.dvariance_dx->row(0);
    } else {
      dmu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.num_continuous()));
      dvar = dmu;
    }
    return std::make_tuple(post.mean[0], post.variance[0], dmu, dvar);
  };
  return evaluate_impl(spec, with_grad_x, stats);
}

Eigen::VectorXd evaluate_batch(const AcquisitionSpec& spec, const SearchSpace& space,
                               const std::vector<DesignPoint>& points) {
  check_spec(spec);
  constexpr std::size_t kChunk = 32;
  Eigen::VectorXd values(static_cast<Eigen::Index>(points.size()));
  for (std::size_t start = 0; start < points.size(); start += kChunk) {
    const std::size_t len = std::min(kChunk, points.size() - start);
    const std::vector<DesignPoint> chunk(points.begin() + static_cast<std::ptrdiff_t>(start),
                                         points.begin() + static_cast<std::ptrdiff_t>(start + len));
    const Posterior post = spec.objective_model->posterior(chunk, false);
    std::vector<Posterior> cpost;
    if (spec.kind == AcquisitionKind::kConstrainedEi) {
      cpost.reserve(spec.constraint_models.size());
      for (const GPModel* m : spec.constraint_models) cpost.push_back(m->posterior(chunk, false));
    }
    for (std::size_t i = 0; i < len; ++i) {
      const Eigen::Index ii = static_cast<Eigen::Index>(i);
      auto stats = [&](int index) {
        const Posterior& p = index == 0 ? post : cpost[static_cast<std::size_t>(index - 1)];
        return std::make_tuple(p.mean[ii], p.variance[ii], Eigen::VectorXd{}, Eigen::VectorXd{});
      };
      values[static_cast<Eigen::Index>(start + i)] = evaluate_impl(spec, false, stats).value;
    }
  }
  (void)space;
  return values;
}

RelaxedAcqEval evaluate_relaxed(const AcquisitionSpec& spec, const SearchSpace& space,
                                const std::vector<double>& relaxed, bool with_grad) {
  check_spec(spec);
  auto stats = [&](int index) {
    const GPModel* model = index == 0
                               ? spec.objective_model
                               : spec.constraint_models[static_cast<std::size_t>(index - 1)];
    const GPModel::RelaxedEval ev = model->posterior_relaxed(relaxed, with_grad);
    Eigen::VectorXd dmu, dvar;
    if (with_grad) {
      dmu = ev.dmean_dr;
      dvar = ev.dvariance_dr;
    } else {
      dmu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.relaxed_length()));
      dvar = dmu;
    }
    return std::make_tuple(ev.mean, ev.variance, dmu, dvar);
  };
  const AcqEval ev = evaluate_impl(spec, with_grad, stats);
  RelaxedAcqEval out;
  out.value = ev.value;
  out.grad_r = ev.grad_x;
  return out;
}

double ucb_beta(int iteration, std::size_t d_eff) {
  if (iteration < 1) throw std::invalid_argument("ucb_beta needs iteration >= 1");
  return 0.2 * static_cast<double>(d_eff) * std::log(2.0 * iteration);
}

AcqOracle make_oracle(const AcquisitionSpec& spec, const SearchSpace& space) {
  check_spec(spec);
  AcqOracle oracle;
  oracle.eval = [spec, space](const DesignPoint& p, bool with_grad) {
    return evaluate(spec, space, p, with_grad);
  };
  oracle.eval_batch = [spec, space](const std::vector<DesignPoint>& pts) {
    return evaluate_batch(spec, space, pts);
  };
  oracle.eval_relaxed = [spec, space](const std::vector<double>& relaxed, bool with_grad) {
    return evaluate_relaxed(spec, space, relaxed, with_grad);
  };
  bool smooth = spec.objective_model->smooth_in_all_relaxed_dims();
  for (const GPModel* m : spec.constraint_models) smooth = smooth && m->smooth_in_all_relaxed_dims();
  oracle.smooth_relaxed = smooth;
  return oracle;
}

}  // namespace mixedbo
