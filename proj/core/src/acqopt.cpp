#include "mixedbo/acqopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mixedbo/rng.hpp"
#include "mixedbo/sobol.hpp"

namespace mixedbo {
namespace {

constexpr double kOrdinalEdge = 1e-9;  // keeps round-half-up inside the top level

struct InternalLayout {
  std::vector<double> lo, hi;  // per internal coordinate
};

// Internal optimizer layout = relaxed layout with continuous coordinates in
// normalized [0,1] units, ordinals in level units, binary/categorical in [0,1].
InternalLayout internal_layout(const SearchSpace& space, const BoxSet& boxes) {
  InternalLayout l;
  l.lo.resize(space.relaxed_length());
  l.hi.resize(space.relaxed_length());
  std::size_t cont = 0, disc = 0;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& p = space.parameter(i);
    const std::size_t off = space.relaxed_offset(i);
    switch (p.kind) {
      case ParameterKind::kContinuous:
        l.lo[off] = boxes.cont_lo[cont];
        l.hi[off] = boxes.cont_hi[cont];
        ++cont;
        break;
      case ParameterKind::kBinary:
        l.lo[off] = 0.0;
        l.hi[off] = 1.0;
        ++disc;
        break;
      case ParameterKind::kOrdinal:
        l.lo[off] = static_cast<double>(boxes.ord_lo[disc]) - 0.5;
        l.hi[off] = static_cast<double>(boxes.ord_hi[disc]) + 0.5 - kOrdinalEdge;
        ++disc;
        break;
      case ParameterKind::kCategorical:
        for (int c = 0; c < p.cardinality; ++c) {
          l.lo[off + static_cast<std::size_t>(c)] = 0.0;
          l.hi[off + static_cast<std::size_t>(c)] = 1.0;
        }
        ++disc;
        break;
    }
  }
  return l;
}

void project(std::vector<double>* v, const InternalLayout& l) {
  for (std::size_t i = 0; i < v->size(); ++i) {
    (*v)[i] = std::clamp((*v)[i], l.lo[i], l.hi[i]);
  }
}

DesignPoint discretize_internal(const SearchSpace& space, const std::vector<double>& v) {
  RelaxedPoint r;
  r.values = internal_to_relaxed(space, v);
  return discretize(space, r);
}

double range_of(const ParameterDescriptor& p) { return p.upper - p.lower; }

// ---------------------------------------------------------------------------
// shared ascent routines

struct AscentResult {
  std::vector<double> v;
  double value = -std::numeric_limits<double>::infinity();
  std::vector<double> trajectory;
  bool ok = true;  // false when a non-finite gradient aborted the run
};

// Monotone projected gradient ascent with a backtracking line search.
AscentResult ascend_backtracking(
    const std::function<std::pair<double, Eigen::VectorXd>(const std::vector<double>&, bool)>& f,
    std::vector<double> v, const InternalLayout& layout, int max_iterations) {
  AscentResult out;
  auto [fv, grad] = f(v, true);
  out.trajectory.push_back(fv);
  for (int it = 0; it < max_iterations; ++it) {
    if (!grad.allFinite()) {
      out.ok = std::isfinite(fv);
      break;
    }
    const double gmax = grad.cwiseAbs().maxCoeff();
    if (!(gmax > 1e-12)) break;
    double step = 1.0 / gmax;  // first probe moves one unit in the largest coord
    bool accepted = false;
    std::vector<double> v_try(v.size());
    for (int trial = 0; trial < 12; ++trial) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        v_try[i] = v[i] + step * grad[static_cast<Eigen::Index>(i)];
      }
      project(&v_try, layout);
      const double f_try = f(v_try, false).first;
      if (f_try > fv + 1e-12) {
        v = v_try;
        fv = f_try;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    auto [nfv, ngrad] = f(v, true);
    fv = nfv;
    grad = std::move(ngrad);
    out.trajectory.push_back(fv);
  }
  out.v = std::move(v);
  out.value = fv;
  return out;
}

// Fixed-rate Adam ascent for objectives whose gradient is a surrogate of the
// forward value (straight-through); tracks the best forward iterate.
AscentResult ascend_adam(
    const std::function<std::pair<double, Eigen::VectorXd>(const std::vector<double>&, bool)>& f,
    std::vector<double> v, const InternalLayout& layout, int max_iterations, double lr) {
  AscentResult out;
  const std::size_t dim = v.size();
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  out.value = -std::numeric_limits<double>::infinity();
  for (int t = 1; t <= max_iterations; ++t) {
    auto [fv, grad] = f(v, true);
    out.trajectory.push_back(fv);
    if (fv > out.value) {
      out.value = fv;
      out.v = v;
    }
    if (!grad.allFinite()) {
      out.ok = false;
      break;
    }
    m1 = 0.9 * m1 + 0.1 * grad;
    m2 = 0.999 * m2 + 0.001 * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(0.9, t);
    const double c2 = 1.0 - std::pow(0.999, t);
    for (std::size_t i = 0; i < dim; ++i) {
      const Eigen::Index ii = static_cast<Eigen::Index>(i);
      v[i] += lr * (m1[ii] / c1) / (std::sqrt(m2[ii] / c2) + 1e-8);
    }
    project(&v, layout);
  }
  const double fv = f(v, false).first;
  out.trajectory.push_back(fv);
  if (fv > out.value) {
    out.value = fv;
    out.v = v;
  }
  if (out.v.empty()) out.v = v;
  return out;
}

// ---------------------------------------------------------------------------
// PR start mapping and sampling helpers

// Maps a discrete start to raw parameters whose transform puts ~0.75 mass on
// it; informative but not saturated.
std::vector<double> phi_from_start(const SearchSpace& space, const DiscreteAssignment& z0,
                                   double tau, const BoxSet& boxes) {
  const ThetaLayout layout = theta_layout(space);
  std::vector<double> phi(layout.size, 0.5);
  const double log3 = std::log(3.0);
  for (std::size_t j = 0; j < space.num_discrete(); ++j) {
    const auto& desc = space.parameter(space.discrete_indices()[j]);
    const std::size_t off = layout.offsets[j];
    switch (desc.kind) {
      case ParameterKind::kBinary:
        phi[off] = z0[j] == 1.0 ? 0.5 + tau * log3 : 0.5 - tau * log3;
        phi[off] = std::clamp(phi[off], 0.0, 1.0);
        break;
      case ParameterKind::kOrdinal: {
        const double k = z0[j];
        const double top = static_cast<double>(desc.cardinality - 1);
        // theta = k + 0.25 (mass 0.75 on k), or k - 0.25 at the top level
        double target = k < top ? k + 0.5 - tau * log3 : k - 0.5 + tau * log3;
        phi[off] = std::clamp(target, static_cast<double>(boxes.ord_lo[j]),
                              static_cast<double>(boxes.ord_hi[j]));
        break;
      }
      case ParameterKind::kCategorical: {
        const double delta =
            0.5 * tau * std::log(3.0 * static_cast<double>(desc.cardinality - 1));
        for (int c = 0; c < desc.cardinality; ++c) {
          const double v = c == static_cast<int>(z0[j]) ? 0.5 + delta : 0.5 - delta;
          phi[off + static_cast<std::size_t>(c)] = std::clamp(v, 0.0, 1.0);
        }
        break;
      }
      default:
        break;
    }
  }
  return phi;
}

void phi_box(const SearchSpace& space, const BoxSet& boxes, std::vector<double>* lo,
             std::vector<double>* hi) {
  phi_bounds(space, lo, hi);
  const ThetaLayout layout = theta_layout(space);
  for (std::size_t j = 0; j < space.num_discrete(); ++j) {
    const auto& desc = space.parameter(space.discrete_indices()[j]);
    if (desc.kind == ParameterKind::kOrdinal) {
      (*lo)[layout.offsets[j]] = static_cast<double>(boxes.ord_lo[j]);
      (*hi)[layout.offsets[j]] = static_cast<double>(boxes.ord_hi[j]);
    }
  }
}

// Ordinal levels sampled just past a trust-region edge are pulled back in.
void clamp_assignments(const SearchSpace& space, const BoxSet& boxes,
                       std::vector<DiscreteAssignment>* zs) {
  for (auto& z : *zs) {
    for (std::size_t j = 0; j < z.size(); ++j) {
      const auto& desc = space.parameter(space.discrete_indices()[j]);
      if (desc.kind == ParameterKind::kOrdinal) {
        z[j] = std::clamp(z[j], static_cast<double>(boxes.ord_lo[j]),
                          static_cast<double>(boxes.ord_hi[j]));
      }
    }
  }
}

struct RestartOutcome {
  DesignPoint point;
  double af_value = -std::numeric_limits<double>::infinity();
  std::vector<double> trajectory;
  bool ok = false;
};

CandidateResult pick_best(const SearchSpace& space, const AcqOracle& af,
                          std::vector<RestartOutcome>&& outcomes) {
  int best = -1;
  for (int r = 0; r < static_cast<int>(outcomes.size()); ++r) {
    if (!outcomes[static_cast<std::size_t>(r)].ok) continue;
    if (best < 0 || outcomes[static_cast<std::size_t>(r)].af_value >
                        outcomes[static_cast<std::size_t>(best)].af_value) {
      best = r;
    }
  }
  if (best < 0) throw std::runtime_error("acquisition optimization: all restarts aborted");
  auto& win = outcomes[static_cast<std::size_t>(best)];
  CandidateResult out;
  out.point = std::move(win.point);
  out.restart_index = best;
  out.trajectory = std::move(win.trajectory);
  out.af_value = af.eval(out.point, false).value;  // fresh recompute
  (void)space;
  return out;
}

}  // namespace

const char* method_name(AcqOptMethod method) {
  switch (method) {
    case AcqOptMethod::kPrAdam: return "pr_adam";
    case AcqOptMethod::kPrSaa: return "pr_saa";
    case AcqOptMethod::kContRelax: return "cont_relax";
    case AcqOptMethod::kExactRoundFd: return "exact_round_fd";
    case AcqOptMethod::kExactRoundSte: return "exact_round_ste";
    case AcqOptMethod::kEnumeration: return "enumeration";
  }
  return "unknown";
}

std::optional<AcqOptMethod> method_from_name(const std::string& name) {
  for (AcqOptMethod m :
       {AcqOptMethod::kPrAdam, AcqOptMethod::kPrSaa, AcqOptMethod::kContRelax,
        AcqOptMethod::kExactRoundFd, AcqOptMethod::kExactRoundSte, AcqOptMethod::kEnumeration}) {
    if (name == method_name(m)) return m;
  }
  return std::nullopt;
}

BoxSet BoxSet::full(const SearchSpace& space) {
  BoxSet b;
  b.cont_lo.assign(space.num_continuous(), 0.0);
  b.cont_hi.assign(space.num_continuous(), 1.0);
  b.ord_lo.assign(space.num_discrete(), 0);
  b.ord_hi.assign(space.num_discrete(), 0);
  for (std::size_t j = 0; j < space.num_discrete(); ++j) {
    b.ord_hi[j] = space.parameter(space.discrete_indices()[j]).levels() - 1;
  }
  return b;
}

std::vector<double> internal_to_relaxed(const SearchSpace& space,
                                        const std::vector<double>& internal) {
  std::vector<double> r = internal;
  for (std::size_t c = 0; c < space.num_continuous(); ++c) {
    const std::size_t pi = space.continuous_indices()[c];
    const std::size_t off = space.relaxed_offset(pi);
    r[off] = from_unit(space.parameter(pi), internal[off]);
  }
  return r;
}

std::vector<double> relaxed_to_internal(const SearchSpace& space,
                                        const std::vector<double>& relaxed) {
  std::vector<double> v = relaxed;
  for (std::size_t c = 0; c < space.num_continuous(); ++c) {
    const std::size_t pi = space.continuous_indices()[c];
    const std::size_t off = space.relaxed_offset(pi);
    v[off] = to_unit(space.parameter(pi), relaxed[off]);
  }
  return v;
}

std::vector<std::vector<double>> boltzmann_init(const AcqOracle& af, const SearchSpace& space,
                                                const AcqOptimizerConfig& cfg,
                                                const BoxSet& boxes) {
  if (cfg.raw_candidates < cfg.restarts) {
    throw std::invalid_argument("boltzmann_init needs raw_candidates >= restarts");
  }
  const InternalLayout layout = internal_layout(space, boxes);
  SobolSequence seq(space.relaxed_length(), derive_seed(cfg.seed, 0x626f6c74ULL));

  std::vector<std::vector<double>> candidates;
  candidates.reserve(static_cast<std::size_t>(cfg.raw_candidates));
  std::vector<DesignPoint> rounded;
  rounded.reserve(candidates.size());
  for (int k = 0; k < cfg.raw_candidates; ++k) {
    const std::vector<double> u = seq.next();
    std::vector<double> v(space.relaxed_length());
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = layout.lo[i] + (layout.hi[i] - layout.lo[i]) * u[i];
    }
    rounded.push_back(discretize_internal(space, v));
    candidates.push_back(std::move(v));
  }
  if (cfg.restarts == cfg.raw_candidates) return candidates;

  const Eigen::VectorXd utilities = af.eval_batch(rounded);
  const double mean = utilities.mean();
  double sd = std::sqrt((utilities.array() - mean).square().sum() /
                        std::max<double>(1.0, static_cast<double>(utilities.size() - 1)));
  if (!(sd > 1e-12)) sd = 1.0;
  Eigen::VectorXd s = (utilities.array() - mean) / sd;
  const double spread = s.maxCoeff() - s.minCoeff();
  // utility spread mapped to a fixed logit range of 6
  Eigen::VectorXd logits = spread > 1e-12 ? Eigen::VectorXd(s * (6.0 / spread))
                                          : Eigen::VectorXd::Zero(s.size());
  const double temperature = std::max(cfg.boltzmann_temperature, 1e-12);

  // Gumbel top-k = sampling without replacement proportional to exp(logit/T)
  Rng rng = make_rng(derive_seed(cfg.seed, 0x67756d62ULL));
  std::vector<std::pair<double, int>> keys;
  keys.reserve(candidates.size());
  for (int k = 0; k < cfg.raw_candidates; ++k) {
    const double u = std::max(uniform01(rng), 1e-300);
    const double gumbel = -std::log(-std::log(u));
    keys.emplace_back(logits[k] / temperature + gumbel, k);
  }
  std::sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::vector<double>> starts;
  starts.reserve(static_cast<std::size_t>(cfg.restarts));
  for (int r = 0; r < cfg.restarts; ++r) {
    starts.push_back(std::move(candidates[static_cast<std::size_t>(keys[static_cast<std::size_t>(r)].second)]));
  }
  return starts;
}

CandidateResult optimize_pr(const AcqOracle& af, const SearchSpace& space,
                            const AcqOptimizerConfig& cfg, const BoxSet& boxes) {
  if (cfg.method != AcqOptMethod::kPrAdam && cfg.method != AcqOptMethod::kPrSaa) {
    throw std::invalid_argument("optimize_pr requires a pr method");
  }
  const std::vector<std::vector<double>> starts = boltzmann_init(af, space, cfg, boxes);
  const std::size_t n_cont = space.num_continuous();
  const std::size_t t_dim = theta_dim(space);

  std::vector<double> phi_lo, phi_hi;
  phi_box(space, boxes, &phi_lo, &phi_hi);

  std::vector<RestartOutcome> outcomes(starts.size());
  for (std::size_t r = 0; r < starts.size(); ++r) {
    Rng rng = make_rng(derive_seed(cfg.seed, 0x70726f70ULL, r));
    const DesignPoint p0 = discretize_internal(space, starts[r]);
    const DiscreteAssignment z0 = discrete_part(space, p0);

    std::vector<double> x(n_cont);
    for (std::size_t c = 0; c < n_cont; ++c) {
      const std::size_t pi = space.continuous_indices()[c];
      x[c] = starts[r][space.relaxed_offset(pi)];
    }
    std::vector<double> phi = phi_from_start(space, z0, cfg.tau, boxes);

    auto project_vars = [&]() {
      for (std::size_t c = 0; c < n_cont; ++c) {
        x[c] = std::clamp(x[c], boxes.cont_lo[c], boxes.cont_hi[c]);
      }
      for (std::size_t i = 0; i < t_dim; ++i) phi[i] = std::clamp(phi[i], phi_lo[i], phi_hi[i]);
    };
    project_vars();

    RestartOutcome& outcome = outcomes[r];
    bool aborted = false;

    if (cfg.method == AcqOptMethod::kPrAdam) {
      BaselineState baseline;
      const std::size_t dim = n_cont + t_dim;
      Eigen::VectorXd m1 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
      Eigen::VectorXd m2 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
      for (int step = 1; step <= cfg.max_iterations; ++step) {
        const TransformResult tr = transform(space, RawParams{phi, cfg.tau});
        std::vector<DiscreteAssignment> zs =
            sample(space, tr.theta, static_cast<std::size_t>(cfg.mc_samples), rng);
        clamp_assignments(space, boxes, &zs);
        std::vector<double> x_orig(n_cont);
        for (std::size_t c = 0; c < n_cont; ++c) {
          x_orig[c] = from_unit(space.parameter(space.continuous_indices()[c]), x[c]);
        }
        const McPoGrad grad = mc_po_grad(af, space, x_orig, tr.theta, zs, baseline);
        baseline = update_baseline(baseline, grad.batch_mean_af);
        const Eigen::VectorXd grad_phi = chain_to_phi(space, tr, grad.grad_theta);

        Eigen::VectorXd g(dim);
        for (std::size_t c = 0; c < n_cont; ++c) {
          const auto& desc = space.parameter(space.continuous_indices()[c]);
          g[static_cast<Eigen::Index>(c)] =
              grad.grad_x[static_cast<Eigen::Index>(c)] * range_of(desc);
        }
        g.segment(static_cast<Eigen::Index>(n_cont), static_cast<Eigen::Index>(t_dim)) = grad_phi;
        if (!g.allFinite()) {
          aborted = true;
          break;
        }
        if (cfg.trace) {
          cfg.trace(TraceRecord{static_cast<int>(r), step, grad.batch_mean_af, g.norm()});
        }
        outcome.trajectory.push_back(grad.batch_mean_af);

        if (cfg.use_sga) {
          const double step_size = cfg.learning_rate * std::pow(step, -0.7);
          for (std::size_t i = 0; i < dim; ++i) {
            const double upd = step_size * g[static_cast<Eigen::Index>(i)];
            if (i < n_cont) x[i] += upd; else phi[i - n_cont] += upd;
          }
        } else {
          m1 = 0.9 * m1 + 0.1 * g;
          m2 = 0.999 * m2 + 0.001 * g.cwiseProduct(g);
          const double c1 = 1.0 - std::pow(0.9, step);
          const double c2 = 1.0 - std::pow(0.999, step);
          for (std::size_t i = 0; i < dim; ++i) {
            const Eigen::Index ii = static_cast<Eigen::Index>(i);
            const double upd =
                cfg.learning_rate * (m1[ii] / c1) / (std::sqrt(m2[ii] / c2) + 1e-8);
            if (i < n_cont) x[i] += upd; else phi[i - n_cont] += upd;
          }
        }
        project_vars();
      }
    } else {  // pr_saa: deterministic ascent on fixed base samples
      const BaseSampleSet base = make_base_samples(
          space, static_cast<std::size_t>(cfg.mc_samples), derive_seed(cfg.seed, 0x73616173ULL, r));
      const BaselineState no_baseline;

      auto pack = [&](const std::vector<double>& xs, const std::vector<double>& ps) {
        std::vector<double> v;
        v.reserve(n_cont + t_dim);
        v.insert(v.end(), xs.begin(), xs.end());
        v.insert(v.end(), ps.begin(), ps.end());
        return v;
      };
      InternalLayout saa_layout;
      saa_layout.lo.assign(boxes.cont_lo.begin(), boxes.cont_lo.end());
      saa_layout.hi.assign(boxes.cont_hi.begin(), boxes.cont_hi.end());
      saa_layout.lo.insert(saa_layout.lo.end(), phi_lo.begin(), phi_lo.end());
      saa_layout.hi.insert(saa_layout.hi.end(), phi_hi.begin(), phi_hi.end());

      auto objective = [&](const std::vector<double>& v, bool with_grad)
          -> std::pair<double, Eigen::VectorXd> {
        std::vector<double> xs(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n_cont));
        std::vector<double> ps(v.begin() + static_cast<std::ptrdiff_t>(n_cont), v.end());
        const TransformResult tr = transform(space, RawParams{ps, cfg.tau});
        std::vector<DiscreteAssignment> zs = saa_sample(space, tr.theta, base);
        clamp_assignments(space, boxes, &zs);
        std::vector<double> x_orig(n_cont);
        for (std::size_t c = 0; c < n_cont; ++c) {
          x_orig[c] = from_unit(space.parameter(space.continuous_indices()[c]), xs[c]);
        }
        if (!with_grad) return {mc_po(af, space, x_orig, zs), Eigen::VectorXd{}};
        const McPoGrad grad = mc_po_grad(af, space, x_orig, tr.theta, zs, no_baseline);
        Eigen::VectorXd g(static_cast<Eigen::Index>(n_cont + t_dim));
        for (std::size_t c = 0; c < n_cont; ++c) {
          const auto& desc = space.parameter(space.continuous_indices()[c]);
          g[static_cast<Eigen::Index>(c)] =
              grad.grad_x[static_cast<Eigen::Index>(c)] * range_of(desc);
        }
        g.segment(static_cast<Eigen::Index>(n_cont), static_cast<Eigen::Index>(t_dim)) =
            chain_to_phi(space, tr, grad.grad_theta);
        return {grad.batch_mean_af, g};
      };

      AscentResult res =
          ascend_backtracking(objective, pack(x, phi), saa_layout, cfg.max_iterations);
      if (!res.ok) {
        aborted = true;
      } else {
        for (std::size_t c = 0; c < n_cont; ++c) x[c] = res.v[c];
        for (std::size_t i = 0; i < t_dim; ++i) phi[i] = res.v[n_cont + i];
        outcome.trajectory = std::move(res.trajectory);
      }
    }

    if (aborted) continue;

    // terminal draws: sample final designs and keep the best true-AF one
    const TransformResult tr = transform(space, RawParams{phi, cfg.tau});
    std::vector<DiscreteAssignment> finals =
        sample(space, tr.theta, static_cast<std::size_t>(cfg.final_samples_per_restart), rng);
    clamp_assignments(space, boxes, &finals);
    std::vector<double> x_orig(n_cont);
    for (std::size_t c = 0; c < n_cont; ++c) {
      x_orig[c] = from_unit(space.parameter(space.continuous_indices()[c]), x[c]);
    }
    for (const auto& z : finals) {
      const DesignPoint candidate = assemble_design(space, x_orig, z);
      const double value = af.eval(candidate, false).value;
      if (!outcome.ok || value > outcome.af_value) {
        outcome.ok = true;
        outcome.af_value = value;
        outcome.point = candidate;
      }
    }
  }
  return pick_best(space, af, std::move(outcomes));
}

CandidateResult optimize_cont_relax(const AcqOracle& af, const SearchSpace& space,
                                    const AcqOptimizerConfig& cfg, const BoxSet& boxes) {
  if (!af.smooth_relaxed || !af.eval_relaxed) {
    throw KernelIncompatibleError(
        "continuous relaxation requires a surrogate that is smooth over the relaxed space");
  }
  const InternalLayout layout = internal_layout(space, boxes);
  const std::vector<std::vector<double>> starts = boltzmann_init(af, space, cfg, boxes);

  auto objective = [&](const std::vector<double>& v, bool with_grad)
      -> std::pair<double, Eigen::VectorXd> {
    const RelaxedAcqEval ev = af.eval_relaxed(internal_to_relaxed(space, v), with_grad);
    if (!with_grad) return {ev.value, Eigen::VectorXd{}};
    Eigen::VectorXd g = ev.grad_r;
    for (std::size_t c = 0; c < space.num_continuous(); ++c) {
      const std::size_t pi = space.continuous_indices()[c];
      g[static_cast<Eigen::Index>(space.relaxed_offset(pi))] *=
          range_of(space.parameter(pi));
    }
    return {ev.value, g};
  };

  std::vector<RestartOutcome> outcomes(starts.size());
  for (std::size_t r = 0; r < starts.size(); ++r) {
    AscentResult res = ascend_backtracking(objective, starts[r], layout, cfg.max_iterations);
    if (!res.ok) continue;
    RestartOutcome& outcome = outcomes[r];
    outcome.point = discretize_internal(space, res.v);
    outcome.af_value = af.eval(outcome.point, false).value;
    outcome.trajectory = std::move(res.trajectory);
    outcome.ok = true;
  }
  return pick_best(space, af, std::move(outcomes));
}

Eigen::VectorXd exact_round_fd_gradient(const AcqOracle& af, const SearchSpace& space,
                                        const std::vector<double>& internal,
                                        const BoxSet& boxes, double fd_step) {
  const InternalLayout layout = internal_layout(space, boxes);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(internal.size()));
  const AcqEval at_point = af.eval(discretize_internal(space, internal), true);
  for (std::size_t c = 0; c < space.num_continuous(); ++c) {
    const std::size_t pi = space.continuous_indices()[c];
    g[static_cast<Eigen::Index>(space.relaxed_offset(pi))] =
        at_point.grad_x[static_cast<Eigen::Index>(c)] * range_of(space.parameter(pi));
  }
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& desc = space.parameter(i);
    if (desc.kind == ParameterKind::kContinuous) continue;
    const std::size_t off = space.relaxed_offset(i);
    const std::size_t block =
        desc.kind == ParameterKind::kCategorical ? static_cast<std::size_t>(desc.cardinality) : 1;
    for (std::size_t b = 0; b < block; ++b) {
      const std::size_t j = off + b;
      std::vector<double> plus = internal, minus = internal;
      plus[j] = std::clamp(internal[j] + fd_step, layout.lo[j], layout.hi[j]);
      minus[j] = std::clamp(internal[j] - fd_step, layout.lo[j], layout.hi[j]);
      const double width = plus[j] - minus[j];
      if (!(width > 0.0)) continue;
      const double f_plus = af.eval(discretize_internal(space, plus), false).value;
      const double f_minus = af.eval(discretize_internal(space, minus), false).value;
      g[static_cast<Eigen::Index>(j)] = (f_plus - f_minus) / width;
    }
  }
  return g;
}

CandidateResult optimize_exact_round(const AcqOracle& af, const SearchSpace& space,
                                     const AcqOptimizerConfig& cfg, const BoxSet& boxes) {
  if (!(cfg.fd_step > 0.0)) throw std::invalid_argument("exact_round needs fd_step > 0");
  const InternalLayout layout = internal_layout(space, boxes);
  const std::vector<std::vector<double>> starts = boltzmann_init(af, space, cfg, boxes);

  auto objective = [&](const std::vector<double>& v, bool with_grad)
      -> std::pair<double, Eigen::VectorXd> {
    const double value = af.eval(discretize_internal(space, v), false).value;
    if (!with_grad) return {value, Eigen::VectorXd{}};
    return {value, exact_round_fd_gradient(af, space, v, boxes, cfg.fd_step)};
  };

  std::vector<RestartOutcome> outcomes(starts.size());
  for (std::size_t r = 0; r < starts.size(); ++r) {
    AscentResult res = ascend_backtracking(objective, starts[r], layout, cfg.max_iterations);
    if (!res.ok) continue;
    RestartOutcome& outcome = outcomes[r];
    outcome.point = discretize_internal(space, res.v);
    outcome.af_value = af.eval(outcome.point, false).value;
    outcome.trajectory = std::move(res.trajectory);
    outcome.ok = true;
  }
  return pick_best(space, af, std::move(outcomes));
}

CandidateResult optimize_exact_round_ste(const AcqOracle& af, const SearchSpace& space,
                                         const AcqOptimizerConfig& cfg, const BoxSet& boxes) {
  if (!af.eval_relaxed) {
    throw std::invalid_argument("straight-through estimator needs a relaxed evaluator");
  }
  const InternalLayout layout = internal_layout(space, boxes);
  const std::vector<std::vector<double>> starts = boltzmann_init(af, space, cfg, boxes);

  auto objective = [&](const std::vector<double>& v, bool with_grad)
      -> std::pair<double, Eigen::VectorXd> {
    const DesignPoint rounded = discretize_internal(space, v);
    const double value = af.eval(rounded, false).value;
    if (!with_grad) return {value, Eigen::VectorXd{}};
    // backward treats discretize as identity: differentiate at the rounded
    // point through the kernel's smooth extension
    const RelaxedPoint at = one_hot_encode(space, rounded);
    const RelaxedAcqEval rev = af.eval_relaxed(at.values, true);
    Eigen::VectorXd g = rev.grad_r;
    for (std::size_t c = 0; c < space.num_continuous(); ++c) {
      const std::size_t pi = space.continuous_indices()[c];
      g[static_cast<Eigen::Index>(space.relaxed_offset(pi))] *=
          range_of(space.parameter(pi));
    }
    return {value, g};
  };

  std::vector<RestartOutcome> outcomes(starts.size());
  for (std::size_t r = 0; r < starts.size(); ++r) {
    AscentResult res = ascend_adam(objective, starts[r], layout, cfg.max_iterations,
                                   cfg.learning_rate);
    if (!res.ok && res.v.empty()) continue;
    RestartOutcome& outcome = outcomes[r];
    outcome.point = discretize_internal(space, res.v);
    outcome.af_value = af.eval(outcome.point, false).value;
    outcome.trajectory = std::move(res.trajectory);
    outcome.ok = true;
  }
  return pick_best(space, af, std::move(outcomes));
}

CandidateResult optimize_enumeration(const AcqOracle& af, const SearchSpace& space,
                                     const AcqOptimizerConfig& cfg, const BoxSet& boxes) {
  // enumerate within the active ordinal bounds
  std::vector<DiscreteAssignment> configs;
  {
    const std::size_t d_z = space.num_discrete();
    std::uint64_t count = 1;
    std::vector<int> lo(d_z), hi(d_z);
    for (std::size_t j = 0; j < d_z; ++j) {
      const auto& desc = space.parameter(space.discrete_indices()[j]);
      if (desc.kind == ParameterKind::kOrdinal) {
        lo[j] = boxes.ord_lo[j];
        hi[j] = boxes.ord_hi[j];
      } else {
        lo[j] = 0;
        hi[j] = desc.levels() - 1;
      }
      count *= static_cast<std::uint64_t>(hi[j] - lo[j] + 1);
      if (count > cfg.enumeration_cap) {
        throw SpaceTooLargeError("discrete space exceeds enumeration cap");
      }
    }
    DiscreteAssignment current(d_z);
    for (std::size_t j = 0; j < d_z; ++j) current[j] = lo[j];
    if (d_z == 0) {
      configs.push_back(current);
    } else {
      for (;;) {
        configs.push_back(current);
        std::size_t j = d_z;
        bool done = false;
        while (j > 0) {
          --j;
          if (current[j] + 1.0 <= static_cast<double>(hi[j])) {
            current[j] += 1.0;
            break;
          }
          current[j] = lo[j];
          if (j == 0) done = true;
        }
        if (done) break;
      }
    }
  }

  const std::size_t n_cont = space.num_continuous();
  std::vector<RestartOutcome> outcomes(configs.size());

  if (n_cont == 0) {
    // purely discrete: direct evaluation, no continuous optimizer involved
    std::vector<DesignPoint> points;
    points.reserve(configs.size());
    for (const auto& z : configs) points.push_back(assemble_design(space, {}, z));
    const Eigen::VectorXd values = af.eval_batch(points);
    for (std::size_t k = 0; k < configs.size(); ++k) {
      outcomes[k].point = points[k];
      outcomes[k].af_value = values[static_cast<Eigen::Index>(k)];
      outcomes[k].ok = true;
    }
    return pick_best(space, af, std::move(outcomes));
  }

  InternalLayout cont_layout;
  cont_layout.lo = boxes.cont_lo;
  cont_layout.hi = boxes.cont_hi;
  SobolSequence seq(n_cont, derive_seed(cfg.seed, 0x656e756dULL));
  std::vector<std::vector<double>> cont_starts;
  for (int s = 0; s < cfg.cont_opt_starts; ++s) {
    const std::vector<double> u = seq.next();
    std::vector<double> x(n_cont);
    for (std::size_t c = 0; c < n_cont; ++c) {
      x[c] = cont_layout.lo[c] + (cont_layout.hi[c] - cont_layout.lo[c]) * u[c];
    }
    cont_starts.push_back(std::move(x));
  }

  for (std::size_t k = 0; k < configs.size(); ++k) {
    const DiscreteAssignment& z = configs[k];
    auto objective = [&](const std::vector<double>& xs, bool with_grad)
        -> std::pair<double, Eigen::VectorXd> {
      std::vector<double> x_orig(n_cont);
      for (std::size_t c = 0; c < n_cont; ++c) {
        x_orig[c] = from_unit(space.parameter(space.continuous_indices()[c]), xs[c]);
      }
      const AcqEval ev = af.eval(assemble_design(space, x_orig, z), with_grad);
      if (!with_grad) return {ev.value, Eigen::VectorXd{}};
      Eigen::VectorXd g(static_cast<Eigen::Index>(n_cont));
      for (std::size_t c = 0; c < n_cont; ++c) {
        g[static_cast<Eigen::Index>(c)] =
            ev.grad_x[static_cast<Eigen::Index>(c)] *
            range_of(space.parameter(space.continuous_indices()[c]));
      }
      return {ev.value, g};
    };

    RestartOutcome& outcome = outcomes[k];
    for (const auto& x0 : cont_starts) {
      const AscentResult res =
          ascend_backtracking(objective, x0, cont_layout, cfg.cont_opt_iterations);
      if (!res.ok) continue;
      if (!outcome.ok || res.value > outcome.af_value) {
        std::vector<double> x_orig(n_cont);
        for (std::size_t c = 0; c < n_cont; ++c) {
          x_orig[c] = from_unit(space.parameter(space.continuous_indices()[c]), res.v[c]);
        }
        outcome.ok = true;
        outcome.af_value = res.value;
        outcome.point = assemble_design(space, x_orig, z);
      }
    }
  }
  return pick_best(space, af, std::move(outcomes));
}

CandidateResult optimize_acquisition(const AcqOracle& af, const SearchSpace& space,
                                     const AcqOptimizerConfig& cfg) {
  return optimize_acquisition(af, space, cfg, BoxSet::full(space));
}

CandidateResult optimize_acquisition(const AcqOracle& af, const SearchSpace& space,
                                     const AcqOptimizerConfig& cfg, const BoxSet& boxes) {
  switch (cfg.method) {
    case AcqOptMethod::kPrAdam:
    case AcqOptMethod::kPrSaa: return optimize_pr(af, space, cfg, boxes);
    case AcqOptMethod::kContRelax: return optimize_cont_relax(af, space, cfg, boxes);
    case AcqOptMethod::kExactRoundFd: return optimize_exact_round(af, space, cfg, boxes);
    case AcqOptMethod::kExactRoundSte: return optimize_exact_round_ste(af, space, cfg, boxes);
    case AcqOptMethod::kEnumeration: return optimize_enumeration(af, space, cfg, boxes);
  }
  throw std::logic_error("unknown acquisition optimization method");
}

}  // namespace mixedbo
