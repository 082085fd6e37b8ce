#include "mixedbo/trust_region.hpp"

#include <algorithm>
#include <cmath>

namespace mixedbo {
namespace {

bool tr_covers(const ParameterDescriptor& p) {
  if (p.kind == ParameterKind::kContinuous) return true;
  return p.kind == ParameterKind::kOrdinal && p.cardinality >= 3;
}

}  // namespace

std::size_t tr_covered_dims(const SearchSpace& space) {
  std::size_t n = 0;
  for (const auto& p : space.parameters()) {
    if (tr_covers(p)) ++n;
  }
  return n;
}

TrustRegionState make_tr_state(const SearchSpace& space, const TrustRegionConfig& cfg) {
  TrustRegionState s;
  s.base_length = cfg.length_init;
  s.success_tolerance = cfg.success_tolerance;
  s.failure_tolerance =
      std::max(cfg.failure_tolerance, static_cast<int>(tr_covered_dims(space)));
  return s;
}

BoxSet tr_bounds(const TrustRegionState& state, const SearchSpace& space,
                 const GPModel& model) {
  validate(space, state.center);
  BoxSet boxes = BoxSet::full(space);

  // lengthscale weights over covered dims, normalized by their geometric mean
  std::vector<double> weights(space.size(), 0.0);
  double log_sum = 0.0;
  std::size_t covered = 0;
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (!tr_covers(space.parameter(i))) continue;
    const double ls = model.lengthscale_for_parameter(i);
    weights[i] = ls;
    log_sum += std::log(ls);
    ++covered;
  }
  const double geo_mean = covered > 0 ? std::exp(log_sum / static_cast<double>(covered)) : 1.0;

  std::size_t cont = 0, disc = 0;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& p = space.parameter(i);
    const bool covered_dim = tr_covers(p);
    const double side = covered_dim ? state.base_length * (weights[i] / geo_mean) : 0.0;
    switch (p.kind) {
      case ParameterKind::kContinuous: {
        if (covered_dim) {
          const double c = to_unit(p, state.center.values[i]);
          boxes.cont_lo[cont] = std::clamp(c - 0.5 * side, 0.0, 1.0);
          boxes.cont_hi[cont] = std::clamp(c + 0.5 * side, 0.0, 1.0);
        }
        ++cont;
        break;
      }
      case ParameterKind::kOrdinal: {
        if (covered_dim) {
          const double top = static_cast<double>(p.cardinality - 1);
          const double c = state.center.values[i] / top;
          const double a = std::clamp(c - 0.5 * side, 0.0, 1.0);
          const double b = std::clamp(c + 0.5 * side, 0.0, 1.0);
          int lo = static_cast<int>(std::ceil(a * top - 1e-9));
          int hi = static_cast<int>(std::floor(b * top + 1e-9));
          const int center_level = static_cast<int>(state.center.values[i]);
          lo = std::min(lo, center_level);
          hi = std::max(hi, center_level);
          boxes.ord_lo[disc] = std::clamp(lo, 0, p.cardinality - 1);
          boxes.ord_hi[disc] = std::clamp(hi, 0, p.cardinality - 1);
        }
        ++disc;
        break;
      }
      default:
        if (p.is_discrete()) ++disc;
        break;
    }
  }
  return boxes;
}

TrustRegionState tr_update(const TrustRegionState& state, bool improved,
                           const TrustRegionConfig& cfg) {
  TrustRegionState next = state;
  if (improved) {
    next.success_count += 1;
    next.failure_count = 0;
    if (next.success_count >= next.success_tolerance) {
      next.base_length = std::min(2.0 * next.base_length, cfg.length_max);
      next.success_count = 0;
    }
  } else {
    next.failure_count += 1;
    next.success_count = 0;
    if (next.failure_count >= next.failure_tolerance) {
      next.base_length = 0.5 * next.base_length;
      next.failure_count = 0;
    }
  }
  if (next.base_length < cfg.length_min) next.restart_flag = true;
  return next;
}

TrustRegionState tr_restart(const TrustRegionState& state, const TrustRegionConfig& cfg) {
  TrustRegionState fresh;
  fresh.base_length = cfg.length_init;
  fresh.center = state.center;
  fresh.success_tolerance = state.success_tolerance;
  fresh.failure_tolerance = state.failure_tolerance;
  return fresh;
}

CandidateResult constrained_optimize(const AcqOracle& af, const SearchSpace& space,
                                     const AcqOptimizerConfig& cfg,
                                     const TrustRegionState& state, const GPModel& model) {
  const TrustRegionState active = state.restart_flag ? tr_restart(state) : state;
  const BoxSet boxes = tr_bounds(active, space, model);
  return optimize_acquisition(af, space, cfg, boxes);
}

}  // namespace mixedbo
