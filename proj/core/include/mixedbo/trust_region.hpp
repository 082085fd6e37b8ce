#pragma once

#include "mixedbo/acqopt.hpp"
#include "mixedbo/space.hpp"
#include "mixedbo/surrogate.hpp"

namespace mixedbo {

// TuRBO-style trust region over the continuous and ordinal (>= 3 level)
// parameters. Binary, two-level ordinal and categorical parameters are never
// constrained. Lengths live in normalized units.
struct TrustRegionConfig {
  double length_init = 0.8;
  double length_min = 0.0078125;  // 0.5^7
  double length_max = 1.6;
  int success_tolerance = 3;
  int failure_tolerance = 4;  // raised to the covered-dimension count by make_tr_state
};

struct TrustRegionState {
  double base_length = 0.8;
  DesignPoint center;  // current incumbent, recomputed by the caller each iteration
  int success_count = 0;
  int failure_count = 0;
  int success_tolerance = 3;
  int failure_tolerance = 4;
  bool restart_flag = false;
};

// Number of parameters the trust region covers (continuous + ordinal C >= 3).
std::size_t tr_covered_dims(const SearchSpace& space);

TrustRegionState make_tr_state(const SearchSpace& space, const TrustRegionConfig& cfg = {});

// Per-parameter interval constraints: a box of side base_length scaled by the
// model's ARD lengthscales (relative to their geometric mean), centered at
// the incumbent and clipped to the domain. The center always stays inside.
BoxSet tr_bounds(const TrustRegionState& state, const SearchSpace& space,
                 const GPModel& model);

// TuRBO counter/length update. Improvement means a strict improvement of the
// best observed feasible objective.
TrustRegionState tr_update(const TrustRegionState& state, bool improved,
                           const TrustRegionConfig& cfg = {});

// Fresh state for the restart path, preserving tolerances and the center.
TrustRegionState tr_restart(const TrustRegionState& state, const TrustRegionConfig& cfg = {});

// Runs the configured acquisition optimizer inside the trust region bounds.
// A set restart_flag resets the region to its initial size first.
CandidateResult constrained_optimize(const AcqOracle& af, const SearchSpace& space,
                                     const AcqOptimizerConfig& cfg,
                                     const TrustRegionState& state, const GPModel& model);

}  // namespace mixedbo
