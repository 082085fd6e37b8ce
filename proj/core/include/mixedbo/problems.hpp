#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mixedbo/space.hpp"

namespace mixedbo {

struct Evaluation {
  double objective = 0.0;
  std::vector<double> constraints;  // feasible iff every entry >= 0
};

// A benchmark objective, minimized. The evaluator is pure and deterministic
// at noise_sd = 0; the harness adds observation noise and handles the sign
// flip for maximization-style acquisition math.
struct Problem {
  std::string id;
  SearchSpace space;
  std::function<Evaluation(const DesignPoint&)> evaluator;
  std::optional<double> optimum;  // known or oracle-computed lower bound
  double noise_sd = 0.0;
  std::size_t num_constraints = 0;
};

// 13-d Ackley: 10 binary parameters mapped to {-1, 1} plus 3 continuous in
// [-1, 1].
Problem make_ackley13();

// Partially discretized 16-d sphere; the shifted optimum location and offset
// are drawn from the seed.
Problem make_mixed_int_f1(std::uint64_t seed);

// 10-d Rosenbrock with 6 four-level ordinals in {-5, 0, 5, 10} and 4
// continuous dims in [-5, 10].
Problem make_rosenbrock10();

// Branin over one continuous parameter and one binary parameter selecting
// the second axis endpoint (0 or 15).
Problem make_branin_binary();

// Small constrained toy: quadratic objective, one sphere constraint.
// Exercises the constrained-EI path.
Problem make_toy_constrained();

// Registry addressable by string id: ackley13, mixed_int_f1, rosenbrock10,
// branin_binary, toy_constrained. The seed is used by seeded problems only.
Problem make_problem(const std::string& id, std::uint64_t seed = 0);
std::vector<std::string> problem_ids();

// Scalar Branin in its standard form (exposed for oracle checks).
double branin(double x1, double x2);

}  // namespace mixedbo
