#include "mixedbo/problems.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mixedbo/rng.hpp"

namespace mixedbo {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kE = 2.71828182845904523536;

double sq(double v) { return v * v; }

// mixed_int_f1 grid values per discretized dimension
const std::vector<std::vector<double>>& f1_grids() {
  static const std::vector<std::vector<double>> grids = {
      {-5.0, 5.0},
      {-5.0, 5.0},
      {-5.0, 0.0, 5.0},
      {-5.0, 0.0, 5.0},
      {-5.0, -2.5, 0.0, 2.5, 5.0},
      {-5.0, -2.5, 0.0, 2.5, 5.0},
      {-5.0, -10.0 / 3.0, -5.0 / 3.0, 0.0, 5.0 / 3.0, 10.0 / 3.0, 5.0},
      {-5.0, -10.0 / 3.0, -5.0 / 3.0, 0.0, 5.0 / 3.0, 10.0 / 3.0, 5.0},
  };
  return grids;
}

}  // namespace

double branin(double x1, double x2) {
  const double a = 1.0;
  const double b = 5.1 / (4.0 * kPi * kPi);
  const double c = 5.0 / kPi;
  const double r = 6.0;
  const double s = 10.0;
  const double t = 1.0 / (8.0 * kPi);
  return a * sq(x2 - b * x1 * x1 + c * x1 - r) + s * (1.0 - t) * std::cos(x1) + s;
}

Problem make_ackley13() {
  std::vector<ParameterDescriptor> params;
  for (int i = 0; i < 10; ++i) params.push_back(ParameterDescriptor::binary("z" + std::to_string(i)));
  for (int i = 0; i < 3; ++i) {
    params.push_back(ParameterDescriptor::continuous(-1.0, 1.0, "x" + std::to_string(i)));
  }
  Problem prob;
  prob.id = "ackley13";
  prob.space = SearchSpace(std::move(params));
  prob.evaluator = [space = prob.space](const DesignPoint& p) {
    validate(space, p);
    const double a = 20.0, b = 0.2, c = 2.0 * kPi;
    const double d = 13.0;
    double sum_sq = 0.0, sum_cos = 0.0;
    for (std::size_t i = 0; i < 13; ++i) {
      const double v = i < 10 ? 2.0 * p.values[i] - 1.0 : p.values[i];
      sum_sq += v * v;
      sum_cos += std::cos(c * v);
    }
    const double value = -a * std::exp(-b * std::sqrt(sum_sq / d)) -
                         std::exp(sum_cos / d) + a + kE;
    return Evaluation{value, {}};
  };
  // global minimum: continuous part at zero, any binary assignment (all give
  // |v| = 1 and cos(2 pi v) = 1)
  DesignPoint best;
  best.values.assign(13, 0.0);
  prob.optimum = prob.evaluator(best).objective;
  return prob;
}

Problem make_mixed_int_f1(std::uint64_t seed) {
  std::vector<ParameterDescriptor> params;
  params.push_back(ParameterDescriptor::binary("z0"));
  params.push_back(ParameterDescriptor::binary("z1"));
  params.push_back(ParameterDescriptor::ordinal(3, "z2"));
  params.push_back(ParameterDescriptor::ordinal(3, "z3"));
  params.push_back(ParameterDescriptor::ordinal(5, "z4"));
  params.push_back(ParameterDescriptor::ordinal(5, "z5"));
  params.push_back(ParameterDescriptor::ordinal(7, "z6"));
  params.push_back(ParameterDescriptor::ordinal(7, "z7"));
  for (int i = 0; i < 8; ++i) {
    params.push_back(ParameterDescriptor::continuous(-5.0, 5.0, "x" + std::to_string(i)));
  }

  Rng rng = make_rng(derive_seed(seed, 0x6631ULL));
  std::vector<double> x_opt(16);
  for (auto& v : x_opt) v = uniform(rng, -4.0, 4.0);
  // unit-scale Cauchy via the tangent transform, scaled to put about half the
  // mass in [-100, 100], then clamped and rounded
  const double cauchy = 100.0 * std::tan(kPi * (uniform01(rng) - 0.5));
  const double f_opt = std::round(std::clamp(cauchy, -1000.0, 1000.0));

  Problem prob;
  prob.id = "mixed_int_f1";
  prob.space = SearchSpace(std::move(params));
  prob.evaluator = [space = prob.space, x_opt, f_opt](const DesignPoint& p) {
    validate(space, p);
    double sum = 0.0;
    for (std::size_t i = 0; i < 16; ++i) {
      const double v = i < 8 ? f1_grids()[i][static_cast<std::size_t>(p.values[i])]
                             : p.values[i];
      sum += sq(v - x_opt[i]);
    }
    return Evaluation{sum + f_opt, {}};
  };
  double best = f_opt;
  for (std::size_t i = 0; i < 8; ++i) {
    double closest = std::numeric_limits<double>::infinity();
    for (double g : f1_grids()[i]) closest = std::min(closest, sq(g - x_opt[i]));
    best += closest;
  }
  prob.optimum = best;  // continuous dims reach x_opt exactly
  return prob;
}

Problem make_rosenbrock10() {
  std::vector<ParameterDescriptor> params;
  for (int i = 0; i < 6; ++i) params.push_back(ParameterDescriptor::ordinal(4, "z" + std::to_string(i)));
  for (int i = 0; i < 4; ++i) {
    params.push_back(ParameterDescriptor::continuous(-5.0, 10.0, "x" + std::to_string(i)));
  }
  Problem prob;
  prob.id = "rosenbrock10";
  prob.space = SearchSpace(std::move(params));
  prob.evaluator = [space = prob.space](const DesignPoint& p) {
    validate(space, p);
    static const double grid[4] = {-5.0, 0.0, 5.0, 10.0};
    double v[10];
    for (std::size_t i = 0; i < 10; ++i) {
      v[i] = i < 6 ? grid[static_cast<std::size_t>(p.values[i])] : p.values[i];
    }
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < 10; ++i) {
      sum += 100.0 * sq(v[i + 1] - v[i] * v[i]) + sq(v[i] - 1.0);
    }
    return Evaluation{sum, {}};
  };
  // the all-ones minimizer is not on the ordinal grid; regret uses pooled
  // incumbents instead of a stored optimum
  return prob;
}

Problem make_branin_binary() {
  std::vector<ParameterDescriptor> params;
  params.push_back(ParameterDescriptor::continuous(-5.0, 10.0, "x0"));
  params.push_back(ParameterDescriptor::binary("z0"));
  Problem prob;
  prob.id = "branin_binary";
  prob.space = SearchSpace(std::move(params));
  prob.evaluator = [space = prob.space](const DesignPoint& p) {
    validate(space, p);
    return Evaluation{branin(p.values[0], 15.0 * p.values[1]), {}};
  };
  // both slices are one-dimensional; a dense grid pins the optimum
  double best = std::numeric_limits<double>::infinity();
  const int grid_n = 20001;
  for (int zi = 0; zi <= 1; ++zi) {
    for (int k = 0; k < grid_n; ++k) {
      const double x = -5.0 + 15.0 * static_cast<double>(k) / (grid_n - 1);
      best = std::min(best, branin(x, 15.0 * zi));
    }
  }
  prob.optimum = best;
  return prob;
}

Problem make_toy_constrained() {
  std::vector<ParameterDescriptor> params;
  params.push_back(ParameterDescriptor::binary("z0"));
  params.push_back(ParameterDescriptor::ordinal(4, "z1"));
  params.push_back(ParameterDescriptor::continuous(0.0, 1.0, "x0"));
  params.push_back(ParameterDescriptor::continuous(0.0, 1.0, "x1"));

  // objective sum_i w_i (v_i - a_i)^2 over v = (z0, z1/3, x0, x1);
  // constraint 1 - |v - center|^2 >= 0
  static const double w[4] = {1.0, 2.0, 3.0, 1.0};
  static const double a[4] = {0.0, 1.0, 0.9, 0.1};
  static const double center[4] = {1.0, 2.0 / 3.0, 0.5, 0.5};

  Problem prob;
  prob.id = "toy_constrained";
  prob.space = SearchSpace(std::move(params));
  prob.num_constraints = 1;
  prob.evaluator = [space = prob.space](const DesignPoint& p) {
    validate(space, p);
    const double v[4] = {p.values[0], p.values[1] / 3.0, p.values[2], p.values[3]};
    double obj = 0.0, dist = 0.0;
    for (int i = 0; i < 4; ++i) {
      obj += w[i] * sq(v[i] - a[i]);
      dist += sq(v[i] - center[i]);
    }
    return Evaluation{obj, {1.0 - dist}};
  };

  // best feasible value: per discrete configuration, the continuous part is a
  // weighted quadratic minimized over a disk; the KKT multiplier is found by
  // bisection (x(lambda) stays inside the unit box here)
  double best = std::numeric_limits<double>::infinity();
  for (int zb = 0; zb <= 1; ++zb) {
    for (int zo = 0; zo <= 3; ++zo) {
      const double v0 = zb, v1 = zo / 3.0;
      const double fixed_obj = w[0] * sq(v0 - a[0]) + w[1] * sq(v1 - a[1]);
      const double r2 = 1.0 - sq(v0 - center[0]) - sq(v1 - center[1]);
      if (r2 < 0.0) continue;  // no feasible continuous point for this config
      auto dist_at = [&](double lambda) {
        double d2 = 0.0;
        for (int i = 2; i < 4; ++i) {
          const double xi = (w[i] * a[i] + lambda * center[i]) / (w[i] + lambda);
          d2 += sq(xi - center[i]);
        }
        return d2;
      };
      double lambda = 0.0;
      if (dist_at(0.0) > r2) {
        double lo = 0.0, hi = 1.0;
        while (dist_at(hi) > r2) hi *= 2.0;
        for (int it = 0; it < 200; ++it) {
          const double mid = 0.5 * (lo + hi);
          (dist_at(mid) > r2 ? lo : hi) = mid;
        }
        lambda = 0.5 * (lo + hi);
      }
      double obj = fixed_obj;
      for (int i = 2; i < 4; ++i) {
        const double xi = (w[i] * a[i] + lambda * center[i]) / (w[i] + lambda);
        obj += w[i] * sq(xi - a[i]);
      }
      best = std::min(best, obj);
    }
  }
  prob.optimum = best;
  return prob;
}

Problem make_problem(const std::string& id, std::uint64_t seed) {
  if (id == "ackley13") return make_ackley13();
  if (id == "mixed_int_f1") return make_mixed_int_f1(seed);
  if (id == "rosenbrock10") return make_rosenbrock10();
  if (id == "branin_binary") return make_branin_binary();
  if (id == "toy_constrained") return make_toy_constrained();
  throw std::invalid_argument("unknown problem id: " + id);
}

std::vector<std::string> problem_ids() {
  return {"ackley13", "mixed_int_f1", "rosenbrock10", "branin_binary", "toy_constrained"};
}

}  // namespace mixedbo
