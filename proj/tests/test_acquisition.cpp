#include <doctest.h>

#include <cmath>

#include "mixedbo/acquisition.hpp"
#include "mixedbo/rng.hpp"
#include "mixedbo/space.hpp"
#include "mixedbo/surrogate.hpp"
#include "support.hpp"

using namespace mixedbo;

namespace {

SearchSpace branin_like_space() {
  return SearchSpace(std::vector<ParameterDescriptor>{
      ParameterDescriptor::continuous(-5.0, 10.0, "x0"),
      ParameterDescriptor::binary("z0"),
  });
}

GPModel train_model(const SearchSpace& space, std::size_t n, std::uint64_t seed) {
  const auto pts = sobol_init(space, n, seed);
  std::vector<double> ys;
  Rng rng = make_rng(seed + 1);
  for (const auto& p : pts) {
    ys.push_back(std::sin(p.values[0]) + 0.5 * p.values[1] + 0.05 * normal01(rng));
  }
  return fit_gp(space, pts, ys, seed + 2);
}

// A single-point model with outputscale = noise = 2 has posterior mean equal
// to the observation and posterior sd exactly 1 at the training input.
GPModel unit_sigma_model(const SearchSpace& space, const DesignPoint& at, double y) {
  KernelConfig cfg = default_kernel_config(space, KernelStructure::kMixedSumProduct);
  cfg.outputscales.assign(cfg.outputscales.size(), 0.0);
  cfg.outputscales[0] = 2.0;
  return GPModel::build(space, cfg, 0.0, 2.0, {at}, {y});
}

}  // namespace

TEST_CASE("expected improvement closed forms") {
  const SearchSpace space = branin_like_space();
  const DesignPoint at{{1.0, 1.0}};

  SUBCASE("mu at the incumbent, unit sigma: EI = 1/sqrt(2 pi)") {
    const GPModel model = unit_sigma_model(space, at, 3.0);
    const Posterior post = model.posterior({at}, false);
    REQUIRE(post.mean[0] == doctest::Approx(3.0).epsilon(1e-12));
    REQUIRE(post.variance[0] == doctest::Approx(1.0).epsilon(1e-12));
    AcquisitionSpec spec;
    spec.kind = AcquisitionKind::kEi;
    spec.incumbent = 3.0;
    spec.objective_model = &model;
    const AcqEval ev = evaluate(spec, space, at, false);
    CHECK(ev.value == doctest::Approx(1.0 / std::sqrt(2.0 * 3.14159265358979)).epsilon(1e-9));
  }
  SUBCASE("mu at the incumbent, vanishing sigma: EI -> 0") {
    KernelConfig cfg = default_kernel_config(space, KernelStructure::kMixedSumProduct);
    const GPModel model = GPModel::build(space, cfg, 0.0, 1e-9, {at, {{-3.0, 0.0}}},
                                         {2.0, -1.0});
    const Posterior post = model.posterior({at}, false);
    AcquisitionSpec spec;
    spec.kind = AcquisitionKind::kEi;
    spec.incumbent = post.mean[0];
    spec.objective_model = &model;
    const AcqEval ev = evaluate(spec, space, at, false);
    CHECK(ev.value >= 0.0);
    CHECK(ev.value < 1e-4);
  }
}

TEST_CASE("expected improvement matches a Monte Carlo oracle") {
  const SearchSpace space = branin_like_space();
  const GPModel model = train_model(space, 12, 5);
  AcquisitionSpec spec;
  spec.kind = AcquisitionKind::kEi;
  spec.incumbent = 0.4;
  spec.objective_model = &model;

  Rng rng = make_rng(202);
  for (int rep = 0; rep < 10; ++rep) {
    DesignPoint q{{uniform(rng, -5.0, 10.0), std::floor(uniform(rng, 0.0, 2.0))}};
    q.values[1] = std::min(q.values[1], 1.0);
    const Posterior post = model.posterior({q}, false);
    const double mu = post.mean[0];
    const double sd = std::sqrt(post.variance[0]);
    Rng mc = make_rng(707 + rep);
    double acc = 0.0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
      acc += std::max(mu + sd * normal01(mc) - spec.incumbent, 0.0);
    }
    const double oracle = acc / n;
    const double got = evaluate(spec, space, q, false).value;
    if (oracle > 1e-4) {
      CHECK(testsupport::rel_error(got, oracle) < 1e-2);
    } else {
      CHECK(std::abs(got - oracle) < 1e-4);
    }
  }
}

TEST_CASE("ei is nonnegative and nondecreasing in sigma at fixed mean") {
  const SearchSpace space = branin_like_space();
  const DesignPoint at{{1.0, 1.0}};
  // scale the outputscale while keeping the noise/os ratio: the posterior
  // mean at the training point stays fixed and sigma grows
  double prev = -1.0;
  for (double scale : {0.25, 1.0, 4.0, 16.0}) {
    KernelConfig cfg = default_kernel_config(space, KernelStructure::kMixedSumProduct);
    cfg.outputscales[0] = 2.0 * scale;
    const GPModel model = GPModel::build(space, cfg, 0.0, 2.0 * scale, {at}, {3.0});
    AcquisitionSpec spec;
    spec.kind = AcquisitionKind::kEi;
    spec.incumbent = 3.0;
    spec.objective_model = &model;
    const double ei = evaluate(spec, space, at, false).value;
    CHECK(ei >= 0.0);
    CHECK(ei > prev);
    prev = ei;
  }
}

TEST_CASE("constrained EI is dominated by EI and collapses when certainly feasible") {
  const SearchSpace space = branin_like_space();
  const GPModel objective = train_model(space, 12, 5);

  // constraint model with strongly positive values: P(feasible) ~ 1
  const auto pts = sobol_init(space, 12, 9);
  std::vector<double> c_pos, c_neg;
  for (const auto& p : pts) {
    c_pos.push_back(50.0 + p.values[0]);
    c_neg.push_back(-50.0 - p.values[0]);
  }
  const GPModel feasible_model = fit_gp(space, pts, c_pos, 3);
  const GPModel infeasible_model = fit_gp(space, pts, c_neg, 3);

  AcquisitionSpec ei_spec;
  ei_spec.kind = AcquisitionKind::kEi;
  ei_spec.incumbent = 0.4;
  ei_spec.objective_model = &objective;

  AcquisitionSpec cei_spec = ei_spec;
  cei_spec.kind = AcquisitionKind::kConstrainedEi;
  cei_spec.constraint_models = {&feasible_model};

  AcquisitionSpec cei_bad = cei_spec;
  cei_bad.constraint_models = {&infeasible_model};

  Rng rng = make_rng(404);
  for (int rep = 0; rep < 20; ++rep) {
    DesignPoint q{{uniform(rng, -5.0, 10.0), std::floor(uniform(rng, 0.0, 2.0))}};
    q.values[1] = std::min(q.values[1], 1.0);
    const double ei = evaluate(ei_spec, space, q, false).value;
    const double cei = evaluate(cei_spec, space, q, false).value;
    const double cei_inf = evaluate(cei_bad, space, q, false).value;
    CHECK(cei <= ei + 1e-12);
    CHECK(cei == doctest::Approx(ei).epsilon(1e-3));
    CHECK(cei_inf <= 1e-6 * std::max(ei, 1.0));
  }
}

TEST_CASE("ucb schedule and sigma-zero behavior") {
  CHECK(ucb_beta(1, 1) == doctest::Approx(0.2 * std::log(2.0)).epsilon(1e-12));
  double prev = 0.0;
  for (int t = 1; t <= 50; ++t) {
    const double beta = ucb_beta(t, 7);
    CHECK(beta > prev);
    prev = beta;
  }
  for (int t : {1, 3, 10}) {
    CHECK(ucb_beta(t, 14) == doctest::Approx(2.0 * ucb_beta(t, 7)).epsilon(1e-12));
  }
  CHECK_THROWS(ucb_beta(0, 3));

  // sigma ~ 0: UCB collapses to the posterior mean
  const SearchSpace space = branin_like_space();
  const DesignPoint at{{1.0, 1.0}};
  KernelConfig cfg = default_kernel_config(space, KernelStructure::kMixedSumProduct);
  const GPModel model = GPModel::build(space, cfg, 0.0, 1e-10, {at, {{-3.0, 0.0}}},
                                       {2.0, -1.0});
  const Posterior post = model.posterior({at}, false);
  AcquisitionSpec spec;
  spec.kind = AcquisitionKind::kUcb;
  spec.beta = 4.0;
  spec.objective_model = &model;
  CHECK(std::abs(evaluate(spec, space, at, false).value - post.mean[0]) < 1e-3);
}

TEST_CASE("acquisition gradients match central finite differences") {
  const SearchSpace space = branin_like_space();
  const GPModel objective = train_model(space, 14, 7);
  const auto pts = sobol_init(space, 14, 23);
  std::vector<double> cs;
  for (const auto& p : pts) cs.push_back(p.values[0] * 0.2 - 0.3);
  const GPModel constraint = fit_gp(space, pts, cs, 5);

  std::vector<AcquisitionSpec> specs(3);
  specs[0].kind = AcquisitionKind::kEi;
  specs[0].incumbent = 0.4;
  specs[0].objective_model = &objective;
  specs[1].kind = AcquisitionKind::kUcb;
  specs[1].beta = 2.0;
  specs[1].objective_model = &objective;
  specs[2].kind = AcquisitionKind::kConstrainedEi;
  specs[2].incumbent = 0.4;
  specs[2].objective_model = &objective;
  specs[2].constraint_models = {&constraint};

  Rng rng = make_rng(55);
  for (const auto& spec : specs) {
    for (int rep = 0; rep < 17; ++rep) {
      DesignPoint q{{uniform(rng, -4.5, 9.5), std::floor(uniform(rng, 0.0, 2.0))}};
      q.values[1] = std::min(q.values[1], 1.0);
      const AcqEval ev = evaluate(spec, space, q, true);
      auto value_at = [&](const std::vector<double>& xv) {
        DesignPoint qq = q;
        qq.values[0] = xv[0];
        return evaluate(spec, space, qq, false).value;
      };
      const double fd = testsupport::central_diff(value_at, {q.values[0]}, 0, 1e-5);
      if (std::abs(fd) > 1e-10 || std::abs(ev.grad_x[0]) > 1e-10) {
        CHECK(testsupport::rel_error(ev.grad_x[0], fd, 1e-8) < 1e-3);
      }
    }
  }
}

TEST_CASE("batch evaluation agrees with pointwise evaluation") {
  const SearchSpace space = branin_like_space();
  const GPModel model = train_model(space, 10, 3);
  AcquisitionSpec spec;
  spec.kind = AcquisitionKind::kEi;
  spec.incumbent = 0.2;
  spec.objective_model = &model;

  const auto pts = sobol_init(space, 100, 77);  // spans multiple chunks
  const Eigen::VectorXd batch = evaluate_batch(spec, space, pts);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(batch[static_cast<Eigen::Index>(i)] ==
          doctest::Approx(evaluate(spec, space, pts[i], false).value).epsilon(1e-12));
  }

  const AcqOracle oracle = make_oracle(spec, space);
  CHECK(oracle.eval(pts[0], false).value == doctest::Approx(batch[0]).epsilon(1e-12));
  CHECK(oracle.smooth_relaxed);  // no categoricals in this space
}
