#include <doctest.h>

#include <cmath>
#include <map>

#include "mixedbo/acquisition.hpp"
#include "mixedbo/problems.hpp"
#include "mixedbo/reparam.hpp"
#include "mixedbo/rng.hpp"
#include "mixedbo/space.hpp"
#include "mixedbo/surrogate.hpp"
#include "support.hpp"

using namespace mixedbo;

namespace {

SearchSpace mixed_space() {
  return SearchSpace(std::vector<ParameterDescriptor>{
      ParameterDescriptor::continuous(-1.0, 1.0, "x0"),
      ParameterDescriptor::binary("z0"),
      ParameterDescriptor::ordinal(5, "z1"),
      ParameterDescriptor::categorical(3, "z2"),
  });
}

// Oracle over an explicit function of (x, z) with analytic continuous grads.
AcqOracle function_oracle(const SearchSpace& space,
                          std::function<double(const DesignPoint&)> f,
                          std::function<Eigen::VectorXd(const DesignPoint&)> grad = {}) {
  AcqOracle oracle;
  oracle.eval = [f, grad, &space](const DesignPoint& p, bool with_grad) {
    AcqEval ev;
    ev.value = f(p);
    if (with_grad) {
      ev.grad_x = grad ? grad(p)
                       : Eigen::VectorXd::Zero(
                             static_cast<Eigen::Index>(space.num_continuous()));
    }
    return ev;
  };
  oracle.eval_batch = [f](const std::vector<DesignPoint>& pts) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) out[static_cast<Eigen::Index>(i)] = f(pts[i]);
    return out;
  };
  return oracle;
}

// EI oracle over a GP fitted on the binary Branin problem.
struct BraninFixture {
  Problem problem = make_branin_binary();
  GPModel model;
  AcquisitionSpec spec;
  AcqOracle oracle;

  explicit BraninFixture(std::uint64_t seed = 3, std::size_t n = 10) {
    const auto pts = sobol_init(problem.space, n, seed);
    std::vector<double> ys;
    for (const auto& p : pts) ys.push_back(-problem.evaluator(p).objective);
    model = fit_gp(problem.space, pts, ys, seed + 1);
    spec.kind = AcquisitionKind::kEi;
    spec.incumbent = *std::max_element(ys.begin(), ys.end());
    spec.objective_model = &model;
    oracle = make_oracle(spec, problem.space);
  }
};

}  // namespace

TEST_CASE("transform values and jacobians") {
  const SearchSpace space = mixed_space();
  const std::size_t dim = theta_dim(space);
  REQUIRE(dim == 1 + 1 + 3);

  SUBCASE("binary midpoint maps to one half for any tau") {
    for (double tau : {0.01, 0.1, 1.0}) {
      std::vector<double> phi = {0.5, 2.0, 0.5, 0.5, 0.5};
      const auto tr = transform(space, RawParams{phi, tau});
      CHECK(tr.theta.theta[0] == doctest::Approx(0.5).epsilon(1e-12));
    }
  }
  SUBCASE("binary saturation at phi = 1, tau = 0.1") {
    std::vector<double> phi = {1.0, 2.0, 0.5, 0.5, 0.5};
    const auto tr = transform(space, RawParams{phi, 0.1});
    CHECK(tr.theta.theta[0] == doctest::Approx(1.0 / (1.0 + std::exp(-5.0))).epsilon(1e-12));
  }
  SUBCASE("symmetric categorical block maps to the uniform simplex point") {
    std::vector<double> phi = {0.5, 2.0, 0.5, 0.5, 0.5};
    const auto tr = transform(space, RawParams{phi, 0.1});
    for (int c = 0; c < 3; ++c) {
      CHECK(tr.theta.theta[2 + static_cast<std::size_t>(c)] ==
            doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }
    double total = tr.theta.theta[2] + tr.theta.theta[3] + tr.theta.theta[4];
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("ordinal transform splits mass between adjacent levels") {
    std::vector<double> phi = {0.5, 2.5, 0.5, 0.5, 0.5};
    const auto tr = transform(space, RawParams{phi, 0.1});
    CHECK(tr.theta.theta[1] == doctest::Approx(2.5).epsilon(1e-12));  // sigmoid(0)
    // integer phi keeps most mass on its level
    phi[1] = 2.0;
    const auto integral = transform(space, RawParams{phi, 0.1});
    CHECK(integral.theta.theta[1] ==
          doctest::Approx(2.0 + 1.0 / (1.0 + std::exp(5.0))).epsilon(1e-12));
    // cap at the top of the box
    phi[1] = 4.0;
    const auto capped = transform(space, RawParams{phi, 0.1});
    CHECK(capped.theta.theta[1] == 4.0);
  }
  SUBCASE("jacobian matches finite differences") {
    Rng rng = make_rng(5);
    for (int rep = 0; rep < 10; ++rep) {
      std::vector<double> phi(dim);
      for (auto& v : phi) v = uniform(rng, 0.05, 0.95);
      phi[1] = uniform(rng, 0.1, 3.6);
      const double tau = 0.1;
      const auto tr = transform(space, RawParams{phi, tau});
      const ThetaLayout layout = theta_layout(space);
      for (std::size_t j = 0; j < space.num_discrete(); ++j) {
        const std::size_t off = layout.offsets[j];
        const Eigen::Index block = tr.jacobian[j].rows();
        for (Eigen::Index a = 0; a < block; ++a) {
          for (Eigen::Index b = 0; b < block; ++b) {
            auto theta_a = [&](const std::vector<double>& pv) {
              return transform(space, RawParams{pv, tau})
                  .theta.theta[off + static_cast<std::size_t>(a)];
            };
            const double fd =
                testsupport::central_diff(theta_a, phi, off + static_cast<std::size_t>(b), 1e-6);
            CHECK(std::abs(tr.jacobian[j](a, b) - fd) < 1e-5 * std::max(1.0, std::abs(fd)));
          }
        }
      }
    }
  }
  SUBCASE("tau must be positive") {
    std::vector<double> phi(dim, 0.5);
    CHECK_THROWS(transform(space, RawParams{phi, 0.0}));
  }
}

TEST_CASE("log_prob masses and score") {
  const SearchSpace space = mixed_space();

  SUBCASE("binary half") {
    DistributionParams theta{{0.5, 2.0, 0.2, 0.3, 0.5}};
    const auto res = log_prob(space, theta, {1.0, 2.0, 2.0});
    CHECK(std::exp(res.log_prob) ==
          doctest::Approx(0.5 * 1.0 * 0.5).epsilon(1e-12));  // p(z1=2)=1 at theta=2.0
  }
  SUBCASE("ordinal theta=2.3 splits 0.7/0.3") {
    DistributionParams theta{{0.5, 2.3, 0.2, 0.3, 0.5}};
    const auto pmf = marginal_pmf(space, theta, 1);
    CHECK(pmf[2] == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(pmf[3] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(pmf[0] == 0.0);
    CHECK(pmf[1] == 0.0);
    CHECK(pmf[4] == 0.0);
    CHECK_THROWS_AS(log_prob(space, theta, {1.0, 0.0, 2.0}), ZeroProbabilityError);
  }
  SUBCASE("normalization over a full enumeration for random theta") {
    Rng rng = make_rng(21);
    for (int rep = 0; rep < 25; ++rep) {
      std::vector<double> phi(theta_dim(space));
      for (auto& v : phi) v = uniform01(rng);
      phi[1] = uniform(rng, 0.0, 4.0);
      const auto tr = transform(space, RawParams{phi, 0.1});
      double total = 0.0;
      for (const auto& z : enumerate_discrete(space)) {
        double p = 1.0;
        for (std::size_t j = 0; j < z.size(); ++j) {
          p *= marginal_pmf(space, tr.theta, j)[static_cast<std::size_t>(z[j])];
        }
        total += p;
        if (p > 0.0) {
          CHECK(std::exp(log_prob(space, tr.theta, z).log_prob) ==
                doctest::Approx(p).epsilon(1e-9));
        }
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
  SUBCASE("score identity: zero mean under the distribution") {
    Rng rng = make_rng(31);
    std::vector<double> phi = {0.35, 1.8, 0.7, 0.2, 0.4};
    const auto tr = transform(space, RawParams{phi, 0.1});
    const std::size_t n = 100000;
    const auto zs = sample(space, tr.theta, n, rng);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(theta_dim(space)));
    Eigen::VectorXd acc2 = acc;
    for (const auto& z : zs) {
      const auto s = log_prob(space, tr.theta, z).score;
      acc += s;
      acc2 += s.cwiseProduct(s);
    }
    for (Eigen::Index i = 0; i < acc.size(); ++i) {
      const double mean = acc[i] / static_cast<double>(n);
      const double var = acc2[i] / static_cast<double>(n) - mean * mean;
      const double se = std::sqrt(var / static_cast<double>(n));
      CHECK(std::abs(mean) <= 3.0 * se + 1e-12);
    }
  }
}

TEST_CASE("sampling laws") {
  const SearchSpace space = mixed_space();

  SUBCASE("point masses sample deterministically") {
    Rng rng = make_rng(3);
    DistributionParams theta{{1.0, 2.0, 0.0, 1.0, 0.0}};
    for (const auto& z : sample(space, theta, 200, rng)) {
      CHECK(z[0] == 1.0);
      CHECK(z[1] == 2.0);
      CHECK(z[2] == 1.0);
    }
  }
  SUBCASE("binary frequency matches theta") {
    Rng rng = make_rng(7);
    DistributionParams theta{{0.25, 2.0, 1.0, 0.0, 0.0}};
    double ones = 0.0;
    const std::size_t n = 100000;
    for (const auto& z : sample(space, theta, n, rng)) ones += z[0];
    CHECK(std::abs(ones / static_cast<double>(n) - 0.25) < 0.01);
  }
  SUBCASE("saa reparameterization map on ordinals") {
    SearchSpace ord(std::vector<ParameterDescriptor>{ParameterDescriptor::ordinal(5)});
    DistributionParams theta{{2.3}};
    BaseSampleSet base;
    base.uniforms.resize(2, 1);
    base.uniforms(0, 0) = 0.2;
    base.uniforms(1, 0) = 0.4;
    const auto zs = saa_sample(ord, theta, base);
    CHECK(zs[0][0] == 3.0);  // u < frac picks the upper level
    CHECK(zs[1][0] == 2.0);
  }
  SUBCASE("saa law matches the iid sampler law") {
    Rng rng = make_rng(17);
    std::vector<double> phi = {0.3, 2.6, 0.2, 0.8, 0.5};
    const auto tr = transform(space, RawParams{phi, 0.1});
    const std::size_t n = 100000;
    const auto direct = sample(space, tr.theta, n, rng);

    BaseSampleSet base;
    base.uniforms.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(3));
    Rng urng = make_rng(19);
    for (Eigen::Index i = 0; i < base.uniforms.rows(); ++i) {
      for (Eigen::Index j = 0; j < 3; ++j) base.uniforms(i, j) = uniform01(urng);
    }
    const auto via_saa = saa_sample(space, tr.theta, base);

    // chi-square on the joint configuration counts
    const auto configs = enumerate_discrete(space);
    std::map<std::vector<double>, std::size_t> index;
    for (std::size_t k = 0; k < configs.size(); ++k) index[configs[k]] = k;
    std::vector<double> count_a(configs.size(), 0.0), count_b(configs.size(), 0.0);
    for (const auto& z : direct) count_a[index[z]] += 1.0;
    for (const auto& z : via_saa) count_b[index[z]] += 1.0;
    double stat = 0.0;
    int dof = 0;
    for (std::size_t k = 0; k < configs.size(); ++k) {
      double p = 1.0;
      for (std::size_t j = 0; j < 3; ++j) {
        p *= marginal_pmf(space, tr.theta, j)[static_cast<std::size_t>(configs[k][j])];
      }
      const double expected = p * static_cast<double>(n);
      if (expected < 5.0) continue;
      stat += (count_a[k] - expected) * (count_a[k] - expected) / expected;
      stat += (count_b[k] - expected) * (count_b[k] - expected) / expected;
      dof += 2;
    }
    CHECK(testsupport::chi2_pvalue(stat, dof) > 0.01);
  }
}

TEST_CASE("base sample sets are sobol uniforms, fixed by seed") {
  const SearchSpace space = mixed_space();
  const BaseSampleSet a = make_base_samples(space, 128, 5);
  const BaseSampleSet b = make_base_samples(space, 128, 5);
  CHECK(a.uniforms == b.uniforms);
  CHECK(a.uniforms.rows() == 128);
  CHECK(a.uniforms.cols() == 3);
  CHECK(a.uniforms.minCoeff() >= 0.0);
  CHECK(a.uniforms.maxCoeff() < 1.0);
}

TEST_CASE("enumeration order and cap") {
  const SearchSpace space = mixed_space();
  const auto configs = enumerate_discrete(space);
  CHECK(configs.size() == 2 * 5 * 3);
  CHECK(configs[0] == DiscreteAssignment{0.0, 0.0, 0.0});
  CHECK(configs[1] == DiscreteAssignment{0.0, 0.0, 1.0});  // last varies fastest
  CHECK(configs.back() == DiscreteAssignment{1.0, 4.0, 2.0});
  CHECK_THROWS_AS(enumerate_discrete(space, 8), SpaceTooLargeError);
}

TEST_CASE("analytic po: point mass, averaging, and gradients") {
  const SearchSpace space = mixed_space();

  SUBCASE("point mass returns the AF at the implied design") {
    const auto oracle = function_oracle(space, [](const DesignPoint& p) {
      return p.values[1] * 4.0 + p.values[2] + 0.5 * p.values[3] + p.values[0];
    });
    DistributionParams theta{{1.0, 3.0, 0.0, 0.0, 1.0}};
    const auto po = analytic_po(oracle, space, {0.25}, theta);
    const DesignPoint implied = assemble_design(space, {0.25}, {1.0, 3.0, 2.0});
    CHECK(po.value == doctest::Approx(oracle.eval(implied, false).value).epsilon(1e-12));
  }
  SUBCASE("single binary: probability-weighted average") {
    SearchSpace bin(std::vector<ParameterDescriptor>{ParameterDescriptor::binary()});
    const auto oracle = function_oracle(bin, [](const DesignPoint& p) {
      return p.values[0] == 1.0 ? 4.0 : 2.0;
    });
    DistributionParams theta{{0.5}};
    CHECK(analytic_po(oracle, bin, {}, theta).value == doctest::Approx(3.0).epsilon(1e-12));
  }
  SUBCASE("gradients match finite differences on binary branin") {
    BraninFixture fx;
    const SearchSpace& bspace = fx.problem.space;
    Rng rng = make_rng(9);
    for (int rep = 0; rep < 12; ++rep) {
      const std::vector<double> x = {uniform(rng, -4.5, 9.5)};
      DistributionParams theta{{uniform(rng, 0.1, 0.9)}};
      const auto po = analytic_po(fx.oracle, bspace, x, theta);

      auto po_at_theta = [&](const std::vector<double>& tv) {
        return analytic_po(fx.oracle, bspace, x, DistributionParams{{tv[0]}}).value;
      };
      const double fd_theta = testsupport::central_diff(po_at_theta, {theta.theta[0]}, 0, 1e-5);
      CHECK(testsupport::rel_error(po.grad_theta[0], fd_theta, 1e-8) < 1e-4);

      auto po_at_x = [&](const std::vector<double>& xv) {
        return analytic_po(fx.oracle, bspace, xv, theta).value;
      };
      const double fd_x = testsupport::central_diff(po_at_x, x, 0, 1e-5);
      CHECK(testsupport::rel_error(po.grad_x[0], fd_x, 1e-8) < 1e-4);
    }
  }
  SUBCASE("categorical gradients along simplex tangent directions") {
    SearchSpace cat(std::vector<ParameterDescriptor>{ParameterDescriptor::categorical(3)});
    const auto oracle = function_oracle(cat, [](const DesignPoint& p) {
      return p.values[0] * p.values[0] + 1.0;
    });
    DistributionParams theta{{0.5, 0.3, 0.2}};
    const auto po = analytic_po(oracle, cat, {}, theta);
    // tangent direction e_a - e_b keeps the simplex constraint to first order
    for (int a = 0; a < 3; ++a) {
      for (int b = a + 1; b < 3; ++b) {
        const double h = 1e-6;
        DistributionParams plus = theta, minus = theta;
        plus.theta[static_cast<std::size_t>(a)] += h;
        plus.theta[static_cast<std::size_t>(b)] -= h;
        minus.theta[static_cast<std::size_t>(a)] -= h;
        minus.theta[static_cast<std::size_t>(b)] += h;
        const double fd = (analytic_po(oracle, cat, {}, plus).value -
                           analytic_po(oracle, cat, {}, minus).value) /
                          (2.0 * h);
        const double analytic = po.grad_theta[a] - po.grad_theta[b];
        CHECK(std::abs(analytic - fd) < 1e-5 * std::max(1.0, std::abs(fd)));
      }
    }
  }
  SUBCASE("enumeration cap raises above 4096") {
    std::vector<ParameterDescriptor> big;
    for (int i = 0; i < 13; ++i) big.push_back(ParameterDescriptor::binary());
    SearchSpace bspace(big);
    const auto oracle = function_oracle(bspace, [](const DesignPoint&) { return 0.0; });
    DistributionParams theta{std::vector<double>(13, 0.5)};
    CHECK_THROWS_AS(analytic_po(oracle, bspace, {}, theta), SpaceTooLargeError);
  }
}

TEST_CASE("mc po estimators") {
  BraninFixture fx;
  const SearchSpace& space = fx.problem.space;

  SUBCASE("point mass makes mc exact and N=1 returns one AF value") {
    DistributionParams theta{{1.0}};
    Rng rng = make_rng(2);
    const auto zs = sample(space, theta, 16, rng);
    const std::vector<double> x = {3.0};
    const double mc = mc_po(fx.oracle, space, x, zs);
    const double exact = analytic_po(fx.oracle, space, x, theta).value;
    CHECK(mc == doctest::Approx(exact).epsilon(1e-12));

    const auto one = sample(space, theta, 1, rng);
    const DesignPoint p = assemble_design(space, x, one[0]);
    CHECK(mc_po(fx.oracle, space, x, one) ==
          doctest::Approx(fx.oracle.eval(p, false).value).epsilon(1e-12));
  }
  SUBCASE("mc_po is unbiased against the analytic po") {
    const std::vector<double> x = {1.5};
    DistributionParams theta{{0.35}};
    const double exact = analytic_po(fx.oracle, space, x, theta).value;
    Rng rng = make_rng(23);
    std::vector<double> means;
    for (int b = 0; b < 200; ++b) {
      const auto zs = sample(space, theta, 128, rng);
      means.push_back(mc_po(fx.oracle, space, x, zs));
    }
    const double m = testsupport::mean(means);
    const double se = testsupport::sample_sd(means) / std::sqrt(200.0);
    CHECK(std::abs(m - exact) <= 3.0 * se + 1e-12);
  }
  SUBCASE("mc_po_grad is unbiased against the analytic gradient") {
    const std::vector<double> x = {1.5};
    DistributionParams theta{{0.35}};
    const auto exact = analytic_po(fx.oracle, space, x, theta);
    Rng rng = make_rng(29);
    const std::size_t n = 100000;
    const auto zs = sample(space, theta, n, rng);
    // accumulate per-sample terms for a standard error
    std::vector<double> terms;
    terms.reserve(n);
    const BaselineState none;
    for (const auto& z : zs) {
      const auto g = mc_po_grad(fx.oracle, space, x, theta, {z}, none);
      terms.push_back(g.grad_theta[0]);
    }
    const double m = testsupport::mean(terms);
    const double se = testsupport::sample_sd(terms) / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(m - exact.grad_theta[0]) <= 3.0 * se);
  }
  SUBCASE("constant AF gives a zero-mean score gradient") {
    const auto oracle = function_oracle(space, [](const DesignPoint&) { return 2.5; });
    DistributionParams theta{{0.3}};
    Rng rng = make_rng(31);
    const std::size_t n = 200000;
    const auto zs = sample(space, theta, n, rng);
    const BaselineState none;
    const auto g = mc_po_grad(oracle, space, {0.0}, theta, zs, none);
    // var of 2.5 * score / sqrt(n)
    const double score_sd = 2.5 * std::sqrt(1.0 / (0.3 * 0.7));
    CHECK(std::abs(g.grad_theta[0]) <= 3.0 * score_sd / std::sqrt(static_cast<double>(n)));
  }
  SUBCASE("the EMA baseline reduces estimator variance") {
    const std::vector<double> x = {1.5};
    DistributionParams theta{{0.35}};
    Rng rng = make_rng(37);
    const BaselineState none;
    // baseline warmed up on a few batches
    BaselineState warmed;
    for (int b = 0; b < 5; ++b) {
      const auto zs = sample(space, theta, 128, rng);
      const auto g = mc_po_grad(fx.oracle, space, x, theta, zs, warmed);
      warmed = update_baseline(warmed, g.batch_mean_af);
    }
    std::vector<double> with_baseline, without_baseline;
    for (int b = 0; b < 100; ++b) {
      const auto zs = sample(space, theta, 128, rng);
      with_baseline.push_back(mc_po_grad(fx.oracle, space, x, theta, zs, warmed).grad_theta[0]);
      without_baseline.push_back(mc_po_grad(fx.oracle, space, x, theta, zs, none).grad_theta[0]);
    }
    CHECK(testsupport::sample_sd(with_baseline) < testsupport::sample_sd(without_baseline));
  }
}

TEST_CASE("baseline updates follow the exponential moving average") {
  BaselineState s;
  s = update_baseline(s, 5.0);
  CHECK(s.value == 5.0);
  CHECK(s.initialized);
  s = update_baseline(s, 10.0);
  CHECK(s.value == doctest::Approx(0.7 * 5.0 + 0.3 * 10.0).epsilon(1e-12));
  for (int i = 0; i < 200; ++i) s = update_baseline(s, 4.0);
  CHECK(s.value == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("tau limit concentrates the po on the implied design") {
  BraninFixture fx;
  const SearchSpace& space = fx.problem.space;
  const std::vector<double> x = {2.0};
  std::vector<double> phi = {0.8};  // away from the 0.5 boundary
  const DesignPoint implied = assemble_design(space, x, {1.0});
  const double af = fx.oracle.eval(implied, false).value;
  double prev_gap = 1e300;
  for (double tau : {0.2, 0.1, 0.05, 0.01}) {
    const auto tr = transform(space, RawParams{phi, tau});
    const double po = analytic_po(fx.oracle, space, x, tr.theta).value;
    const double gap = std::abs(po - af);
    CHECK(gap <= prev_gap + 1e-15);
    prev_gap = gap;
  }
  CHECK(prev_gap < 1e-6);
}

TEST_CASE("consistent maximizers on an enumerable toy") {
  // 1 continuous (grid) x 2 binary: the argmax of the analytic po over
  // point-mass thetas equals the brute-force AF argmax
  SearchSpace space(std::vector<ParameterDescriptor>{
      ParameterDescriptor::continuous(0.0, 1.0, "x"),
      ParameterDescriptor::binary("a"),
      ParameterDescriptor::binary("b"),
  });
  const auto pts = sobol_init(space, 12, 41);
  std::vector<double> ys;
  for (const auto& p : pts) {
    ys.push_back(std::sin(6.0 * p.values[0]) + p.values[1] - 0.5 * p.values[2]);
  }
  const GPModel model = fit_gp(space, pts, ys, 17);
  AcquisitionSpec spec;
  spec.kind = AcquisitionKind::kEi;
  spec.incumbent = *std::max_element(ys.begin(), ys.end());
  spec.objective_model = &model;
  const AcqOracle oracle = make_oracle(spec, space);

  const int grid_n = 21;
  double best_af = -1e300, best_po = -1e300;
  int best_af_idx = -1, best_po_idx = -1;
  int idx = 0;
  for (int g = 0; g < grid_n; ++g) {
    const double x = static_cast<double>(g) / (grid_n - 1);
    for (const auto& z : enumerate_discrete(space)) {
      const double af = oracle.eval(assemble_design(space, {x}, z), false).value;
      DistributionParams theta{{z[0], z[1]}};  // point mass
      const double po = analytic_po(oracle, space, {x}, theta).value;
      CHECK(po == doctest::Approx(af).epsilon(1e-12));
      if (af > best_af) {
        best_af = af;
        best_af_idx = idx;
      }
      if (po > best_po) {
        best_po = po;
        best_po_idx = idx;
      }
      ++idx;
    }
  }
  CHECK(best_af_idx == best_po_idx);
}
