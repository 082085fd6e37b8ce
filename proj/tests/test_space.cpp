#include <doctest.h>

#include "mixedbo/rng.hpp"
#include "mixedbo/sobol.hpp"
#include "mixedbo/space.hpp"
#include "support.hpp"

using namespace mixedbo;

namespace {

SearchSpace mixed_space() {
  return SearchSpace(std::vector<ParameterDescriptor>{
      ParameterDescriptor::continuous(-1.0, 1.0, "x0"),
      ParameterDescriptor::binary("z0"),
      ParameterDescriptor::ordinal(4, "z1"),
      ParameterDescriptor::categorical(3, "z2"),
  });
}

RelaxedPoint random_relaxed(const SearchSpace& space, Rng& rng) {
  RelaxedPoint r;
  r.values.resize(space.relaxed_length());
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& p = space.parameter(i);
    const std::size_t off = space.relaxed_offset(i);
    switch (p.kind) {
      case ParameterKind::kContinuous:
        r.values[off] = uniform(rng, p.lower - 0.5, p.upper + 0.5);  // may drift out
        break;
      case ParameterKind::kBinary:
        r.values[off] = uniform01(rng);
        break;
      case ParameterKind::kOrdinal:
        r.values[off] = uniform(rng, -0.5, p.cardinality - 0.5 - 1e-9);
        break;
      case ParameterKind::kCategorical:
        for (int c = 0; c < p.cardinality; ++c) {
          r.values[off + static_cast<std::size_t>(c)] = uniform01(rng);
        }
        break;
    }
  }
  return r;
}

}  // namespace

TEST_CASE("validate flags out-of-domain coordinates") {
  SearchSpace space(std::vector<ParameterDescriptor>{ParameterDescriptor::binary("b")});
  DesignPoint bad{{2.0}};
  CHECK_THROWS_AS(validate(space, bad), OutOfDomainError);
  try {
    validate(space, bad);
  } catch (const OutOfDomainError& e) {
    CHECK(e.index == 0);
    CHECK(e.value == 2.0);
  }

  SearchSpace cont(std::vector<ParameterDescriptor>{
      ParameterDescriptor::continuous(-1.0, 1.0, "x")});
  CHECK_NOTHROW(validate(cont, DesignPoint{{0.0}}));

  SearchSpace ord(std::vector<ParameterDescriptor>{ParameterDescriptor::ordinal(4, "o")});
  CHECK_NOTHROW(validate(ord, DesignPoint{{3.0}}));   // max index C-1
  CHECK_THROWS_AS(validate(ord, DesignPoint{{4.0}}), OutOfDomainError);
  CHECK_THROWS_AS(validate(ord, DesignPoint{{1.5}}), OutOfDomainError);
  CHECK_FALSE(is_valid(ord, DesignPoint{{1.5}}));
}

TEST_CASE("discretize follows the rounding and argmax rules") {
  const SearchSpace space = mixed_space();

  RelaxedPoint r;
  r.values = {0.3, 0.7, 2.49, 0.2, 0.5, 0.3};
  const DesignPoint p = discretize(space, r);
  CHECK(p.values[0] == doctest::Approx(0.3));
  CHECK(p.values[1] == 1.0);  // round(0.7)
  CHECK(p.values[2] == 2.0);  // round to nearest
  CHECK(p.values[3] == 1.0);  // argmax of the block

  SUBCASE("layout mismatch") {
    RelaxedPoint bad;
    bad.values = {0.0, 0.0};
    CHECK_THROWS_AS(discretize(space, bad), LayoutMismatchError);
  }
  SUBCASE("categorical argmax ties break to the lowest index") {
    RelaxedPoint tie;
    tie.values = {0.0, 0.0, 0.0, 0.4, 0.4, 0.1};
    CHECK(discretize(space, tie).values[3] == 0.0);
  }
  SUBCASE("ordinal endpoint clamps to C-1 and half rounds up") {
    SearchSpace ord(std::vector<ParameterDescriptor>{ParameterDescriptor::ordinal(4, "o")});
    RelaxedPoint edge;
    edge.values = {3.5};  // exactly C - 0.5
    CHECK(discretize(ord, edge).values[0] == 3.0);
    edge.values = {1.5};  // round half up
    CHECK(discretize(ord, edge).values[0] == 2.0);
  }
  SUBCASE("continuous drift beyond the bounds clamps") {
    RelaxedPoint drift;
    drift.values = {1.0 + 1e-12, 0.0, 0.0, 1.0, 0.0, 0.0};
    CHECK(discretize(space, drift).values[0] == 1.0);
  }
}

TEST_CASE("one_hot_encode expands categoricals and inverts discretize") {
  const SearchSpace space = mixed_space();
  DesignPoint p{{0.25, 1.0, 3.0, 1.0}};
  const RelaxedPoint r = one_hot_encode(space, p);
  CHECK(r.values.size() == effective_dim(space));
  CHECK(r.values[3] == 0.0);
  CHECK(r.values[4] == 1.0);
  CHECK(r.values[5] == 0.0);

  SUBCASE("purely continuous spaces copy through") {
    SearchSpace cont(std::vector<ParameterDescriptor>{
        ParameterDescriptor::continuous(0.0, 2.0, "a"),
        ParameterDescriptor::continuous(-3.0, 3.0, "b")});
    DesignPoint q{{1.5, -2.0}};
    CHECK(one_hot_encode(cont, q).values == q.values);
  }
  SUBCASE("round trip on every discrete configuration") {
    Rng rng = make_rng(5);
    for (int rep = 0; rep < 50; ++rep) {
      DesignPoint q{{uniform(rng, -1.0, 1.0),
                     std::floor(uniform(rng, 0.0, 2.0)),
                     std::floor(uniform(rng, 0.0, 4.0)),
                     std::floor(uniform(rng, 0.0, 3.0))}};
      const DesignPoint back = discretize(space, one_hot_encode(space, q));
      CHECK(back.values == q.values);
    }
  }
}

TEST_CASE("discretize is idempotent through re-encoding") {
  const SearchSpace space = mixed_space();
  Rng rng = make_rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    const RelaxedPoint r = random_relaxed(space, rng);
    const DesignPoint once = discretize(space, r);
    CHECK_NOTHROW(validate(space, once));  // output always validates
    const DesignPoint twice = discretize(space, one_hot_encode(space, once));
    CHECK(twice.values == once.values);
  }
}

TEST_CASE("sobol_init is pure and well distributed") {
  const SearchSpace space = mixed_space();
  const auto a = sobol_init(space, 20, 1234);
  const auto b = sobol_init(space, 20, 1234);
  REQUIRE(a.size() == 20);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].values == b[i].values);
    CHECK_NOTHROW(validate(space, a[i]));
  }
  const auto c = sobol_init(space, 20, 99);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i) any_diff = any_diff || a[i].values != c[i].values;
  CHECK(any_diff);

  SUBCASE("binary marginal frequency near one half") {
    SearchSpace bins(std::vector<ParameterDescriptor>{
        ParameterDescriptor::binary("b0"), ParameterDescriptor::binary("b1"),
        ParameterDescriptor::binary("b2")});
    const auto pts = sobol_init(bins, 4096, 7);
    for (std::size_t d = 0; d < 3; ++d) {
      double ones = 0.0;
      for (const auto& p : pts) ones += p.values[d];
      const double freq = ones / 4096.0;
      CHECK(freq > 0.45);
      CHECK(freq < 0.55);
    }
  }
}

TEST_CASE("effective_dim counts one-hot width") {
  std::vector<ParameterDescriptor> ackley_like;
  for (int i = 0; i < 3; ++i) ackley_like.push_back(ParameterDescriptor::continuous(-1, 1));
  for (int i = 0; i < 10; ++i) ackley_like.push_back(ParameterDescriptor::binary());
  CHECK(effective_dim(SearchSpace(ackley_like)) == 13);

  CHECK(effective_dim(SearchSpace(std::vector<ParameterDescriptor>{
            ParameterDescriptor::categorical(4)})) == 4);

  CHECK(effective_dim(SearchSpace(std::vector<ParameterDescriptor>{
            ParameterDescriptor::continuous(0, 1), ParameterDescriptor::continuous(0, 1),
            ParameterDescriptor::ordinal(5)})) == 3);
}

TEST_CASE("search space json schema round trips") {
  const SearchSpace space = mixed_space();
  const std::string text = space_to_json(space);
  const SearchSpace back = space_from_json(text);
  REQUIRE(back.size() == space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    CHECK(back.parameter(i).kind == space.parameter(i).kind);
    CHECK(back.parameter(i).name == space.parameter(i).name);
    CHECK(back.parameter(i).cardinality == space.parameter(i).cardinality);
  }
  CHECK(space_to_json(back) == text);
  CHECK_THROWS(space_from_json("{\"kind\":\"continuous\"}"));
}

TEST_CASE("sobol sequence basics") {
  SobolSequence seq(6, 3);
  const auto pts = seq.draw(256);
  for (const auto& p : pts) {
    for (double v : p) {
      CHECK(v >= 0.0);
      CHECK(v < 1.0);
    }
  }
  // per-dimension stratification of a full dyadic block
  for (std::size_t d = 0; d < 6; ++d) {
    int low_half = 0;
    for (const auto& p : pts) low_half += p[d] < 0.5 ? 1 : 0;
    CHECK(low_half == 128);
  }
}
