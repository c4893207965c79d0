#include <doctest.h>

#include <cmath>
#include <map>

#include "tamperbench/bounds.hpp"
#include "tamperbench/distribution.hpp"
#include "tamperbench/rng.hpp"

using namespace tamperbench;

TEST_CASE("point mass always returns its single outcome") {
  auto d = DiscreteDistribution::point_mass("a");
  RngStream rng(7);
  for (int i = 0; i < 100; ++i) CHECK(d.sample(rng) == 0);
}

TEST_CASE("fixed seed reproduces the draw sequence") {
  auto d = DiscreteDistribution::uniform(3);
  RngStream a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(d.sample(a) == d.sample(b));
}

TEST_CASE("distinct seeds give distinct sequences") {
  RngStream a(1), b(2);
  bool differs = false;
  for (int i = 0; i < 64 && !differs; ++i) differs = a.next_u64() != b.next_u64();
  CHECK(differs);
}

TEST_CASE("keyed forks are stable and independent of the parent counter") {
  RngStream parent(99);
  parent.next_u64();
  RngStream f1 = parent.fork(5);
  RngStream f2 = parent.fork(5);
  CHECK(f1.next_u64() == f2.next_u64());
  CHECK(parent.fork(5).seed() != parent.fork(6).seed());
}

TEST_CASE("sample frequencies match declared probabilities") {
  // 10^6 fair-bit draws: frequency of 1 within 0.5 +- 0.002 (3 sigma band)
  auto d = DiscreteDistribution::uniform_bit();
  RngStream rng(2024);
  const int trials = 1'000'000;
  int ones = 0;
  for (int i = 0; i < trials; ++i) ones += d.sample(rng);
  const double freq = static_cast<double>(ones) / trials;
  CHECK(freq == doctest::Approx(0.5).epsilon(0.004));
  CHECK(std::abs(freq - 0.5) < 0.002);
}

TEST_CASE("per-outcome frequencies over a skewed support") {
  DiscreteDistribution d({"a", "b", "c"}, {0.2, 0.5, 0.3});
  RngStream rng(5);
  const int trials = 100'000;
  std::map<int, int> counts;
  for (int i = 0; i < trials; ++i) ++counts[d.sample(rng)];
  for (int i = 0; i < d.size(); ++i) {
    const double p = d.prob(i);
    const double tol = 5 * std::sqrt(p * (1 - p) / trials);
    CHECK(std::abs(counts[i] / static_cast<double>(trials) - p) < tol);
  }
}

TEST_CASE("construction canonicalizes to id order and validates") {
  DiscreteDistribution d({"b", "a"}, {0.7, 0.3});
  CHECK(d.outcome_id(0) == "a");
  CHECK(d.prob(0) == doctest::Approx(0.3));
  CHECK(d.index_of("b") == 1);
  CHECK(d.index_of("z") == -1);

  CHECK_THROWS_AS(DiscreteDistribution({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(DiscreteDistribution({"a", "a"}, {0.5, 0.5}),
                  std::invalid_argument);
  CHECK_THROWS_AS(DiscreteDistribution({"a", "b"}, {0.6, 0.6}),
                  std::invalid_argument);
  CHECK_THROWS_AS(DiscreteDistribution({"a", "b"}, {-0.1, 1.1}),
                  std::invalid_argument);
}

TEST_CASE("json round trip of the distribution literal") {
  auto j = nlohmann::json::parse(R"({"outcomes": ["0","1"], "probs": [0.5, 0.5]})");
  auto d = DiscreteDistribution::from_json(j);
  CHECK(d.size() == 2);
  CHECK(d.to_json() == j);
  CHECK_THROWS_AS(DiscreteDistribution::from_json(nlohmann::json{{"probs", {1.0}}}),
                  ConfigError);
}

TEST_CASE("enumerate_product lists lexicographic tuples with product probs") {
  SUBCASE("uniform bits, n=2") {
    auto e = enumerate_product(ProductSource(DiscreteDistribution::uniform_bit(), 2));
    REQUIRE(e.tuples.size() == 4);
    CHECK(e.tuples[0] == Tuple{0, 0});
    CHECK(e.tuples[3] == Tuple{1, 1});
    for (double p : e.probs) CHECK(p == doctest::Approx(0.25));
  }
  SUBCASE("point mass, n=5") {
    auto e = enumerate_product(ProductSource(DiscreteDistribution::point_mass("x"), 5));
    REQUIRE(e.tuples.size() == 1);
    CHECK(e.probs[0] == doctest::Approx(1.0));
  }
  SUBCASE("skewed pair, n=2") {
    DiscreteDistribution d({"a", "b"}, {0.3, 0.7});
    auto e = enumerate_product(ProductSource(d, 2));
    CHECK(e.probs[0] == doctest::Approx(0.09));
    CHECK(e.probs[1] == doctest::Approx(0.21));
    CHECK(e.probs[2] == doctest::Approx(0.21));
    CHECK(e.probs[3] == doctest::Approx(0.49));
  }
}

TEST_CASE("enumeration probabilities sum to one") {
  RngStream rng(31);
  for (int support = 1; support <= 3; ++support) {
    for (int n = 1; n <= 4; ++n) {
      // random distribution over `support` outcomes
      std::vector<std::string> ids;
      std::vector<double> w(support);
      double tot = 0;
      for (int i = 0; i < support; ++i) {
        ids.push_back(std::to_string(i));
        w[i] = rng.next_unit() + 0.05;
        tot += w[i];
      }
      for (auto& x : w) x /= tot;
      auto e = enumerate_product(ProductSource(DiscreteDistribution(ids, w), n));
      CHECK(e.total() == doctest::Approx(1.0).epsilon(1e-9));
      for (double p : e.probs) CHECK(p >= 0.0);
    }
  }
}

TEST_CASE("enumeration budget errors name the required count") {
  ProductSource src(DiscreteDistribution::uniform(10), 9);  // 10^9 tuples
  try {
    enumerate_product(src);
    FAIL("expected EnumerationBudgetError");
  } catch (const EnumerationBudgetError& e) {
    CHECK(e.required() == 1'000'000'000);
    CHECK(e.budget() == kDefaultEnumBudget);
    CHECK(std::string(e.what()).find("1000000000") != std::string::npos);
  }
}

TEST_CASE("hoeffding tail values") {
  CHECK(hoeffding_tail(100, 0.1) == doctest::Approx(0.2706705664732254).epsilon(1e-12));
  CHECK(hoeffding_tail(1000, 0.1) == doctest::Approx(4.122307244877116e-9).epsilon(1e-9));
  CHECK(hoeffding_tail(1, 0.0) == 1.0);      // clipped from 2
  CHECK(hoeffding_tail(12345, 0.0) == 1.0);
}

TEST_CASE("chernoff tail values") {
  CHECK(chernoff_tail(12, 0.5, 1.0) == doctest::Approx(0.1353352832366127).epsilon(1e-12));
  CHECK(chernoff_tail(100, 0.5, 0.0) == 1.0);
  // the shape used by the strong-budget experiment: n = 3k, lambda = 1/k
  for (int k : {2, 4, 8}) {
    CHECK(chernoff_tail(3 * k, 1.0 / k, 1.0) ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  }
}

TEST_CASE("tail bounds are monotone in n and the deviation") {
  for (std::int64_t n : {1, 10, 100}) {
    for (double xi : {0.0, 0.05, 0.1, 0.5}) {
      CHECK(hoeffding_tail(n + 1, xi) <= hoeffding_tail(n, xi) + 1e-15);
      CHECK(hoeffding_tail(n, xi + 0.01) <= hoeffding_tail(n, xi) + 1e-15);
      CHECK(chernoff_tail(n + 1, 0.3, xi) <= chernoff_tail(n, 0.3, xi) + 1e-15);
      CHECK(chernoff_tail(n, 0.3, std::min(1.0, xi + 0.01)) <=
            chernoff_tail(n, 0.3, xi) + 1e-15);
    }
  }
}
