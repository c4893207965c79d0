#include <doctest.h>

#include <cmath>
#include <vector>

#include "tamperbench/analysis.hpp"

using namespace tamperbench;

namespace {
const DiscreteDistribution kBit = DiscreteDistribution::uniform_bit();

double max_abs_gap(const TupleDistribution& a, const TupleDistribution& b) {
  double worst = 0;
  for (std::size_t i = 0; i < a.probs.size(); ++i)
    worst = std::max(worst, std::abs(a.probs[i] - b.probs[i]));
  return worst;
}

TupleDistribution product_of(const DiscreteDistribution& block, int n) {
  return enumerate_product(ProductSource(block, n));
}
}  // namespace

TEST_CASE("closed forms on the dictator bit") {
  auto f = make_builtin("dictator(0)", 1, 2);
  SUBCASE("tampering lifts Pr[1] to 2/3") {
    auto d = closed_form_tam(f, kBit, 1, 0.5);
    CHECK(d.probs[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(d.probs[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
  SUBCASE("resetting lifts Pr[1] to 0.6") {
    auto d = closed_form_res(f, kBit, 1, 0.5);
    CHECK(d.probs[1] == doctest::Approx(0.6).epsilon(1e-12));
  }
  SUBCASE("p=0 leaves the product law") {
    auto d = closed_form_tam(f, kBit, 1, 0.0);
    CHECK(d.probs[0] == doctest::Approx(0.5));
    auto d2 = closed_form_res(f, kBit, 1, 0.0);
    CHECK(d2.probs[0] == doctest::Approx(0.5));
  }
  SUBCASE("constants cannot be biased") {
    auto d = closed_form_tam(make_builtin("constant(0.3)", 2, 2), kBit, 2, 0.7);
    for (double p : d.probs) CHECK(p == doctest::Approx(0.25).epsilon(1e-12));
    // signed value -1 everywhere makes the resetting reweight factor 1
    auto d2 = closed_form_res(make_builtin("constant(0)", 2, 2), kBit, 2, 0.7);
    for (double p : d2.probs) CHECK(p == doctest::Approx(0.25).epsilon(1e-12));
  }
}

TEST_CASE("induced distribution equals the closed form pointwise") {
  RngStream rng(42);
  for (int n : {1, 2, 3}) {
    for (int support : {2, 3}) {
      const auto base = DiscreteDistribution::uniform(support);
      for (double p : {0.1, 0.5, 0.9}) {
        for (int rep = 0; rep < 3; ++rep) {
          const auto f = make_random_unit_function(n, support, rng);
          {
            TamperChannel ch(PolicyKind::kPtamIdeal, p, 0, f, base, n,
                             OracleSpec{});
            CHECK(max_abs_gap(induced_dist_exact(ch),
                              closed_form_tam(f, base, n, p)) < 1e-9);
          }
          {
            TamperChannel ch(PolicyKind::kPres, p, 0, f, base, n, OracleSpec{});
            CHECK(max_abs_gap(induced_dist_exact(ch),
                              closed_form_res(f, base, n, p)) < 1e-9);
          }
        }
      }
    }
  }
}

TEST_CASE("induced distributions normalize and cover the support") {
  RngStream rng(43);
  const auto f = make_random_unit_function(3, 2, rng);
  for (PolicyKind kind :
       {PolicyKind::kPtamIdeal, PolicyKind::kPtamKcut, PolicyKind::kPres}) {
    TamperChannel ch(kind, 0.5, 2, f, kBit, 3, OracleSpec{});
    const auto d = induced_dist_exact(ch);
    CHECK(d.total() == doctest::Approx(1.0).epsilon(1e-9));
    for (double p : d.probs) CHECK(p > 0.0);
  }
}

TEST_CASE("constant targets leave every policy's induced law at the product") {
  const auto product = product_of(kBit, 3);
  for (const char* fn : {"constant(0.25)", "constant(0.5)", "constant(1)"}) {
    const auto f = make_builtin(fn, 3, 2);
    for (double p : {0.5, 1.0}) {
      for (PolicyKind kind :
           {PolicyKind::kPtamIdeal, PolicyKind::kPtamKcut, PolicyKind::kPres}) {
        TamperChannel ch(kind, p, 2, f, kBit, 3, OracleSpec{});
        CHECK(max_abs_gap(induced_dist_exact(ch), product) < 1e-9);
      }
    }
  }
  // the everything-rejected corner: at p=1 a signed value of -1 everywhere
  // still leaves the truncated and resetting policies at the product law
  const auto zero = make_builtin("constant(0)", 2, 2);
  const auto product2 = product_of(kBit, 2);
  for (PolicyKind kind : {PolicyKind::kPtamKcut, PolicyKind::kPres}) {
    TamperChannel ch(kind, 1.0, 3, zero, kBit, 2, OracleSpec{});
    CHECK(max_abs_gap(induced_dist_exact(ch), product2) < 1e-9);
  }
}

TEST_CASE("truncated-loop induced law matches simulation") {
  // dictator bit, p=0.5, k=2: the analytic conditional gives Pr[1] = 0.64
  const auto f = make_builtin("dictator(0)", 1, 2);
  TamperChannel ch(PolicyKind::kPtamKcut, 0.5, 2, f, kBit, 1, OracleSpec{});
  const auto induced = induced_dist_exact(ch);
  CHECK(induced.probs[1] == doctest::Approx(0.64).epsilon(1e-12));
  RngStream rng(52);
  const int trials = 200'000;
  int ones = 0;
  for (int t = 0; t < trials; ++t) ones += ch.attack_sequence(rng).tampered[0];
  const double se = std::sqrt(0.64 * 0.36 / trials);
  CHECK(std::abs(ones / double(trials) - 0.64) < 3.5 * se);
}

TEST_CASE("joint truncated-vs-ideal divergence sums over blocks") {
  RngStream rng(51);
  for (int rep = 0; rep < 5; ++rep) {
    const int n = 3;
    const auto f = make_random_unit_function(n, 2, rng);
    for (double p : {0.3, 0.5}) {
      for (int k : {1, 2, 5}) {
        TamperChannel ideal(PolicyKind::kPtamIdeal, p, 0, f, kBit, n,
                            OracleSpec{});
        TamperChannel cut(PolicyKind::kPtamKcut, p, k, f, kBit, n,
                          OracleSpec{});
        const double div = max_divergence(induced_dist_exact(ideal),
                                          induced_dist_exact(cut));
        CHECK(div <= n * kcut_divergence_bound(p, k) + 1e-9);
      }
    }
  }
}

TEST_CASE("a long truncated loop converges to the untruncated attack") {
  RngStream rng(44);
  const auto f = make_random_unit_function(2, 2, rng);
  TamperChannel ideal(PolicyKind::kPtamIdeal, 0.5, 0, f, kBit, 2, OracleSpec{});
  TamperChannel cut(PolicyKind::kPtamKcut, 0.5, 60, f, kBit, 2, OracleSpec{});
  CHECK(max_abs_gap(induced_dist_exact(ideal), induced_dist_exact(cut)) < 1e-9);
}

TEST_CASE("per-block conditional ratios match the distribution law") {
  // the analysis route (rejection masses) must reproduce the simple
  // reweighting ratios implied by the closed form
  RngStream rng(45);
  const auto base = DiscreteDistribution::uniform(3);
  const int n = 2;
  const auto f = make_random_unit_function(n, 3, rng);
  const auto fs = to_signed(f);
  PartialAverages avgs(fs, base, n);
  for (double p : {0.1, 0.5, 0.9}) {
    std::vector<int> prefix;
    for (int first = -1; first < 3; ++first) {
      prefix.clear();
      if (first >= 0) prefix.push_back(first);
      const double prev = avgs.at(prefix);
      for (int d = 0; d < 3; ++d) {
        prefix.push_back(d);
        const double cur = avgs.at(prefix);
        prefix.pop_back();
        const double want_tam = (2 - p * (1 - cur)) / (2 - p * (1 - prev));
        const double want_res = (2 + p * (1 + cur)) / (2 + p * (1 + prev));
        CHECK(cond_ratio_tam(avgs, base, prefix, d, p) ==
              doctest::Approx(want_tam).epsilon(1e-9));
        CHECK(cond_ratio_res(avgs, base, prefix, d, p) ==
              doctest::Approx(want_res).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("truncated-loop divergence respects the per-block bound") {
  RngStream rng(46);
  for (int n : {1, 2, 3}) {
    const auto f = make_random_unit_function(n, 2, rng);
    const auto fs = to_signed(f);
    PartialAverages avgs(fs, kBit, n);
    for (double p : {0.3, 0.5, 0.7}) {
      for (int k : {1, 2, 5, 10}) {
        const double observed =
            max_block_divergence_kcut_vs_ideal(avgs, kBit, p, k);
        CHECK(observed <= kcut_divergence_bound(p, k) + 1e-9);
      }
    }
  }
}

TEST_CASE("bias floors") {
  CHECK(bias_bound_tam(0.5, 0.5, 0.25) == doctest::Approx(1.0 / 6.0));
  CHECK(bias_bound_res(0.5, 0.5, 0.25) == doctest::Approx(0.1));
  CHECK(bias_bound_tam(0.7, 0.2, 0.0) == doctest::Approx(0.0));
  CHECK(bias_bound_res(0.7, 0.2, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("exact bias of the ideal attacks matches the identity") {
  RngStream rng(47);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 2 + rep % 2;
    const auto f = make_random_unit_function(n, 2, rng);
    const Moments m = moments(f, kBit, n);
    const Moments ms = to_signed_moments(m);
    for (double p : {0.1, 0.5, 0.9}) {
      const auto fs = to_signed(f);
      const double tam_gain =
          expectation(closed_form_tam(f, kBit, n, p), fs) - ms.mu;
      CHECK(tam_gain == doctest::Approx(bias_bound_tam_signed(p, ms.mu, ms.nu))
                            .epsilon(1e-9));
      const double res_gain =
          expectation(closed_form_res(f, kBit, n, p), fs) - ms.mu;
      CHECK(res_gain == doctest::Approx(bias_bound_res_signed(p, ms.mu, ms.nu))
                            .epsilon(1e-9));
      // and the unit-range view matches the unit-range floors exactly
      const double unit_gain =
          expectation(closed_form_tam(f, kBit, n, p), f) - m.mu;
      CHECK(unit_gain ==
            doctest::Approx(bias_bound_tam(p, m.mu, m.nu)).epsilon(1e-9));
    }
  }
}

TEST_CASE("post-attack success curves") {
  for (double p : {0.1, 0.5, 0.9}) {
    CHECK(gamma_tam(0.0, p) == doctest::Approx(0.0));
    CHECK(gamma_tam(1.0, p) == doctest::Approx(1.0));
    CHECK(gamma_res(0.0, p) == doctest::Approx(0.0));
    CHECK(gamma_res(1.0, p) == doctest::Approx(1.0));
  }
  CHECK(gamma_tam(0.5, 0.5) == doctest::Approx(2.0 / 3.0));
  CHECK(gamma_res(0.5, 0.5) == doctest::Approx(0.6));
}

TEST_CASE("success curves increase strictly in delta") {
  for (double p = 0.1; p < 0.95; p += 0.1) {
    double prev_t = -1, prev_r = -1;
    for (int i = 0; i <= 100; ++i) {
      const double d = i / 100.0;
      const double gt = gamma_tam(d, p), gr = gamma_res(d, p);
      CHECK(gt > prev_t);
      CHECK(gr > prev_r);
      prev_t = gt;
      prev_r = gr;
    }
  }
}

TEST_CASE("variation distribution") {
  SUBCASE("never accepting passes a fresh sample through") {
    const VariationSpec spec{kBit, 0.8, 3, {0.0, 0.0}};
    CHECK(max_divergence(variation_dist(spec), kBit) == doctest::Approx(0.0));
  }
  SUBCASE("always accepting forwards the first candidate") {
    const VariationSpec spec{kBit, 0.8, 3, {1.0, 1.0}};
    CHECK(max_divergence(variation_dist(spec), kBit) == doctest::Approx(0.0));
  }
  SUBCASE("one-sided acceptance on a coin") {
    const VariationSpec spec{kBit, 1.0, 1, {0.0, 1.0}};
    const auto d = variation_dist(spec);
    CHECK(d.prob(1) == doctest::Approx(0.75));
    CHECK(d.prob(0) == doctest::Approx(0.25));
  }
  SUBCASE("output is always a distribution") {
    RngStream rng(48);
    for (int rep = 0; rep < 50; ++rep) {
      const int s = 2 + static_cast<int>(rng.next_below(2));
      std::vector<double> rho(s);
      for (auto& r : rho) r = rng.next_unit();
      const VariationSpec spec{DiscreteDistribution::uniform(s),
                               rng.next_unit(),
                               1 + static_cast<int>(rng.next_below(5)), rho};
      const auto d = variation_dist(spec);
      double total = 0;
      for (int i = 0; i < d.size(); ++i) total += d.prob(i);
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("max divergence") {
  CHECK(max_divergence(kBit, kBit) == doctest::Approx(0.0));
  const DiscreteDistribution p({"0", "1"}, {0.6, 0.4});
  CHECK(max_divergence(p, kBit) ==
        doctest::Approx(std::log(1.25)).epsilon(1e-12));
  // a point carried by exactly one side is reported as infinite divergence
  const DiscreteDistribution q({"0", "1"}, {1.0, 0.0});
  CHECK(std::isinf(max_divergence(p, q)));
  // different outcome sets are a usage error
  const DiscreteDistribution r({"a", "b"}, {0.5, 0.5});
  CHECK_THROWS_AS(max_divergence(p, r), std::invalid_argument);
}

TEST_CASE("nearby acceptance functions give nearby variations") {
  // pointwise |rho - rho'| <= xi bounds the max divergence by
  // p/(1-p) (k^2 + k) xi
  RngStream rng(49);
  for (double xi : {0.01, 0.05}) {
    for (int k : {1, 2, 4}) {
      for (double p : {0.3, 0.5, 0.7}) {
        for (int rep = 0; rep < 20; ++rep) {
          std::vector<double> rho{rng.next_unit(), rng.next_unit()};
          std::vector<double> rho2(2);
          for (int i = 0; i < 2; ++i) {
            const double shift = (2 * rng.next_unit() - 1) * xi;
            rho2[i] = std::clamp(rho[i] + shift, 0.0, 1.0);
          }
          const auto a = variation_dist({kBit, p, k, rho});
          const auto b = variation_dist({kBit, p, k, rho2});
          CHECK(max_divergence(a, b) <=
                p / (1 - p) * (k * k + k) * xi + 1e-12);
        }
      }
    }
  }
}

TEST_CASE("expectation gap bound") {
  CHECK(expectation_gap_bound(0.0, 7) == doctest::Approx(0.0));
  CHECK(expectation_gap_bound(0.001, 100) ==
        doctest::Approx(0.10517091807564771).epsilon(1e-12));
}

TEST_CASE("kcut divergence bound values") {
  CHECK(kcut_divergence_bound(0.5, 1) == doctest::Approx(2.0));
  CHECK(kcut_divergence_bound(0.5, 5) ==
        doctest::Approx(0.3950617283950617).epsilon(1e-12));
}

TEST_CASE("close per-block laws give close expectations") {
  // two product chains whose per-block conditional log-ratio is at most
  // xi_block never differ by more than e^(n xi_block) - 1 in expectation
  RngStream rng(50);
  const int n = 3;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> rho{rng.next_unit(), rng.next_unit()};
    std::vector<double> rho2(2);
    const double xi = 0.02;
    for (int i = 0; i < 2; ++i)
      rho2[i] = std::clamp(rho[i] + (2 * rng.next_unit() - 1) * xi, 0.0, 1.0);
    const int k = 2;
    const double p = 0.5;
    const auto block_x = variation_dist({kBit, p, k, rho});
    const auto block_y = variation_dist({kBit, p, k, rho2});
    const double xi_block = max_divergence(block_x, block_y);

    const auto x = product_of(block_x, n);
    const auto y = product_of(block_y, n);
    const auto f_unit = make_random_unit_function(n, 2, rng);
    const auto f = to_signed(f_unit);
    CHECK(std::abs(expectation(x, f) - expectation(y, f)) <=
          expectation_gap_bound(xi_block, n) + 1e-12);
  }
}
