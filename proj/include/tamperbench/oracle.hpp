#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "tamperbench/distribution.hpp"
#include "tamperbench/function.hpp"
#include "tamperbench/rng.hpp"

namespace tamperbench {

// Sample count for a Monte-Carlo partial-average query at accuracy xi:
// ceil(-10 ln(xi/2) / xi^2). Guarantees per-query failure probability
// at most xi.
std::int64_t mc_sample_size(double xi);

// Exact partial averages of f over D^n for every prefix, stored as one
// flat tree: level i holds the average of f over all completions of each
// length-i prefix. Level 0 is E[f(S)], level n holds the raw f values.
class PartialAverages {
 public:
  PartialAverages(const BoundedFunction& f, const DiscreteDistribution& base,
                  int n, std::int64_t budget = kDefaultEnumBudget);

  double at(std::span<const int> prefix) const;
  double root() const { return values_[0]; }

  int n() const { return n_; }
  int support() const { return support_; }

  // Flat position of a prefix within its level (mixed-radix value).
  std::int64_t position(std::span<const int> prefix) const;
  double value(int level, std::int64_t pos) const {
    return values_[level_offset_[level] + pos];
  }
  // Raw f values for all completions of the given prefix, in lexicographic
  // completion order.
  std::span<const double> leaf_slice(std::span<const int> prefix) const;

 private:
  int support_;
  int n_;
  std::vector<std::size_t> level_offset_;
  std::vector<double> values_;
};

// The partial-average oracle used by tampering policies: either exact
// (enumeration-backed) or a Monte-Carlo xi-approximation that answers each
// query from a fresh batch of sampled completions.
class PartialAverageOracle {
 public:
  enum class Mode { kExact, kMonteCarlo };

  static PartialAverageOracle exact(BoundedFunction f,
                                    DiscreteDistribution base, int n,
                                    std::int64_t budget = kDefaultEnumBudget);

  // ell defaults to mc_sample_size(xi). The leaf table is precomputed when
  // the full tuple space fits the budget, in which case queries draw
  // multinomial completion counts; otherwise completions are drawn one at a
  // time. Both paths sample the same distribution.
  static PartialAverageOracle monte_carlo(
      BoundedFunction f, DiscreteDistribution base, int n, double xi,
      RngStream rng, std::optional<std::int64_t> ell_override = std::nullopt,
      std::int64_t budget = kDefaultEnumBudget);

  Mode mode() const { return mode_; }
  double xi() const { return xi_; }
  std::int64_t ell() const { return ell_; }
  int n() const { return n_; }
  const DiscreteDistribution& base() const { return base_; }
  const BoundedFunction& function() const { return *f_; }
  RangeTag range() const { return f_->range(); }

  // Exact-mode lookup; throws in MC mode.
  double fhat_exact(std::span<const int> prefix) const;

  // Fresh Monte-Carlo estimate using the given stream; throws in exact mode.
  double fhat_mc(std::span<const int> prefix, RngStream& rng) const;
  // Same, at an explicit accuracy (ell recomputed from xi).
  double fhat_mc(std::span<const int> prefix, double xi, RngStream& rng) const;

  // Mode dispatch: exact lookup, or MC draw from the given stream.
  double query(std::span<const int> prefix, RngStream& rng) const;
  // Mode dispatch using the oracle's own stream (MC mode only needs one).
  double query(std::span<const int> prefix);

  // The exact tree; present in exact mode, absent in MC mode.
  const PartialAverages* exact_averages() const { return averages_.get(); }

 private:
  PartialAverageOracle(Mode mode, BoundedFunction f, DiscreteDistribution base,
                       int n);

  double mc_estimate(std::span<const int> prefix, std::int64_t ell,
                     RngStream& rng) const;

  Mode mode_;
  std::shared_ptr<const BoundedFunction> f_;
  DiscreteDistribution base_;
  int n_;
  double xi_ = 0;
  std::int64_t ell_ = 0;
  std::shared_ptr<const PartialAverages> averages_;  // exact tree (exact mode)
  // MC fast path: leaf f values plus per-length completion probabilities.
  std::shared_ptr<const std::vector<double>> leaves_;
  std::shared_ptr<const std::vector<std::vector<double>>> completion_probs_;
  std::optional<RngStream> own_rng_;
};

}  // namespace tamperbench
