#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tamperbench/errors.hpp"
#include "tamperbench/rng.hpp"

#include <json.hpp>

namespace tamperbench {

// A tuple of outcome indices into some distribution's support.
using Tuple = std::vector<int>;

// Finite distribution over named outcomes. Outcomes are kept sorted by id;
// that order is the canonical one used for sampling tie-breaks and for
// lexicographic enumeration.
class DiscreteDistribution {
 public:
  DiscreteDistribution(std::vector<std::string> outcome_ids,
                       std::vector<double> probs);

  int size() const { return static_cast<int>(probs_.size()); }
  const std::string& outcome_id(int i) const { return ids_[i]; }
  const std::vector<std::string>& outcome_ids() const { return ids_; }
  double prob(int i) const { return probs_[i]; }
  const std::vector<double>& probs() const { return probs_; }

  // Index of the outcome with this id, or -1.
  int index_of(const std::string& id) const;

  // Draws one outcome index, advancing the stream.
  int sample(RngStream& rng) const;

  static DiscreteDistribution from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  // Uniform over ids "0".."m-1".
  static DiscreteDistribution uniform(int m);
  // The fair bit: uniform over {"0","1"}.
  static DiscreteDistribution uniform_bit() { return uniform(2); }
  static DiscreteDistribution point_mass(const std::string& id);

 private:
  std::vector<std::string> ids_;
  std::vector<double> probs_;
  std::vector<double> cumulative_;
};

// n iid blocks of a base distribution.
struct ProductSource {
  DiscreteDistribution base;
  int n;

  ProductSource(DiscreteDistribution base_dist, int blocks);
};

// A finite distribution over n-tuples with explicit probabilities, in
// lexicographic tuple order. Also the result type for exact tampered
// distributions.
struct TupleDistribution {
  std::vector<Tuple> tuples;
  std::vector<double> probs;

  double total() const;
  // Probability mass of tuples where pred holds.
  template <typename Pred>
  double mass_where(Pred pred) const {
    double m = 0;
    for (std::size_t i = 0; i < tuples.size(); ++i)
      if (pred(std::span<const int>(tuples[i]))) m += probs[i];
    return m;
  }
};

// Number of tuples |Supp(D)|^n, or throws EnumerationBudgetError.
std::int64_t checked_tuple_count(int support, int n, std::int64_t budget);

// All tuples of Supp(D)^n in lexicographic order of outcome index (= id
// order), with product probabilities.
TupleDistribution enumerate_product(const ProductSource& src,
                                    std::int64_t budget = kDefaultEnumBudget);

Tuple sample_tuple(const ProductSource& src, RngStream& rng);

}  // namespace tamperbench
