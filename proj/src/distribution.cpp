#include "tamperbench/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace tamperbench {

DiscreteDistribution::DiscreteDistribution(std::vector<std::string> outcome_ids,
                                           std::vector<double> probs)
    : ids_(std::move(outcome_ids)), probs_(std::move(probs)) {
  if (ids_.empty()) throw std::invalid_argument("distribution needs at least one outcome");
  if (ids_.size() != probs_.size())
    throw std::invalid_argument("outcomes and probs must have the same length");

  // Canonicalize to id order.
  std::vector<int> order(ids_.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return ids_[a] < ids_[b]; });
  std::vector<std::string> ids(ids_.size());
  std::vector<double> ps(ids_.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    ids[i] = std::move(ids_[order[i]]);
    ps[i] = probs_[order[i]];
  }
  ids_ = std::move(ids);
  probs_ = std::move(ps);

  for (std::size_t i = 1; i < ids_.size(); ++i)
    if (ids_[i] == ids_[i - 1])
      throw std::invalid_argument("duplicate outcome id: " + ids_[i]);

  double total = 0;
  for (double p : probs_) {
    if (!(p >= 0)) throw std::invalid_argument("negative outcome probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("probabilities sum to " + std::to_string(total) +
                                ", expected 1 within 1e-12");

  cumulative_.resize(probs_.size());
  double acc = 0;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    acc += probs_[i];
    cumulative_[i] = acc;
  }
  cumulative_.back() = 1.0;
}

int DiscreteDistribution::index_of(const std::string& id) const {
  auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
  if (it == ids_.end() || *it != id) return -1;
  return static_cast<int>(it - ids_.begin());
}

int DiscreteDistribution::sample(RngStream& rng) const {
  const double u = rng.next_unit();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  return static_cast<int>(it - cumulative_.begin());
}

DiscreteDistribution DiscreteDistribution::from_json(const nlohmann::json& j) {
  if (!j.contains("outcomes")) throw ConfigError("outcomes", "missing");
  if (!j.contains("probs")) throw ConfigError("probs", "missing");
  return DiscreteDistribution(j.at("outcomes").get<std::vector<std::string>>(),
                              j.at("probs").get<std::vector<double>>());
}

nlohmann::json DiscreteDistribution::to_json() const {
  return nlohmann::json{{"outcomes", ids_}, {"probs", probs_}};
}

DiscreteDistribution DiscreteDistribution::uniform(int m) {
  if (m < 1) throw std::invalid_argument("uniform distribution needs m >= 1");
  std::vector<std::string> ids(m);
  for (int i = 0; i < m; ++i) ids[i] = std::to_string(i);
  return DiscreteDistribution(std::move(ids),
                              std::vector<double>(m, 1.0 / m));
}

DiscreteDistribution DiscreteDistribution::point_mass(const std::string& id) {
  return DiscreteDistribution({id}, {1.0});
}

ProductSource::ProductSource(DiscreteDistribution base_dist, int blocks)
    : base(std::move(base_dist)), n(blocks) {
  if (n < 1) throw std::invalid_argument("product source needs n >= 1");
}

double TupleDistribution::total() const {
  double t = 0;
  for (double p : probs) t += p;
  return t;
}

std::int64_t checked_tuple_count(int support, int n, std::int64_t budget) {
  std::int64_t count = 1;
  for (int i = 0; i < n; ++i) {
    if (count > budget / support) {
      const double required = std::pow(static_cast<double>(support), n);
      throw EnumerationBudgetError(
          required < 9e18 ? static_cast<std::int64_t>(required)
                          : std::numeric_limits<std::int64_t>::max(),
          budget);
    }
    count *= support;
  }
  if (count > budget) throw EnumerationBudgetError(count, budget);
  return count;
}

TupleDistribution enumerate_product(const ProductSource& src,
                                    std::int64_t budget) {
  const int s = src.base.size();
  const std::int64_t count = checked_tuple_count(s, src.n, budget);

  TupleDistribution out;
  out.tuples.reserve(count);
  out.probs.reserve(count);

  Tuple t(src.n, 0);
  for (std::int64_t i = 0; i < count; ++i) {
    double p = 1.0;
    for (int idx : t) p *= src.base.prob(idx);
    out.tuples.push_back(t);
    out.probs.push_back(p);
    // odometer increment, last block fastest
    for (int pos = src.n - 1; pos >= 0; --pos) {
      if (++t[pos] < s) break;
      t[pos] = 0;
    }
  }
  return out;
}

Tuple sample_tuple(const ProductSource& src, RngStream& rng) {
  Tuple t(src.n);
  for (int i = 0; i < src.n; ++i) t[i] = src.base.sample(rng);
  return t;
}

}  // namespace tamperbench
