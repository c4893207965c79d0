#include "tamperbench/oracle.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace tamperbench {

std::int64_t mc_sample_size(double xi) {
  if (!(xi > 0 && xi < 1))
    throw std::invalid_argument("mc_sample_size needs xi in (0,1)");
  return static_cast<std::int64_t>(std::ceil(-10.0 * std::log(xi / 2) / (xi * xi)));
}

PartialAverages::PartialAverages(const BoundedFunction& f,
                                 const DiscreteDistribution& base, int n,
                                 std::int64_t budget)
    : support_(base.size()), n_(n) {
  if (f.arity() != n)
    throw std::invalid_argument("function arity does not match n");
  const std::int64_t leaves = checked_tuple_count(support_, n_, budget);

  level_offset_.resize(n_ + 2);
  std::size_t total = 0;
  std::int64_t width = 1;
  for (int level = 0; level <= n_; ++level) {
    level_offset_[level] = total;
    total += static_cast<std::size_t>(width);
    width *= support_;
  }
  level_offset_[n_ + 1] = total;
  values_.assign(total, 0.0);

  // Fill leaves by odometer, then average upward.
  Tuple t(n_, 0);
  double* leaf = values_.data() + level_offset_[n_];
  for (std::int64_t i = 0; i < leaves; ++i) {
    leaf[i] = f(t);
    for (int pos = n_ - 1; pos >= 0; --pos) {
      if (++t[pos] < support_) break;
      t[pos] = 0;
    }
  }
  for (int level = n_ - 1; level >= 0; --level) {
    double* cur = values_.data() + level_offset_[level];
    const double* child = values_.data() + level_offset_[level + 1];
    const std::int64_t width_here =
        static_cast<std::int64_t>(level_offset_[level + 1] - level_offset_[level]);
    for (std::int64_t pos = 0; pos < width_here; ++pos) {
      double acc = 0;
      for (int d = 0; d < support_; ++d)
        acc += base.prob(d) * child[pos * support_ + d];
      cur[pos] = acc;
    }
  }
}

std::int64_t PartialAverages::position(std::span<const int> prefix) const {
  std::int64_t pos = 0;
  for (int d : prefix) {
    if (d < 0 || d >= support_)
      throw std::invalid_argument("prefix entry outside support");
    pos = pos * support_ + d;
  }
  return pos;
}

double PartialAverages::at(std::span<const int> prefix) const {
  const int level = static_cast<int>(prefix.size());
  if (level > n_) throw std::invalid_argument("prefix longer than n");
  return values_[level_offset_[level] + position(prefix)];
}

std::span<const double> PartialAverages::leaf_slice(
    std::span<const int> prefix) const {
  const int level = static_cast<int>(prefix.size());
  if (level > n_) throw std::invalid_argument("prefix longer than n");
  std::int64_t block = 1;
  for (int i = 0; i < n_ - level; ++i) block *= support_;
  const std::int64_t pos = position(prefix);
  return std::span<const double>(
      values_.data() + level_offset_[n_] + pos * block,
      static_cast<std::size_t>(block));
}

PartialAverageOracle::PartialAverageOracle(Mode mode, BoundedFunction f,
                                           DiscreteDistribution base, int n)
    : mode_(mode),
      f_(std::make_shared<BoundedFunction>(std::move(f))),
      base_(std::move(base)),
      n_(n) {}

PartialAverageOracle PartialAverageOracle::exact(BoundedFunction f,
                                                 DiscreteDistribution base,
                                                 int n, std::int64_t budget) {
  PartialAverageOracle o(Mode::kExact, std::move(f), std::move(base), n);
  o.averages_ = std::make_shared<PartialAverages>(*o.f_, o.base_, n, budget);
  return o;
}

PartialAverageOracle PartialAverageOracle::monte_carlo(
    BoundedFunction f, DiscreteDistribution base, int n, double xi,
    RngStream rng, std::optional<std::int64_t> ell_override,
    std::int64_t budget) {
  if (!(xi > 0 && xi < 1))
    throw std::invalid_argument("monte_carlo oracle needs xi in (0,1)");
  PartialAverageOracle o(Mode::kMonteCarlo, std::move(f), std::move(base), n);
  o.xi_ = xi;
  o.ell_ = ell_override.value_or(mc_sample_size(xi));
  if (o.ell_ < 1) throw std::invalid_argument("ell must be >= 1");
  o.own_rng_ = rng;

  // Precompute the leaf table when the tuple space is enumerable; completion
  // counts can then be drawn as one multinomial per query.
  const int s = o.base_.size();
  std::int64_t leaves = 1;
  bool fits = true;
  for (int i = 0; i < n && fits; ++i) {
    if (leaves > budget / s) fits = false;
    else leaves *= s;
  }
  if (fits && leaves <= budget) {
    PartialAverages tree(*o.f_, o.base_, n, budget);
    auto leaf_copy = std::make_shared<std::vector<double>>(
        tree.leaf_slice(std::span<const int>{}).begin(),
        tree.leaf_slice(std::span<const int>{}).end());
    o.leaves_ = std::move(leaf_copy);
    auto probs = std::make_shared<std::vector<std::vector<double>>>(n + 1);
    (*probs)[0] = {1.0};
    for (int len = 1; len <= n; ++len) {
      const auto& prev = (*probs)[len - 1];
      auto& cur = (*probs)[len];
      cur.resize(prev.size() * s);
      for (std::size_t i = 0; i < prev.size(); ++i)
        for (int d = 0; d < s; ++d) cur[i * s + d] = prev[i] * o.base_.prob(d);
    }
    o.completion_probs_ = std::move(probs);
  }
  return o;
}

double PartialAverageOracle::fhat_exact(std::span<const int> prefix) const {
  if (mode_ != Mode::kExact)
    throw std::logic_error("fhat_exact called on a Monte-Carlo oracle");
  return averages_->at(prefix);
}

double PartialAverageOracle::fhat_mc(std::span<const int> prefix,
                                     RngStream& rng) const {
  if (mode_ != Mode::kMonteCarlo)
    throw std::logic_error("fhat_mc called on an exact oracle");
  return mc_estimate(prefix, ell_, rng);
}

double PartialAverageOracle::fhat_mc(std::span<const int> prefix, double xi,
                                     RngStream& rng) const {
  if (mode_ != Mode::kMonteCarlo)
    throw std::logic_error("fhat_mc called on an exact oracle");
  return mc_estimate(prefix, mc_sample_size(xi), rng);
}

double PartialAverageOracle::query(std::span<const int> prefix,
                                   RngStream& rng) const {
  return mode_ == Mode::kExact ? averages_->at(prefix)
                               : mc_estimate(prefix, ell_, rng);
}

double PartialAverageOracle::query(std::span<const int> prefix) {
  if (mode_ == Mode::kExact) return averages_->at(prefix);
  return mc_estimate(prefix, ell_, *own_rng_);
}

double PartialAverageOracle::mc_estimate(std::span<const int> prefix,
                                         std::int64_t ell,
                                         RngStream& rng) const {
  const int level = static_cast<int>(prefix.size());
  if (level > n_) throw std::invalid_argument("prefix longer than n");
  const int rest = n_ - level;
  const int s = base_.size();
  for (int d : prefix)
    if (d < 0 || d >= s)
      throw std::invalid_argument("prefix entry outside support");

  if (leaves_) {
    std::int64_t block = 1;
    for (int i = 0; i < rest; ++i) block *= s;
    std::int64_t pos = 0;
    for (int d : prefix) pos = pos * s + d;
    const double* vals = leaves_->data() + pos * block;
    if (block == 1) return vals[0];  // full prefix: every completion is f(z)

    const std::vector<double>& q = (*completion_probs_)[rest];
    if (ell > 4 * block) {
      // Multinomial completion counts via a chain of binomials.
      RngEngine eng{&rng};
      double acc = 0;
      std::int64_t remaining = ell;
      double prob_left = 1.0;
      for (std::int64_t j = 0; j < block && remaining > 0; ++j) {
        std::int64_t c;
        if (j + 1 == block) {
          c = remaining;
        } else {
          double ratio = q[j] / prob_left;
          ratio = std::min(1.0, std::max(0.0, ratio));
          std::binomial_distribution<std::int64_t> bin(remaining, ratio);
          c = bin(eng);
        }
        acc += static_cast<double>(c) * vals[j];
        remaining -= c;
        prob_left -= q[j];
      }
      return acc / static_cast<double>(ell);
    }
    // Few samples: draw completions one at a time, looked up in the table.
    double acc = 0;
    for (std::int64_t i = 0; i < ell; ++i) {
      std::int64_t off = 0;
      for (int b = 0; b < rest; ++b) off = off * s + base_.sample(rng);
      acc += vals[off];
    }
    return acc / static_cast<double>(ell);
  }

  // No leaf table: evaluate f on freshly drawn completions.
  Tuple z(n_);
  for (int i = 0; i < level; ++i) z[i] = prefix[i];
  double acc = 0;
  for (std::int64_t i = 0; i < ell; ++i) {
    for (int b = level; b < n_; ++b) z[b] = base_.sample(rng);
    acc += (*f_)(z);
  }
  return acc / static_cast<double>(ell);
}

}  // namespace tamperbench
