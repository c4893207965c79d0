#include "tamperbench/analysis.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace tamperbench {
namespace {

BoundedFunction as_signed(const BoundedFunction& f) {
  return f.range() == RangeTag::kUnit ? to_signed(f) : f;
}

TamperedDistribution closed_form(const BoundedFunction& f,
                                 const DiscreteDistribution& base, int n,
                                 double p, double offset, std::int64_t budget) {
  if (!(p >= 0 && p < 1))
    throw std::invalid_argument("closed form needs p in [0,1)");
  const BoundedFunction fs = as_signed(f);
  TamperedDistribution out = enumerate_product(ProductSource(base, n), budget);
  double mu = 0;
  std::vector<double> values(out.tuples.size());
  for (std::size_t i = 0; i < out.tuples.size(); ++i) {
    values[i] = fs(out.tuples[i]);
    mu += out.probs[i] * values[i];
  }
  const double denom = offset + p * mu;
  for (std::size_t i = 0; i < out.tuples.size(); ++i)
    out.probs[i] *= (offset + p * values[i]) / denom;
  return out;
}

// Aggregated rejection mass of one block given the prefix: the probability
// that a prefix-conditioned candidate drawn from D is rejected.
template <typename RejectFn>
double aggregate_rejection(const PartialAverages& avgs,
                           const DiscreteDistribution& base,
                           std::span<const int> prefix, double p,
                           RejectFn reject) {
  const int level = static_cast<int>(prefix.size());
  const std::int64_t pos = avgs.position(prefix);
  const double fhat_prev = avgs.value(level, pos);
  double mass = 0;
  for (int d = 0; d < base.size(); ++d) {
    const double fhat_cur = avgs.value(level + 1, pos * base.size() + d);
    mass += base.prob(d) * reject(fhat_cur, fhat_prev, p);
  }
  return mass;
}

}  // namespace

double expectation(const TupleDistribution& dist, const BoundedFunction& f) {
  double e = 0;
  for (std::size_t i = 0; i < dist.tuples.size(); ++i)
    e += dist.probs[i] * f(dist.tuples[i]);
  return e;
}

TamperedDistribution closed_form_tam(const BoundedFunction& f,
                                     const DiscreteDistribution& base, int n,
                                     double p, std::int64_t budget) {
  return closed_form(f, base, n, p, 2.0 - p, budget);
}

TamperedDistribution closed_form_res(const BoundedFunction& f,
                                     const DiscreteDistribution& base, int n,
                                     double p, std::int64_t budget) {
  return closed_form(f, base, n, p, 2.0 + p, budget);
}

double cond_ratio_tam(const PartialAverages& avgs,
                      const DiscreteDistribution& base,
                      std::span<const int> prefix, int d, double p) {
  const int level = static_cast<int>(prefix.size());
  const std::int64_t pos = avgs.position(prefix);
  const double fhat_prev = avgs.value(level, pos);
  const double fhat_cur = avgs.value(level + 1, pos * base.size() + d);
  const double r = rejection_prob_tam(fhat_cur, fhat_prev, p);
  const double c = aggregate_rejection(avgs, base, prefix, p, rejection_prob_tam);
  // geometric series over the rejection loop
  return 1 - p + p * (1 - r) / (1 - c);
}

double cond_ratio_res(const PartialAverages& avgs,
                      const DiscreteDistribution& base,
                      std::span<const int> prefix, int d, double p) {
  const int level = static_cast<int>(prefix.size());
  const std::int64_t pos = avgs.position(prefix);
  const double fhat_prev = avgs.value(level, pos);
  const double fhat_cur = avgs.value(level + 1, pos * base.size() + d);
  const double r = rejection_prob_res(fhat_cur, fhat_prev, p);
  const double reset_mass =
      aggregate_rejection(avgs, base, prefix, p, rejection_prob_res);
  // kept directly, or reached as the single resample
  return 1 - p + p * (1 - r + reset_mass);
}

double cond_ratio_kcut(const PartialAverages& avgs,
                       const DiscreteDistribution& base,
                       std::span<const int> prefix, int d, double p, int k) {
  if (k < 1) throw std::invalid_argument("cond_ratio_kcut needs k >= 1");
  const int level = static_cast<int>(prefix.size());
  const std::int64_t pos = avgs.position(prefix);
  const double fhat_prev = avgs.value(level, pos);
  const double fhat_cur = avgs.value(level + 1, pos * base.size() + d);
  const double r = rejection_prob_tam(fhat_cur, fhat_prev, p);
  const double c = aggregate_rejection(avgs, base, prefix, p, rejection_prob_tam);
  const double ck = std::pow(c, k);
  // accepted at one of the first k attempts, or truncated to a fresh sample;
  // c can only reach 1 in the everything-rejected corner, where the
  // geometric factor degenerates to its limit k
  const double geometric = c < 1.0 ? (1 - ck) / (1 - c) : static_cast<double>(k);
  return 1 - p + p * (ck + (1 - r) * geometric);
}

TamperedDistribution induced_dist_exact(const TamperChannel& channel,
                                        std::int64_t budget) {
  const PartialAverages* avgs = channel.signed_averages();
  if (avgs == nullptr)
    throw std::logic_error(
        "induced_dist_exact needs a channel with an exact oracle");
  const DiscreteDistribution& base = channel.base();
  const int n = channel.n();
  const double p = channel.p();

  TamperedDistribution out =
      enumerate_product(ProductSource(base, n), budget);
  for (std::size_t i = 0; i < out.tuples.size(); ++i) {
    const Tuple& z = out.tuples[i];
    double prob = 1.0;
    for (int block = 0; block < n; ++block) {
      const std::span<const int> prefix(z.data(), block);
      double ratio;
      switch (channel.kind()) {
        case PolicyKind::kPtamIdeal:
          ratio = cond_ratio_tam(*avgs, base, prefix, z[block], p);
          break;
        case PolicyKind::kPtamKcut:
          ratio = cond_ratio_kcut(*avgs, base, prefix, z[block], p, channel.k());
          break;
        case PolicyKind::kPres:
          ratio = cond_ratio_res(*avgs, base, prefix, z[block], p);
          break;
        default:
          throw std::logic_error("unknown policy kind");
      }
      prob *= ratio * base.prob(z[block]);
    }
    out.probs[i] = prob;
  }
  return out;
}

double max_block_divergence_kcut_vs_ideal(const PartialAverages& avgs,
                                          const DiscreteDistribution& base,
                                          double p, int k) {
  double worst = 0;
  Tuple prefix;
  // walk every prefix of every length < n
  std::function<void(int)> visit = [&](int level) {
    for (int d = 0; d < base.size(); ++d) {
      const double ideal = cond_ratio_tam(avgs, base, prefix, d, p);
      const double cut = cond_ratio_kcut(avgs, base, prefix, d, p, k);
      worst = std::max(worst, std::abs(std::log(ideal / cut)));
    }
    if (level + 1 >= avgs.n()) return;
    for (int d = 0; d < base.size(); ++d) {
      prefix.push_back(d);
      visit(level + 1);
      prefix.pop_back();
    }
  };
  visit(0);
  return worst;
}

double bias_bound_tam(double p, double mu, double nu) {
  if (!(p > 0 && p < 1)) throw std::invalid_argument("p must be in (0,1)");
  if (!(mu >= 0 && mu <= 1)) throw std::invalid_argument("mu must be in [0,1]");
  if (!(nu >= 0)) throw std::invalid_argument("nu must be nonnegative");
  return p * nu / (1 - p + p * mu);
}

double bias_bound_res(double p, double mu, double nu) {
  if (!(p > 0 && p < 1)) throw std::invalid_argument("p must be in (0,1)");
  if (!(mu >= 0 && mu <= 1)) throw std::invalid_argument("mu must be in [0,1]");
  if (!(nu >= 0)) throw std::invalid_argument("nu must be nonnegative");
  return p * nu / (1 + p * mu);
}

double bias_bound_tam_signed(double p, double mu_signed, double nu_signed) {
  return p * nu_signed / (2 - p + p * mu_signed);
}

double bias_bound_res_signed(double p, double mu_signed, double nu_signed) {
  return p * nu_signed / (2 + p + p * mu_signed);
}

double gamma_tam(double delta, double p) {
  if (!(delta >= 0 && delta <= 1))
    throw std::invalid_argument("delta must be in [0,1]");
  if (!(p > 0 && p < 1)) throw std::invalid_argument("p must be in (0,1)");
  return delta + p * (delta - delta * delta) / (1 + p * delta - p);
}

double gamma_res(double delta, double p) {
  if (!(delta >= 0 && delta <= 1))
    throw std::invalid_argument("delta must be in [0,1]");
  if (!(p > 0 && p < 1)) throw std::invalid_argument("p must be in (0,1)");
  return delta + p * (delta - delta * delta) / (1 + p * delta);
}

DiscreteDistribution variation_dist(const VariationSpec& spec) {
  const int s = spec.base.size();
  if (static_cast<int>(spec.rho.size()) != s)
    throw std::invalid_argument("rho must have one entry per outcome");
  if (spec.k < 1) throw std::invalid_argument("variation needs k >= 1");
  if (!(spec.p >= 0 && spec.p <= 1))
    throw std::invalid_argument("variation mix weight must be in [0,1]");
  for (double r : spec.rho)
    if (!(r >= 0 && r <= 1))
      throw std::invalid_argument("rho values must be in [0,1]");

  double a = 0;  // acceptance probability of one anonymous candidate
  for (int d = 0; d < s; ++d) a += spec.base.prob(d) * spec.rho[d];

  // sum_{i=0}^{k-1} (1-a)^i
  double pass_sum;
  if (a > 0) {
    pass_sum = (1.0 - std::pow(1.0 - a, spec.k)) / a;
  } else {
    pass_sum = spec.k;
  }
  const double all_rejected = std::pow(1.0 - a, spec.k);

  std::vector<double> probs(s);
  for (int d = 0; d < s; ++d) {
    const double ratio =
        (1 - spec.p) + spec.p * (all_rejected + spec.rho[d] * pass_sum);
    probs[d] = spec.base.prob(d) * ratio;
  }
  return DiscreteDistribution(spec.base.outcome_ids(), std::move(probs));
}

namespace {

double max_log_ratio(const std::vector<double>& p, const std::vector<double>& q) {
  double worst = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool in_p = p[i] > 0, in_q = q[i] > 0;
    if (!in_p && !in_q) continue;
    if (in_p != in_q) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, std::abs(std::log(p[i] / q[i])));
  }
  return worst;
}

}  // namespace

double max_divergence(const DiscreteDistribution& p,
                      const DiscreteDistribution& q) {
  if (p.outcome_ids() != q.outcome_ids())
    throw std::invalid_argument(
        "max_divergence needs distributions over the same outcome ids");
  return max_log_ratio(p.probs(), q.probs());
}

double max_divergence(const TupleDistribution& p, const TupleDistribution& q) {
  if (p.tuples.size() != q.tuples.size() || p.tuples != q.tuples)
    throw std::invalid_argument(
        "max_divergence needs tuple distributions listing the same tuples");
  return max_log_ratio(p.probs, q.probs);
}

double expectation_gap_bound(double xi, int n) {
  if (!(xi >= 0)) throw std::invalid_argument("xi must be nonnegative");
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  return std::expm1(xi * n);
}

double kcut_divergence_bound(double p, int k) {
  if (!(p > 0 && p < 1)) throw std::invalid_argument("p must be in (0,1)");
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  return p / ((1 - p) * (1 - p) * std::pow(2 - p, k - 1));
}

}  // namespace tamperbench
