#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tamperbench/attacks.hpp"
#include "tamperbench/distribution.hpp"
#include "tamperbench/function.hpp"
#include "tamperbench/oracle.hpp"

namespace tamperbench {

using TamperedDistribution = TupleDistribution;

// E[f] over an explicit tuple distribution.
double expectation(const TupleDistribution& dist, const BoundedFunction& f);

// Closed-form induced distributions of the two ideal attacks: each tuple's
// probability is reweighted by
//   tampering:  (2-p + p f(z)) / (2-p + p mu)
//   resetting:  (2+p + p f(z)) / (2+p + p mu)
// with f in signed range (unit-range input is wrapped automatically).
TamperedDistribution closed_form_tam(const BoundedFunction& f,
                                     const DiscreteDistribution& base, int n,
                                     double p,
                                     std::int64_t budget = kDefaultEnumBudget);
TamperedDistribution closed_form_res(const BoundedFunction& f,
                                     const DiscreteDistribution& base, int n,
                                     double p,
                                     std::int64_t budget = kDefaultEnumBudget);

// Per-block conditional probability ratio Pr[block = d | prefix] / Pr[D = d]
// for each policy, computed from the rejection-probability analysis (the
// rejection probability of the candidate plus the aggregated rejection mass
// of the prefix), not from the closed-form reweighting. These are the
// independent route that the closed forms are checked against.
double cond_ratio_tam(const PartialAverages& signed_avgs,
                      const DiscreteDistribution& base,
                      std::span<const int> prefix, int d, double p);
double cond_ratio_res(const PartialAverages& signed_avgs,
                      const DiscreteDistribution& base,
                      std::span<const int> prefix, int d, double p);
double cond_ratio_kcut(const PartialAverages& signed_avgs,
                       const DiscreteDistribution& base,
                       std::span<const int> prefix, int d, double p, int k);

// Exact induced joint distribution of the channel's policy, built block by
// block from the conditional ratios above. Requires an exact-oracle channel.
TamperedDistribution induced_dist_exact(const TamperChannel& channel,
                                        std::int64_t budget = kDefaultEnumBudget);

// Largest per-block absolute log-ratio between the truncated and the
// untruncated tampering policy, over all prefixes and candidates.
double max_block_divergence_kcut_vs_ideal(const PartialAverages& signed_avgs,
                                          const DiscreteDistribution& base,
                                          double p, int k);

// Guaranteed bias floors of the two attacks for unit-range functions:
//   tampering:  p nu / (1 - p + p mu)
//   resetting:  p nu / (1 + p mu)
double bias_bound_tam(double p, double mu, double nu);
double bias_bound_res(double p, double mu, double nu);
// Signed-range counterparts (denominators 2-p+p mu', 2+p+p mu').
double bias_bound_tam_signed(double p, double mu_signed, double nu_signed);
double bias_bound_res_signed(double p, double mu_signed, double nu_signed);

// Post-attack success probabilities as functions of the baseline delta;
// both are strictly increasing on [0,1]:
//   gamma_tam = delta + p (delta - delta^2) / (1 + p delta - p)
//   gamma_res = delta + p (delta - delta^2) / (1 + p delta)
double gamma_tam(double delta, double p);
double gamma_res(double delta, double p);

// One tampering step as a standalone mixture: with probability p, scan k
// candidates accepting each with probability rho, else pass a fresh sample
// through.
struct VariationSpec {
  DiscreteDistribution base;
  double p;                 // mix weight in [0,1]
  int k;                    // candidate count, >= 1
  std::vector<double> rho;  // acceptance probability per outcome index
};

// Exact output distribution of the candidate-acceptance process.
DiscreteDistribution variation_dist(const VariationSpec& spec);

// Max over the common support of |ln(P/Q)|. Outcomes carried by exactly one
// side yield +infinity; outcomes with zero probability on both sides are
// ignored.
double max_divergence(const DiscreteDistribution& p,
                      const DiscreteDistribution& q);
// Tuple-distribution variant; both must list the same tuples in the same
// order.
double max_divergence(const TupleDistribution& p, const TupleDistribution& q);

// If every per-block conditional log-ratio between two length-n processes is
// at most xi, expectations of [-1,1] functions differ by at most this.
double expectation_gap_bound(double xi, int n);

// Per-block log-ratio bound between truncated and untruncated tampering:
// p / ((1-p)^2 (2-p)^(k-1)).
double kcut_divergence_bound(double p, int k);

}  // namespace tamperbench
