#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tamperbench/attacks.hpp"
#include "tamperbench/distribution.hpp"
#include "tamperbench/function.hpp"
#include "tamperbench/rng.hpp"

#include <json.hpp>

namespace tamperbench {

// Total map from instances to labels, both by index.
struct Hypothesis {
  std::vector<int> labels;
};

// A joint distribution over labeled examples. The underlying
// DiscreteDistribution carries ids "(x,y)"; `pairs` decodes outcome index i
// to (instance index, label index).
struct JointDistribution {
  DiscreteDistribution dist;
  std::vector<std::pair<int, int>> pairs;
  std::string name;
};

// Finite learning problem: instances, labels, a hypothesis class, a bounded
// loss, and a list of joint example distributions.
struct LearningProblem {
  std::vector<std::string> instances;
  std::vector<std::string> labels;
  std::vector<Hypothesis> hypotheses;
  std::vector<std::string> hypothesis_names;
  std::vector<double> loss;  // row-major [predicted][truth]
  std::vector<JointDistribution> dist_class;

  double loss_at(int predicted, int truth) const {
    return loss[predicted * labels.size() + truth];
  }

  // Every distribution admits a zero-risk hypothesis (checked exhaustively).
  bool realizable() const;

  // Builds a joint distribution over the labeled support of a concept:
  // instance x with probability weight[x], label concept(x).
  JointDistribution concept_distribution(const Hypothesis& labeling,
                                         std::span<const double> weights,
                                         std::string name) const;

  // The two-concept fixture over X = [k], k = ceil(2/p), uniform instances:
  // concept c0 labels everything 0, concept c1 labels only x = k with 1.
  static LearningProblem impossibility(double p);

  static LearningProblem from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// 0-1 loss table for a label set.
std::vector<double> zero_one_loss(int label_count);

struct TrainResult {
  int hypothesis_index;
  bool consistent;  // false only when no hypothesis fits the sample
};

struct Learner {
  std::function<TrainResult(const LearningProblem&, const JointDistribution&,
                            std::span<const int> sample, RngStream*)>
      train;
  bool deterministic = true;
  std::string name;
};

// Exact risk of a hypothesis under a joint distribution.
double risk_exact(const LearningProblem& problem, const Hypothesis& h,
                  const JointDistribution& joint);

// Deterministic learner returning the first hypothesis in canonical order
// consistent with every training pair; if none is (possible only under
// invalid tampering) it returns the first hypothesis with consistent=false.
Learner consistent_learner();

// True iff some hypothesis is consistent with the sample yet has risk
// above eps.
bool bad_event(const LearningProblem& problem, const JointDistribution& joint,
               std::span<const int> sample, double eps);

struct McEstimate {
  double mean = 0;
  double stderror = 0;
  std::int64_t trials = 0;
};

// Expected loss of the trained hypothesis on a fixed test example, over
// training sequences S ~ D^n (exact enumeration).
double avg_error_exact(const LearningProblem& problem,
                       const JointDistribution& joint, int n,
                       const Learner& learner, std::pair<int, int> test_xy,
                       std::int64_t budget = kDefaultEnumBudget);

// Monte-Carlo estimate of the average error; when `attack` is given, each
// training sequence is passed through the tampering channel first.
McEstimate avg_error_mc(const LearningProblem& problem,
                        const JointDistribution& joint, int n,
                        const Learner& learner, std::pair<int, int> test_xy,
                        std::int64_t trials, RngStream& rng,
                        const TamperChannel* attack = nullptr);

// The targeted-attack objective: f(S) = Loss(h(x), y) for h trained on S.
// Unit range; Boolean for a deterministic learner under 0-1 loss.
// Randomized learners are averaged over `randomized_rounds` derived seeds.
BoundedFunction targeted_attack_fn(const LearningProblem& problem,
                                   const Learner& learner,
                                   const JointDistribution& joint,
                                   std::pair<int, int> test_xy, int n,
                                   int randomized_rounds = 64);

// Number of risk-estimation samples that makes the empirical-risk indicator
// reliable for a t-query attack: ceil((n + ln(2t)) * 20000 / eps^2).
std::int64_t risk_indicator_sample_bound(double eps, int n, std::int64_t t);

// Boolean function of the training sequence: trains the learner, then
// flags whether its (empirical or exact) risk reaches 0.995 * eps.
// With m = nullopt the exact risk is used (finite problems); otherwise the
// risk is estimated from m fresh examples per evaluation.
BoundedFunction risk_indicator_fn(const LearningProblem& problem,
                                  const Learner& learner,
                                  const JointDistribution& joint, double eps,
                                  int n, std::optional<std::int64_t> m,
                                  std::uint64_t sampling_seed = 0);

enum class BudgetStrength { kWeak, kStrong };

struct BudgetContext {
  std::span<const int> tampered_prefix;
  int original;          // -1 for weak adversaries (they never see it)
  int position;
  int n;
  int budget_remaining;  // in examples
  const JointDistribution* joint;
  RngStream* rng;        // null for deterministic adversaries
};

// A bounded-budget tampering adversary. The rule returns the replacement
// outcome index, or nullopt to leave the block alone. Strong adversaries see
// the original block and only actual changes count against the budget; weak
// adversaries decide blind and every non-skip output counts.
struct BudgetAdversary {
  BudgetStrength strength;
  double p;  // budget fraction; budget = floor(p * n)
  std::function<std::optional<int>(const BudgetContext&)> rule;
  bool deterministic = true;
  std::string name;
};

struct BudgetApplication {
  Tuple tampered;
  std::vector<int> positions;  // positions charged against the budget
};

BudgetApplication apply_budget_adversary(const BudgetAdversary& adv,
                                         const JointDistribution& joint,
                                         std::span<const int> sample,
                                         RngStream* rng);

// The concept-disambiguation blocker for the two-concept fixture: replaces
// every example with instance k by (k-1, 0) while budget remains.
// Mistake-free: label 0 at k-1 is correct under both concepts.
BudgetAdversary strong_adversary_asb(const LearningProblem& problem, double p);

// Deterministic weak adversaries shipped for the experiments.
BudgetAdversary weak_fixed_positions(double p, std::vector<int> positions,
                                     int outcome);
BudgetAdversary weak_prefix_flood(double p, int outcome);
// Adaptive but content-blind: tampers every other position while budget
// remains, echoing the previous tampered block (or `first_outcome` at the
// start).
BudgetAdversary weak_adaptive_echo(double p, int first_outcome);

// Exact law of the first (n - floor(p n)) untouched positions of a
// deterministic weak adversary, by enumeration over all training sequences.
TupleDistribution untouched_subsequence_dist(const BudgetAdversary& adv,
                                             const JointDistribution& joint,
                                             int n,
                                             std::int64_t budget = kDefaultEnumBudget);

// Hook that poisons a training sequence before the learner sees it.
using PoisonFn = std::function<Tuple(const JointDistribution&,
                                     std::span<const int>, RngStream&)>;
PoisonFn no_poison();
PoisonFn poison_from_budget(BudgetAdversary adv);
PoisonFn poison_from_channel(std::shared_ptr<const TamperChannel> channel);

struct PacRow {
  std::string dist_name;
  int n = 0;
  double eps = 0;
  std::int64_t trials = 0;
  double delta_hat = 0;   // Pr[risk > eps]
  double delta_se = 0;
  double bad_rate = 0;    // Pr[Bad event]
  double bad_se = 0;
  double mean_risk = 0;
  double risk_se = 0;
};

// Monte-Carlo PAC experiment per distribution in the class: draws S ~ D^n,
// poisons it, trains, and tallies risk and Bad-event statistics.
std::vector<PacRow> pac_experiment(const LearningProblem& problem,
                                   const Learner& learner,
                                   const PoisonFn& poison, int n, double eps,
                                   std::int64_t trials, RngStream& rng);

struct ImpossibilityRow {
  int n = 0;
  std::int64_t trials = 0;
  double mean_risk = 0;
  double risk_se = 0;
  double bound = 0;  // (1 - exp(-n / 3k)) / (2k)
};

// The strong-budget impossibility experiment: concept drawn uniformly from
// {c0, c1} per trial, adversary strong_adversary_asb, consistent learner.
ImpossibilityRow impossibility_experiment(const LearningProblem& fixture,
                                          double p, int n, std::int64_t trials,
                                          RngStream& rng);

}  // namespace tamperbench
