#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tamperbench/distribution.hpp"
#include "tamperbench/function.hpp"
#include "tamperbench/oracle.hpp"
#include "tamperbench/rng.hpp"

#include <json.hpp>

namespace tamperbench {

enum class PolicyKind { kPtamIdeal, kPtamKcut, kPres };

std::string to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(const std::string& s);

// Rejection probability of the tampering policy, evaluated on signed-range
// partial averages. fhat_cur is the average with the candidate appended,
// fhat_prev the average of the prefix alone.
//   tampering: (1 - fhat_cur) / (3 - p - (1-p) fhat_prev)
//   resetting: (1 - fhat_cur) / (2 + p (1 + fhat_prev))
// Both are guaranteed to land in [0,1] for inputs in [-1,1].
double rejection_prob_tam(double fhat_cur, double fhat_prev, double p);
double rejection_prob_res(double fhat_cur, double fhat_prev, double p);

// Loop cutoff making the truncated policy's per-block log-ratio to the
// untruncated one at most xi_prime:
//   ceil((ln(2-p) - 2 ln((1-p) xi_prime)) / ln(2-p)).
int kcut_choice(double p, double xi_prime);

// Working oracle accuracy for a polynomial-time attack with end-to-end bias
// deficit target xi_prime, instantiated with constant 0.1 and clipped at
// xi_prime:
//   resetting:  0.1 xi_prime (1-p) / (n p)
//   k-cut:      0.1 xi_prime (1-p) / (k^2 n p)
double xi_budget(PolicyKind kind, double xi_prime, int n, double p, int k = 0);

struct OracleSpec {
  PartialAverageOracle::Mode mode = PartialAverageOracle::Mode::kExact;
  double xi = 0;                       // MC accuracy
  std::optional<std::int64_t> ell;     // MC sample-count override
  std::uint64_t own_seed = 0;          // seed of the oracle's own stream

  static OracleSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Full record of one attacked sample sequence.
struct AttackTranscript {
  Tuple original;
  Tuple tampered;
  std::vector<char> coin;      // per-block tamper-opportunity flags
  std::vector<int> rejections; // per-block rejection counts
  std::int64_t oracle_queries = 0;
};

// A per-block tampering channel: with independent probability p per block,
// the policy may replace the block, always staying inside the support. The
// policy's decisions are driven by partial averages of the signed version
// of the target function, served by either an exact or a Monte-Carlo
// oracle.
class TamperChannel {
 public:
  // f may be unit- or signed-range; unit-range functions are wrapped to the
  // signed range internally and results map back affinely.
  TamperChannel(PolicyKind kind, double p, int k, const BoundedFunction& f,
                DiscreteDistribution base, int n, const OracleSpec& oracle,
                std::int64_t budget = kDefaultEnumBudget);

  PolicyKind kind() const { return kind_; }
  double p() const { return p_; }
  int k() const { return k_; }
  int n() const { return n_; }
  const DiscreteDistribution& base() const { return base_; }
  const PartialAverageOracle& oracle() const { return *oracle_; }

  // Signed-range exact partial averages; null for MC channels.
  const PartialAverages* signed_averages() const {
    return oracle_->exact_averages();
  }

  struct BlockResult {
    int outcome;
    int rejections;
    std::int64_t oracle_queries;
  };

  // Applies the tampering policy to one block, given the already-tampered
  // prefix and the original block value.
  BlockResult tamper_block(std::span<const int> tampered_prefix, int original,
                           RngStream& rng) const;

  AttackTranscript attack_sequence(std::span<const int> original,
                                   RngStream& rng) const;
  // Samples the original sequence from D^n first.
  AttackTranscript attack_sequence(RngStream& rng) const;

 private:
  PolicyKind kind_;
  double p_;
  int k_;
  int n_;
  DiscreteDistribution base_;
  std::shared_ptr<const PartialAverageOracle> oracle_;
};

// Policy descriptor, e.g.
//   {"kind":"ptam_kcut","p":0.5,"k":28,"oracle":{"mode":"mc","xi":1e-4}}
struct PolicyDescriptor {
  PolicyKind kind = PolicyKind::kPtamIdeal;
  double p = 0.5;
  int k = 0;
  OracleSpec oracle;

  static PolicyDescriptor from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

TamperChannel make_channel(const PolicyDescriptor& d, const BoundedFunction& f,
                           DiscreteDistribution base, int n,
                           std::int64_t budget = kDefaultEnumBudget);

// Safety cap for the untruncated tampering loop; exceeding it is an error,
// never a silent truncation.
inline constexpr int kRejectionSafetyCap = 1'000'000;

}  // namespace tamperbench
