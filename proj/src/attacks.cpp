#include "tamperbench/attacks.hpp"

#include <cmath>
#include <stdexcept>

namespace tamperbench {
namespace {

void check_signed_value(double v, const char* what) {
  if (!(v >= -1.0 - 1e-12 && v <= 1.0 + 1e-12))
    throw std::domain_error(std::string(what) + " outside [-1,1]: " +
                            std::to_string(v));
}

// Channels and rejection probabilities stay well defined at the degenerate
// endpoints (p=0 never tampers, p=1 always may); the parameter recipes below
// keep the strict open interval.
void check_p_closed(double p) {
  if (!(p >= 0 && p <= 1))
    throw std::invalid_argument("tampering probability p must be in [0,1]");
}

void check_p_open(double p) {
  if (!(p > 0 && p < 1))
    throw std::invalid_argument("tampering probability p must be in (0,1)");
}

}  // namespace

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kPtamIdeal: return "ptam_ideal";
    case PolicyKind::kPtamKcut: return "ptam_kcut";
    case PolicyKind::kPres: return "pres";
  }
  return "?";
}

PolicyKind policy_kind_from_string(const std::string& s) {
  if (s == "ptam_ideal") return PolicyKind::kPtamIdeal;
  if (s == "ptam_kcut") return PolicyKind::kPtamKcut;
  if (s == "pres") return PolicyKind::kPres;
  throw std::invalid_argument("unknown policy kind: " + s);
}

double rejection_prob_tam(double fhat_cur, double fhat_prev, double p) {
  check_p_closed(p);
  check_signed_value(fhat_cur, "fhat_cur");
  check_signed_value(fhat_prev, "fhat_prev");
  // numerator <= 2, denominator >= 2, so the ratio is a probability
  return (1.0 - fhat_cur) / (3.0 - p - (1.0 - p) * fhat_prev);
}

double rejection_prob_res(double fhat_cur, double fhat_prev, double p) {
  check_p_closed(p);
  check_signed_value(fhat_cur, "fhat_cur");
  check_signed_value(fhat_prev, "fhat_prev");
  return (1.0 - fhat_cur) / (2.0 + p * (1.0 + fhat_prev));
}

int kcut_choice(double p, double xi_prime) {
  check_p_open(p);
  if (!(xi_prime > 0 && xi_prime < 1))
    throw std::invalid_argument("kcut_choice needs xi_prime in (0,1)");
  const double k = (std::log(2 - p) - 2 * std::log((1 - p) * xi_prime)) /
                   std::log(2 - p);
  return static_cast<int>(std::ceil(k));
}

double xi_budget(PolicyKind kind, double xi_prime, int n, double p, int k) {
  check_p_open(p);
  if (!(xi_prime > 0 && xi_prime < 1))
    throw std::invalid_argument("xi_budget needs xi_prime in (0,1)");
  if (n < 1) throw std::invalid_argument("xi_budget needs n >= 1");
  constexpr double c = 0.1;
  double xi;
  switch (kind) {
    case PolicyKind::kPres:
      xi = c * xi_prime * (1 - p) / (n * p);
      break;
    case PolicyKind::kPtamKcut:
      if (k < 1) throw std::invalid_argument("xi_budget needs k >= 1 for k-cut");
      xi = c * xi_prime * (1 - p) /
           (static_cast<double>(k) * k * n * p);
      break;
    default:
      throw std::invalid_argument(
          "xi_budget applies to pres and ptam_kcut policies only");
  }
  return std::min(xi, xi_prime);
}

OracleSpec OracleSpec::from_json(const nlohmann::json& j) {
  OracleSpec spec;
  if (!j.contains("mode")) throw ConfigError("oracle.mode", "missing");
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "exact") {
    spec.mode = PartialAverageOracle::Mode::kExact;
  } else if (mode == "mc") {
    spec.mode = PartialAverageOracle::Mode::kMonteCarlo;
    if (!j.contains("xi")) throw ConfigError("oracle.xi", "missing for mc mode");
    spec.xi = j.at("xi").get<double>();
    if (j.contains("ell")) spec.ell = j.at("ell").get<std::int64_t>();
    if (j.contains("seed")) spec.own_seed = j.at("seed").get<std::uint64_t>();
  } else {
    throw ConfigError("oracle.mode", "must be 'exact' or 'mc', got '" + mode + "'");
  }
  return spec;
}

nlohmann::json OracleSpec::to_json() const {
  if (mode == PartialAverageOracle::Mode::kExact)
    return nlohmann::json{{"mode", "exact"}};
  nlohmann::json j{{"mode", "mc"}, {"xi", xi}};
  if (ell) j["ell"] = *ell;
  return j;
}

TamperChannel::TamperChannel(PolicyKind kind, double p, int k,
                             const BoundedFunction& f,
                             DiscreteDistribution base, int n,
                             const OracleSpec& oracle, std::int64_t budget)
    : kind_(kind), p_(p), k_(k), n_(n), base_(std::move(base)) {
  check_p_closed(p_);
  if (n_ < 1) throw std::invalid_argument("channel needs n >= 1");
  if (kind_ == PolicyKind::kPtamKcut && k_ < 1)
    throw std::invalid_argument("k-cut policy needs k >= 1");
  if (f.arity() != n_)
    throw std::invalid_argument("function arity does not match channel n");

  BoundedFunction f_signed =
      f.range() == RangeTag::kUnit ? to_signed(f) : f;
  if (oracle.mode == PartialAverageOracle::Mode::kExact) {
    oracle_ = std::make_shared<PartialAverageOracle>(PartialAverageOracle::exact(
        std::move(f_signed), base_, n_, budget));
  } else {
    oracle_ = std::make_shared<PartialAverageOracle>(
        PartialAverageOracle::monte_carlo(std::move(f_signed), base_, n_,
                                          oracle.xi, RngStream(oracle.own_seed),
                                          oracle.ell, budget));
  }
}

TamperChannel::BlockResult TamperChannel::tamper_block(
    std::span<const int> tampered_prefix, int original, RngStream& rng) const {
  if (original < 0 || original >= base_.size())
    throw std::invalid_argument("original block outside support");

  // For the MC oracle the prefix estimate is drawn once per block and reused
  // across rejection iterations; the candidate term is queried fresh each
  // time. The exact oracle just looks both up.
  const double fhat_prev = oracle_->query(tampered_prefix, rng);
  std::int64_t queries = 1;

  Tuple with_candidate(tampered_prefix.begin(), tampered_prefix.end());
  with_candidate.push_back(original);

  if (kind_ == PolicyKind::kPres) {
    const double fhat_cur = oracle_->query(with_candidate, rng);
    ++queries;
    const double r = rejection_prob_res(fhat_cur, fhat_prev, p_);
    if (rng.next_unit() < r)
      return {base_.sample(rng), 1, queries};  // reset to a fresh sample
    return {original, 0, queries};
  }

  int rejections = 0;
  int candidate = original;
  for (;;) {
    with_candidate.back() = candidate;
    const double fhat_cur = oracle_->query(with_candidate, rng);
    ++queries;
    const double r = rejection_prob_tam(fhat_cur, fhat_prev, p_);
    if (rng.next_unit() >= r) return {candidate, rejections, queries};
    ++rejections;
    if (kind_ == PolicyKind::kPtamKcut && rejections >= k_) {
      // Truncated: give up and emit an unconditioned fresh sample.
      return {base_.sample(rng), rejections, queries};
    }
    if (rejections >= kRejectionSafetyCap)
      throw std::runtime_error(
          "tampering rejection loop exceeded the safety cap of " +
          std::to_string(kRejectionSafetyCap) + " iterations");
    candidate = base_.sample(rng);
  }
}

AttackTranscript TamperChannel::attack_sequence(std::span<const int> original,
                                                RngStream& rng) const {
  if (static_cast<int>(original.size()) != n_)
    throw std::invalid_argument("original sequence length does not match n");
  for (int v : original)
    if (v < 0 || v >= base_.size())
      throw std::invalid_argument("original sequence leaves the support");

  // Coins come from a dedicated substream so the set of tampered positions
  // never depends on block contents.
  RngStream coin_rng = rng.split();
  RngStream tamper_rng = rng.split();

  AttackTranscript tr;
  tr.original.assign(original.begin(), original.end());
  tr.tampered = tr.original;
  tr.coin.resize(n_, 0);
  tr.rejections.assign(n_, 0);

  for (int i = 0; i < n_; ++i) {
    const bool heads = coin_rng.bernoulli(p_);
    tr.coin[i] = heads ? 1 : 0;
    if (!heads) continue;
    const BlockResult res = tamper_block(
        std::span<const int>(tr.tampered.data(), i), original[i], tamper_rng);
    tr.tampered[i] = res.outcome;
    tr.rejections[i] = res.rejections;
    tr.oracle_queries += res.oracle_queries;
  }
  return tr;
}

AttackTranscript TamperChannel::attack_sequence(RngStream& rng) const {
  RngStream original_rng = rng.split();
  Tuple original(n_);
  for (int i = 0; i < n_; ++i) original[i] = base_.sample(original_rng);
  return attack_sequence(original, rng);
}

PolicyDescriptor PolicyDescriptor::from_json(const nlohmann::json& j) {
  PolicyDescriptor d;
  if (!j.contains("kind")) throw ConfigError("kind", "missing");
  d.kind = policy_kind_from_string(j.at("kind").get<std::string>());
  if (!j.contains("p")) throw ConfigError("p", "missing");
  d.p = j.at("p").get<double>();
  if (d.kind == PolicyKind::kPtamKcut) {
    if (!j.contains("k")) throw ConfigError("k", "missing for ptam_kcut");
    d.k = j.at("k").get<int>();
  }
  d.oracle = j.contains("oracle") ? OracleSpec::from_json(j.at("oracle"))
                                  : OracleSpec{};
  return d;
}

nlohmann::json PolicyDescriptor::to_json() const {
  nlohmann::json j{{"kind", to_string(kind)}, {"p", p}, {"oracle", oracle.to_json()}};
  if (kind == PolicyKind::kPtamKcut) j["k"] = k;
  return j;
}

TamperChannel make_channel(const PolicyDescriptor& d, const BoundedFunction& f,
                           DiscreteDistribution base, int n,
                           std::int64_t budget) {
  return TamperChannel(d.kind, d.p, d.k, f, std::move(base), n, d.oracle,
                       budget);
}

}  // namespace tamperbench
