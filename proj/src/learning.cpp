#include "tamperbench/learning.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace tamperbench {
namespace {

int budget_of(double p, int n) {
  return static_cast<int>(std::floor(p * n + 1e-9));
}

std::string pair_id(const std::string& x, const std::string& y) {
  return "(" + x + "," + y + ")";
}

std::uint64_t tuple_hash(std::span<const int> t) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (int v : t) {
    h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

bool LearningProblem::realizable() const {
  for (const auto& joint : dist_class) {
    bool ok = false;
    for (const auto& h : hypotheses)
      if (risk_exact(*this, h, joint) == 0.0) {
        ok = true;
        break;
      }
    if (!ok) return false;
  }
  return true;
}

JointDistribution LearningProblem::concept_distribution(
    const Hypothesis& labeling, std::span<const double> weights,
    std::string name) const {
  if (weights.size() != instances.size())
    throw std::invalid_argument("one weight per instance required");
  std::vector<std::string> ids;
  std::vector<double> probs;
  std::map<std::string, std::pair<int, int>> decode;
  for (std::size_t x = 0; x < instances.size(); ++x) {
    if (weights[x] <= 0) continue;
    const int y = labeling.labels[x];
    std::string id = pair_id(instances[x], labels[y]);
    decode[id] = {static_cast<int>(x), y};
    ids.push_back(std::move(id));
    probs.push_back(weights[x]);
  }
  JointDistribution joint{DiscreteDistribution(std::move(ids), std::move(probs)),
                          {},
                          std::move(name)};
  joint.pairs.resize(joint.dist.size());
  for (int i = 0; i < joint.dist.size(); ++i)
    joint.pairs[i] = decode.at(joint.dist.outcome_id(i));
  return joint;
}

LearningProblem LearningProblem::impossibility(double p) {
  if (!(p > 0 && p < 1))
    throw std::invalid_argument("impossibility fixture needs p in (0,1)");
  const int k = static_cast<int>(std::ceil(2.0 / p - 1e-12));

  LearningProblem prob;
  for (int i = 1; i <= k; ++i) prob.instances.push_back(std::to_string(i));
  prob.labels = {"0", "1"};
  Hypothesis c0{std::vector<int>(k, 0)};
  Hypothesis c1{std::vector<int>(k, 0)};
  c1.labels[k - 1] = 1;
  prob.hypotheses = {c0, c1};
  prob.hypothesis_names = {"c0", "c1"};
  prob.loss = zero_one_loss(2);

  const std::vector<double> uniform(k, 1.0 / k);
  prob.dist_class.push_back(prob.concept_distribution(c0, uniform, "c0"));
  prob.dist_class.push_back(prob.concept_distribution(c1, uniform, "c1"));
  return prob;
}

LearningProblem LearningProblem::from_json(const nlohmann::json& j) {
  LearningProblem prob;
  try {
    prob.instances = j.at("instances").get<std::vector<std::string>>();
    prob.labels = j.at("labels").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("instances/labels", "missing or malformed");
  }
  auto label_index = [&](const std::string& y) {
    auto it = std::find(prob.labels.begin(), prob.labels.end(), y);
    if (it == prob.labels.end()) throw ConfigError("labels", "unknown label " + y);
    return static_cast<int>(it - prob.labels.begin());
  };
  if (!j.contains("hypotheses")) throw ConfigError("hypotheses", "missing");
  for (const auto& hj : j.at("hypotheses")) {
    Hypothesis h;
    const auto table = hj.at("table").get<std::vector<std::string>>();
    if (table.size() != prob.instances.size())
      throw ConfigError("hypotheses.table", "must map every instance");
    for (const auto& y : table) h.labels.push_back(label_index(y));
    prob.hypotheses.push_back(std::move(h));
    prob.hypothesis_names.push_back(
        hj.value("name", std::string("h") + std::to_string(prob.hypotheses.size() - 1)));
  }
  if (!j.contains("loss")) throw ConfigError("loss", "missing");
  for (const auto& row : j.at("loss"))
    for (const auto& v : row) prob.loss.push_back(v.get<double>());
  if (prob.loss.size() != prob.labels.size() * prob.labels.size())
    throw ConfigError("loss", "must be a |Y| x |Y| table");
  for (double v : prob.loss)
    if (!(v >= 0 && v <= 1)) throw ConfigError("loss", "entries must lie in [0,1]");

  if (!j.contains("distributions")) throw ConfigError("distributions", "missing");
  for (const auto& dj : j.at("distributions")) {
    const auto examples =
        dj.at("examples").get<std::vector<std::vector<std::string>>>();
    const auto probs = dj.at("probs").get<std::vector<double>>();
    if (examples.size() != probs.size())
      throw ConfigError("distributions", "examples and probs must align");
    std::vector<std::string> ids;
    std::map<std::string, std::pair<int, int>> decode;
    for (const auto& ex : examples) {
      if (ex.size() != 2)
        throw ConfigError("distributions.examples", "need [x,y] pairs");
      auto xit = std::find(prob.instances.begin(), prob.instances.end(), ex[0]);
      if (xit == prob.instances.end())
        throw ConfigError("distributions.examples", "unknown instance " + ex[0]);
      const int x = static_cast<int>(xit - prob.instances.begin());
      const int y = label_index(ex[1]);
      std::string id = pair_id(ex[0], ex[1]);
      decode[id] = {x, y};
      ids.push_back(std::move(id));
    }
    JointDistribution joint{
        DiscreteDistribution(std::move(ids), probs),
        {},
        dj.value("name", std::string("D") + std::to_string(prob.dist_class.size()))};
    joint.pairs.resize(joint.dist.size());
    for (int i = 0; i < joint.dist.size(); ++i)
      joint.pairs[i] = decode.at(joint.dist.outcome_id(i));
    prob.dist_class.push_back(std::move(joint));
  }
  return prob;
}

nlohmann::json LearningProblem::to_json() const {
  nlohmann::json j;
  j["instances"] = instances;
  j["labels"] = labels;
  j["hypotheses"] = nlohmann::json::array();
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    std::vector<std::string> table;
    for (int y : hypotheses[i].labels) table.push_back(labels[y]);
    j["hypotheses"].push_back({{"name", hypothesis_names[i]}, {"table", table}});
  }
  j["loss"] = nlohmann::json::array();
  for (std::size_t r = 0; r < labels.size(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t c = 0; c < labels.size(); ++c)
      row.push_back(loss[r * labels.size() + c]);
    j["loss"].push_back(row);
  }
  j["distributions"] = nlohmann::json::array();
  for (const auto& joint : dist_class) {
    nlohmann::json dj;
    dj["name"] = joint.name;
    dj["examples"] = nlohmann::json::array();
    for (const auto& [x, y] : joint.pairs)
      dj["examples"].push_back({instances[x], labels[y]});
    dj["probs"] = joint.dist.probs();
    j["distributions"].push_back(dj);
  }
  return j;
}

std::vector<double> zero_one_loss(int label_count) {
  std::vector<double> loss(label_count * label_count, 1.0);
  for (int i = 0; i < label_count; ++i) loss[i * label_count + i] = 0.0;
  return loss;
}

double risk_exact(const LearningProblem& problem, const Hypothesis& h,
                  const JointDistribution& joint) {
  double risk = 0;
  for (int i = 0; i < joint.dist.size(); ++i) {
    const auto [x, y] = joint.pairs[i];
    risk += joint.dist.prob(i) * problem.loss_at(h.labels[x], y);
  }
  return risk;
}

Learner consistent_learner() {
  Learner learner;
  learner.deterministic = true;
  learner.name = "consistent";
  learner.train = [](const LearningProblem& problem,
                     const JointDistribution& joint,
                     std::span<const int> sample, RngStream*) -> TrainResult {
    for (std::size_t hi = 0; hi < problem.hypotheses.size(); ++hi) {
      const Hypothesis& h = problem.hypotheses[hi];
      bool ok = true;
      for (int ex : sample) {
        const auto [x, y] = joint.pairs[ex];
        if (h.labels[x] != y) {
          ok = false;
          break;
        }
      }
      if (ok) return {static_cast<int>(hi), true};
    }
    return {0, false};
  };
  return learner;
}

bool bad_event(const LearningProblem& problem, const JointDistribution& joint,
               std::span<const int> sample, double eps) {
  for (const Hypothesis& h : problem.hypotheses) {
    bool consistent = true;
    for (int ex : sample) {
      const auto [x, y] = joint.pairs[ex];
      if (h.labels[x] != y) {
        consistent = false;
        break;
      }
    }
    if (consistent && risk_exact(problem, h, joint) > eps) return true;
  }
  return false;
}

double avg_error_exact(const LearningProblem& problem,
                       const JointDistribution& joint, int n,
                       const Learner& learner, std::pair<int, int> test_xy,
                       std::int64_t budget) {
  if (!learner.deterministic)
    throw std::invalid_argument("avg_error_exact needs a deterministic learner");
  const TupleDistribution all =
      enumerate_product(ProductSource(joint.dist, n), budget);
  double err = 0;
  for (std::size_t i = 0; i < all.tuples.size(); ++i) {
    const TrainResult tr = learner.train(problem, joint, all.tuples[i], nullptr);
    const Hypothesis& h = problem.hypotheses[tr.hypothesis_index];
    err += all.probs[i] * problem.loss_at(h.labels[test_xy.first], test_xy.second);
  }
  return err;
}

McEstimate avg_error_mc(const LearningProblem& problem,
                        const JointDistribution& joint, int n,
                        const Learner& learner, std::pair<int, int> test_xy,
                        std::int64_t trials, RngStream& rng,
                        const TamperChannel* attack) {
  if (trials < 1) throw std::invalid_argument("avg_error_mc needs trials >= 1");
  double sum = 0, sum2 = 0;
  Tuple sample(n);
  for (std::int64_t t = 0; t < trials; ++t) {
    RngStream trial_rng = rng.split();
    for (int i = 0; i < n; ++i) sample[i] = joint.dist.sample(trial_rng);
    const Tuple* train_on = &sample;
    AttackTranscript tr;
    if (attack != nullptr) {
      tr = attack->attack_sequence(sample, trial_rng);
      train_on = &tr.tampered;
    }
    RngStream learner_rng = trial_rng.split();
    const TrainResult res =
        learner.train(problem, joint, *train_on,
                      learner.deterministic ? nullptr : &learner_rng);
    const Hypothesis& h = problem.hypotheses[res.hypothesis_index];
    const double loss = problem.loss_at(h.labels[test_xy.first], test_xy.second);
    sum += loss;
    sum2 += loss * loss;
  }
  const double mean = sum / trials;
  const double var = std::max(0.0, sum2 / trials - mean * mean);
  return {mean, std::sqrt(var / trials), trials};
}

BoundedFunction targeted_attack_fn(const LearningProblem& problem,
                                   const Learner& learner,
                                   const JointDistribution& joint,
                                   std::pair<int, int> test_xy, int n,
                                   int randomized_rounds) {
  auto eval = [problem, learner, joint, test_xy,
               randomized_rounds](std::span<const int> sample) -> double {
    if (learner.deterministic) {
      const TrainResult tr = learner.train(problem, joint, sample, nullptr);
      const Hypothesis& h = problem.hypotheses[tr.hypothesis_index];
      return problem.loss_at(h.labels[test_xy.first], test_xy.second);
    }
    double acc = 0;
    const std::uint64_t base_seed = tuple_hash(sample);
    for (int r = 0; r < randomized_rounds; ++r) {
      RngStream lr(base_seed ^ (0x9e3779b97f4a7c15ULL * (r + 1)));
      const TrainResult tr = learner.train(problem, joint, sample, &lr);
      const Hypothesis& h = problem.hypotheses[tr.hypothesis_index];
      acc += problem.loss_at(h.labels[test_xy.first], test_xy.second);
    }
    return acc / randomized_rounds;
  };
  return BoundedFunction(n, RangeTag::kUnit, std::move(eval), "targeted");
}

std::int64_t risk_indicator_sample_bound(double eps, int n, std::int64_t t) {
  if (!(eps > 0 && eps <= 1))
    throw std::invalid_argument("risk_indicator_sample_bound needs eps in (0,1]");
  const double m =
      (n + std::log(2.0 * static_cast<double>(t))) * 20000.0 / (eps * eps);
  return static_cast<std::int64_t>(std::ceil(m));
}

BoundedFunction risk_indicator_fn(const LearningProblem& problem,
                                  const Learner& learner,
                                  const JointDistribution& joint, double eps,
                                  int n, std::optional<std::int64_t> m,
                                  std::uint64_t sampling_seed) {
  if (m && *m < 1) throw std::invalid_argument("risk sample count must be >= 1");
  const double threshold = 0.995 * eps;
  auto sampler = std::make_shared<RngStream>(sampling_seed);
  auto eval = [problem, learner, joint, threshold, m,
               sampler](std::span<const int> sample) -> double {
    const TrainResult tr = learner.train(problem, joint, sample, nullptr);
    const Hypothesis& h = problem.hypotheses[tr.hypothesis_index];
    double risk;
    if (!m) {
      risk = risk_exact(problem, h, joint);
    } else {
      double acc = 0;
      for (std::int64_t i = 0; i < *m; ++i) {
        const int ex = joint.dist.sample(*sampler);
        const auto [x, y] = joint.pairs[ex];
        acc += problem.loss_at(h.labels[x], y);
      }
      risk = acc / static_cast<double>(*m);
    }
    return risk >= threshold ? 1.0 : 0.0;
  };
  return BoundedFunction(n, RangeTag::kUnit, std::move(eval), "risk_indicator");
}

BudgetApplication apply_budget_adversary(const BudgetAdversary& adv,
                                         const JointDistribution& joint,
                                         std::span<const int> sample,
                                         RngStream* rng) {
  const int n = static_cast<int>(sample.size());
  BudgetApplication out;
  out.tampered.assign(sample.begin(), sample.end());
  int budget = budget_of(adv.p, n);

  for (int i = 0; i < n; ++i) {
    if (budget <= 0) break;
    BudgetContext ctx{
        std::span<const int>(out.tampered.data(), static_cast<std::size_t>(i)),
        adv.strength == BudgetStrength::kStrong ? sample[i] : -1,
        i,
        n,
        budget,
        &joint,
        rng};
    const std::optional<int> o = adv.rule(ctx);
    if (!o) continue;
    if (*o < 0 || *o >= joint.dist.size())
      throw std::invalid_argument(
          "budget adversary emitted an outcome outside the support");
    if (adv.strength == BudgetStrength::kStrong) {
      // strong budget counts actual changes only
      if (*o != sample[i]) {
        out.tampered[i] = *o;
        out.positions.push_back(i);
        --budget;
      }
    } else {
      // weak budget counts every committed position
      out.tampered[i] = *o;
      out.positions.push_back(i);
      --budget;
    }
  }
  if (static_cast<int>(out.positions.size()) > budget_of(adv.p, n))
    throw std::logic_error("budget accounting violated");
  return out;
}

BudgetAdversary strong_adversary_asb(const LearningProblem& problem, double p) {
  if (!(p > 0 && p < 1)) throw std::invalid_argument("p must be in (0,1)");
  const int k = static_cast<int>(problem.instances.size());
  if (k < 2) throw std::invalid_argument("fixture needs at least two instances");
  const int top_instance = k - 1;                   // instance "k"
  const std::pair<int, int> replacement{k - 2, 0};  // example (k-1, 0)

  BudgetAdversary adv;
  adv.strength = BudgetStrength::kStrong;
  adv.p = p;
  adv.deterministic = true;
  adv.name = "A_sb";
  adv.rule = [top_instance,
              replacement](const BudgetContext& ctx) -> std::optional<int> {
    if (ctx.joint->pairs[ctx.original].first != top_instance) return std::nullopt;
    for (int i = 0; i < ctx.joint->dist.size(); ++i)
      if (ctx.joint->pairs[i] == replacement) return i;
    return std::nullopt;  // replacement pair absent from this support
  };
  return adv;
}

BudgetAdversary weak_fixed_positions(double p, std::vector<int> positions,
                                     int outcome) {
  BudgetAdversary adv;
  adv.strength = BudgetStrength::kWeak;
  adv.p = p;
  adv.deterministic = true;
  adv.name = "weak_fixed";
  std::sort(positions.begin(), positions.end());
  adv.rule = [positions, outcome](const BudgetContext& ctx) -> std::optional<int> {
    if (std::binary_search(positions.begin(), positions.end(), ctx.position))
      return outcome;
    return std::nullopt;
  };
  return adv;
}

BudgetAdversary weak_prefix_flood(double p, int outcome) {
  BudgetAdversary adv;
  adv.strength = BudgetStrength::kWeak;
  adv.p = p;
  adv.deterministic = true;
  adv.name = "weak_prefix_flood";
  adv.rule = [outcome](const BudgetContext&) -> std::optional<int> {
    return outcome;  // the driver stops consulting once the budget is spent
  };
  return adv;
}

BudgetAdversary weak_adaptive_echo(double p, int first_outcome) {
  BudgetAdversary adv;
  adv.strength = BudgetStrength::kWeak;
  adv.p = p;
  adv.deterministic = true;
  adv.name = "weak_adaptive_echo";
  adv.rule = [first_outcome](const BudgetContext& ctx) -> std::optional<int> {
    if (ctx.position % 2 != 0) return std::nullopt;
    if (ctx.tampered_prefix.empty()) return first_outcome;
    return ctx.tampered_prefix.back();
  };
  return adv;
}

TupleDistribution untouched_subsequence_dist(const BudgetAdversary& adv,
                                             const JointDistribution& joint,
                                             int n, std::int64_t budget) {
  if (adv.strength != BudgetStrength::kWeak || !adv.deterministic)
    throw std::invalid_argument(
        "untouched_subsequence_dist needs a deterministic weak adversary");
  const int m = n - budget_of(adv.p, n);
  const TupleDistribution all =
      enumerate_product(ProductSource(joint.dist, n), budget);
  TupleDistribution out =
      enumerate_product(ProductSource(joint.dist, m), budget);
  std::fill(out.probs.begin(), out.probs.end(), 0.0);

  const int s = joint.dist.size();
  for (std::size_t i = 0; i < all.tuples.size(); ++i) {
    const Tuple& sample = all.tuples[i];
    const BudgetApplication app =
        apply_budget_adversary(adv, joint, sample, nullptr);
    std::vector<char> touched(n, 0);
    for (int pos : app.positions) touched[pos] = 1;
    std::int64_t key = 0;
    int taken = 0;
    for (int pos = 0; pos < n && taken < m; ++pos) {
      if (touched[pos]) continue;
      key = key * s + sample[pos];
      ++taken;
    }
    out.probs[key] += all.probs[i];
  }
  return out;
}

PoisonFn no_poison() {
  return [](const JointDistribution&, std::span<const int> sample, RngStream&) {
    return Tuple(sample.begin(), sample.end());
  };
}

PoisonFn poison_from_budget(BudgetAdversary adv) {
  return [adv = std::move(adv)](const JointDistribution& joint,
                                std::span<const int> sample, RngStream& rng) {
    return apply_budget_adversary(adv, joint, sample, &rng).tampered;
  };
}

PoisonFn poison_from_channel(std::shared_ptr<const TamperChannel> channel) {
  return [channel = std::move(channel)](const JointDistribution&,
                                        std::span<const int> sample,
                                        RngStream& rng) {
    return channel->attack_sequence(sample, rng).tampered;
  };
}

std::vector<PacRow> pac_experiment(const LearningProblem& problem,
                                   const Learner& learner,
                                   const PoisonFn& poison, int n, double eps,
                                   std::int64_t trials, RngStream& rng) {
  if (trials < 1) throw std::invalid_argument("pac_experiment needs trials >= 1");
  std::vector<PacRow> rows;
  for (const JointDistribution& joint : problem.dist_class) {
    PacRow row;
    row.dist_name = joint.name;
    row.n = n;
    row.eps = eps;
    row.trials = trials;
    std::int64_t over_eps = 0, bad = 0;
    double risk_sum = 0, risk_sum2 = 0;
    Tuple sample(n);
    for (std::int64_t t = 0; t < trials; ++t) {
      RngStream trial_rng = rng.split();
      for (int i = 0; i < n; ++i) sample[i] = joint.dist.sample(trial_rng);
      const Tuple tampered = poison(joint, sample, trial_rng);
      RngStream learner_rng = trial_rng.split();
      const TrainResult tr =
          learner.train(problem, joint, tampered,
                        learner.deterministic ? nullptr : &learner_rng);
      const double risk =
          risk_exact(problem, problem.hypotheses[tr.hypothesis_index], joint);
      if (risk > eps) ++over_eps;
      if (bad_event(problem, joint, tampered, eps)) ++bad;
      risk_sum += risk;
      risk_sum2 += risk * risk;
    }
    const double t = static_cast<double>(trials);
    row.delta_hat = over_eps / t;
    row.delta_se = std::sqrt(row.delta_hat * (1 - row.delta_hat) / t);
    row.bad_rate = bad / t;
    row.bad_se = std::sqrt(row.bad_rate * (1 - row.bad_rate) / t);
    row.mean_risk = risk_sum / t;
    row.risk_se = std::sqrt(
        std::max(0.0, risk_sum2 / t - row.mean_risk * row.mean_risk) / t);
    rows.push_back(std::move(row));
  }
  return rows;
}

ImpossibilityRow impossibility_experiment(const LearningProblem& fixture,
                                          double p, int n, std::int64_t trials,
                                          RngStream& rng) {
  if (fixture.dist_class.size() != 2)
    throw std::invalid_argument("impossibility fixture needs two distributions");
  const int k = static_cast<int>(fixture.instances.size());
  const BudgetAdversary adv = strong_adversary_asb(fixture, p);
  const Learner learner = consistent_learner();

  double risk_sum = 0, risk_sum2 = 0;
  Tuple sample(n);
  for (std::int64_t t = 0; t < trials; ++t) {
    RngStream trial_rng = rng.split();
    const int concept_idx = trial_rng.bernoulli(0.5) ? 1 : 0;
    const JointDistribution& joint = fixture.dist_class[concept_idx];
    for (int i = 0; i < n; ++i) sample[i] = joint.dist.sample(trial_rng);
    const BudgetApplication app =
        apply_budget_adversary(adv, joint, sample, &trial_rng);
    const TrainResult tr = learner.train(fixture, joint, app.tampered, nullptr);
    const double risk =
        risk_exact(fixture, fixture.hypotheses[tr.hypothesis_index], joint);
    risk_sum += risk;
    risk_sum2 += risk * risk;
  }
  ImpossibilityRow row;
  row.n = n;
  row.trials = trials;
  row.mean_risk = risk_sum / trials;
  row.risk_se = std::sqrt(
      std::max(0.0, risk_sum2 / trials - row.mean_risk * row.mean_risk) /
      trials);
  row.bound = (1.0 - std::exp(-static_cast<double>(n) / (3.0 * k))) / (2.0 * k);
  return row;
}

}  // namespace tamperbench
