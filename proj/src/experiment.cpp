#include "tamperbench/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "tamperbench/analysis.hpp"
#include "tamperbench/attacks.hpp"
#include "tamperbench/learning.hpp"
#include "tamperbench/version.hpp"

namespace tamperbench {
namespace {

struct Row {
  std::string line;
  bool pass = true;
};

struct RowPlan {
  std::string header;
  std::vector<std::function<Row(RngStream)>> rows;
};

std::string join(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  return out;
}

std::string pass_str(bool b) { return b ? "true" : "false"; }

double get_num(const nlohmann::json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(key, "must be a number");
  return j.at(key).get<double>();
}

std::int64_t get_int(const nlohmann::json& j, const std::string& key,
                     std::int64_t fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer()) throw ConfigError(key, "must be an integer");
  return j.at(key).get<std::int64_t>();
}

std::vector<double> get_grid(const nlohmann::json& j, const std::string& key,
                             std::vector<double> fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_array()) throw ConfigError(key, "must be an array of numbers");
  return j.at(key).get<std::vector<double>>();
}

std::vector<std::string> get_strings(const nlohmann::json& j,
                                     const std::string& key,
                                     std::vector<std::string> fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_array()) throw ConfigError(key, "must be an array of strings");
  return j.at(key).get<std::vector<std::string>>();
}

DiscreteDistribution random_simplex(int support, RngStream& rng) {
  std::vector<std::string> ids;
  std::vector<double> w(support);
  double total = 0;
  for (int i = 0; i < support; ++i) {
    ids.push_back(std::to_string(i));
    w[i] = rng.next_unit() + 0.1;  // bounded away from zero
    total += w[i];
  }
  for (auto& x : w) x /= total;
  return DiscreteDistribution(std::move(ids), std::move(w));
}

// ---- verify_closed_form --------------------------------------------------

RowPlan plan_verify_closed_form(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  const int n_max = static_cast<int>(get_int(p, "n_max", 4));
  const int support_max = static_cast<int>(get_int(p, "support_max", 3));
  const auto p_grid = get_grid(p, "p_grid", {0.1, 0.5, 0.9});
  const int per_cell = static_cast<int>(get_int(p, "funcs_per_cell", 20));
  const auto kinds = get_strings(p, "kinds", {"ptam_ideal", "pres"});
  const int kcut_k = static_cast<int>(get_int(p, "k", 5));
  const std::int64_t budget = cfg.enum_budget;

  RowPlan plan;
  plan.header =
      "config_id,kind,p,n,mu,nu,bias_formula,bias_exact,bias_mc,mc_stderr,"
      "max_div,bound,pass";
  for (const std::string& kind_name : kinds) {
    const PolicyKind kind = policy_kind_from_string(kind_name);
    for (int n = 1; n <= n_max; ++n)
      for (int support = 1; support <= support_max; ++support)
        for (double pv : p_grid)
          for (int fi = 0; fi < per_cell; ++fi) {
            plan.rows.push_back([=](RngStream rng) -> Row {
              const DiscreteDistribution base =
                  fi == 0 ? DiscreteDistribution::uniform(support)
                          : random_simplex(support, rng);
              const BoundedFunction f = make_random_unit_function(n, support, rng);
              const Moments m = moments(f, base, n, budget);

              const TamperChannel channel(kind, pv, kcut_k, f, base, n,
                                          OracleSpec{}, budget);
              const TamperedDistribution induced =
                  induced_dist_exact(channel, budget);
              const TamperedDistribution closed =
                  kind == PolicyKind::kPres
                      ? closed_form_res(f, base, n, pv, budget)
                      : closed_form_tam(f, base, n, pv, budget);

              const double div = max_divergence(induced, closed);
              const double bias_exact = expectation(induced, f) - m.mu;
              const double bias_formula =
                  kind == PolicyKind::kPres ? bias_bound_res(pv, m.mu, m.nu)
                                            : bias_bound_tam(pv, m.mu, m.nu);

              double bound, max_abs = 0;
              bool ok;
              if (kind == PolicyKind::kPtamKcut) {
                // truncated policy: no closed form of its own; its joint law
                // must stay within the summed per-block divergence bound of
                // the untruncated one
                bound = n * kcut_divergence_bound(pv, kcut_k);
                ok = div <= bound + 1e-9;
              } else {
                for (std::size_t i = 0; i < induced.probs.size(); ++i)
                  max_abs = std::max(
                      max_abs, std::abs(induced.probs[i] - closed.probs[i]));
                bound = 1e-9;
                ok = max_abs <= bound && div <= bound &&
                     std::abs(bias_exact - bias_formula) <= bound;
              }
              ok = ok && std::abs(induced.total() - 1.0) <= 1e-9;
              char id[96];
              std::snprintf(id, sizeof(id), "vcf-%s-n%d-s%d-p%s-f%02d",
                            kind_name.c_str(), n, support,
                            csv_double(pv).c_str(), fi);
              return {join({id, kind_name, csv_double(pv), std::to_string(n),
                            csv_double(m.mu), csv_double(m.nu),
                            csv_double(bias_formula), csv_double(bias_exact), "",
                            "", csv_double(div), csv_double(bound),
                            pass_str(ok)}),
                      ok};
            });
          }
  }
  return plan;
}

// ---- bias_attack ----------------------------------------------------------

RowPlan plan_bias_attack(const ExperimentConfig& cfg) {
  const auto& prm = cfg.params;
  const auto kinds = get_strings(prm, "kinds", {"ptam_ideal", "pres"});
  // entries are either builtin specs ("xor", "dictator(0)", ...) or
  // explicit truth tables: {"table": {"values": [...]}}
  std::vector<nlohmann::json> functions{"dictator(0)"};
  if (prm.contains("functions")) {
    if (!prm.at("functions").is_array())
      throw ConfigError("functions", "must be an array");
    functions = prm.at("functions").get<std::vector<nlohmann::json>>();
  }
  const int n = static_cast<int>(get_int(prm, "n", 1));
  const auto p_grid = get_grid(prm, "p_grid", {0.5});
  const std::int64_t trials = get_int(prm, "trials", 100000);
  const std::string oracle_mode =
      prm.contains("oracle") ? prm.at("oracle").get<std::string>() : "exact";
  const double xi_prime = get_num(prm, "xi_prime", 0.02);
  const std::int64_t budget = cfg.enum_budget;
  if (oracle_mode != "exact" && oracle_mode != "poly")
    throw ConfigError("oracle", "must be 'exact' or 'poly'");

  RowPlan plan;
  plan.header =
      "config_id,kind,p,n,mu,nu,bias_formula,bias_exact,bias_mc,mc_stderr,"
      "max_div,bound,pass";
  for (const std::string& kind_name : kinds)
    for (const nlohmann::json& fn_spec : functions)
      for (double pv : p_grid) {
        if (!fn_spec.is_string() &&
            !(fn_spec.is_object() && fn_spec.contains("table")))
          throw ConfigError("functions",
                            "entries must be builtin names or {\"table\": ...}");
        const std::string fn = fn_spec.is_string()
                                   ? fn_spec.get<std::string>()
                                   : std::string("table");
        plan.rows.push_back([=](RngStream rng) -> Row {
          const DiscreteDistribution base = DiscreteDistribution::uniform_bit();
          const BoundedFunction f =
              fn_spec.is_string()
                  ? make_builtin(fn, n, 2)
                  : make_table_function_from_json(fn_spec.at("table"), n, 2);
          const Moments m = moments(f, base, n, budget);

          PolicyKind kind = policy_kind_from_string(kind_name);
          int k = 0;
          OracleSpec spec;
          if (oracle_mode == "poly") {
            if (kind == PolicyKind::kPtamIdeal) kind = PolicyKind::kPtamKcut;
            if (kind == PolicyKind::kPtamKcut) k = kcut_choice(pv, xi_prime);
            spec.mode = PartialAverageOracle::Mode::kMonteCarlo;
            spec.xi = xi_budget(kind, xi_prime, n, pv, k);
            spec.own_seed = rng.next_u64();
          }
          const TamperChannel channel(kind, pv, k, f, base, n, spec, budget);

          // exact mean of the ideal attack, for the fidelity comparison
          const TamperedDistribution closed =
              kind == PolicyKind::kPres ? closed_form_res(f, base, n, pv, budget)
                                        : closed_form_tam(f, base, n, pv, budget);
          const double exact_mean = expectation(closed, f);
          const double bias_exact = exact_mean - m.mu;
          const double bias_formula =
              kind == PolicyKind::kPres ? bias_bound_res(pv, m.mu, m.nu)
                                        : bias_bound_tam(pv, m.mu, m.nu);

          double sum = 0, sum2 = 0;
          for (std::int64_t t = 0; t < trials; ++t) {
            const AttackTranscript tr = channel.attack_sequence(rng);
            const double v = f(tr.tampered);
            sum += v;
            sum2 += v * v;
          }
          const double mean = sum / trials;
          const double se = std::sqrt(
              std::max(0.0, sum2 / trials - mean * mean) / trials);
          const double bias_mc = mean - m.mu;

          bool ok;
          double bound;
          if (oracle_mode == "exact") {
            bound = 4 * se;  // two-sided fidelity band vs the exact mean
            ok = std::abs(mean - exact_mean) <= bound;
          } else {
            bound = bias_formula - xi_prime;  // guaranteed floor
            ok = bias_mc >= bound;
          }
          char id[96];
          std::snprintf(id, sizeof(id), "ba-%s-%s-p%s-%s",
                        to_string(kind).c_str(), fn.c_str(),
                        csv_double(pv).c_str(), oracle_mode.c_str());
          return {join({id, to_string(kind), csv_double(pv), std::to_string(n),
                        csv_double(m.mu), csv_double(m.nu),
                        csv_double(bias_formula), csv_double(bias_exact),
                        csv_double(bias_mc), csv_double(se), "",
                        csv_double(bound), pass_str(ok)}),
                  ok};
        });
      }
  return plan;
}

// ---- targeted ---------------------------------------------------------------

RowPlan plan_targeted(const ExperimentConfig& cfg) {
  const auto& prm = cfg.params;
  const double fixture_p = get_num(prm, "fixture_p", 0.5);
  const double attack_p = get_num(prm, "p", 0.5);
  const int n = static_cast<int>(get_int(prm, "n", 3));
  const std::int64_t trials = get_int(prm, "trials", 100000);
  const double slack = get_num(prm, "slack", 0.01);
  const std::string kind_name =
      prm.contains("kind") ? prm.at("kind").get<std::string>() : "ptam_ideal";
  const std::int64_t budget = cfg.enum_budget;

  RowPlan plan;
  plan.header = "config_id,kind,p,n,mu,nu,err_attacked,stderr,floor,pass";
  plan.rows.push_back([=](RngStream rng) -> Row {
    const LearningProblem fixture = LearningProblem::impossibility(fixture_p);
    const JointDistribution& joint = fixture.dist_class[1];  // concept c1
    const Learner learner = consistent_learner();
    const int k = static_cast<int>(fixture.instances.size());
    const std::pair<int, int> test_xy{k - 1, 1};  // example (k, 1)

    const BoundedFunction f =
        targeted_attack_fn(fixture, learner, joint, test_xy, n);
    const double mu = avg_error_exact(fixture, joint, n, learner, test_xy, budget);
    const Moments m = moments(f, joint.dist, n, budget);

    const PolicyKind kind = policy_kind_from_string(kind_name);
    const TamperChannel channel(kind, attack_p, 0, f, joint.dist, n,
                                OracleSpec{}, budget);
    const McEstimate est = avg_error_mc(fixture, joint, n, learner, test_xy,
                                        trials, rng, &channel);
    const double floor_bound =
        mu + (kind == PolicyKind::kPres
                  ? bias_bound_res(attack_p, m.mu, m.nu)
                  : bias_bound_tam(attack_p, m.mu, m.nu)) -
        slack;
    const bool ok = est.mean >= floor_bound &&
                    std::abs(m.mu - mu) <= 1e-9;  // two routes to the base error
    char id[64];
    std::snprintf(id, sizeof(id), "targ-%s-p%s", kind_name.c_str(),
                  csv_double(attack_p).c_str());
    return {join({id, kind_name, csv_double(attack_p), std::to_string(n),
                  csv_double(mu), csv_double(m.nu), csv_double(est.mean),
                  csv_double(est.stderror), csv_double(floor_bound),
                  pass_str(ok)}),
            ok};
  });
  return plan;
}

// ---- pac -------------------------------------------------------------------

RowPlan plan_pac(const ExperimentConfig& cfg) {
  const auto& prm = cfg.params;
  const double p = get_num(prm, "p", 0.5);
  const double fixture_p = get_num(prm, "fixture_p", 0.5);
  const int n = static_cast<int>(get_int(prm, "n", 8));
  const double eps = get_num(prm, "eps", 0.1);
  const std::int64_t trials = get_int(prm, "trials", 10000);
  const int kcut_k = static_cast<int>(get_int(prm, "k", 5));
  // heads-count slack for treating a tampering attacker as a budget one
  const double q = get_num(prm, "q", 0.1 * (1 - p));
  if (!(q > 0 && q < 1 - p)) throw ConfigError("q", "must lie in (0, 1-p)");
  const auto adversaries = get_strings(
      prm, "adversaries",
      {"none", "weak_prefix_flood", "weak_fixed", "weak_adaptive_echo",
       "ptam_ideal", "ptam_kcut", "pres"});
  const std::int64_t budget = cfg.enum_budget;

  RowPlan plan;
  plan.header =
      "config_id,adversary,dist,n,eps,trials,bad_rate,bad_se,baseline_n,"
      "baseline_bad_rate,baseline_bad_se,q,theory_n,theory_margin,delta_hat,"
      "mean_risk,pass";
  const int baseline_n = static_cast<int>(std::floor((1 - p) * n + 1e-9));

  for (const std::string& adv_name : adversaries)
    for (int dist_idx = 0; dist_idx < 2; ++dist_idx) {
      plan.rows.push_back([=](RngStream rng) -> Row {
        const LearningProblem fixture = LearningProblem::impossibility(fixture_p);
        LearningProblem one = fixture;
        one.dist_class = {fixture.dist_class[dist_idx]};
        const JointDistribution& joint = one.dist_class[0];
        const Learner learner = consistent_learner();

        PoisonFn poison;
        bool tampering = false;
        if (adv_name == "none") {
          poison = no_poison();
        } else if (adv_name == "weak_prefix_flood") {
          poison = poison_from_budget(weak_prefix_flood(p, 0));
        } else if (adv_name == "weak_fixed") {
          std::vector<int> positions;
          for (int i = 0; i < n; i += 2) positions.push_back(i);
          poison = poison_from_budget(weak_fixed_positions(p, positions, 0));
        } else if (adv_name == "weak_adaptive_echo") {
          poison = poison_from_budget(weak_adaptive_echo(p, 0));
        } else {
          const PolicyKind kind = policy_kind_from_string(adv_name);
          tampering = true;
          // the attack drives the Bad-event indicator itself
          BoundedFunction bad_fn(
              n, RangeTag::kUnit,
              [one, joint, eps](std::span<const int> s) {
                return bad_event(one, joint, s, eps) ? 1.0 : 0.0;
              },
              "bad_event");
          auto channel = std::make_shared<const TamperChannel>(
              kind, p, kcut_k, bad_fn, joint.dist, n, OracleSpec{}, budget);
          poison = poison_from_channel(channel);
        }

        RngStream attacked_rng = rng.fork(1);
        RngStream baseline_rng = rng.fork(2);
        const PacRow attacked = pac_experiment(one, learner, poison, n, eps,
                                               trials, attacked_rng)[0];
        const PacRow baseline = pac_experiment(one, learner, no_poison(),
                                               baseline_n, eps, trials,
                                               baseline_rng)[0];
        const double margin =
            3 * std::sqrt(attacked.bad_se * attacked.bad_se +
                          baseline.bad_se * baseline.bad_se);
        const bool ok = attacked.bad_rate <= baseline.bad_rate + margin;
        // tampering attackers double as weak (p+q)-budget ones, except on
        // the heads-count tail
        std::string theory_n, theory_margin;
        if (tampering) {
          theory_n = std::to_string(
              static_cast<int>(std::floor((1 - p - q) * n + 1e-9)));
          theory_margin = csv_double(std::exp(-2.0 * n * q * q));
        }
        char id[96];
        std::snprintf(id, sizeof(id), "pac-%s-%s-n%d", adv_name.c_str(),
                      joint.name.c_str(), n);
        return {join({id, adv_name, joint.name, std::to_string(n),
                      csv_double(eps), std::to_string(trials),
                      csv_double(attacked.bad_rate), csv_double(attacked.bad_se),
                      std::to_string(baseline_n), csv_double(baseline.bad_rate),
                      csv_double(baseline.bad_se), csv_double(q), theory_n,
                      theory_margin, csv_double(attacked.delta_hat),
                      csv_double(attacked.mean_risk), pass_str(ok)}),
                ok};
      });
    }
  return plan;
}

// ---- budget_impossibility ----------------------------------------------------

RowPlan plan_budget_impossibility(const ExperimentConfig& cfg) {
  const auto& prm = cfg.params;
  const double p = get_num(prm, "p", 0.5);
  const auto n_grid = get_grid(prm, "n_grid", {8, 32, 128, 512, 2000});
  const std::int64_t trials = get_int(prm, "trials", 10000);

  RowPlan plan;
  plan.header = "config_id,p,n,trials,mean_risk,risk_se,bound,pass";
  for (double nv : n_grid) {
    const int n = static_cast<int>(nv);
    plan.rows.push_back([=](RngStream rng) -> Row {
      const LearningProblem fixture = LearningProblem::impossibility(p);
      const ImpossibilityRow row =
          impossibility_experiment(fixture, p, n, trials, rng);
      const bool ok = row.mean_risk >= row.bound - 3 * row.risk_se;
      char id[64];
      std::snprintf(id, sizeof(id), "sb-n%d", n);
      return {join({id, csv_double(p), std::to_string(n),
                    std::to_string(trials), csv_double(row.mean_risk),
                    csv_double(row.risk_se), csv_double(row.bound),
                    pass_str(ok)}),
              ok};
    });
  }
  return plan;
}

// ---- bound_tables -------------------------------------------------------------

std::vector<double> step_grid(double lo, double hi, double step) {
  std::vector<double> g;
  for (int i = 0;; ++i) {
    const double v = lo + i * step;
    if (v > hi + 1e-12) break;
    g.push_back(std::min(v, hi));
  }
  return g;
}

RowPlan plan_bound_tables(const ExperimentConfig& cfg) {
  const auto& prm = cfg.params;
  const auto p_grid = get_grid(prm, "p_grid",
                               {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9});
  const double mu_step = get_num(prm, "mu_step", 0.01);
  const std::string nu_mode =
      prm.contains("nu_mode") ? prm.at("nu_mode").get<std::string>() : "boolean";
  const double nu_fixed = get_num(prm, "nu_fixed", 0.25);
  if (nu_mode != "boolean" && nu_mode != "fixed")
    throw ConfigError("nu_mode", "must be 'boolean' or 'fixed'");
  const auto mu_grid = step_grid(0.0, 1.0, mu_step);

  RowPlan plan;
  plan.header = "p,mu,nu,bias_tam,bias_res,gamma_tam,gamma_res,pass";
  for (double pv : p_grid) {
    for (std::size_t i = 0; i < mu_grid.size(); ++i) {
      const double mu = mu_grid[i];
      const double prev_mu = i == 0 ? -1 : mu_grid[i - 1];
      plan.rows.push_back([=](RngStream) -> Row {
        const double nu = nu_mode == "boolean" ? mu * (1 - mu) : nu_fixed;
        const double gt = gamma_tam(mu, pv);
        const double gr = gamma_res(mu, pv);
        // strict monotonicity check against the previous grid point
        bool ok = true;
        if (prev_mu >= 0)
          ok = gt > gamma_tam(prev_mu, pv) && gr > gamma_res(prev_mu, pv);
        return {join({csv_double(pv), csv_double(mu), csv_double(nu),
                      csv_double(bias_bound_tam(pv, mu, nu)),
                      csv_double(bias_bound_res(pv, mu, nu)), csv_double(gt),
                      csv_double(gr), pass_str(ok)}),
                ok};
      });
    }
  }
  return plan;
}

RowPlan make_plan(const ExperimentConfig& cfg) {
  if (cfg.kind == "verify_closed_form") return plan_verify_closed_form(cfg);
  if (cfg.kind == "bias_attack") return plan_bias_attack(cfg);
  if (cfg.kind == "targeted") return plan_targeted(cfg);
  if (cfg.kind == "pac") return plan_pac(cfg);
  if (cfg.kind == "budget_impossibility") return plan_budget_impossibility(cfg);
  if (cfg.kind == "bound_tables") return plan_bound_tables(cfg);
  throw ConfigError("kind", "unknown experiment kind '" + cfg.kind + "'");
}

const std::set<std::string> kGlobalKeys = {"kind", "seed", "out", "jobs",
                                           "enum_budget"};

const std::set<std::string>& known_keys(const std::string& kind) {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"verify_closed_form",
       {"n_max", "support_max", "p_grid", "funcs_per_cell", "kinds", "k"}},
      {"bias_attack",
       {"kinds", "functions", "n", "p_grid", "trials", "oracle", "xi_prime"}},
      {"targeted", {"fixture_p", "p", "n", "trials", "slack", "kind"}},
      {"pac", {"p", "fixture_p", "n", "eps", "trials", "k", "q", "adversaries"}},
      {"budget_impossibility", {"p", "n_grid", "trials"}},
      {"bound_tables", {"p_grid", "mu_step", "nu_mode", "nu_fixed"}},
  };
  auto it = keys.find(kind);
  if (it == keys.end()) throw ConfigError("kind", "unknown experiment kind '" + kind + "'");
  return it->second;
}

}  // namespace

std::string csv_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

ExperimentConfig ExperimentConfig::from_json(
    const nlohmann::json& j, std::optional<std::uint64_t> seed_override) {
  if (!j.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  ExperimentConfig cfg;
  if (!j.contains("kind")) throw ConfigError("kind", "missing");
  if (!j.at("kind").is_string()) throw ConfigError("kind", "must be a string");
  cfg.kind = j.at("kind").get<std::string>();

  const std::set<std::string>& kind_keys = known_keys(cfg.kind);
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!kGlobalKeys.count(it.key()) && !kind_keys.count(it.key()))
      throw ConfigError(it.key(), "unknown field");

  if (seed_override) {
    cfg.seed = *seed_override;
  } else if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer())
      throw ConfigError("seed", "must be an integer");
    cfg.seed = j.at("seed").get<std::uint64_t>();
  } else {
    throw ConfigError("seed", "missing (set it in the config, --seed, or TAMPERBENCH_SEED)");
  }
  if (j.contains("out")) {
    if (!j.at("out").is_string()) throw ConfigError("out", "must be a string");
    cfg.out_dir = j.at("out").get<std::string>();
  }
  cfg.jobs = static_cast<int>(get_int(j, "jobs", 1));
  if (cfg.jobs < 1) throw ConfigError("jobs", "must be >= 1");
  cfg.enum_budget = get_int(j, "enum_budget", kDefaultEnumBudget);
  if (cfg.enum_budget < 1) throw ConfigError("enum_budget", "must be >= 1");

  cfg.params = nlohmann::json::object();
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!kGlobalKeys.count(it.key())) cfg.params[it.key()] = it.value();
  return cfg;
}

ExperimentConfig ExperimentConfig::defaults(const std::string& kind,
                                            std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.kind = kind;
  known_keys(kind);  // validates the kind name
  cfg.seed = seed;
  cfg.params = nlohmann::json::object();
  return cfg;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j = params;
  j["kind"] = kind;
  j["seed"] = seed;
  j["out"] = out_dir;
  j["jobs"] = jobs;
  j["enum_budget"] = enum_budget;
  return j;
}

std::string emit_bound_tables(const std::vector<double>& p_grid,
                              const std::vector<double>& mu_grid,
                              const std::string& nu_mode, double nu_fixed) {
  std::ostringstream out;
  out << "p,mu,nu,bias_tam,bias_res,gamma_tam,gamma_res\n";
  for (double p : p_grid)
    for (double mu : mu_grid) {
      const double nu = nu_mode == "boolean" ? mu * (1 - mu) : nu_fixed;
      out << csv_double(p) << ',' << csv_double(mu) << ',' << csv_double(nu)
          << ',' << csv_double(bias_bound_tam(p, mu, nu)) << ','
          << csv_double(bias_bound_res(p, mu, nu)) << ','
          << csv_double(gamma_tam(mu, p)) << ',' << csv_double(gamma_res(mu, p))
          << '\n';
    }
  return out.str();
}

ExperimentReport run(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const RowPlan plan = make_plan(config);
  const RngStream master(config.seed);

  std::filesystem::create_directories(config.out_dir);
  const std::string csv_path = config.out_dir + "/" + config.kind + ".csv";
  std::ofstream out(csv_path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + csv_path);
  out << plan.header << '\n';

  // Each row derives its stream from (seed, row index), so parallel results
  // are byte-identical to the sequential ones. Sequential runs stream rows
  // out as they finish. A row that exceeds the enumeration budget fails by
  // itself without aborting the rest of the grid.
  auto compute_row = [&](std::size_t i) -> Row {
    try {
      return plan.rows[i](master.fork(i));
    } catch (const EnumerationBudgetError& e) {
      return {"row" + std::to_string(i) + ",budget-exceeded,required=" +
                  std::to_string(e.required()) +
                  ",budget=" + std::to_string(e.budget()),
              false};
    }
  };
  std::vector<Row> rows(plan.rows.size());
  if (config.jobs <= 1) {
    for (std::size_t i = 0; i < plan.rows.size(); ++i) {
      rows[i] = compute_row(i);
      out << rows[i].line << '\n';
      out.flush();
    }
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= plan.rows.size()) return;
        rows[i] = compute_row(i);
      }
    };
    std::vector<std::thread> pool;
    const int threads =
        std::min<int>(config.jobs, static_cast<int>(plan.rows.size()));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    for (const Row& r : rows) out << r.line << '\n';
  }
  out.close();

  ExperimentReport report;
  report.csv_path = csv_path;
  report.rows = static_cast<std::int64_t>(rows.size());
  report.passed = static_cast<std::int64_t>(
      std::count_if(rows.begin(), rows.end(), [](const Row& r) { return r.pass; }));
  report.all_pass = report.passed == report.rows;
  report.wall_clock_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                start)
          .count();

  const std::string summary_path =
      config.out_dir + "/" + config.kind + "_summary.json";
  {
    nlohmann::json summary{{"config", config.to_json()},
                           {"version", kVersion},
                           {"rows", report.rows},
                           {"passed", report.passed},
                           {"all_pass", report.all_pass},
                           {"wall_clock_ms", report.wall_clock_ms},
                           {"csv", csv_path}};
    std::ofstream out(summary_path, std::ios::trunc);
    out << summary.dump(2) << '\n';
  }
  report.summary_path = summary_path;
  return report;
}

}  // namespace tamperbench
