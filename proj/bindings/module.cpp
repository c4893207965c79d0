#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

#include "tamperbench/analysis.hpp"
#include "tamperbench/attacks.hpp"
#include "tamperbench/bounds.hpp"
#include "tamperbench/experiment.hpp"
#include "tamperbench/learning.hpp"
#include "tamperbench/version.hpp"

namespace py = pybind11;
using namespace tamperbench;

namespace {

nlohmann::json to_json(const py::object& obj) {
  const py::object dumps = py::module_::import("json").attr("dumps");
  return nlohmann::json::parse(dumps(obj).cast<std::string>());
}

py::object from_json(const nlohmann::json& j) {
  const py::object loads = py::module_::import("json").attr("loads");
  return loads(py::str(j.dump()));
}

}  // namespace

PYBIND11_MODULE(_tamperbench, m) {
  m.doc() = "Mistake-free data-poisoning laboratory: biasing attacks on product "
            "distributions, their exact induced laws, and PAC-learning "
            "experiments under bounded tampering.";
  m.attr("__version__") = kVersion;

  py::class_<RngStream>(m, "RngStream")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("next_u64", &RngStream::next_u64)
      .def("next_unit", &RngStream::next_unit)
      .def("fork", &RngStream::fork, py::arg("key"))
      .def("split", &RngStream::split)
      .def_property_readonly("seed", &RngStream::seed)
      .def_property_readonly("counter", &RngStream::counter);

  py::class_<DiscreteDistribution>(m, "DiscreteDistribution")
      .def(py::init<std::vector<std::string>, std::vector<double>>(),
           py::arg("outcomes"), py::arg("probs"))
      .def_static("uniform", &DiscreteDistribution::uniform, py::arg("m"))
      .def_static("uniform_bit", &DiscreteDistribution::uniform_bit)
      .def_static("from_dict",
                  [](const py::dict& d) {
                    return DiscreteDistribution::from_json(to_json(d));
                  })
      .def("to_dict",
           [](const DiscreteDistribution& d) { return from_json(d.to_json()); })
      .def("sample", &DiscreteDistribution::sample, py::arg("rng"))
      .def("index_of", &DiscreteDistribution::index_of, py::arg("id"))
      .def_property_readonly("outcomes", &DiscreteDistribution::outcome_ids)
      .def_property_readonly("probs", &DiscreteDistribution::probs)
      .def("__len__", &DiscreteDistribution::size);

  py::class_<BoundedFunction>(m, "BoundedFunction")
      .def("__call__",
           [](const BoundedFunction& f, const std::vector<int>& t) {
             return f(t);
           })
      .def_property_readonly("arity", &BoundedFunction::arity)
      .def_property_readonly("name", &BoundedFunction::name);

  py::enum_<RangeTag>(m, "RangeTag")
      .value("unit", RangeTag::kUnit)
      .value("signed", RangeTag::kSigned);

  m.def("make_builtin", &make_builtin, py::arg("spec"), py::arg("arity"),
        py::arg("support_size") = 2);
  m.def("make_table_function", &make_table_function, py::arg("values"),
        py::arg("arity"), py::arg("support_size"),
        py::arg("range") = RangeTag::kUnit);
  m.def("make_random_unit_function", &make_random_unit_function,
        py::arg("arity"), py::arg("support_size"), py::arg("rng"));

  py::class_<Moments>(m, "Moments")
      .def_readonly("mu", &Moments::mu)
      .def_readonly("nu", &Moments::nu);
  m.def("moments", &moments, py::arg("f"), py::arg("base"), py::arg("n"),
        py::arg("budget") = kDefaultEnumBudget);

  m.def("hoeffding_tail", &hoeffding_tail, py::arg("n"), py::arg("xi"));
  m.def("chernoff_tail", &chernoff_tail, py::arg("n"), py::arg("lam"),
        py::arg("gamma"));

  m.def("mc_sample_size", &mc_sample_size, py::arg("xi"));
  m.def("kcut_choice", &kcut_choice, py::arg("p"), py::arg("xi_prime"));
  m.def(
      "xi_budget",
      [](const std::string& kind, double xi_prime, int n, double p, int k) {
        return xi_budget(policy_kind_from_string(kind), xi_prime, n, p, k);
      },
      py::arg("kind"), py::arg("xi_prime"), py::arg("n"), py::arg("p"),
      py::arg("k") = 0);
  m.def("rejection_prob_tam", &rejection_prob_tam, py::arg("fhat_cur"),
        py::arg("fhat_prev"), py::arg("p"));
  m.def("rejection_prob_res", &rejection_prob_res, py::arg("fhat_cur"),
        py::arg("fhat_prev"), py::arg("p"));

  py::class_<AttackTranscript>(m, "AttackTranscript")
      .def_readonly("original", &AttackTranscript::original)
      .def_readonly("tampered", &AttackTranscript::tampered)
      .def_property_readonly("coin",
                             [](const AttackTranscript& t) {
                               std::vector<bool> c(t.coin.begin(), t.coin.end());
                               return c;
                             })
      .def_readonly("rejections", &AttackTranscript::rejections)
      .def_readonly("oracle_queries", &AttackTranscript::oracle_queries);

  py::class_<TamperChannel>(m, "TamperChannel")
      .def(py::init([](const std::string& kind, double p, int k,
                       const BoundedFunction& f,
                       const DiscreteDistribution& base, int n,
                       const std::string& oracle_mode, double xi,
                       std::optional<std::int64_t> ell, std::int64_t budget) {
             OracleSpec spec;
             if (oracle_mode == "mc") {
               spec.mode = PartialAverageOracle::Mode::kMonteCarlo;
               spec.xi = xi;
               spec.ell = ell;
             } else if (oracle_mode != "exact") {
               throw std::invalid_argument("oracle_mode must be 'exact' or 'mc'");
             }
             return TamperChannel(policy_kind_from_string(kind), p, k, f, base,
                                  n, spec, budget);
           }),
           py::arg("kind"), py::arg("p"), py::arg("k"), py::arg("f"),
           py::arg("base"), py::arg("n"), py::arg("oracle_mode") = "exact",
           py::arg("xi") = 0.0, py::arg("ell") = std::nullopt,
           py::arg("budget") = kDefaultEnumBudget)
      .def_property_readonly("p", &TamperChannel::p)
      .def_property_readonly("n", &TamperChannel::n)
      .def_property_readonly("k", &TamperChannel::k)
      .def("attack_sequence",
           [](const TamperChannel& ch, RngStream& rng) {
             return ch.attack_sequence(rng);
           },
           py::arg("rng"))
      .def("attack_given",
           [](const TamperChannel& ch, const std::vector<int>& original,
              RngStream& rng) { return ch.attack_sequence(original, rng); },
           py::arg("original"), py::arg("rng"))
      .def("simulate_mean",
           [](const TamperChannel& ch, const BoundedFunction& f,
              std::int64_t trials, RngStream& rng) {
             double sum = 0, sum2 = 0;
             for (std::int64_t t = 0; t < trials; ++t) {
               const AttackTranscript tr = ch.attack_sequence(rng);
               const double v = f(tr.tampered);
               sum += v;
               sum2 += v * v;
             }
             const double mean = sum / trials;
             const double se = std::sqrt(
                 std::max(0.0, sum2 / trials - mean * mean) / trials);
             return py::make_tuple(mean, se);
           },
           py::arg("f"), py::arg("trials"), py::arg("rng"));

  py::class_<TupleDistribution>(m, "TupleDistribution")
      .def_readonly("tuples", &TupleDistribution::tuples)
      .def_readonly("probs", &TupleDistribution::probs)
      .def("total", &TupleDistribution::total);

  m.def("enumerate_product",
        [](const DiscreteDistribution& base, int n, std::int64_t budget) {
          return enumerate_product(ProductSource(base, n), budget);
        },
        py::arg("base"), py::arg("n"), py::arg("budget") = kDefaultEnumBudget);
  m.def("closed_form_tam", &closed_form_tam, py::arg("f"), py::arg("base"),
        py::arg("n"), py::arg("p"), py::arg("budget") = kDefaultEnumBudget);
  m.def("closed_form_res", &closed_form_res, py::arg("f"), py::arg("base"),
        py::arg("n"), py::arg("p"), py::arg("budget") = kDefaultEnumBudget);
  m.def("induced_dist_exact", &induced_dist_exact, py::arg("channel"),
        py::arg("budget") = kDefaultEnumBudget);
  m.def("expectation", &expectation, py::arg("dist"), py::arg("f"));

  m.def("bias_bound_tam", &bias_bound_tam, py::arg("p"), py::arg("mu"),
        py::arg("nu"));
  m.def("bias_bound_res", &bias_bound_res, py::arg("p"), py::arg("mu"),
        py::arg("nu"));
  m.def("gamma_tam", &gamma_tam, py::arg("delta"), py::arg("p"));
  m.def("gamma_res", &gamma_res, py::arg("delta"), py::arg("p"));
  m.def("expectation_gap_bound", &expectation_gap_bound, py::arg("xi"),
        py::arg("n"));
  m.def("kcut_divergence_bound", &kcut_divergence_bound, py::arg("p"),
        py::arg("k"));
  m.def("max_divergence",
        py::overload_cast<const DiscreteDistribution&,
                          const DiscreteDistribution&>(&max_divergence),
        py::arg("p"), py::arg("q"));
  m.def("variation_dist",
        [](const DiscreteDistribution& base, double p, int k,
           const std::vector<double>& rho) {
          return variation_dist(VariationSpec{base, p, k, rho});
        },
        py::arg("base"), py::arg("p"), py::arg("k"), py::arg("rho"));

  py::class_<JointDistribution>(m, "JointDistribution")
      .def_readonly("name", &JointDistribution::name)
      .def_readonly("pairs", &JointDistribution::pairs)
      .def_property_readonly(
          "dist", [](const JointDistribution& j) { return j.dist; });

  py::class_<LearningProblem>(m, "LearningProblem")
      .def_static("impossibility", &LearningProblem::impossibility,
                  py::arg("p"))
      .def_static("from_dict",
                  [](const py::dict& d) {
                    return LearningProblem::from_json(to_json(d));
                  })
      .def("to_dict",
           [](const LearningProblem& p) { return from_json(p.to_json()); })
      .def_readonly("instances", &LearningProblem::instances)
      .def_readonly("labels", &LearningProblem::labels)
      .def_property_readonly(
          "distributions",
          [](const LearningProblem& p) { return p.dist_class; })
      .def("realizable", &LearningProblem::realizable)
      .def("risk",
           [](const LearningProblem& p, int hypothesis, int dist) {
             return risk_exact(p, p.hypotheses.at(hypothesis),
                               p.dist_class.at(dist));
           },
           py::arg("hypothesis"), py::arg("dist"))
      .def("avg_error_exact",
           [](const LearningProblem& p, int dist, int n, int test_x,
              int test_y, std::int64_t budget) {
             return avg_error_exact(p, p.dist_class.at(dist), n,
                                    consistent_learner(), {test_x, test_y},
                                    budget);
           },
           py::arg("dist"), py::arg("n"), py::arg("test_x"), py::arg("test_y"),
           py::arg("budget") = kDefaultEnumBudget)
      .def("targeted_attack_fn",
           [](const LearningProblem& p, int dist, int test_x, int test_y,
              int n) {
             return targeted_attack_fn(p, consistent_learner(),
                                       p.dist_class.at(dist), {test_x, test_y},
                                       n);
           },
           py::arg("dist"), py::arg("test_x"), py::arg("test_y"), py::arg("n"));

  m.def("impossibility_experiment",
        [](const LearningProblem& fixture, double p, int n,
           std::int64_t trials, RngStream& rng) {
          const ImpossibilityRow row =
              impossibility_experiment(fixture, p, n, trials, rng);
          return py::dict(py::arg("n") = row.n, py::arg("trials") = row.trials,
                          py::arg("mean_risk") = row.mean_risk,
                          py::arg("risk_se") = row.risk_se,
                          py::arg("bound") = row.bound);
        },
        py::arg("fixture"), py::arg("p"), py::arg("n"), py::arg("trials"),
        py::arg("rng"));

  m.def("run_experiment",
        [](const py::dict& config,
           std::optional<std::uint64_t> seed) -> py::object {
          const ExperimentConfig cfg =
              ExperimentConfig::from_json(to_json(config), seed);
          const ExperimentReport report = run(cfg);
          return py::dict(py::arg("csv") = report.csv_path,
                          py::arg("summary") = report.summary_path,
                          py::arg("rows") = report.rows,
                          py::arg("passed") = report.passed,
                          py::arg("all_pass") = report.all_pass);
        },
        py::arg("config"), py::arg("seed") = std::nullopt);
}
