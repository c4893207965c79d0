#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "tamperbench/distribution.hpp"
#include "tamperbench/rng.hpp"

#include <json.hpp>

namespace tamperbench {

enum class RangeTag { kUnit, kSigned };

// A real-valued function of n-tuples over some support, with a declared
// range ([0,1] or [-1,+1]). Evaluations are range-checked; out-of-range
// values from a user-supplied evaluator raise std::domain_error.
class BoundedFunction {
 public:
  using Evaluator = std::function<double(std::span<const int>)>;

  BoundedFunction(int arity, RangeTag range, Evaluator eval,
                  std::string name = "");

  double operator()(std::span<const int> tuple) const;

  int arity() const { return arity_; }
  RangeTag range() const { return range_; }
  const std::string& name() const { return name_; }

 private:
  int arity_;
  RangeTag range_;
  Evaluator eval_;
  std::string name_;
};

// f' = 2 f - 1, mapping unit range onto signed range.
BoundedFunction to_signed(const BoundedFunction& f);

struct Moments {
  double mu;  // expectation
  double nu;  // variance
};

// Moment maps under the affine range change f' = 2 f - 1 and back.
inline Moments to_signed_moments(Moments m) { return {2 * m.mu - 1, 4 * m.nu}; }
inline double unit_mean_from_signed(double signed_mean) {
  return (signed_mean + 1) / 2;
}
inline double signed_mean_from_unit(double unit_mean) {
  return 2 * unit_mean - 1;
}

// Exact mu = E[f(S)], nu = Var[f(S)] over S = D^n by enumeration.
Moments moments(const BoundedFunction& f, const DiscreteDistribution& base,
                int n, std::int64_t budget = kDefaultEnumBudget);

struct McMoments {
  double mu;
  double nu;
  double mu_stderr;
  std::int64_t samples;
};

// Sample-based moment estimates with the standard error of the mean.
McMoments moments_mc(const BoundedFunction& f, const DiscreteDistribution& base,
                     int n, std::int64_t samples, RngStream& rng);

// Built-in unit-range function library, selectable by name:
//   xor | and | or | majority | dictator(i) | constant(c) | threshold(t)
// All but constant require a binary support. Block indices are 0-based.
BoundedFunction make_builtin(const std::string& spec, int arity,
                             int support_size);

// Explicit truth table: values in lexicographic tuple order (id order),
// one entry per tuple of Supp(D)^n.
BoundedFunction make_table_function(std::vector<double> values, int arity,
                                    int support_size,
                                    RangeTag range = RangeTag::kUnit);

// Truth table parsed from JSON: {"values": [ ... ]}.
BoundedFunction make_table_function_from_json(const nlohmann::json& j,
                                              int arity, int support_size);

// Random unit-range function: each truth-table entry uniform in [0,1].
BoundedFunction make_random_unit_function(int arity, int support_size,
                                          RngStream& rng);

}  // namespace tamperbench
