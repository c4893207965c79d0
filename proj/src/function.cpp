#include "tamperbench/function.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>
#include <utility>

namespace tamperbench {
namespace {

constexpr double kRangeSlack = 1e-12;

int parse_int_arg(const std::string& spec, std::size_t open) {
  std::size_t close = spec.find(')', open);
  if (close == std::string::npos)
    throw std::invalid_argument("malformed function spec: " + spec);
  return std::stoi(spec.substr(open + 1, close - open - 1));
}

double parse_double_arg(const std::string& spec, std::size_t open) {
  std::size_t close = spec.find(')', open);
  if (close == std::string::npos)
    throw std::invalid_argument("malformed function spec: " + spec);
  return std::stod(spec.substr(open + 1, close - open - 1));
}

void require_binary(const std::string& name, int support_size) {
  if (support_size != 2)
    throw std::invalid_argument("function '" + name +
                                "' needs a binary support, got size " +
                                std::to_string(support_size));
}

int popcount(std::span<const int> t) {
  int ones = 0;
  for (int v : t) ones += v;
  return ones;
}

}  // namespace

BoundedFunction::BoundedFunction(int arity, RangeTag range, Evaluator eval,
                                 std::string name)
    : arity_(arity), range_(range), eval_(std::move(eval)),
      name_(std::move(name)) {
  if (arity_ < 1) throw std::invalid_argument("function arity must be >= 1");
  if (!eval_) throw std::invalid_argument("function needs an evaluator");
}

double BoundedFunction::operator()(std::span<const int> tuple) const {
  if (static_cast<int>(tuple.size()) != arity_)
    throw std::invalid_argument("tuple length " + std::to_string(tuple.size()) +
                                " does not match arity " +
                                std::to_string(arity_));
  const double v = eval_(tuple);
  const double lo = range_ == RangeTag::kUnit ? 0.0 : -1.0;
  if (v < lo - kRangeSlack || v > 1.0 + kRangeSlack)
    throw std::domain_error("function '" + name_ + "' returned " +
                            std::to_string(v) + " outside its declared range");
  return v;
}

BoundedFunction to_signed(const BoundedFunction& f) {
  if (f.range() != RangeTag::kUnit)
    throw std::invalid_argument("to_signed expects a unit-range function");
  return BoundedFunction(
      f.arity(), RangeTag::kSigned,
      [f](std::span<const int> t) { return 2.0 * f(t) - 1.0; },
      f.name().empty() ? "signed" : "signed(" + f.name() + ")");
}

Moments moments(const BoundedFunction& f, const DiscreteDistribution& base,
                int n, std::int64_t budget) {
  const TupleDistribution all = enumerate_product(ProductSource(base, n), budget);
  double mu = 0, second = 0;
  for (std::size_t i = 0; i < all.tuples.size(); ++i) {
    const double v = f(all.tuples[i]);
    mu += all.probs[i] * v;
    second += all.probs[i] * v * v;
  }
  return {mu, std::max(0.0, second - mu * mu)};
}

McMoments moments_mc(const BoundedFunction& f, const DiscreteDistribution& base,
                     int n, std::int64_t samples, RngStream& rng) {
  if (samples < 1) throw std::invalid_argument("moments_mc needs samples >= 1");
  const ProductSource src(base, n);
  double sum = 0, sum2 = 0;
  for (std::int64_t i = 0; i < samples; ++i) {
    const double v = f(sample_tuple(src, rng));
    sum += v;
    sum2 += v * v;
  }
  const double mu = sum / samples;
  const double var = std::max(0.0, sum2 / samples - mu * mu);
  return {mu, var, std::sqrt(var / samples), samples};
}

BoundedFunction make_builtin(const std::string& spec, int arity,
                             int support_size) {
  if (spec == "xor") {
    require_binary(spec, support_size);
    return BoundedFunction(arity, RangeTag::kUnit,
                           [](std::span<const int> t) {
                             return static_cast<double>(popcount(t) % 2);
                           },
                           "xor");
  }
  if (spec == "and") {
    require_binary(spec, support_size);
    return BoundedFunction(arity, RangeTag::kUnit,
                           [arity](std::span<const int> t) {
                             return popcount(t) == arity ? 1.0 : 0.0;
                           },
                           "and");
  }
  if (spec == "or") {
    require_binary(spec, support_size);
    return BoundedFunction(arity, RangeTag::kUnit,
                           [](std::span<const int> t) {
                             return popcount(t) > 0 ? 1.0 : 0.0;
                           },
                           "or");
  }
  if (spec == "majority") {
    require_binary(spec, support_size);
    return BoundedFunction(arity, RangeTag::kUnit,
                           [arity](std::span<const int> t) {
                             return 2 * popcount(t) > arity ? 1.0 : 0.0;
                           },
                           "majority");
  }
  if (spec.rfind("dictator(", 0) == 0) {
    require_binary("dictator", support_size);
    const int i = parse_int_arg(spec, 8);
    if (i < 0 || i >= arity)
      throw std::invalid_argument("dictator index out of range: " + spec);
    return BoundedFunction(arity, RangeTag::kUnit,
                           [i](std::span<const int> t) {
                             return static_cast<double>(t[i]);
                           },
                           spec);
  }
  if (spec.rfind("constant(", 0) == 0) {
    const double c = parse_double_arg(spec, 8);
    if (c < 0 || c > 1)
      throw std::invalid_argument("constant value outside [0,1]: " + spec);
    return BoundedFunction(arity, RangeTag::kUnit,
                           [c](std::span<const int>) { return c; }, spec);
  }
  if (spec.rfind("threshold(", 0) == 0) {
    require_binary("threshold", support_size);
    const int t0 = parse_int_arg(spec, 9);
    return BoundedFunction(arity, RangeTag::kUnit,
                           [t0](std::span<const int> t) {
                             return popcount(t) >= t0 ? 1.0 : 0.0;
                           },
                           spec);
  }
  throw std::invalid_argument("unknown function spec: " + spec);
}

BoundedFunction make_table_function(std::vector<double> values, int arity,
                                    int support_size, RangeTag range) {
  std::int64_t expect = 1;
  for (int i = 0; i < arity; ++i) expect *= support_size;
  if (static_cast<std::int64_t>(values.size()) != expect)
    throw std::invalid_argument("truth table needs " + std::to_string(expect) +
                                " entries, got " +
                                std::to_string(values.size()));
  auto table = std::make_shared<std::vector<double>>(std::move(values));
  return BoundedFunction(
      arity, range,
      [table, support_size](std::span<const int> t) {
        std::int64_t pos = 0;
        for (int v : t) pos = pos * support_size + v;
        return (*table)[pos];
      },
      "table");
}

BoundedFunction make_table_function_from_json(const nlohmann::json& j,
                                              int arity, int support_size) {
  if (!j.contains("values")) throw ConfigError("values", "missing");
  return make_table_function(j.at("values").get<std::vector<double>>(), arity,
                             support_size);
}

BoundedFunction make_random_unit_function(int arity, int support_size,
                                          RngStream& rng) {
  std::int64_t count = 1;
  for (int i = 0; i < arity; ++i) count *= support_size;
  std::vector<double> values(count);
  for (auto& v : values) v = rng.next_unit();
  return make_table_function(std::move(values), arity, support_size);
}

}  // namespace tamperbench
