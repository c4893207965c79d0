#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tamperbench {

// Default cap on the number of tuples an exact enumeration may touch.
inline constexpr std::int64_t kDefaultEnumBudget = 10'000'000;

// Thrown when an exact computation would enumerate more tuples than allowed.
class EnumerationBudgetError : public std::runtime_error {
 public:
  EnumerationBudgetError(std::int64_t required, std::int64_t budget)
      : std::runtime_error("enumeration requires " + std::to_string(required) +
                           " tuples, budget is " + std::to_string(budget)),
        required_(required),
        budget_(budget) {}

  std::int64_t required() const { return required_; }
  std::int64_t budget() const { return budget_; }

 private:
  std::int64_t required_;
  std::int64_t budget_;
};

// Thrown on malformed experiment configs; message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : std::runtime_error("config field '" + field + "': " + what),
        field_(field) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace tamperbench
