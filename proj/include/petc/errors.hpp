#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace petc {

// Invalid arguments, malformed pmfs/tables, mismatched lengths.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A computation would exceed its configured enumeration/evaluation budget.
class BudgetExceeded : public std::runtime_error {
public:
    BudgetExceeded(const std::string& what_for, std::uint64_t required, std::uint64_t budget)
        : std::runtime_error(what_for + ": requires " + std::to_string(required) +
                             " evaluations, budget is " + std::to_string(budget)),
          required_(required),
          budget_(budget) {}

    std::uint64_t required() const noexcept { return required_; }
    std::uint64_t budget() const noexcept { return budget_; }

private:
    std::uint64_t required_;
    std::uint64_t budget_;
};

// Experiment configuration rejected (schema, rate preconditions, ...).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace petc
