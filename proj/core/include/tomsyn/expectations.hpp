#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tomsyn {

// One reference value the reproduction is compared against. Accuracies and
// gains are percentages, step statistics are in steps, counts are exact.
struct ExpectationRow {
  std::string key;
  double value = 0.0;
  double tolerance = 0.0;  // absolute, same unit as value
  std::string note;

  bool operator==(const ExpectationRow&) const = default;
};

struct Expectations {
  std::vector<ExpectationRow> rows;

  const ExpectationRow* find(std::string_view key) const;

  bool operator==(const Expectations&) const = default;
};

// The canonical reference table, compiled in. data/expectations.json holds
// the same table for external tooling; a test pins the two to each other.
Expectations built_in_expectations();

void save_expectations(const std::string& path, const Expectations& exp);
Expectations load_expectations(const std::string& path);

enum class ExpectationStatus { Pass, OutOfTolerance, Unknown };

// Unknown when the key has no row; otherwise Pass iff
// |measured - value| <= tolerance.
ExpectationStatus check_expectation(const Expectations& exp,
                                    std::string_view key, double measured);

// "<key>: expected <v> +/- <tol>, measured <m> -> pass|OUT-OF-TOLERANCE"
// (or "-> no reference row").
std::string expectation_line(const Expectations& exp, std::string_view key,
                             double measured);

}  // namespace tomsyn
