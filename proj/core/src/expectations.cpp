#include "tomsyn/expectations.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "tomsyn/error.hpp"
#include "tomsyn/text.hpp"

namespace tomsyn {

namespace {
constexpr std::string_view kFormat = "tomsyn-expectations v1";
}

const ExpectationRow* Expectations::find(std::string_view key) const {
  for (const ExpectationRow& row : rows) {
    if (row.key == key) return &row;
  }
  return nullptr;
}

Expectations built_in_expectations() {
  // Step statistics carry the +/-50% tolerance their reference text allows;
  // accuracy tolerances are broad because the exact percentages depend on
  // the map generator and loss-weight tuning.
  return Expectations{{
      {"dataset.steps_to_target.mean", 3.0, 1.5,
       "mean planner steps from start to target"},
      {"dataset.steps_to_target.variance", 11.0, 5.5,
       "variance of planner steps to target"},
      {"dataset.steps_hidden.mean", 3.0, 1.5,
       "mean steps before the target first became visible"},
      {"dataset.steps_hidden.variance", 12.0, 6.0,
       "variance of steps before first sighting"},
      {"dataset.steps_after_visible.mean", 3.0, 1.5,
       "mean steps from first sighting to arrival"},
      {"dataset.steps_after_visible.variance", 10.0, 5.0,
       "variance of steps from first sighting to arrival"},
      {"dataset.behaviours.60maps", 1800.0, 0.0,
       "episodes generated for a 60-map training set"},
      {"dataset.behaviours.300maps", 9000.0, 0.0,
       "episodes generated for a 300-map training set"},
      {"learning_curve.beliefs.300.accuracy", 72.43, 10.0,
       "4-way accuracy, Beliefs, 300 training maps"},
      {"learning_curve.beliefs.25.accuracy", 69.45, 10.0,
       "4-way accuracy, Beliefs, 25 training maps"},
      {"learning_curve.nobeliefs.25.accuracy", 67.57, 10.0,
       "4-way accuracy, NoBeliefs, 25 training maps"},
      {"learning_curve.gain.25", 1.89, 5.0,
       "Beliefs minus NoBeliefs accuracy at 25 training maps"},
      {"learning_curve.beliefs.5.accuracy", 59.26, 15.0,
       "4-way accuracy, Beliefs, 5 training maps (high-variance point)"},
      {"hidden_target.beliefs.15.accuracy", 58.17, 12.0,
       "hidden-target 4-way accuracy, Beliefs, 15 training maps"},
      {"hidden_target.nobeliefs.15.accuracy", 51.11, 12.0,
       "hidden-target 4-way accuracy, NoBeliefs, 15 training maps"},
      {"hidden_target.gain.15", 7.06, 6.0,
       "hidden-target Beliefs minus NoBeliefs accuracy at 15 maps"},
      {"ignored3.best.accuracy", 99.00, 9.0,
       "best 4-way accuracy with three ignored distractors"},
      {"aligned3.visible.nobeliefs.25.accuracy", 11.56, 15.0,
       "4-way accuracy, NoBeliefs, Aligned(3), target visible, 25 maps"},
      {"aligned.visible.beliefs.120.accuracy", 56.67, 15.0,
       "4-way accuracy, Beliefs, aligned distractors, visible, 120 maps"},
      {"aligned.visible.nobeliefs.120.accuracy", 43.83, 15.0,
       "4-way accuracy, NoBeliefs, aligned distractors, visible, 120 maps"},
      {"aligned.visible.gain.120", 12.83, 10.0,
       "aligned-distractor visible-target gain at 120 maps"},
      {"aligned.hidden.beliefs.120.accuracy", 46.28, 15.0,
       "4-way accuracy, Beliefs, aligned distractors, hidden, 120 maps"},
      {"aligned.hidden.nobeliefs.120.accuracy", 35.06, 15.0,
       "4-way accuracy, NoBeliefs, aligned distractors, hidden, 120 maps"},
      {"aligned.hidden.gain.120", 11.22, 10.0,
       "aligned-distractor hidden-target gain at 120 maps"},
  }};
}

void save_expectations(const std::string& path, const Expectations& exp) {
  nlohmann::json doc;
  doc["format"] = kFormat;
  doc["units"] =
      "accuracies and gains in percent; step statistics in steps; "
      "behaviour counts exact";
  nlohmann::json rows = nlohmann::json::array();
  for (const ExpectationRow& row : exp.rows) {
    rows.push_back({{"key", row.key},
                    {"value", row.value},
                    {"tolerance", row.tolerance},
                    {"note", row.note}});
  }
  doc["rows"] = std::move(rows);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open for writing: " + path);
  f << doc.dump(2) << '\n';
  if (!f.good()) throw InputError("write failed: " + path);
}

Expectations load_expectations(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open: " + path);
  nlohmann::json doc;
  try {
    f >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(path + ": invalid JSON: " + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kFormat) {
      throw IntegrityError(path + ": not an expectations file");
    }
    Expectations exp;
    for (const nlohmann::json& row : doc.at("rows")) {
      exp.rows.push_back({row.at("key").get<std::string>(),
                          row.at("value").get<double>(),
                          row.at("tolerance").get<double>(),
                          row.at("note").get<std::string>()});
    }
    return exp;
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(path + ": malformed expectations: " + e.what());
  }
}

ExpectationStatus check_expectation(const Expectations& exp,
                                    std::string_view key, double measured) {
  const ExpectationRow* row = exp.find(key);
  if (row == nullptr) return ExpectationStatus::Unknown;
  return std::fabs(measured - row->value) <= row->tolerance
             ? ExpectationStatus::Pass
             : ExpectationStatus::OutOfTolerance;
}

std::string expectation_line(const Expectations& exp, std::string_view key,
                             double measured) {
  std::ostringstream out;
  out << key << ": measured " << fmt_float(measured);
  const ExpectationRow* row = exp.find(key);
  if (row == nullptr) {
    out << " -> no reference row";
    return out.str();
  }
  out << ", expected " << fmt_float(row->value) << " +/- "
      << fmt_float(row->tolerance) << " -> "
      << (std::fabs(measured - row->value) <= row->tolerance
              ? "pass"
              : "OUT-OF-TOLERANCE");
  return out.str();
}

}  // namespace tomsyn
