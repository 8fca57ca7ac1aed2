#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace nwdlens {

enum class TermRole { Key, Positive, Negative, Neutral, Control };

std::string to_string(TermRole role);
std::optional<TermRole> term_role_from_string(std::string_view s);

// One studied phrase. `text` is the exact phrase queried, quotation marks
// added by the query layer. `language_tag` is informational only.
struct TermSpec {
  std::string text;
  TermRole role = TermRole::Neutral;
  std::string language_tag;
};

struct Date {
  int year = 0;
  int month = 0;
  int day = 0;

  bool operator==(const Date&) const = default;
  auto operator<=>(const Date&) const = default;
};

// strftime formatting of a calendar date (time-of-day fields zero).
std::string format_date(const Date& d, const std::string& strftime_format);

// The calendar-year window [Jan 1, Dec 31] a query is restricted to. One
// year is the only supported granularity.
struct YearWindow {
  int year = 0;
  Date start;
  Date end;
};

YearWindow year_window(int year);

// The whole measurement protocol in one value: vocabulary plus every
// threshold the analysis applies. Defaults carry the published protocol
// choices; all overridable because they are pragmatic, not principled.
struct StudyConfig {
  std::vector<TermSpec> terms;
  int first_year = 1994;
  int last_year = 2013;
  std::string normalization_ref = "the";
  double normalization_factor = 100.0;
  int repetitions_single = 5;
  int repetitions_joint = 3;
  int cutoff_year = 2001;
  double slope_threshold = 0.005;
  double rel_error_max = 1.0 / 3.0;
  int artifact_min_run = 3;
  double artifact_count_floor = 100.0;
  double incl_excl_tolerance = 0.05;
};

// Every invariant violation, human-readable, deterministic order.
// Empty result == valid. Violations are data, not failures.
std::vector<std::string> validate_config(const StudyConfig& config);

// Term pairs the protocol measures jointly: each key with every non-key
// term, plus each unordered pair of keys. Order is deterministic and
// shared by fetch and analysis.
std::vector<std::pair<TermSpec, TermSpec>> study_pairs(const StudyConfig& config);

std::optional<TermSpec> find_term(const StudyConfig& config, std::string_view text);

// Strict JSON: snake_case StudyConfig fields only, unknown keys are an
// error (typos in threshold names must not pass silently). Throws
// ConfigError.
StudyConfig study_config_from_json(const nlohmann::json& j);
StudyConfig load_study_config(const std::filesystem::path& path);

// Canonical serialization; input of the config digest.
nlohmann::json study_config_to_json(const StudyConfig& config);
std::string study_config_digest(const StudyConfig& config);

}  // namespace nwdlens
