#include "nwdlens/study.hpp"

#include <algorithm>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nwdlens/errors.hpp"
#include "nwdlens/textutil.hpp"

namespace nwdlens {

using nlohmann::json;

std::string to_string(TermRole role) {
  switch (role) {
    case TermRole::Key: return "key";
    case TermRole::Positive: return "positive";
    case TermRole::Negative: return "negative";
    case TermRole::Neutral: return "neutral";
    case TermRole::Control: return "control";
  }
  return "neutral";
}

std::optional<TermRole> term_role_from_string(std::string_view s) {
  if (s == "key") return TermRole::Key;
  if (s == "positive") return TermRole::Positive;
  if (s == "negative") return TermRole::Negative;
  if (s == "neutral") return TermRole::Neutral;
  if (s == "control") return TermRole::Control;
  return std::nullopt;
}

std::string format_date(const Date& d, const std::string& strftime_format) {
  std::tm tm{};
  tm.tm_year = d.year - 1900;
  tm.tm_mon = d.month - 1;
  tm.tm_mday = d.day;
  char buf[128];
  const std::size_t n = std::strftime(buf, sizeof(buf), strftime_format.c_str(), &tm);
  return std::string(buf, n);
}

YearWindow year_window(int year) {
  return YearWindow{year, Date{year, 1, 1}, Date{year, 12, 31}};
}

std::vector<std::string> validate_config(const StudyConfig& c) {
  std::vector<std::string> v;
  if (c.terms.empty()) v.push_back("terms: no terms configured");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < c.terms.size(); ++i) {
    const TermSpec& t = c.terms[i];
    const std::string where = "terms[" + std::to_string(i) + "]";
    if (t.text.empty()) v.push_back(where + ": text is empty");
    if (t.text.find('"') != std::string::npos) {
      v.push_back(where + " \"" + t.text + "\": text contains a double quote");
    }
    if (!t.text.empty() && !seen.insert(t.text).second) {
      v.push_back(where + " \"" + t.text + "\": duplicate term text");
    }
  }
  if (c.first_year > c.last_year) {
    v.push_back("year_range: first_year > last_year (" +
                std::to_string(c.first_year) + " > " + std::to_string(c.last_year) + ")");
  }
  if (c.cutoff_year < c.first_year - 1 || c.cutoff_year > c.last_year + 1) {
    v.push_back("cutoff_year " + std::to_string(c.cutoff_year) +
                " is neither within nor adjacent to year_range [" +
                std::to_string(c.first_year) + ", " + std::to_string(c.last_year) + "]");
  }
  const bool ref_present =
      std::any_of(c.terms.begin(), c.terms.end(),
                  [&](const TermSpec& t) { return t.text == c.normalization_ref; });
  if (!ref_present) {
    v.push_back("normalization_ref \"" + c.normalization_ref +
                "\" is not among terms, so its counts would never be fetched");
  }
  if (!(c.normalization_factor > 0.0)) {
    v.push_back("normalization_factor must be positive");
  }
  if (c.repetitions_single < 1) v.push_back("repetitions_single must be >= 1");
  if (c.repetitions_joint < 1) v.push_back("repetitions_joint must be >= 1");
  if (!(c.slope_threshold > 0.0)) v.push_back("slope_threshold must be positive");
  if (!(c.rel_error_max > 0.0)) v.push_back("rel_error_max must be positive");
  if (c.artifact_min_run < 2) v.push_back("artifact_min_run must be >= 2");
  if (c.artifact_count_floor < 0.0) {
    v.push_back("artifact_count_floor must be non-negative");
  }
  if (!(c.incl_excl_tolerance > 0.0)) {
    v.push_back("incl_excl_tolerance must be positive");
  }
  return v;
}

std::vector<std::pair<TermSpec, TermSpec>> study_pairs(const StudyConfig& c) {
  std::vector<std::pair<TermSpec, TermSpec>> pairs;
  std::vector<const TermSpec*> keys;
  for (const TermSpec& t : c.terms) {
    if (t.role == TermRole::Key) keys.push_back(&t);
  }
  for (const TermSpec* k : keys) {
    for (const TermSpec& t : c.terms) {
      if (t.role != TermRole::Key) pairs.emplace_back(*k, t);
    }
  }
  for (std::size_t i = 0; i < keys.size(); ++i) {
    for (std::size_t j = i + 1; j < keys.size(); ++j) {
      pairs.emplace_back(*keys[i], *keys[j]);
    }
  }
  return pairs;
}

std::optional<TermSpec> find_term(const StudyConfig& c, std::string_view text) {
  for (const TermSpec& t : c.terms) {
    if (t.text == text) return t;
  }
  return std::nullopt;
}

namespace {

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; }) == allowed.end()) {
      throw ConfigError("unknown key \"" + key + "\" in " + where);
    }
  }
}

int require_int(const json& j, const char* key) {
  if (!j.at(key).is_number_integer()) {
    throw ConfigError(std::string(key) + " must be an integer");
  }
  return j.at(key).get<int>();
}

double require_number(const json& j, const char* key) {
  if (!j.at(key).is_number()) {
    throw ConfigError(std::string(key) + " must be a number");
  }
  return j.at(key).get<double>();
}

TermSpec term_from_json(const json& j, std::size_t index) {
  const std::string where = "terms[" + std::to_string(index) + "]";
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  reject_unknown_keys(j, {"text", "role", "language_tag"}, where);
  if (!j.contains("text") || !j.at("text").is_string()) {
    throw ConfigError(where + ": \"text\" (string) is required");
  }
  if (!j.contains("role") || !j.at("role").is_string()) {
    throw ConfigError(where + ": \"role\" (string) is required");
  }
  TermSpec t;
  t.text = j.at("text").get<std::string>();
  const std::string role_str = j.at("role").get<std::string>();
  const auto role = term_role_from_string(role_str);
  if (!role) {
    throw ConfigError(where + ": unknown role \"" + role_str +
                      "\" (expected key|positive|negative|neutral|control)");
  }
  t.role = *role;
  if (j.contains("language_tag")) {
    if (!j.at("language_tag").is_string()) {
      throw ConfigError(where + ": \"language_tag\" must be a string");
    }
    t.language_tag = j.at("language_tag").get<std::string>();
  }
  return t;
}

}  // namespace

StudyConfig study_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  reject_unknown_keys(j,
                      {"terms", "year_range", "normalization_ref",
                       "normalization_factor", "repetitions_single",
                       "repetitions_joint", "cutoff_year", "slope_threshold",
                       "rel_error_max", "artifact_min_run",
                       "artifact_count_floor", "incl_excl_tolerance"},
                      "config");
  StudyConfig c;
  if (!j.contains("terms") || !j.at("terms").is_array()) {
    throw ConfigError("\"terms\" (array) is required");
  }
  c.terms.clear();
  for (std::size_t i = 0; i < j.at("terms").size(); ++i) {
    c.terms.push_back(term_from_json(j.at("terms")[i], i));
  }
  if (!j.contains("year_range") || !j.at("year_range").is_array() ||
      j.at("year_range").size() != 2 ||
      !j.at("year_range")[0].is_number_integer() ||
      !j.at("year_range")[1].is_number_integer()) {
    throw ConfigError("\"year_range\" must be an array of two integers [first_year, last_year]");
  }
  c.first_year = j.at("year_range")[0].get<int>();
  c.last_year = j.at("year_range")[1].get<int>();
  if (j.contains("normalization_ref")) {
    if (!j.at("normalization_ref").is_string()) {
      throw ConfigError("normalization_ref must be a string");
    }
    c.normalization_ref = j.at("normalization_ref").get<std::string>();
  }
  if (j.contains("normalization_factor")) c.normalization_factor = require_number(j, "normalization_factor");
  if (j.contains("repetitions_single")) c.repetitions_single = require_int(j, "repetitions_single");
  if (j.contains("repetitions_joint")) c.repetitions_joint = require_int(j, "repetitions_joint");
  if (j.contains("cutoff_year")) c.cutoff_year = require_int(j, "cutoff_year");
  if (j.contains("slope_threshold")) c.slope_threshold = require_number(j, "slope_threshold");
  if (j.contains("rel_error_max")) c.rel_error_max = require_number(j, "rel_error_max");
  if (j.contains("artifact_min_run")) c.artifact_min_run = require_int(j, "artifact_min_run");
  if (j.contains("artifact_count_floor")) c.artifact_count_floor = require_number(j, "artifact_count_floor");
  if (j.contains("incl_excl_tolerance")) c.incl_excl_tolerance = require_number(j, "incl_excl_tolerance");
  return c;
}

StudyConfig load_study_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return study_config_from_json(j);
}

json study_config_to_json(const StudyConfig& c) {
  json terms = json::array();
  for (const TermSpec& t : c.terms) {
    terms.push_back({{"text", t.text},
                     {"role", to_string(t.role)},
                     {"language_tag", t.language_tag}});
  }
  return json{{"terms", std::move(terms)},
              {"year_range", {c.first_year, c.last_year}},
              {"normalization_ref", c.normalization_ref},
              {"normalization_factor", c.normalization_factor},
              {"repetitions_single", c.repetitions_single},
              {"repetitions_joint", c.repetitions_joint},
              {"cutoff_year", c.cutoff_year},
              {"slope_threshold", c.slope_threshold},
              {"rel_error_max", c.rel_error_max},
              {"artifact_min_run", c.artifact_min_run},
              {"artifact_count_floor", c.artifact_count_floor},
              {"incl_excl_tolerance", c.incl_excl_tolerance}};
}

std::string study_config_digest(const StudyConfig& c) {
  return fnv1a64_hex(study_config_to_json(c).dump());
}

}  // namespace nwdlens
