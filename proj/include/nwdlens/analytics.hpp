#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nwdlens/nwd.hpp"
#include "nwdlens/store.hpp"
#include "nwdlens/study.hpp"

namespace nwdlens {

// Per-pair NWD time series; years strictly increasing, missing data.
// leaves gaps (no point at all for that year).
struct NwdSeries {
  TermSpec u, v;
  std::vector<NwdPoint> points;
};

struct TrendFit {
  double slope = 0.0;         // per year
  double slope_stderr = 0.0;  // OLS standard error from residuals
  double intercept = 0.0;
  std::optional<double> r2;   // undefined iff the values have no variance
  int n_points = 0;
  int first_year = 0, last_year = 0;
};

enum class TrendClass { Approaching, Receding, Constant };

std::string to_string(TrendClass c);

struct TrendClassification {
  TrendClass cls = TrendClass::Constant;
  std::vector<std::string> reasons;  // the threshold comparisons that fired
};

// OLS of value on year. The fit core, also used as-is by growth fits.
std::optional<TrendFit> ols_fit(const std::vector<int>& years,
                                const std::vector<double>& values);

// One NwdPoint per year with complete store data. Years before the
// cutoff carry PreCutoff; years flagged by artifact detection on any of
// the four input count series carry ArtifactYear.
NwdSeries build_nwd_series(const MeasurementStore& store, const TermSpec& u,
                           const TermSpec& v, const StudyConfig& config);

// OLS over usable points only: defined value, neither PreCutoff nor
// ArtifactYear. nullopt below two usable points.
std::optional<TrendFit> fit_trend(const NwdSeries& series, const StudyConfig& config);

// The published decision rule: a trend is real only when |slope| clears
// slope_threshold *and* slope_stderr/|slope| stays within rel_error_max;
// everything else is constant. Negative slope = approaching.
TrendClassification classify_trend(const TrendFit& fit, const StudyConfig& config);

struct GrowthPoint {
  int year = 0;
  std::optional<double> log10_count;  // gap when no data or count 0
  double log10_stderr = 0.0;          // stderr/(mean ln 10) when defined
};

struct GrowthSeries {
  std::string term;
  std::vector<GrowthPoint> points;
  std::optional<TrendFit> fit;  // over years >= cutoff_year
};

GrowthSeries growth_series(const MeasurementStore& store, const TermSpec& term,
                           const StudyConfig& config);

// Years inside maximal runs of >= artifact_min_run consecutive years
// whose mean counts are exactly equal and above artifact_count_floor.
// With repeated engine estimates, exact equality across years is
// precisely the anomaly this hunts.
std::set<int> detect_count_artifacts(const MeasurementStore& store, const TermSpec& term,
                                     const StudyConfig& config);
std::set<int> detect_count_artifacts_for_query(const MeasurementStore& store,
                                               const std::string& query_canonical,
                                               const StudyConfig& config);

struct InclusionExclusionResult {
  enum class Status { Consistent, Inconsistent, Unavailable };
  Status status = Status::Unavailable;
  std::optional<double> residual;           // n(u)+n(v)-n(u AND v)-n(u OR v)
  std::optional<double> relative_residual;  // residual / n(u OR v)
};

std::string to_string(InclusionExclusionResult::Status s);

// Unavailable whenever a needed count (notably the OR query) was never
// measured.
InclusionExclusionResult inclusion_exclusion_check(const MeasurementStore& store,
                                                   const TermSpec& u, const TermSpec& v,
                                                   int year, const StudyConfig& config);

struct ControlFitEntry {
  std::string key;      // key-term text, or "average" for the pooled curve
  std::string control;  // control/neutral-term text
  std::optional<TrendFit> fit;
  std::optional<TrendClassification> classification;
};

struct ControlDriftReport {
  std::vector<ControlFitEntry> per_pair;
  std::vector<ControlFitEntry> averaged;  // pointwise mean across key terms
  std::vector<NwdSeries> pair_series;     // backing data, for figure output
  std::vector<NwdSeries> averaged_series;
  // true/false when at least one fit classified; nullopt when none did.
  std::optional<bool> all_constant;
};

// Drift of NWD(key, control) for every control- or neutral-role term:
// constant controls vouch for the method, anything else flags engine or
// protocol artifacts.
ControlDriftReport control_drift_report(const MeasurementStore& store,
                                        const StudyConfig& config);

}  // namespace nwdlens
