#include "nwdlens/analytics.hpp"

#include <algorithm>
#include <cmath>

#include "nwdlens/query.hpp"
#include "nwdlens/textutil.hpp"

namespace nwdlens {

namespace {

std::string single_canonical(const std::string& text) {
  return render_query(Query::phrase(text));
}

std::string joint_canonical(const std::string& u, const std::string& v) {
  return render_query(Query::and_of(Query::phrase(u), Query::phrase(v)));
}

std::string or_canonical(const std::string& u, const std::string& v) {
  return render_query(Query::or_of(Query::phrase(u), Query::phrase(v)));
}

// Joint and OR samples may be stored under either term order.
std::optional<CountStats> stats_either_order(
    const MeasurementStore& store, int year, const std::string& a, const std::string& b,
    std::string (*make)(const std::string&, const std::string&)) {
  if (auto st = store.aggregate(make(a, b), year)) return st;
  return store.aggregate(make(b, a), year);
}

}  // namespace

std::string to_string(TrendClass c) {
  switch (c) {
    case TrendClass::Approaching: return "approaching";
    case TrendClass::Receding: return "receding";
    case TrendClass::Constant: return "constant";
  }
  return "constant";
}

std::string to_string(InclusionExclusionResult::Status s) {
  switch (s) {
    case InclusionExclusionResult::Status::Consistent: return "consistent";
    case InclusionExclusionResult::Status::Inconsistent: return "inconsistent";
    case InclusionExclusionResult::Status::Unavailable: return "unavailable";
  }
  return "unavailable";
}

std::optional<TrendFit> ols_fit(const std::vector<int>& years,
                                const std::vector<double>& values) {
  const std::size_t n = years.size();
  if (n < 2 || values.size() != n) return std::nullopt;

  TrendFit fit;
  fit.n_points = static_cast<int>(n);
  fit.first_year = *std::min_element(years.begin(), years.end());
  fit.last_year = *std::max_element(years.begin(), years.end());

  // A horizontal line is an exact special case: slope 0, and R^2 by
  // definition gives no qualitative indication, so it stays undefined.
  const bool all_equal =
      std::all_of(values.begin(), values.end(), [&](double v) { return v == values[0]; });
  if (all_equal) {
    fit.slope = 0.0;
    fit.slope_stderr = 0.0;
    fit.intercept = values[0];
    fit.r2 = std::nullopt;
    return fit;
  }

  double xm = 0.0, ym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xm += years[i];
    ym += values[i];
  }
  xm /= static_cast<double>(n);
  ym /= static_cast<double>(n);

  double sxx = 0.0, sxy = 0.0, sstot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = years[i] - xm;
    const double dy = values[i] - ym;
    sxx += dx * dx;
    sxy += dx * dy;
    sstot += dy * dy;
  }
  if (sxx == 0.0) return std::nullopt;  // all the same year; not a series

  fit.slope = sxy / sxx;
  fit.intercept = ym - fit.slope * xm;
  double ssres = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = values[i] - (fit.intercept + fit.slope * years[i]);
    ssres += e * e;
  }
  ssres = std::max(ssres, 0.0);
  fit.slope_stderr =
      n > 2 ? std::sqrt(ssres / (static_cast<double>(n - 2) * sxx)) : 0.0;
  fit.r2 = 1.0 - ssres / sstot;
  return fit;
}

NwdSeries build_nwd_series(const MeasurementStore& store, const TermSpec& u,
                           const TermSpec& v, const StudyConfig& config) {
  NwdSeries series;
  series.u = u;
  series.v = v;

  std::set<int> artifact_years;
  for (const std::string& key :
       {single_canonical(u.text), single_canonical(v.text),
        joint_canonical(u.text, v.text), joint_canonical(v.text, u.text),
        single_canonical(config.normalization_ref)}) {
    const auto flagged = detect_count_artifacts_for_query(store, key, config);
    artifact_years.insert(flagged.begin(), flagged.end());
  }

  for (int year = config.first_year; year <= config.last_year; ++year) {
    const auto su = store.aggregate(single_canonical(u.text), year);
    const auto sv = store.aggregate(single_canonical(v.text), year);
    const auto sj = stats_either_order(store, year, u.text, v.text, joint_canonical);
    const auto sref = store.aggregate(single_canonical(config.normalization_ref), year);
    if (!su || !sv || !sj || !sref) continue;  // gap

    const auto norm = normalization_constant(*sref, config.normalization_factor);
    const PairCounts pc = make_pair_counts(
        year, *su, *sv, *sj, norm.value_or(Normalization{0.0, 0.0}),
        sref->single_sample);
    NwdPoint pt = compute_nwd(pc);
    if (year < config.cutoff_year) pt.flags.set(NwdFlag::PreCutoff);
    if (artifact_years.count(year) != 0) pt.flags.set(NwdFlag::ArtifactYear);
    series.points.push_back(std::move(pt));
  }
  return series;
}

std::optional<TrendFit> fit_trend(const NwdSeries& series, const StudyConfig& config) {
  (void)config;  // the exclusion flags are already on the points
  std::vector<int> years;
  std::vector<double> values;
  for (const NwdPoint& pt : series.points) {
    if (!pt.value) continue;
    if (pt.flags.test(NwdFlag::PreCutoff) || pt.flags.test(NwdFlag::ArtifactYear)) continue;
    years.push_back(pt.year);
    values.push_back(*pt.value);
  }
  return ols_fit(years, values);
}

TrendClassification classify_trend(const TrendFit& fit, const StudyConfig& config) {
  TrendClassification out;
  const double threshold = config.slope_threshold;
  const double slope = fit.slope;

  if (std::abs(slope) < threshold) {
    out.cls = TrendClass::Constant;
    out.reasons.push_back("|slope| " + format_sig(std::abs(slope), 6) +
                          " below threshold " + format_sig(threshold, 6));
    return out;
  }
  // |slope| >= threshold > 0, so the relative error is well defined.
  const double rel_error = fit.slope_stderr / std::abs(slope);
  if (rel_error > config.rel_error_max) {
    out.cls = TrendClass::Constant;
    out.reasons.push_back("|slope| " + format_sig(std::abs(slope), 6) +
                          " meets threshold " + format_sig(threshold, 6));
    out.reasons.push_back("relative error " + format_sig(rel_error, 6) +
                          " exceeds maximum " + format_sig(config.rel_error_max, 6));
    return out;
  }
  out.cls = slope < 0.0 ? TrendClass::Approaching : TrendClass::Receding;
  out.reasons.push_back("slope " + format_sig(slope, 6) + " beyond " +
                        (slope < 0.0 ? "-" : "+") + format_sig(threshold, 6));
  out.reasons.push_back("relative error " + format_sig(rel_error, 6) +
                        " within maximum " + format_sig(config.rel_error_max, 6));
  return out;
}

GrowthSeries growth_series(const MeasurementStore& store, const TermSpec& term,
                           const StudyConfig& config) {
  GrowthSeries out;
  out.term = term.text;
  const std::string key = single_canonical(term.text);
  static const double ln10 = std::log(10.0);

  std::vector<int> fit_years;
  std::vector<double> fit_values;
  for (int year = config.first_year; year <= config.last_year; ++year) {
    GrowthPoint pt;
    pt.year = year;
    const auto st = store.aggregate(key, year);
    if (st && st->mean > 0.0) {
      pt.log10_count = std::log10(st->mean);
      pt.log10_stderr = st->stderr_ / (st->mean * ln10);
      if (year >= config.cutoff_year) {
        fit_years.push_back(year);
        fit_values.push_back(*pt.log10_count);
      }
    }
    out.points.push_back(pt);
  }
  out.fit = ols_fit(fit_years, fit_values);
  return out;
}

std::set<int> detect_count_artifacts_for_query(const MeasurementStore& store,
                                               const std::string& query_canonical,
                                               const StudyConfig& config) {
  std::set<int> flagged;
  const std::vector<int> years = store.years_with_samples(query_canonical);
  std::vector<std::pair<int, double>> means;
  means.reserve(years.size());
  for (int year : years) {
    if (auto st = store.aggregate(query_canonical, year)) {
      means.emplace_back(year, st->mean);
    }
  }

  std::size_t run_start = 0;
  const auto close_run = [&](std::size_t run_end) {  // [run_start, run_end)
    const std::size_t len = run_end - run_start;
    if (len >= static_cast<std::size_t>(config.artifact_min_run) &&
        means[run_start].second > config.artifact_count_floor) {
      for (std::size_t i = run_start; i < run_end; ++i) flagged.insert(means[i].first);
    }
  };
  for (std::size_t i = 1; i <= means.size(); ++i) {
    const bool continues = i < means.size() &&
                           means[i].first == means[i - 1].first + 1 &&
                           means[i].second == means[i - 1].second;
    if (!continues) {
      if (i > 0 && !means.empty()) close_run(i);
      run_start = i;
    }
  }
  return flagged;
}

std::set<int> detect_count_artifacts(const MeasurementStore& store, const TermSpec& term,
                                     const StudyConfig& config) {
  return detect_count_artifacts_for_query(store, single_canonical(term.text), config);
}

InclusionExclusionResult inclusion_exclusion_check(const MeasurementStore& store,
                                                   const TermSpec& u, const TermSpec& v,
                                                   int year, const StudyConfig& config) {
  InclusionExclusionResult out;
  const auto su = store.aggregate(single_canonical(u.text), year);
  const auto sv = store.aggregate(single_canonical(v.text), year);
  const auto sand = stats_either_order(store, year, u.text, v.text, joint_canonical);
  const auto sor = stats_either_order(store, year, u.text, v.text, or_canonical);
  if (!su || !sv || !sand || !sor) return out;  // Unavailable

  const double residual = su->mean + sv->mean - sand->mean - sor->mean;
  out.residual = residual;
  if (sor->mean != 0.0) {
    out.relative_residual = residual / sor->mean;
  } else if (residual == 0.0) {
    out.relative_residual = 0.0;
  }  // else: zero OR count with a nonzero residual; relative form undefined
  const bool consistent =
      out.relative_residual && std::abs(*out.relative_residual) <= config.incl_excl_tolerance;
  out.status = consistent ? InclusionExclusionResult::Status::Consistent
                          : InclusionExclusionResult::Status::Inconsistent;
  return out;
}

namespace {

NwdSeries average_series_across_keys(const std::vector<const NwdSeries*>& contributors,
                                     const TermSpec& control, const StudyConfig& config) {
  NwdSeries avg;
  avg.u = TermSpec{"average", TermRole::Key, ""};
  avg.v = control;
  for (int year = config.first_year; year <= config.last_year; ++year) {
    double sum = 0.0, var_sum = 0.0;
    int n = 0;
    NwdFlags flags;
    for (const NwdSeries* s : contributors) {
      const auto it = std::find_if(s->points.begin(), s->points.end(),
                                   [&](const NwdPoint& p) { return p.year == year; });
      if (it == s->points.end() || !it->value) continue;
      sum += *it->value;
      var_sum += it->stderr_ * it->stderr_;
      ++n;
      if (it->flags.test(NwdFlag::ArtifactYear)) flags.set(NwdFlag::ArtifactYear);
      if (it->flags.test(NwdFlag::SingleSample)) flags.set(NwdFlag::SingleSample);
      if (it->flags.test(NwdFlag::JointExceedsMin)) flags.set(NwdFlag::JointExceedsMin);
    }
    if (n == 0) continue;
    NwdPoint pt;
    pt.year = year;
    pt.value = sum / n;
    pt.stderr_ = std::sqrt(var_sum) / n;
    pt.flags = flags;
    if (*pt.value < 0.0 || *pt.value > 1.0) pt.flags.set(NwdFlag::OutOfUnitRange);
    if (year < config.cutoff_year) pt.flags.set(NwdFlag::PreCutoff);
    avg.points.push_back(pt);
  }
  return avg;
}

}  // namespace

ControlDriftReport control_drift_report(const MeasurementStore& store,
                                        const StudyConfig& config) {
  ControlDriftReport report;
  std::vector<const TermSpec*> keys;
  std::vector<const TermSpec*> controls;
  for (const TermSpec& t : config.terms) {
    if (t.role == TermRole::Key) keys.push_back(&t);
    if (t.role == TermRole::Control || t.role == TermRole::Neutral) controls.push_back(&t);
  }

  bool any_classified = false;
  bool all_constant = true;
  const auto add_entry = [&](std::string key_label, const TermSpec& control,
                             NwdSeries series, std::vector<ControlFitEntry>& entries,
                             std::vector<NwdSeries>& series_out) {
    ControlFitEntry entry;
    entry.key = std::move(key_label);
    entry.control = control.text;
    entry.fit = fit_trend(series, config);
    if (entry.fit) {
      entry.classification = classify_trend(*entry.fit, config);
      any_classified = true;
      if (entry.classification->cls != TrendClass::Constant) all_constant = false;
    }
    entries.push_back(std::move(entry));
    series_out.push_back(std::move(series));
  };

  for (const TermSpec* control : controls) {
    std::vector<const NwdSeries*> contributors;
    const std::size_t first_index = report.pair_series.size();
    for (const TermSpec* key : keys) {
      add_entry(key->text, *control, build_nwd_series(store, *key, *control, config),
                report.per_pair, report.pair_series);
    }
    for (std::size_t i = first_index; i < report.pair_series.size(); ++i) {
      contributors.push_back(&report.pair_series[i]);
    }
    if (!contributors.empty()) {
      add_entry("average", *control,
                average_series_across_keys(contributors, *control, config),
                report.averaged, report.averaged_series);
    }
  }

  if (any_classified) report.all_constant = all_constant;
  return report;
}

}  // namespace nwdlens
