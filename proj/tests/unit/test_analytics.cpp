#include <doctest.h>

#include <cmath>

#include "nwdlens/analytics.hpp"
#include "nwdlens/rng.hpp"
#include "testutil.hpp"

using namespace nwdlens;
using testutil::sample;

namespace {

StudyConfig base_config() {
  StudyConfig c;
  c.terms = {TermSpec{"huichol", TermRole::Key, ""},
             TermSpec{"peyote", TermRole::Positive, ""},
             TermSpec{"table", TermRole::Control, ""},
             TermSpec{"the", TermRole::Neutral, ""}};
  c.first_year = 2001;
  c.last_year = 2013;
  c.cutoff_year = 2001;
  return c;
}

NwdSeries series_from(const std::vector<std::pair<int, double>>& values) {
  NwdSeries s;
  s.u = TermSpec{"u", TermRole::Key, ""};
  s.v = TermSpec{"v", TermRole::Positive, ""};
  for (const auto& [year, value] : values) {
    NwdPoint pt;
    pt.year = year;
    pt.value = value;
    s.points.push_back(pt);
  }
  return s;
}

// Independent OLS route for cross-checking fit_trend: raw-moment
// formulas instead of centered two-pass sums.
struct RefOls {
  double slope, slope_stderr, intercept, r2;
};

RefOls reference_ols(const std::vector<int>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += static_cast<double>(xs[i]) * xs[i];
    sxy += xs[i] * ys[i];
    syy += ys[i] * ys[i];
  }
  const double denom = n * sxx - sx * sx;
  RefOls out{};
  out.slope = (n * sxy - sx * sy) / denom;
  out.intercept = (sy - out.slope * sx) / n;
  double ssres = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (out.intercept + out.slope * xs[i]);
    ssres += e * e;
  }
  const double sstot = syy - sy * sy / n;
  out.r2 = 1.0 - ssres / sstot;
  out.slope_stderr = std::sqrt(ssres / (n - 2) * n / denom);
  return out;
}

void append_term_counts(std::vector<RawSample>& samples, const std::string& term,
                        int year, std::int64_t count, int reps = 5) {
  for (int i = 0; i < reps; ++i) {
    samples.push_back(sample("\"" + term + "\"", year, count));
  }
}

void append_joint_counts(std::vector<RawSample>& samples, const std::string& u,
                         const std::string& v, int year, std::int64_t count,
                         int reps = 3) {
  for (int i = 0; i < reps; ++i) {
    samples.push_back(sample("\"" + u + "\" AND \"" + v + "\"", year, count));
  }
}

}  // namespace

TEST_CASE("fit_trend: exact line recovers slope, zero stderr, r2 = 1") {
  std::vector<std::pair<int, double>> values;
  for (int year = 2001; year <= 2013; ++year) {
    values.emplace_back(year, 0.5 + 0.01 * (year - 2001));
  }
  const auto fit = fit_trend(series_from(values), base_config());
  REQUIRE(fit.has_value());
  CHECK(fit->slope == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(fit->slope_stderr <= 1e-12);
  REQUIRE(fit->r2.has_value());
  CHECK(*fit->r2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit->n_points == 13);
  CHECK(fit->first_year == 2001);
  CHECK(fit->last_year == 2013);
}

TEST_CASE("fit_trend: horizontal series has slope 0 and undefined r2") {
  std::vector<std::pair<int, double>> values;
  for (int year = 2001; year <= 2013; ++year) values.emplace_back(year, 0.75);
  const auto fit = fit_trend(series_from(values), base_config());
  REQUIRE(fit.has_value());
  CHECK(fit->slope == 0.0);
  CHECK(fit->slope_stderr == 0.0);
  CHECK_FALSE(fit->r2.has_value());
}

TEST_CASE("fit_trend: noisy series recovers the generator slope") {
  DetRng rng(314);
  std::vector<std::pair<int, double>> values;
  for (int year = 2001; year <= 2013; ++year) {
    values.emplace_back(year, 0.5 + 0.008 * (year - 2001) + 0.01 * rng.gaussian());
  }
  const auto fit = fit_trend(series_from(values), base_config());
  REQUIRE(fit.has_value());
  CHECK(std::abs(fit->slope - 0.008) <= 3.0 * fit->slope_stderr);

  std::vector<int> xs;
  std::vector<double> ys;
  for (const auto& [year, v] : values) {
    xs.push_back(year);
    ys.push_back(v);
  }
  const RefOls ref = reference_ols(xs, ys);
  CHECK(fit->slope == doctest::Approx(ref.slope).epsilon(1e-9));
  CHECK(fit->slope_stderr == doctest::Approx(ref.slope_stderr).epsilon(1e-9));
  CHECK(fit->intercept == doctest::Approx(ref.intercept).epsilon(1e-9));
  REQUIRE(fit->r2.has_value());
  CHECK(*fit->r2 == doctest::Approx(ref.r2).epsilon(1e-9));
}

TEST_CASE("fit_trend: fewer than two usable points yields no fit") {
  CHECK_FALSE(fit_trend(series_from({{2005, 0.5}}), base_config()).has_value());

  NwdSeries flagged = series_from({{2005, 0.5}, {2006, 0.6}, {2007, 0.7}});
  for (NwdPoint& pt : flagged.points) pt.flags.set(NwdFlag::ArtifactYear);
  CHECK_FALSE(fit_trend(flagged, base_config()).has_value());
}

TEST_CASE("fit_trend: flagged and undefined points never influence the fit") {
  NwdSeries series = series_from({{1999, 0.9}, {2000, 0.1}, {2001, 0.50},
                                  {2002, 0.52}, {2003, 0.54}, {2004, 0.56}});
  series.points[0].flags.set(NwdFlag::PreCutoff);
  series.points[1].flags.set(NwdFlag::ArtifactYear);
  NwdPoint gap;
  gap.year = 2005;  // undefined value
  gap.flags.set(NwdFlag::UndefinedJointZero);
  series.points.push_back(gap);

  const auto before = fit_trend(series, base_config());
  REQUIRE(before.has_value());
  // mutate every excluded point wildly
  series.points[0].value = 1e6;
  series.points[1].value = -42.0;
  const auto after = fit_trend(series, base_config());
  REQUIRE(after.has_value());
  CHECK(before->slope == after->slope);
  CHECK(before->slope_stderr == after->slope_stderr);
  CHECK(before->intercept == after->intercept);
  CHECK(before->r2 == after->r2);
  CHECK(before->n_points == 4);
}

TEST_CASE("classify_trend: published fixture slopes") {
  const StudyConfig config = base_config();
  const auto classify = [&](double slope, double stderr_) {
    TrendFit fit;
    fit.slope = slope;
    fit.slope_stderr = stderr_;
    fit.n_points = 13;
    return classify_trend(fit, config).cls;
  };
  CHECK(classify(0.0130, 0.001) == TrendClass::Receding);
  CHECK(classify(-0.008, 0.002) == TrendClass::Approaching);
  CHECK(classify(-0.005, 0.001) == TrendClass::Approaching);  // threshold inclusive
  CHECK(classify(-0.001, 0.001) == TrendClass::Constant);
  CHECK(classify(0.001, 0.001) == TrendClass::Constant);
  CHECK(classify(0.0, 0.0) == TrendClass::Constant);
  CHECK(classify(0.010, 0.005) == TrendClass::Constant);  // relative error 1/2 > 1/3
  CHECK(classify(0.006, 0.002) == TrendClass::Receding);  // relative error exactly 1/3
}

TEST_CASE("classify_trend: reasons name the comparisons that fired") {
  TrendFit fit;
  fit.slope = 0.0130;
  fit.slope_stderr = 0.001;
  const TrendClassification c = classify_trend(fit, base_config());
  REQUIRE(c.reasons.size() == 2);
  CHECK(c.reasons[0].find("slope") != std::string::npos);
  CHECK(c.reasons[1].find("relative error") != std::string::npos);
}

TEST_CASE("classify_trend: adding an offset never changes the class") {
  DetRng rng(8);
  const StudyConfig config = base_config();
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<int, double>> values;
    const double slope = -0.02 + 0.04 * rng.uniform01();
    for (int year = 2001; year <= 2013; ++year) {
      values.emplace_back(year, 0.5 + slope * (year - 2001) + 0.005 * rng.gaussian());
    }
    const auto fit = fit_trend(series_from(values), config);
    std::vector<std::pair<int, double>> shifted = values;
    for (auto& [year, v] : shifted) v += 0.37;
    const auto fit2 = fit_trend(series_from(shifted), config);
    REQUIRE(fit.has_value());
    REQUIRE(fit2.has_value());
    CHECK(fit2->slope == doctest::Approx(fit->slope).epsilon(1e-9));
    CHECK(classify_trend(*fit2, config).cls == classify_trend(*fit, config).cls);
  }
}

TEST_CASE("build_nwd_series: clean oracle-style store") {
  testutil::TempDir dir;
  MeasurementStore store(dir.file("s.jsonl"));
  StudyConfig config = base_config();
  config.first_year = 2001;
  config.last_year = 2005;
  std::vector<RawSample> samples;
  for (int year = 2001; year <= 2005; ++year) {
    const int k = year - 2001;
    append_term_counts(samples, "huichol", year, 1000 + 37 * k);
    append_term_counts(samples, "peyote", year, 300 + 21 * k);
    append_term_counts(samples, "the", year, 10000 + 501 * k);
    append_joint_counts(samples, "huichol", "peyote", year, 50 + 3 * k);
  }
  store.append_samples(samples);

  const NwdSeries series =
      build_nwd_series(store, config.terms[0], config.terms[1], config);
  REQUIRE(series.points.size() == 5);
  for (const NwdPoint& pt : series.points) {
    CHECK(pt.value.has_value());
    CHECK(pt.flags.empty());
    CHECK(pt.stderr_ == 0.0);  // identical repeats
  }
  // spot value for 2001: M=1000, m=300, mu=50, N=1e6
  const double expected =
      (std::log(1000.0) - std::log(50.0)) / (std::log(1e6) - std::log(300.0));
  CHECK(*series.points[0].value == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("build_nwd_series: pre-cutoff flags and gaps") {
  testutil::TempDir dir;
  MeasurementStore store(dir.file("s.jsonl"));
  StudyConfig config = base_config();
  config.first_year = 1999;
  config.last_year = 2003;
  std::vector<RawSample> samples;
  for (int year = 1999; year <= 2003; ++year) {
    const int k = year - 1999;
    append_term_counts(samples, "huichol", year, 900 + 41 * k);
    append_term_counts(samples, "peyote", year, 280 + 17 * k);
    append_term_counts(samples, "the", year, 9000 + 313 * k);
    if (year != 2002) {  // missing joint for 2002 -> gap
      append_joint_counts(samples, "huichol", "peyote", year, 40 + 5 * k);
    }
  }
  store.append_samples(samples);

  const NwdSeries series =
      build_nwd_series(store, config.terms[0], config.terms[1], config);
  REQUIRE(series.points.size() == 4);
  CHECK(series.points[0].year == 1999);
  CHECK(series.points[0].flags.test(NwdFlag::PreCutoff));
  CHECK(series.points[1].flags.test(NwdFlag::PreCutoff));
  CHECK_FALSE(series.points[2].flags.test(NwdFlag::PreCutoff));  // 2001
  CHECK(series.points[3].year == 2003);  // 2002 is a gap
}

TEST_CASE("growth_series: exact powers of ten and doubling counts") {
  testutil::TempDir dir;
  MeasurementStore store(dir.file("s.jsonl"));
  StudyConfig config = base_config();
  config.first_year = 2001;
  config.last_year = 2011;
  std::vector<RawSample> samples;
  // "huichol": 10^(0.2 (y-2001)) at five-year marks -> exact slope 0.2
  append_term_counts(samples, "huichol", 2001, 1);
  append_term_counts(samples, "huichol", 2006, 10);
  append_term_counts(samples, "huichol", 2011, 100);
  // "peyote": doubles each year from 2001
  for (int year = 2001; year <= 2011; ++year) {
    append_term_counts(samples, "peyote", year, std::int64_t{1} << (year - 2001));
  }
  // "table": constant
  for (int year = 2001; year <= 2011; ++year) {
    append_term_counts(samples, "table", year, 500);
  }
  store.append_samples(samples);

  const GrowthSeries huichol = growth_series(store, config.terms[0], config);
  REQUIRE(huichol.fit.has_value());
  CHECK(huichol.fit->slope == doctest::Approx(0.2).epsilon(1e-12));
  REQUIRE(huichol.fit->r2.has_value());
  CHECK(*huichol.fit->r2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(huichol.points.size() == 11);  // gaps retained
  CHECK_FALSE(huichol.points[1].log10_count.has_value());

  const GrowthSeries peyote = growth_series(store, config.terms[1], config);
  REQUIRE(peyote.fit.has_value());
  // log10(2), computed independently
  CHECK(peyote.fit->slope == doctest::Approx(0.3010299956639812).epsilon(1e-12));

  const GrowthSeries table = growth_series(store, config.terms[2], config);
  REQUIRE(table.fit.has_value());
  CHECK(table.fit->slope == 0.0);
  CHECK_FALSE(table.fit->r2.has_value());
}

TEST_CASE("growth_series: zero counts are gaps; all-zero means no fit") {
  testutil::TempDir dir;
  MeasurementStore store(dir.file("s.jsonl"));
  StudyConfig config = base_config();
  config.first_year = 2001;
  config.last_year = 2004;
  std::vector<RawSample> samples;
  append_term_counts(samples, "huichol", 2001, 0);
  append_term_counts(samples, "huichol", 2002, 10);
  append_term_counts(samples, "huichol", 2003, 0);
  append_term_counts(samples, "huichol", 2004, 20);
  append_term_counts(samples, "table", 2001, 0);
  append_term_counts(samples, "table", 2002, 0);
  store.append_samples(samples);

  const GrowthSeries g = growth_series(store, config.terms[0], config);
  REQUIRE(g.points.size() == 4);
  CHECK_FALSE(g.points[0].log10_count.has_value());
  CHECK(g.points[1].log10_count.has_value());
  CHECK_FALSE(g.points[2].log10_count.has_value());
  REQUIRE(g.fit.has_value());
  CHECK(g.fit->n_points == 2);

  const GrowthSeries zeros = growth_series(store, config.terms[2], config);
  CHECK_FALSE(zeros.fit.has_value());
}

TEST_CASE("detect_count_artifacts: the seven-equal-years fixture") {
  testutil::TempDir dir;
  MeasurementStore store(dir.file("s.jsonl"));
  StudyConfig config = base_config();
  config.first_year = 1994;
  config.last_year = 2013;
  std::vector<RawSample> samples;
  for (int year = 1994; year <= 2000; ++year) {
    append_term_counts(samples, "peyote", year, 16200);
  }
  for (int year = 2001; year <= 2013; ++year) {
    append_term_counts(samples, "peyote", year, 16200 + 13 * (year - 2000));
  }
  store.append_samples(samples);

  const auto flagged = detect_count_artifacts(store, config.terms[1], config);
  CHECK(flagged == std::set<int>{1994, 1995, 1996, 1997, 1998, 1999, 2000});
}

TEST_CASE("detect_count_artifacts: floor, run length, gaps") {
  testutil::TempDir dir;
  StudyConfig config = base_config();
  config.first_year = 1994;
  config.last_year = 2013;

  SUBCASE("small counts below the floor never flag") {
    MeasurementStore store(dir.file("a.jsonl"));
    std::vector<RawSample> samples;
    for (int year = 1994; year <= 2000; ++year) append_term_counts(samples, "peyote", year, 5);
    store.append_samples(samples);
    CHECK(detect_count_artifacts(store, config.terms[1], config).empty());
  }
  SUBCASE("counts exactly at the floor never flag; just above do") {
    MeasurementStore store(dir.file("b.jsonl"));
    std::vector<RawSample> samples;
    for (int year = 1994; year <= 1996; ++year) append_term_counts(samples, "peyote", year, 100);
    for (int year = 2000; year <= 2002; ++year) append_term_counts(samples, "peyote", year, 101);
    store.append_samples(samples);
    CHECK(detect_count_artifacts(store, config.terms[1], config) ==
          std::set<int>{2000, 2001, 2002});
  }
  SUBCASE("strictly increasing counts never flag") {
    MeasurementStore store(dir.file("c.jsonl"));
    std::vector<RawSample> samples;
    for (int year = 1994; year <= 2013; ++year) {
      append_term_counts(samples, "peyote", year, 1000 + year);
    }
    store.append_samples(samples);
    CHECK(detect_count_artifacts(store, config.terms[1], config).empty());
  }
  SUBCASE("a run of two stays unflagged at min_run 3") {
    MeasurementStore store(dir.file("d.jsonl"));
    std::vector<RawSample> samples;
    append_term_counts(samples, "peyote", 1994, 5000);
    append_term_counts(samples, "peyote", 1995, 5000);
    append_term_counts(samples, "peyote", 1996, 5100);
    store.append_samples(samples);
    CHECK(detect_count_artifacts(store, config.terms[1], config).empty());
  }
  SUBCASE("a missing year breaks a run") {
    MeasurementStore store(dir.file("e.jsonl"));
    std::vector<RawSample> samples;
    for (int year : {1994, 1995, 1997, 1998}) {
      append_term_counts(samples, "peyote", year, 5000);
    }
    store.append_samples(samples);
    CHECK(detect_count_artifacts(store, config.terms[1], config).empty());
  }
}

TEST_CASE("detect_count_artifacts flags exactly the maximal equal runs") {
  DetRng rng(4242);
  StudyConfig config = base_config();
  config.first_year = 1994;
  config.last_year = 2013;
  for (int trial = 0; trial < 30; ++trial) {
    testutil::TempDir dir;
    MeasurementStore store(dir.file("s.jsonl"));
    std::vector<std::pair<int, std::int64_t>> means;
    std::vector<RawSample> samples;
    std::int64_t current = 200 + static_cast<std::int64_t>(rng.uniform_below(5));
    for (int year = 1994; year <= 2013; ++year) {
      if (rng.uniform_below(10) == 0) continue;  // missing year
      if (rng.uniform_below(3) == 0) current = 200 + static_cast<std::int64_t>(rng.uniform_below(5));
      means.emplace_back(year, current);
      append_term_counts(samples, "peyote", year, current);
    }
    store.append_samples(samples);
    // independent brute-force enumeration of maximal runs
    std::set<int> expected;
    for (std::size_t i = 0; i < means.size();) {
      std::size_t j = i + 1;
      while (j < means.size() && means[j].first == means[j - 1].first + 1 &&
             means[j].second == means[i].second) {
        ++j;
      }
      if (j - i >= 3 && means[i].second > config.artifact_count_floor) {
        for (std::size_t k = i; k < j; ++k) expected.insert(means[k].first);
      }
      i = j;
    }
    CHECK(detect_count_artifacts(store, config.terms[1], config) == expected);
  }
}

TEST_CASE("artifact years are flagged in series and excluded from fits") {
  testutil::TempDir dir;
  MeasurementStore store(dir.file("s.jsonl"));
  StudyConfig config = base_config();
  config.first_year = 1994;
  config.last_year = 2013;
  std::vector<RawSample> samples;
  for (int year = 1994; year <= 2013; ++year) {
    const int k = year - 1994;
    append_term_counts(samples, "huichol", year, 900 + 67 * k);
    append_term_counts(samples, "peyote", year, year <= 2000 ? 16200 : 16200 + 29 * k);
    append_term_counts(samples, "the", year, 20000 + 801 * k);
    append_joint_counts(samples, "huichol", "peyote", year, 60 + 4 * k);
  }
  store.append_samples(samples);

  const NwdSeries series =
      build_nwd_series(store, config.terms[0], config.terms[1], config);
  REQUIRE(series.points.size() == 20);
  for (const NwdPoint& pt : series.points) {
    CHECK(pt.flags.test(NwdFlag::ArtifactYear) == (pt.year <= 2000));
    CHECK(pt.flags.test(NwdFlag::PreCutoff) == (pt.year <= 2000));
  }
  const auto fit = fit_trend(series, config);
  REQUIRE(fit.has_value());
  CHECK(fit->n_points == 13);
  CHECK(fit->first_year == 2001);
}

TEST_CASE("inclusion_exclusion_check: identity, violation, unavailable") {
  testutil::TempDir dir;
  MeasurementStore store(dir.file("s.jsonl"));
  StudyConfig config = base_config();
  std::vector<RawSample> samples;
  append_term_counts(samples, "huichol", 2005, 1000);
  append_term_counts(samples, "peyote", 2005, 100);
  append_joint_counts(samples, "huichol", "peyote", 2005, 50);
  samples.push_back(sample("\"huichol\" OR \"peyote\"", 2005, 1050));

  append_term_counts(samples, "huichol", 2006, 1000);
  append_term_counts(samples, "peyote", 2006, 100);
  append_joint_counts(samples, "huichol", "peyote", 2006, 50);
  samples.push_back(sample("\"huichol\" OR \"peyote\"", 2006, 1200));

  append_term_counts(samples, "huichol", 2007, 1000);  // no OR measured
  append_term_counts(samples, "peyote", 2007, 100);
  append_joint_counts(samples, "huichol", "peyote", 2007, 50);
  store.append_samples(samples);

  const auto exact =
      inclusion_exclusion_check(store, config.terms[0], config.terms[1], 2005, config);
  CHECK(exact.status == InclusionExclusionResult::Status::Consistent);
  CHECK(*exact.residual == 0.0);
  CHECK(*exact.relative_residual == 0.0);

  const auto broken =
      inclusion_exclusion_check(store, config.terms[0], config.terms[1], 2006, config);
  CHECK(broken.status == InclusionExclusionResult::Status::Inconsistent);
  CHECK(*broken.residual == doctest::Approx(-150.0).epsilon(1e-12));
  CHECK(*broken.relative_residual == doctest::Approx(-0.125).epsilon(1e-12));

  const auto missing =
      inclusion_exclusion_check(store, config.terms[0], config.terms[1], 2007, config);
  CHECK(missing.status == InclusionExclusionResult::Status::Unavailable);
  CHECK_FALSE(missing.residual.has_value());
}

TEST_CASE("control_drift_report: proportional co-occurrence stays constant") {
  testutil::TempDir dir;
  MeasurementStore store(dir.file("s.jsonl"));
  StudyConfig config = base_config();
  config.first_year = 2001;
  config.last_year = 2006;
  // homogeneous doubling: every count scales by 2 per year, so the NWD is
  // year-invariant by the scaling property
  std::vector<RawSample> samples;
  for (int year = 2001; year <= 2006; ++year) {
    const std::int64_t f = std::int64_t{1} << (year - 2001);
    append_term_counts(samples, "huichol", year, 400 * f);
    append_term_counts(samples, "peyote", year, 200 * f);
    append_term_counts(samples, "table", year, 100 * f);
    append_term_counts(samples, "the", year, 2000 * f);
    append_joint_counts(samples, "huichol", "peyote", year, 40 * f);
    append_joint_counts(samples, "huichol", "table", year, 10 * f);
    append_joint_counts(samples, "huichol", "the", year, 80 * f);
  }
  store.append_samples(samples);

  const ControlDriftReport report = control_drift_report(store, config);
  REQUIRE(report.all_constant.has_value());
  CHECK(*report.all_constant);
  // controls: table (control role) and the (neutral role), one key each,
  // plus one averaged entry per control
  CHECK(report.per_pair.size() == 2);
  CHECK(report.averaged.size() == 2);
  for (const ControlFitEntry& e : report.per_pair) {
    REQUIRE(e.fit.has_value());
    CHECK(std::abs(e.fit->slope) < 1e-12);
    REQUIRE(e.classification.has_value());
    CHECK(e.classification->cls == TrendClass::Constant);
  }
}

TEST_CASE("control_drift_report: decaying joint flags control failure") {
  testutil::TempDir dir;
  MeasurementStore store(dir.file("s.jsonl"));
  StudyConfig config = base_config();
  config.terms = {TermSpec{"huichol", TermRole::Key, ""},
                  TermSpec{"table", TermRole::Control, ""},
                  TermSpec{"the", TermRole::Neutral, ""}};
  config.first_year = 2001;
  config.last_year = 2005;
  // singles and N double yearly; the control joint grows only x1.8, a 10%
  // relative decay per year -> NWD(key, control) rises linearly
  std::vector<RawSample> samples;
  std::int64_t joint = 625;  // 625 * 1.8^k stays integral for 5 steps
  for (int year = 2001; year <= 2005; ++year) {
    const std::int64_t f = std::int64_t{1} << (year - 2001);
    append_term_counts(samples, "huichol", year, 4000 * f);
    append_term_counts(samples, "table", year, 2000 * f);
    append_term_counts(samples, "the", year, 10000 * f);
    append_joint_counts(samples, "huichol", "table", year, joint);
    append_joint_counts(samples, "huichol", "the", year, 400 * f);
    joint = joint * 9 / 5;
  }
  store.append_samples(samples);

  // independent expectation: NWD_k = (ln(M/mu0) + k ln(1/0.9)) / ln(N/m)
  const double denom = std::log(1e6) - std::log(2000.0);
  const double expected_slope = std::log(1.0 / 0.9) / denom;

  const ControlDriftReport report = control_drift_report(store, config);
  REQUIRE(report.all_constant.has_value());
  CHECK_FALSE(*report.all_constant);
  const auto& table_entry = report.per_pair[0];
  REQUIRE(table_entry.fit.has_value());
  CHECK(table_entry.control == "table");
  CHECK(table_entry.fit->slope == doctest::Approx(expected_slope).epsilon(1e-9));
  REQUIRE(table_entry.classification.has_value());
  CHECK(table_entry.classification->cls == TrendClass::Receding);
}

TEST_CASE("control_drift_report: single-year data leaves fits unavailable") {
  testutil::TempDir dir;
  MeasurementStore store(dir.file("s.jsonl"));
  StudyConfig config = base_config();
  config.first_year = config.last_year = 2005;
  std::vector<RawSample> samples;
  append_term_counts(samples, "huichol", 2005, 1000);
  append_term_counts(samples, "table", 2005, 100);
  append_term_counts(samples, "the", 2005, 10000);
  append_joint_counts(samples, "huichol", "table", 2005, 10);
  append_joint_counts(samples, "huichol", "the", 2005, 100);
  store.append_samples(samples);

  const ControlDriftReport report = control_drift_report(store, config);
  CHECK_FALSE(report.all_constant.has_value());
  for (const ControlFitEntry& e : report.per_pair) {
    CHECK_FALSE(e.fit.has_value());
    CHECK_FALSE(e.classification.has_value());
  }
}

TEST_CASE("averaged control series is the pointwise mean across keys") {
  testutil::TempDir dir;
  MeasurementStore store(dir.file("s.jsonl"));
  StudyConfig config;
  config.terms = {TermSpec{"k1", TermRole::Key, ""}, TermSpec{"k2", TermRole::Key, ""},
                  TermSpec{"table", TermRole::Control, ""},
                  TermSpec{"the", TermRole::Neutral, ""}};
  config.first_year = 2001;
  config.last_year = 2003;
  config.cutoff_year = 2001;
  std::vector<RawSample> samples;
  for (int year = 2001; year <= 2003; ++year) {
    const int k = year - 2001;
    append_term_counts(samples, "k1", year, 1000 + 100 * k);
    append_term_counts(samples, "k2", year, 500 + 50 * k);
    append_term_counts(samples, "table", year, 200 + 20 * k);
    append_term_counts(samples, "the", year, 9000 + 900 * k);
    append_joint_counts(samples, "k1", "table", year, 20 + 2 * k);
    append_joint_counts(samples, "k2", "table", year, 10 + k);
    append_joint_counts(samples, "k1", "the", year, 100 + 10 * k);
    append_joint_counts(samples, "k2", "the", year, 50 + 5 * k);
    append_joint_counts(samples, "k1", "k2", year, 30 + 3 * k);
  }
  store.append_samples(samples);

  const ControlDriftReport report = control_drift_report(store, config);
  const NwdSeries k1_table = build_nwd_series(store, config.terms[0], config.terms[2], config);
  const NwdSeries k2_table = build_nwd_series(store, config.terms[1], config.terms[2], config);
  REQUIRE(!report.averaged_series.empty());
  const NwdSeries& avg = report.averaged_series[0];
  REQUIRE(avg.points.size() == 3);
  for (std::size_t i = 0; i < avg.points.size(); ++i) {
    const double expected = (*k1_table.points[i].value + *k2_table.points[i].value) / 2.0;
    CHECK(*avg.points[i].value == doctest::Approx(expected).epsilon(1e-15));
  }
}
