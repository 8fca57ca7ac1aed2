#include "nwdlens/report.hpp"

#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "nwdlens/errors.hpp"
#include "nwdlens/textutil.hpp"
#include "nwdlens/version.hpp"

namespace nwdlens {

using nlohmann::json;

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StoreError("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw StoreError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw StoreError("cannot rename " + tmp.string() + " to " + path.string());
}

AnalysisResult analyze_store(const MeasurementStore& store, const StudyConfig& config) {
  AnalysisResult result;
  for (const auto& [u, v] : study_pairs(config)) {
    PairAnalysis pa;
    pa.u = u;
    pa.v = v;
    pa.series = build_nwd_series(store, u, v, config);
    pa.fit = fit_trend(pa.series, config);
    if (pa.fit) pa.classification = classify_trend(*pa.fit, config);
    for (int year = config.first_year; year <= config.last_year; ++year) {
      result.incl_excl.push_back(
          InclExclEntry{u.text, v.text, year,
                        inclusion_exclusion_check(store, u, v, year, config)});
    }
    result.pairs.push_back(std::move(pa));
  }
  for (const TermSpec& term : config.terms) {
    result.growth.push_back(growth_series(store, term, config));
    result.artifacts.emplace_back(term.text, detect_count_artifacts(store, term, config));
  }
  result.control = control_drift_report(store, config);
  return result;
}

namespace {

json fit_to_json(const TrendFit& fit, int precision) {
  json j;
  j["slope"] = round_sig(fit.slope, precision);
  j["slope_stderr"] = round_sig(fit.slope_stderr, precision);
  j["intercept"] = round_sig(fit.intercept, precision);
  j["r2"] = fit.r2 ? json(round_sig(*fit.r2, precision)) : json(nullptr);
  j["n_points"] = fit.n_points;
  j["first_year"] = fit.first_year;
  j["last_year"] = fit.last_year;
  return j;
}

json classification_to_json(const TrendClassification& c) {
  return json{{"class", to_string(c.cls)}, {"reasons", c.reasons}};
}

std::string nwd_series_csv(const AnalysisResult& result, int precision) {
  std::string out = "u,v,year,value,stderr,flags\n";
  for (const PairAnalysis& pa : result.pairs) {
    for (const NwdPoint& pt : pa.series.points) {
      out += csv_escape(pa.u.text) + "," + csv_escape(pa.v.text) + "," +
             std::to_string(pt.year) + ",";
      out += pt.value ? format_sig(*pt.value, precision) : "";
      out += ",";
      out += pt.value ? format_sig(pt.stderr_, precision) : "";
      out += "," + csv_escape(pt.flags.joined()) + "\n";
    }
  }
  return out;
}

std::string trends_json(const AnalysisResult& result, int precision) {
  json arr = json::array();
  for (const PairAnalysis& pa : result.pairs) {
    json j;
    j["u"] = pa.u.text;
    j["v"] = pa.v.text;
    j["fit"] = pa.fit ? fit_to_json(*pa.fit, precision) : json(nullptr);
    if (pa.classification) {
      j["trend_class"] = to_string(pa.classification->cls);
      j["reasons"] = pa.classification->reasons;
    } else {
      j["trend_class"] = nullptr;
      j["reasons"] = json::array();
    }
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

std::string growth_csv(const AnalysisResult& result, int precision) {
  std::string out =
      "term,year,log10_count,y_err,fit_slope,fit_slope_stderr,fit_r2,fit_n_points\n";
  for (const GrowthSeries& g : result.growth) {
    std::string fit_cols = ",,,";
    if (g.fit) {
      fit_cols = format_sig(g.fit->slope, precision) + "," +
                 format_sig(g.fit->slope_stderr, precision) + "," +
                 (g.fit->r2 ? format_sig(*g.fit->r2, precision) : "") + "," +
                 std::to_string(g.fit->n_points);
    }
    for (const GrowthPoint& pt : g.points) {
      out += csv_escape(g.term) + "," + std::to_string(pt.year) + ",";
      out += pt.log10_count ? format_sig(*pt.log10_count, precision) : "";
      out += ",";
      out += pt.log10_count ? format_sig(pt.log10_stderr, precision) : "";
      out += "," + fit_cols + "\n";
    }
  }
  return out;
}

json incl_excl_to_json(const InclExclEntry& e, int precision) {
  json j;
  j["u"] = e.u;
  j["v"] = e.v;
  j["year"] = e.year;
  j["status"] = to_string(e.result.status);
  j["residual"] =
      e.result.residual ? json(round_sig(*e.result.residual, precision)) : json(nullptr);
  j["relative_residual"] = e.result.relative_residual
                               ? json(round_sig(*e.result.relative_residual, precision))
                               : json(nullptr);
  return j;
}

json control_entry_to_json(const ControlFitEntry& e, int precision) {
  json j;
  j["key"] = e.key;
  j["control"] = e.control;
  j["fit"] = e.fit ? fit_to_json(*e.fit, precision) : json(nullptr);
  j["classification"] =
      e.classification ? classification_to_json(*e.classification) : json(nullptr);
  return j;
}

std::string diagnostics_json(const AnalysisResult& result, int precision) {
  json j;
  json artifacts = json::array();
  for (const auto& [term, years] : result.artifacts) {
    artifacts.push_back({{"term", term}, {"years", years}});
  }
  j["artifact_years"] = std::move(artifacts);

  json incl = json::array();
  for (const InclExclEntry& e : result.incl_excl) {
    incl.push_back(incl_excl_to_json(e, precision));
  }
  j["inclusion_exclusion"] = std::move(incl);

  json control;
  control["all_constant"] =
      result.control.all_constant ? json(*result.control.all_constant) : json(nullptr);
  json pairs = json::array();
  for (const ControlFitEntry& e : result.control.per_pair) {
    pairs.push_back(control_entry_to_json(e, precision));
  }
  control["pairs"] = std::move(pairs);
  json averaged = json::array();
  for (const ControlFitEntry& e : result.control.averaged) {
    averaged.push_back(control_entry_to_json(e, precision));
  }
  control["averaged"] = std::move(averaged);
  j["control_drift"] = std::move(control);
  return j.dump(2) + "\n";
}

std::string fig1_csv(const AnalysisResult& result, int precision) {
  std::string out = "term,year,log10_count,y_err\n";
  for (const GrowthSeries& g : result.growth) {
    for (const GrowthPoint& pt : g.points) {
      if (!pt.log10_count) continue;
      out += csv_escape(g.term) + "," + std::to_string(pt.year) + "," +
             format_sig(*pt.log10_count, precision) + "," +
             format_sig(pt.log10_stderr, precision) + "\n";
    }
  }
  return out;
}

void append_series_rows(std::string& out, const std::string& label_a,
                        const std::string& label_b, const NwdSeries& series,
                        int precision) {
  for (const NwdPoint& pt : series.points) {
    if (!pt.value) continue;
    out += csv_escape(label_a) + "," + csv_escape(label_b) + "," +
           std::to_string(pt.year) + "," + format_sig(*pt.value, precision) + "," +
           format_sig(pt.stderr_, precision) + "\n";
  }
}

std::string fig2_csv(const AnalysisResult& result, int precision) {
  std::string out = "key,control,year,value,y_err\n";
  for (std::size_t i = 0; i < result.control.per_pair.size(); ++i) {
    append_series_rows(out, result.control.per_pair[i].key,
                       result.control.per_pair[i].control,
                       result.control.pair_series[i], precision);
  }
  for (std::size_t i = 0; i < result.control.averaged.size(); ++i) {
    append_series_rows(out, result.control.averaged[i].key,
                       result.control.averaged[i].control,
                       result.control.averaged_series[i], precision);
  }
  return out;
}

std::string fig_key_csv(const AnalysisResult& result, const std::string& key_text,
                        int precision) {
  std::string out = "partner,year,value,y_err\n";
  for (const PairAnalysis& pa : result.pairs) {
    const bool u_is_key = pa.u.text == key_text;
    const bool v_is_key = pa.v.text == key_text;
    if (!u_is_key && !v_is_key) continue;
    const std::string partner = u_is_key ? pa.v.text : pa.u.text;
    for (const NwdPoint& pt : pa.series.points) {
      if (!pt.value) continue;
      out += csv_escape(partner) + "," + std::to_string(pt.year) + "," +
             format_sig(*pt.value, precision) + "," + format_sig(pt.stderr_, precision) +
             "\n";
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> write_reports(const AnalysisResult& result,
                                       const StudyConfig& config,
                                       const std::filesystem::path& out_dir,
                                       int precision) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> files;
  const auto emit = [&](const std::string& name, const std::string& content) {
    write_file_atomic(out_dir / name, content);
    files.push_back(name);
  };
  emit("nwd_series.csv", nwd_series_csv(result, precision));
  emit("trends.json", trends_json(result, precision));
  emit("growth.csv", growth_csv(result, precision));
  emit("diagnostics.json", diagnostics_json(result, precision));
  emit("fig1_growth.csv", fig1_csv(result, precision));
  emit("fig2_controls.csv", fig2_csv(result, precision));

  std::map<std::string, int> used_slugs;
  for (const TermSpec& t : config.terms) {
    if (t.role != TermRole::Key) continue;
    std::string slug = slugify(t.text);
    const int n = used_slugs[slug]++;
    if (n > 0) slug += "_" + std::to_string(n + 1);
    emit("fig_key_" + slug + ".csv", fig_key_csv(result, t.text, precision));
  }
  return files;
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
  json j;
  j["command"] = manifest.command;
  j["config_digest"] = manifest.config_digest;
  j["started"] = manifest.started;
  j["finished"] = manifest.finished;
  j["tool_version"] = manifest.tool_version;
  j["input_stores"] = manifest.input_stores;
  j["outputs"] = manifest.outputs;
  write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace nwdlens
