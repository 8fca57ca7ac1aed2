#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "nwdlens/analytics.hpp"
#include "nwdlens/store.hpp"
#include "nwdlens/study.hpp"

namespace nwdlens {

struct PairAnalysis {
  TermSpec u, v;
  NwdSeries series;
  std::optional<TrendFit> fit;
  std::optional<TrendClassification> classification;
};

struct InclExclEntry {
  std::string u, v;
  int year = 0;
  InclusionExclusionResult result;
};

// Everything cmd_analyze derives from a store. Recomputable from the raw
// samples alone; no hidden state.
struct AnalysisResult {
  std::vector<PairAnalysis> pairs;
  std::vector<GrowthSeries> growth;                              // per term, config order
  std::vector<std::pair<std::string, std::set<int>>> artifacts;  // per term, config order
  std::vector<InclExclEntry> incl_excl;                          // per pair x year
  ControlDriftReport control;
};

AnalysisResult analyze_store(const MeasurementStore& store, const StudyConfig& config);

// Emits nwd_series.csv, trends.json, growth.csv, diagnostics.json and the
// figure data files (fig1_growth.csv, fig2_controls.csv,
// fig_key_<term>.csv). All writes are atomic (temp file, then rename);
// numbers carry `precision` significant digits. Returns the file names
// written, in emission order.
std::vector<std::string> write_reports(const AnalysisResult& result,
                                       const StudyConfig& config,
                                       const std::filesystem::path& out_dir,
                                       int precision);

struct RunManifest {
  std::string command;
  std::string config_digest;
  std::string started;   // RFC 3339 UTC
  std::string finished;  // RFC 3339 UTC
  std::string tool_version;
  std::vector<std::string> input_stores;
  std::vector<std::string> outputs;  // every emitted file, this one included
};

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);

void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace nwdlens
