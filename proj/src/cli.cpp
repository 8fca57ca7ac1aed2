#include "nwdlens/cli.hpp"

#include <fstream>
#include <iostream>
#include <memory>

#include <nlohmann/json.hpp>

#include "nwdlens/analytics.hpp"
#include "nwdlens/corpus.hpp"
#include "nwdlens/errors.hpp"
#include "nwdlens/providers.hpp"
#include "nwdlens/report.hpp"
#include "nwdlens/store.hpp"
#include "nwdlens/study.hpp"
#include "nwdlens/timeutil.hpp"
#include "nwdlens/version.hpp"

namespace nwdlens {

using nlohmann::json;

std::optional<ProviderKind> provider_kind_from_string(std::string_view s) {
  if (s == "oracle") return ProviderKind::Oracle;
  if (s == "replay") return ProviderKind::Replay;
  if (s == "live") return ProviderKind::Live;
  return std::nullopt;
}

namespace {

std::optional<StudyConfig> load_and_validate_config(const std::filesystem::path& path) {
  StudyConfig config;
  try {
    config = load_study_config(path);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return std::nullopt;
  }
  const auto violations = validate_config(config);
  if (!violations.empty()) {
    std::cerr << "error: config is invalid:\n";
    for (const std::string& v : violations) std::cerr << "  - " << v << "\n";
    return std::nullopt;
  }
  return config;
}

json load_json_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ConfigError(std::string("cannot open ") + what + ": " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string(what) + " is not valid JSON: " + e.what());
  }
}

OracleNoise oracle_noise_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("provider config root must be a JSON object");
  OracleNoise noise;
  for (const auto& [key, value] : j.items()) {
    if (key == "round_to_3_sig") {
      noise.round_to_3_sig = value.get<bool>();
    } else if (key == "gaussian_rel_sigma") {
      noise.gaussian_rel_sigma = value.get<double>();
    } else {
      throw ConfigError("unknown key \"" + key + "\" in oracle provider config");
    }
  }
  return noise;
}

std::unique_ptr<Provider> make_provider(const FetchOptions& options) {
  switch (options.provider) {
    case ProviderKind::Oracle: {
      if (!options.corpus_path) {
        throw ConfigError("oracle provider requires --corpus");
      }
      auto corpus = std::make_shared<const Corpus>(read_corpus_jsonl(*options.corpus_path));
      OracleNoise noise;
      if (options.provider_config) {
        noise = oracle_noise_from_json(load_json_file(*options.provider_config,
                                                      "provider config"));
      }
      noise.seed = options.seed;
      return std::make_unique<OracleProvider>(std::move(corpus), noise, options.session_id);
    }
    case ProviderKind::Replay: {
      if (!options.replay_from) {
        throw ConfigError("replay provider requires --replay-from");
      }
      MeasurementStore source(*options.replay_from);
      return std::make_unique<ReplayProvider>(source.samples());
    }
    case ProviderKind::Live: {
      if (!options.provider_config) {
        throw ConfigError("live provider requires --provider-config");
      }
      const LiveProviderConfig config = live_provider_config_from_json(
          load_json_file(*options.provider_config, "provider config"));
      return std::make_unique<LiveProvider>(config, options.session_id);
    }
  }
  throw ConfigError("unknown provider");
}

}  // namespace

int cmd_fetch(const FetchOptions& options) {
  const auto config = load_and_validate_config(options.config_path);
  if (!config) return kExitFatal;

  if (options.provider == ProviderKind::Live && offline_mode()) {
    std::cerr << "error: offline mode (NWD_LENS_OFFLINE=1): refusing live fetches\n";
    return kExitFatal;
  }

  const std::string started = format_rfc3339_utc(std::chrono::system_clock::now());
  ProtocolSummary summary;
  std::unique_ptr<MeasurementStore> store;
  try {
    auto provider = make_provider(options);
    store = std::make_unique<MeasurementStore>(options.store_path);
    summary = run_protocol(*provider, *config, *store);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFatal;
  } catch (const StoreError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFatal;
  } catch (const ProviderError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFatal;
  }

  RunManifest manifest;
  manifest.command = "fetch";
  manifest.config_digest = study_config_digest(*config);
  manifest.started = started;
  manifest.finished = format_rfc3339_utc(std::chrono::system_clock::now());
  manifest.tool_version = kVersion;
  manifest.input_stores = {options.store_path.string()};
  const std::filesystem::path manifest_path = options.store_path.string() + ".manifest.json";
  manifest.outputs = {options.store_path.string(), manifest_path.string()};
  try {
    write_manifest(manifest, manifest_path);
  } catch (const StoreError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFatal;
  }

  std::cout << "queries_run=" << summary.queries_run
            << " samples_written=" << summary.samples_written
            << " failures=" << summary.failures << "\n";
  for (const std::string& msg : summary.failure_messages) {
    std::cerr << "fetch failure: " << msg << "\n";
  }
  return summary.failures == 0 ? kExitOk : kExitPartial;
}

int cmd_analyze(const AnalyzeOptions& options) {
  const auto config = load_and_validate_config(options.config_path);
  if (!config) return kExitFatal;

  const std::string started = format_rfc3339_utc(std::chrono::system_clock::now());
  try {
    MeasurementStore store(options.store_path);
    if (store.empty()) {
      std::cerr << "error: store is empty: " << options.store_path.string() << "\n";
      return kExitFatal;
    }
    const AnalysisResult result = analyze_store(store, *config);
    const auto files = write_reports(result, *config, options.out_dir, options.precision);

    RunManifest manifest;
    manifest.command = "analyze";
    manifest.config_digest = study_config_digest(*config);
    manifest.started = started;
    manifest.finished = format_rfc3339_utc(std::chrono::system_clock::now());
    manifest.tool_version = kVersion;
    manifest.input_stores = {options.store_path.string()};
    manifest.outputs = files;
    manifest.outputs.push_back("manifest.json");
    write_manifest(manifest, options.out_dir / "manifest.json");
  } catch (const StoreError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFatal;
  }
  return kExitOk;
}

int cmd_corpus(const CorpusOptions& options) {
  try {
    GrowthSpec spec = load_growth_spec(options.spec_path);
    if (options.seed) spec.seed = *options.seed;
    const Corpus corpus = generate_corpus(spec);
    write_corpus_jsonl(corpus, options.out_path);
    std::cout << "documents=" << corpus.documents().size() << " years=["
              << corpus.first_year() << ", " << corpus.last_year() << "]\n";
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFatal;
  } catch (const InfeasibleSpecError& e) {
    std::cerr << "error: infeasible growth spec: " << e.what() << "\n";
    return kExitFatal;
  } catch (const StoreError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFatal;
  }
  return kExitOk;
}

int cmd_validate(const std::filesystem::path& config_path) {
  StudyConfig config;
  try {
    config = load_study_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFatal;
  }
  const auto violations = validate_config(config);
  if (violations.empty()) {
    std::cout << "config ok: " << config.terms.size() << " terms, years "
              << config.first_year << "-" << config.last_year << "\n";
    return kExitOk;
  }
  for (const std::string& v : violations) std::cout << "violation: " << v << "\n";
  return kExitFatal;
}

}  // namespace nwdlens
