#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace nwdlens {

// Exit codes shared by all commands: 0 clean, 1 fatal (config, store,
// spec errors), 2 degraded fetch (some failures, samples still written).
inline constexpr int kExitOk = 0;
inline constexpr int kExitFatal = 1;
inline constexpr int kExitPartial = 2;

enum class ProviderKind { Oracle, Replay, Live };

std::optional<ProviderKind> provider_kind_from_string(std::string_view s);

struct FetchOptions {
  std::filesystem::path config_path;
  ProviderKind provider = ProviderKind::Oracle;
  std::filesystem::path store_path;
  std::optional<std::filesystem::path> corpus_path;     // oracle
  std::optional<std::filesystem::path> replay_from;     // replay
  std::optional<std::filesystem::path> provider_config; // live settings / oracle noise
  std::uint64_t seed = 0;
  std::string session_id = "local";
};

struct AnalyzeOptions {
  std::filesystem::path config_path;
  std::filesystem::path store_path;
  std::filesystem::path out_dir;
  int precision = 6;
};

struct CorpusOptions {
  std::filesystem::path spec_path;
  std::filesystem::path out_path;
  std::optional<std::uint64_t> seed;  // overrides the spec's seed field
};

int cmd_fetch(const FetchOptions& options);
int cmd_analyze(const AnalyzeOptions& options);
int cmd_corpus(const CorpusOptions& options);
int cmd_validate(const std::filesystem::path& config_path);

}  // namespace nwdlens
