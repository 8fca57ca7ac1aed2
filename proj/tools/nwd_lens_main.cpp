#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nwdlens/cli.hpp"
#include "nwdlens/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"nwd-lens: temporal normalized web distance measurement and analysis"};
  app.set_version_flag("--version", std::string(nwdlens::kVersion));
  app.require_subcommand(1);

  nwdlens::FetchOptions fetch;
  std::string provider_name = "oracle";
  std::string corpus_path, replay_from, provider_config;
  auto* cmd_fetch = app.add_subcommand(
      "fetch", "Run the measurement protocol and append samples to a store");
  cmd_fetch->add_option("--config", fetch.config_path, "Study config (JSON)")->required();
  cmd_fetch->add_option("--provider", provider_name, "oracle | replay | live")->required();
  cmd_fetch->add_option("--store", fetch.store_path, "Sample store (JSON lines)")->required();
  cmd_fetch->add_option("--corpus", corpus_path, "Corpus file (oracle provider)");
  cmd_fetch->add_option("--seed", fetch.seed, "Noise seed (oracle provider)");
  cmd_fetch->add_option("--replay-from", replay_from, "Store to replay (replay provider)");
  cmd_fetch->add_option("--provider-config", provider_config,
                        "Provider settings JSON (live adapter / oracle noise)");
  cmd_fetch->add_option("--session", fetch.session_id, "Session label stamped on samples");

  nwdlens::AnalyzeOptions analyze;
  auto* cmd_analyze = app.add_subcommand(
      "analyze", "Compute NWD series, trends, diagnostics and figure data");
  cmd_analyze->add_option("--config", analyze.config_path, "Study config (JSON)")->required();
  cmd_analyze->add_option("--store", analyze.store_path, "Sample store (JSON lines)")->required();
  cmd_analyze->add_option("--out", analyze.out_dir, "Output directory")->required();
  cmd_analyze->add_option("--precision", analyze.precision,
                          "Significant digits in reports (default 6)");

  nwdlens::CorpusOptions corpus;
  std::uint64_t corpus_seed = 0;
  auto* cmd_corpus = app.add_subcommand(
      "corpus", "Generate a synthetic tree-ring corpus from a growth spec");
  cmd_corpus->add_option("--spec", corpus.spec_path, "Growth spec (JSON)")->required();
  cmd_corpus->add_option("--out", corpus.out_path, "Corpus file to write")->required();
  auto* seed_opt = cmd_corpus->add_option("--seed", corpus_seed,
                                          "Overrides the spec's seed field");

  std::string validate_config_path;
  auto* cmd_validate = app.add_subcommand("validate", "Check a study config");
  cmd_validate->add_option("--config", validate_config_path, "Study config (JSON)")->required();

  CLI11_PARSE(app, argc, argv);

  if (cmd_fetch->parsed()) {
    const auto kind = nwdlens::provider_kind_from_string(provider_name);
    if (!kind) {
      std::cerr << "error: unknown provider \"" << provider_name
                << "\" (expected oracle, replay or live)\n";
      return nwdlens::kExitFatal;
    }
    fetch.provider = *kind;
    if (!corpus_path.empty()) fetch.corpus_path = corpus_path;
    if (!replay_from.empty()) fetch.replay_from = replay_from;
    if (!provider_config.empty()) fetch.provider_config = provider_config;
    return nwdlens::cmd_fetch(fetch);
  }
  if (cmd_analyze->parsed()) return nwdlens::cmd_analyze(analyze);
  if (cmd_corpus->parsed()) {
    if (seed_opt->count() > 0) corpus.seed = corpus_seed;
    return nwdlens::cmd_corpus(corpus);
  }
  if (cmd_validate->parsed()) return nwdlens::cmd_validate(validate_config_path);
  return nwdlens::kExitFatal;
}
