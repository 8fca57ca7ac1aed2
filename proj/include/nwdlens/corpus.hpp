#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "nwdlens/query.hpp"
#include "nwdlens/study.hpp"

namespace nwdlens {

struct Document {
  std::int64_t id = 0;
  int year = 0;
  std::string text;
};

// Synthetic tree-ring corpus: time-tagged documents with exact counting.
// Immutable after construction; counting may run concurrently.
class Corpus {
 public:
  Corpus(std::vector<Document> documents, int first_year, int last_year);

  const std::vector<Document>& documents() const { return documents_; }
  int first_year() const { return first_year_; }
  int last_year() const { return last_year_; }

  // Documents of one year, in corpus order. Empty span for absent years.
  const std::vector<const Document*>& docs_of_year(int year) const;

 private:
  std::vector<Document> documents_;
  int first_year_, last_year_;
  std::map<int, std::vector<const Document*>> by_year_;
  std::vector<const Document*> empty_;
};

// Exact hit count: documents of `year` matching q. A Phrase matches iff
// it occurs as a case-insensitive contiguous substring on word
// boundaries; And/Or are set intersection/union of matching documents.
std::int64_t count_hits(const Corpus& corpus, const Query& q, int year);

// Scenario generator input: per-(term, year) single-count targets and
// per-(pair, year) joint-count targets, arrays aligned with year_range.
struct TermTarget {
  std::string text;
  std::vector<std::int64_t> counts;
};

struct PairTarget {
  std::string u, v;
  std::vector<std::int64_t> counts;
};

struct GrowthSpec {
  int first_year = 0;
  int last_year = 0;
  std::uint64_t seed = 0;
  std::vector<TermTarget> terms;
  std::vector<PairTarget> joints;
};

GrowthSpec load_growth_spec(const std::filesystem::path& path);
GrowthSpec growth_spec_from_json(const nlohmann::json& j);

// Deterministic per seed; the result satisfies every single and joint
// target exactly (each document carries one term or one designated pair,
// so undesignated pairs never co-occur). Throws InfeasibleSpecError
// naming the conflicting constraints.
Corpus generate_corpus(const GrowthSpec& spec);

// One JSON object per line, fields id, year, text.
void write_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path);
Corpus read_corpus_jsonl(const std::filesystem::path& path);

// Eq.-style NWD evaluated directly on exact counts, with
// N_y = normalization_factor x count(normalization_ref). Fully
// independent of the nwd module; this is the oracle it is checked
// against. nullopt when the joint count is zero or the log domain is
// empty (N <= min count or min count 0).
std::optional<double> brute_force_nwd(const Corpus& corpus, const TermSpec& u,
                                      const TermSpec& v, int year,
                                      const StudyConfig& config);

}  // namespace nwdlens
