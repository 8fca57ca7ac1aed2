#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nwdlens {

// One observed hit count with full provenance.
struct RawSample {
  std::string query_canonical;  // render_query output; the storage key
  int year = 0;
  std::int64_t count = 0;
  std::string observed_at;  // RFC 3339 UTC
  std::string session_id;   // machine/IP/session label
  std::string provider_id;

  bool operator==(const RawSample&) const = default;
};

// Pooled statistics of all samples for one (query, year).
struct CountStats {
  std::string query_canonical;
  int year = 0;
  double mean = 0.0;
  double std = 0.0;      // sample standard deviation, n-1 denominator
  double stderr_ = 0.0;  // std / sqrt(n)
  int n = 0;
  bool single_sample = false;  // n == 1: std and stderr reported as 0
};

// Append-only JSON-lines sample store. One RawSample per line; the file
// is the interchange format. Single writer, many readers; an interrupted
// write leaves at most one torn final line, which readers ignore and the
// next append truncates.
class MeasurementStore {
 public:
  explicit MeasurementStore(std::filesystem::path file);

  MeasurementStore(const MeasurementStore&) = delete;
  MeasurementStore& operator=(const MeasurementStore&) = delete;

  // Appends durably, in order. Every sample's query_canonical must parse.
  std::size_t append_samples(std::span<const RawSample> samples);

  const std::vector<RawSample>& samples() const { return samples_; }
  bool empty() const { return samples_.empty(); }
  const std::filesystem::path& path() const { return path_; }

  // Pooled across sessions. nullopt = no samples for the key.
  std::optional<CountStats> aggregate(std::string_view query_canonical, int year) const;

  // Session-scoped variant for between-user variability studies.
  std::optional<CountStats> aggregate(std::string_view query_canonical, int year,
                                      std::string_view session_id) const;

  // Sorted years for which the key has at least one sample.
  std::vector<int> years_with_samples(std::string_view query_canonical) const;

 private:
  void load();

  std::filesystem::path path_;
  std::vector<RawSample> samples_;
  std::map<std::pair<std::string, int>, std::vector<std::size_t>> index_;
  std::uintmax_t committed_bytes_ = 0;  // file size up to the last full record
  bool needs_newline_ = false;          // trusted tail record lacks its newline
  mutable std::mutex mutex_;
};

// Statistics over an explicit count list (the aggregation rule itself).
CountStats compute_count_stats(std::string query_canonical, int year,
                               const std::vector<std::int64_t>& counts);

}  // namespace nwdlens
