#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "nwdlens/corpus.hpp"
#include "nwdlens/query.hpp"
#include "nwdlens/rng.hpp"
#include "nwdlens/store.hpp"
#include "nwdlens/study.hpp"
#include "nwdlens/timeutil.hpp"

namespace nwdlens {

// Uniform contract: one hit count for (query, year), stamped with
// provenance. Implementations may be called from concurrent tasks.
class Provider {
 public:
  virtual ~Provider() = default;
  // Throws ProviderError on failure.
  virtual RawSample fetch_count(const Query& q, int year) = 0;
  virtual std::string id() const = 0;
};

// Synthetic noise for the oracle provider, both parts off by default:
// rounding to 3 significant digits mimics engine count display, the
// relative Gaussian term mimics estimation jitter.
struct OracleNoise {
  bool round_to_3_sig = false;
  double gaussian_rel_sigma = 0.0;
  std::uint64_t seed = 0;
};

std::int64_t round_to_sig_digits(std::int64_t count, int digits);

// Exact counts from a synthetic corpus, plus optional noise.
class OracleProvider final : public Provider {
 public:
  // Non-owning; the corpus must outlive the provider.
  OracleProvider(const Corpus& corpus, OracleNoise noise = {},
                 std::string session_id = "oracle",
                 std::shared_ptr<Clock> clock = nullptr);
  // Owning variant.
  OracleProvider(std::shared_ptr<const Corpus> corpus, OracleNoise noise = {},
                 std::string session_id = "oracle",
                 std::shared_ptr<Clock> clock = nullptr);

  RawSample fetch_count(const Query& q, int year) override;
  std::string id() const override { return "oracle"; }

 private:
  std::shared_ptr<const Corpus> owned_;
  const Corpus* corpus_;
  OracleNoise noise_;
  std::string session_id_;
  std::shared_ptr<Clock> clock_;
  DetRng rng_;
  std::mutex mutex_;
};

// Replays previously stored samples, per-(query, year) FIFO. The
// returned sample is the stored record, untouched.
class ReplayProvider final : public Provider {
 public:
  explicit ReplayProvider(std::vector<RawSample> samples);

  RawSample fetch_count(const Query& q, int year) override;
  std::string id() const override { return "replay"; }

 private:
  std::map<std::pair<std::string, int>, std::deque<RawSample>> pending_;
  std::mutex mutex_;
};

// Live search-count adapter. Disabled-by-default, best-effort: automated
// querying may violate an engine's terms of service, and page formats
// drift. Extraction is a configured pattern so drift becomes a loud
// error, never a wrong number.
struct LiveProviderConfig {
  std::string url_template;     // placeholders {query} {start_date} {end_date}
  std::string extraction_rule;  // regex with exactly one capture group
  std::chrono::milliseconds min_request_interval{1000};
  int max_retries = 2;          // additional attempts after the first
  std::chrono::milliseconds timeout{10000};
  std::string date_format = "%m/%d/%Y";
  std::string user_agent = "nwd-lens/0.1";
};

LiveProviderConfig live_provider_config_from_json(const nlohmann::json& j);

struct HttpResponse {
  int status = 0;
  std::string body;
  std::string error;  // non-empty == transport failure
};

using HttpGetFn =
    std::function<HttpResponse(const std::string& url, const LiveProviderConfig& config)>;

// Default transport (cpp-httplib). Split out so tests can fake it.
HttpResponse http_get(const std::string& url, const LiveProviderConfig& config);

// True when NWD_LENS_OFFLINE=1: every live fetch must refuse.
bool offline_mode();

class LiveProvider final : public Provider {
 public:
  // Validates the config invariants (placeholders present, extraction
  // rule has exactly one capture group); throws ProviderError.
  LiveProvider(LiveProviderConfig config, std::string session_id,
               std::shared_ptr<Clock> clock = nullptr, HttpGetFn transport = {});

  RawSample fetch_count(const Query& q, int year) override;
  std::string id() const override { return "live"; }

  // Exposed for tests.
  std::string build_url(const Query& q, int year) const;
  static std::int64_t extract_count(const std::string& body, const std::string& rule);

 private:
  void wait_for_slot();

  LiveProviderConfig config_;
  std::string session_id_;
  std::shared_ptr<Clock> clock_;
  HttpGetFn transport_;
  std::optional<std::chrono::system_clock::time_point> last_request_;
  std::mutex mutex_;
};

// One full measurement pass: for every year, every single term
// repetitions_single times, then every study pair (key x classifier and
// key x key) repetitions_joint times. Samples are appended as fetched;
// fetch failures are tallied, never silently dropped; a store write
// failure aborts.
struct ProtocolSummary {
  std::int64_t queries_run = 0;
  std::int64_t samples_written = 0;
  std::int64_t failures = 0;
  std::vector<std::string> failure_messages;
};

ProtocolSummary run_protocol(Provider& provider, const StudyConfig& config,
                             MeasurementStore& store);

}  // namespace nwdlens
