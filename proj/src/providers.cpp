#include "nwdlens/providers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <regex>

#include <nlohmann/json.hpp>

#include "nwdlens/errors.hpp"
#include "nwdlens/textutil.hpp"

// Local HTTP only; engines sit behind TLS but the adapter is a template
// anyone can point elsewhere, and the offline default makes this the
// rarely-trodden path.
#include <httplib.h>

namespace nwdlens {

using nlohmann::json;

namespace {

std::shared_ptr<Clock> clock_or_system(std::shared_ptr<Clock> clock) {
  return clock ? std::move(clock) : std::make_shared<SystemClock>();
}

}  // namespace

std::int64_t round_to_sig_digits(std::int64_t count, int digits) {
  if (count == 0 || digits < 1) return count;
  std::int64_t magnitude = 1;
  int n_digits = 0;
  for (std::int64_t v = count; v > 0; v /= 10) ++n_digits;
  if (n_digits <= digits) return count;
  for (int i = 0; i < n_digits - digits; ++i) magnitude *= 10;
  const double scaled = static_cast<double>(count) / static_cast<double>(magnitude);
  return static_cast<std::int64_t>(std::llround(scaled)) * magnitude;
}

OracleProvider::OracleProvider(const Corpus& corpus, OracleNoise noise,
                               std::string session_id, std::shared_ptr<Clock> clock)
    : corpus_(&corpus),
      noise_(noise),
      session_id_(std::move(session_id)),
      clock_(clock_or_system(std::move(clock))),
      rng_(noise.seed) {}

OracleProvider::OracleProvider(std::shared_ptr<const Corpus> corpus, OracleNoise noise,
                               std::string session_id, std::shared_ptr<Clock> clock)
    : owned_(std::move(corpus)),
      corpus_(owned_.get()),
      noise_(noise),
      session_id_(std::move(session_id)),
      clock_(clock_or_system(std::move(clock))),
      rng_(noise.seed) {}

RawSample OracleProvider::fetch_count(const Query& q, int year) {
  if (year < corpus_->first_year() || year > corpus_->last_year()) {
    throw ProviderError("oracle: year " + std::to_string(year) +
                        " outside corpus range [" + std::to_string(corpus_->first_year()) +
                        ", " + std::to_string(corpus_->last_year()) + "]");
  }
  std::int64_t count = count_hits(*corpus_, q, year);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (noise_.gaussian_rel_sigma > 0.0) {
      const double jitter = 1.0 + noise_.gaussian_rel_sigma * rng_.gaussian();
      count = std::max<std::int64_t>(
          0, static_cast<std::int64_t>(std::llround(static_cast<double>(count) * jitter)));
    }
  }
  if (noise_.round_to_3_sig) count = round_to_sig_digits(count, 3);
  return RawSample{render_query(q), year, count,
                   format_rfc3339_utc(clock_->now()), session_id_, id()};
}

ReplayProvider::ReplayProvider(std::vector<RawSample> samples) {
  for (RawSample& s : samples) {
    auto key = std::make_pair(s.query_canonical, s.year);
    pending_[std::move(key)].push_back(std::move(s));
  }
}

RawSample ReplayProvider::fetch_count(const Query& q, int year) {
  const std::string canonical = render_query(q);
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = pending_.find({canonical, year});
  if (it == pending_.end() || it->second.empty()) {
    throw ProviderError("replay exhausted: no stored sample remaining for (" +
                        canonical + ", " + std::to_string(year) + ")");
  }
  RawSample s = std::move(it->second.front());
  it->second.pop_front();
  return s;
}

LiveProviderConfig live_provider_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("provider config root must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    static const char* allowed[] = {"url_template",    "extraction_rule",
                                    "min_request_interval_ms", "max_retries",
                                    "timeout_ms",      "date_format",
                                    "user_agent"};
    if (std::find_if(std::begin(allowed), std::end(allowed), [&](const char* a) {
          return key == a;
        }) == std::end(allowed)) {
      throw ConfigError("unknown key \"" + key + "\" in provider config");
    }
  }
  LiveProviderConfig c;
  if (!j.contains("url_template") || !j.at("url_template").is_string() ||
      !j.contains("extraction_rule") || !j.at("extraction_rule").is_string()) {
    throw ConfigError("provider config requires \"url_template\" and \"extraction_rule\"");
  }
  c.url_template = j.at("url_template").get<std::string>();
  c.extraction_rule = j.at("extraction_rule").get<std::string>();
  if (j.contains("min_request_interval_ms")) {
    c.min_request_interval = std::chrono::milliseconds(j.at("min_request_interval_ms").get<std::int64_t>());
  }
  if (j.contains("max_retries")) c.max_retries = j.at("max_retries").get<int>();
  if (j.contains("timeout_ms")) {
    c.timeout = std::chrono::milliseconds(j.at("timeout_ms").get<std::int64_t>());
  }
  if (j.contains("date_format")) c.date_format = j.at("date_format").get<std::string>();
  if (j.contains("user_agent")) c.user_agent = j.at("user_agent").get<std::string>();
  return c;
}

bool offline_mode() {
  const char* v = std::getenv("NWD_LENS_OFFLINE");
  return v != nullptr && std::string_view(v) == "1";
}

HttpResponse http_get(const std::string& url, const LiveProviderConfig& config) {
  static const std::regex url_re(R"(^(https?)://([^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, url_re)) {
    return HttpResponse{0, "", "unsupported URL (expected http://host[:port]/path): " + url};
  }
  if (m[1].str() == "https") {
    return HttpResponse{0, "", "https is not compiled in; use an http endpoint or a proxy"};
  }
  httplib::Client client(m[1].str() + "://" + m[2].str());
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
  client.set_connection_timeout(secs.count(), 0);
  client.set_read_timeout(secs.count(), 0);
  httplib::Headers headers{{"User-Agent", config.user_agent}};
  const std::string path = m[3].matched ? m[3].str() : "/";
  auto res = client.Get(path, headers);
  if (!res) {
    return HttpResponse{0, "", "transport error: " + httplib::to_string(res.error())};
  }
  return HttpResponse{res->status, res->body, ""};
}

LiveProvider::LiveProvider(LiveProviderConfig config, std::string session_id,
                           std::shared_ptr<Clock> clock, HttpGetFn transport)
    : config_(std::move(config)),
      session_id_(std::move(session_id)),
      clock_(clock_or_system(std::move(clock))),
      transport_(transport ? std::move(transport) : http_get) {
  for (const char* placeholder : {"{query}", "{start_date}", "{end_date}"}) {
    if (config_.url_template.find(placeholder) == std::string::npos) {
      throw ProviderError(std::string("url_template lacks placeholder ") + placeholder);
    }
  }
  std::regex re;
  try {
    re = std::regex(config_.extraction_rule);
  } catch (const std::regex_error& e) {
    throw ProviderError("extraction_rule is not a valid regex: " + std::string(e.what()));
  }
  if (re.mark_count() != 1) {
    throw ProviderError("extraction_rule must have exactly one capture group, has " +
                        std::to_string(re.mark_count()));
  }
  if (config_.min_request_interval.count() < 0) {
    throw ProviderError("min_request_interval must be non-negative");
  }
}

std::string LiveProvider::build_url(const Query& q, int year) const {
  const YearWindow window = year_window(year);
  const std::string query = percent_encode(render_query(q));
  const std::string start = percent_encode(format_date(window.start, config_.date_format));
  const std::string end = percent_encode(format_date(window.end, config_.date_format));
  std::string url = config_.url_template;
  const auto replace_all = [&url](std::string_view needle, const std::string& value) {
    std::size_t pos = 0;
    while ((pos = url.find(needle, pos)) != std::string::npos) {
      url.replace(pos, needle.size(), value);
      pos += value.size();
    }
  };
  replace_all("{query}", query);
  replace_all("{start_date}", start);
  replace_all("{end_date}", end);
  return url;
}

std::int64_t LiveProvider::extract_count(const std::string& body, const std::string& rule) {
  const std::regex re(rule);
  std::smatch m;
  if (!std::regex_search(body, m, re) || m.size() < 2) {
    throw ProviderError("extraction rule matched nothing; page format may have drifted");
  }
  std::string digits;
  for (char c : m[1].str()) {
    if (c >= '0' && c <= '9') digits.push_back(c);
    // "," and "." are grouping separators in engine count displays
  }
  if (digits.empty()) {
    throw ProviderError("extraction rule matched \"" + m[1].str() +
                        "\" but it contains no digits");
  }
  if (digits.size() > 18) {
    throw ProviderError("extracted count is implausibly large: " + digits);
  }
  return std::stoll(digits);
}

void LiveProvider::wait_for_slot() {
  std::lock_guard<std::mutex> lock(mutex_);
  const auto now = clock_->now();
  if (last_request_ && now < *last_request_ + config_.min_request_interval) {
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        *last_request_ + config_.min_request_interval - now);
    clock_->sleep_for(remaining);
  }
  last_request_ = clock_->now();
}

RawSample LiveProvider::fetch_count(const Query& q, int year) {
  if (offline_mode()) {
    throw ProviderError("offline mode (NWD_LENS_OFFLINE=1): refusing live fetch");
  }
  const std::string url = build_url(q, year);
  const int attempts = 1 + std::max(0, config_.max_retries);
  std::string last_error;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    wait_for_slot();
    const HttpResponse res = transport_(url, config_);
    if (!res.error.empty()) {
      last_error = res.error;
      continue;
    }
    if (res.status < 200 || res.status >= 300) {
      last_error = "HTTP status " + std::to_string(res.status);
      continue;
    }
    const std::int64_t count = extract_count(res.body, config_.extraction_rule);
    return RawSample{render_query(q), year, count,
                     format_rfc3339_utc(clock_->now()), session_id_, id()};
  }
  throw ProviderError("live fetch failed after " + std::to_string(attempts) +
                      " attempts (" + last_error + "): " + url);
}

ProtocolSummary run_protocol(Provider& provider, const StudyConfig& config,
                             MeasurementStore& store) {
  ProtocolSummary summary;
  const auto pairs = study_pairs(config);

  const auto fetch_into_store = [&](const Query& q, int year) {
    ++summary.queries_run;
    try {
      const RawSample sample = provider.fetch_count(q, year);
      const RawSample batch[] = {sample};
      store.append_samples(batch);
      ++summary.samples_written;
    } catch (const ProviderError& e) {
      ++summary.failures;
      summary.failure_messages.push_back(render_query(q) + " @" + std::to_string(year) +
                                         ": " + e.what());
    }
  };

  for (int year = config.first_year; year <= config.last_year; ++year) {
    for (const TermSpec& term : config.terms) {
      const Query q = Query::phrase(term.text);
      for (int r = 0; r < config.repetitions_single; ++r) fetch_into_store(q, year);
    }
    for (const auto& [u, v] : pairs) {
      const Query q = Query::and_of(Query::phrase(u.text), Query::phrase(v.text));
      for (int r = 0; r < config.repetitions_joint; ++r) fetch_into_store(q, year);
    }
  }
  return summary;
}

}  // namespace nwdlens
