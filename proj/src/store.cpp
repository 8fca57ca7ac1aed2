#include "nwdlens/store.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "nwdlens/errors.hpp"
#include "nwdlens/query.hpp"

namespace nwdlens {

using nlohmann::json;

namespace {

json sample_to_json(const RawSample& s) {
  return json{{"query_canonical", s.query_canonical},
              {"year", s.year},
              {"count", s.count},
              {"observed_at", s.observed_at},
              {"session_id", s.session_id},
              {"provider_id", s.provider_id}};
}

std::optional<RawSample> sample_from_json_line(const std::string& line) {
  json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  if (!j.contains("query_canonical") || !j.contains("year") || !j.contains("count") ||
      !j.contains("observed_at") || !j.contains("session_id") ||
      !j.contains("provider_id")) {
    return std::nullopt;
  }
  RawSample s;
  try {
    s.query_canonical = j.at("query_canonical").get<std::string>();
    s.year = j.at("year").get<int>();
    s.count = j.at("count").get<std::int64_t>();
    s.observed_at = j.at("observed_at").get<std::string>();
    s.session_id = j.at("session_id").get<std::string>();
    s.provider_id = j.at("provider_id").get<std::string>();
  } catch (const json::exception&) {
    return std::nullopt;
  }
  if (s.count < 0) return std::nullopt;
  return s;
}

void check_sample(const RawSample& s) {
  if (s.count < 0) throw StoreError("sample count is negative");
  try {
    parse_query(s.query_canonical);
  } catch (const QueryParseError& e) {
    throw StoreError("sample query_canonical does not parse: \"" + s.query_canonical +
                     "\": " + e.what());
  }
}

}  // namespace

CountStats compute_count_stats(std::string query_canonical, int year,
                               const std::vector<std::int64_t>& counts) {
  CountStats st;
  st.query_canonical = std::move(query_canonical);
  st.year = year;
  st.n = static_cast<int>(counts.size());
  if (st.n == 0) return st;
  double sum = 0.0;
  for (std::int64_t c : counts) sum += static_cast<double>(c);
  st.mean = sum / st.n;
  if (st.n == 1) {
    st.single_sample = true;
    return st;  // std and stderr stay 0 by the degenerate-case rule
  }
  double ss = 0.0;
  for (std::int64_t c : counts) {
    const double d = static_cast<double>(c) - st.mean;
    ss += d * d;
  }
  st.std = std::sqrt(ss / (st.n - 1));
  st.stderr_ = st.std / std::sqrt(static_cast<double>(st.n));
  return st;
}

MeasurementStore::MeasurementStore(std::filesystem::path file) : path_(std::move(file)) {
  load();
}

void MeasurementStore::load() {
  std::ifstream in(path_, std::ios::binary);
  if (!in) return;  // absent file == empty store
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  std::size_t committed = 0;
  std::size_t line_no = 0;
  while (pos < content.size()) {
    ++line_no;
    const std::size_t nl = content.find('\n', pos);
    const bool terminated = nl != std::string::npos;
    const std::string line = content.substr(pos, terminated ? nl - pos : std::string::npos);
    auto sample = line.empty() ? std::nullopt : sample_from_json_line(line);
    if (!sample) {
      if (!terminated) break;  // torn final record from an interrupted write
      if (line.empty()) {      // stray blank line is harmless
        pos = nl + 1;
        committed = pos;
        continue;
      }
      throw StoreError(path_.string() + ": malformed record at line " +
                       std::to_string(line_no));
    }
    index_[{sample->query_canonical, sample->year}].push_back(samples_.size());
    samples_.push_back(std::move(*sample));
    if (!terminated) break;  // complete record, file just lacks the final newline
    pos = nl + 1;
    committed = pos;
  }
  // A record without its newline is only trusted when it parses; the
  // committed size is where the next append may start writing. The next
  // append must then supply the missing newline itself.
  if (pos < content.size()) {
    const std::string tail = content.substr(pos);
    if (sample_from_json_line(tail)) {
      committed = content.size();
      needs_newline_ = true;
    }
  } else {
    committed = content.size();
  }
  committed_bytes_ = committed;
}

std::size_t MeasurementStore::append_samples(std::span<const RawSample> samples) {
  std::lock_guard<std::mutex> lock(mutex_);
  if (samples.empty()) return 0;
  for (const RawSample& s : samples) check_sample(s);

  if (std::filesystem::exists(path_)) {
    std::error_code ec;
    const auto size = std::filesystem::file_size(path_, ec);
    if (!ec && size > committed_bytes_) {
      std::filesystem::resize_file(path_, committed_bytes_, ec);
      if (ec) throw StoreError("cannot truncate torn record in " + path_.string());
    }
  }

  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw StoreError("cannot open store for append: " + path_.string());
  if (needs_newline_) {
    out << '\n';
    committed_bytes_ += 1;
    needs_newline_ = false;
  }
  std::size_t written = 0;
  for (const RawSample& s : samples) {
    const std::string line = sample_to_json(s).dump();
    out << line << '\n';
    out.flush();
    if (!out) {
      throw StoreError("store write failed after " + std::to_string(written) +
                       " of " + std::to_string(samples.size()) + " samples");
    }
    committed_bytes_ += line.size() + 1;
    index_[{s.query_canonical, s.year}].push_back(samples_.size());
    samples_.push_back(s);
    ++written;
  }
  return written;
}

std::optional<CountStats> MeasurementStore::aggregate(std::string_view query_canonical,
                                                      int year) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = index_.find({std::string(query_canonical), year});
  if (it == index_.end() || it->second.empty()) return std::nullopt;
  std::vector<std::int64_t> counts;
  counts.reserve(it->second.size());
  for (std::size_t i : it->second) counts.push_back(samples_[i].count);
  return compute_count_stats(std::string(query_canonical), year, counts);
}

std::optional<CountStats> MeasurementStore::aggregate(std::string_view query_canonical,
                                                      int year,
                                                      std::string_view session_id) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = index_.find({std::string(query_canonical), year});
  if (it == index_.end()) return std::nullopt;
  std::vector<std::int64_t> counts;
  for (std::size_t i : it->second) {
    if (samples_[i].session_id == session_id) counts.push_back(samples_[i].count);
  }
  if (counts.empty()) return std::nullopt;
  return compute_count_stats(std::string(query_canonical), year, counts);
}

std::vector<int> MeasurementStore::years_with_samples(std::string_view query_canonical) const {
  std::lock_guard<std::mutex> lock(mutex_);
  std::vector<int> years;
  const std::string key(query_canonical);
  for (auto it = index_.lower_bound({key, std::numeric_limits<int>::min()});
       it != index_.end() && it->first.first == key; ++it) {
    if (!it->second.empty()) years.push_back(it->first.second);
  }
  return years;
}

}  // namespace nwdlens
