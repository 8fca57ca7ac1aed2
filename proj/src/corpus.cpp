#include "nwdlens/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nwdlens/errors.hpp"
#include "nwdlens/rng.hpp"
#include "nwdlens/textutil.hpp"

namespace nwdlens {

using nlohmann::json;

Corpus::Corpus(std::vector<Document> documents, int first_year, int last_year)
    : documents_(std::move(documents)), first_year_(first_year), last_year_(last_year) {
  if (first_year_ > last_year_) {
    throw std::invalid_argument("corpus year range is empty");
  }
  std::set<std::int64_t> ids;
  for (const Document& d : documents_) {
    if (d.year < first_year_ || d.year > last_year_) {
      throw std::invalid_argument("document " + std::to_string(d.id) +
                                  " has year " + std::to_string(d.year) +
                                  " outside corpus range");
    }
    if (!ids.insert(d.id).second) {
      throw std::invalid_argument("duplicate document id " + std::to_string(d.id));
    }
  }
  for (const Document& d : documents_) by_year_[d.year].push_back(&d);
}

const std::vector<const Document*>& Corpus::docs_of_year(int year) const {
  auto it = by_year_.find(year);
  return it == by_year_.end() ? empty_ : it->second;
}

namespace {

bool doc_matches(const std::string& text, const Query& q) {
  switch (q.kind()) {
    case Query::Kind::Phrase:
      return phrase_matches(text, q.text());
    case Query::Kind::And:
      return doc_matches(text, q.left()) && doc_matches(text, q.right());
    case Query::Kind::Or:
      return doc_matches(text, q.left()) || doc_matches(text, q.right());
  }
  return false;
}

}  // namespace

std::int64_t count_hits(const Corpus& corpus, const Query& q, int year) {
  std::int64_t n = 0;
  for (const Document* d : corpus.docs_of_year(year)) {
    if (doc_matches(d->text, q)) ++n;
  }
  return n;
}

namespace {

std::vector<std::int64_t> counts_from_json(const json& j, std::size_t n_years,
                                           const std::string& where) {
  if (!j.is_array() || j.size() != n_years) {
    throw ConfigError(where + ": \"counts\" must be an array with one entry per year");
  }
  std::vector<std::int64_t> counts;
  for (const auto& e : j) {
    if (!e.is_number_integer() || e.get<std::int64_t>() < 0) {
      throw ConfigError(where + ": counts must be non-negative integers");
    }
    counts.push_back(e.get<std::int64_t>());
  }
  return counts;
}

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                    const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; }) == allowed.end()) {
      throw ConfigError("unknown key \"" + key + "\" in " + where);
    }
  }
}

}  // namespace

GrowthSpec growth_spec_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("growth spec root must be a JSON object");
  reject_unknown(j, {"year_range", "seed", "terms", "joints"}, "growth spec");
  GrowthSpec spec;
  if (!j.contains("year_range") || !j.at("year_range").is_array() ||
      j.at("year_range").size() != 2 ||
      !j.at("year_range")[0].is_number_integer() ||
      !j.at("year_range")[1].is_number_integer()) {
    throw ConfigError("growth spec: \"year_range\" must be [first_year, last_year]");
  }
  spec.first_year = j.at("year_range")[0].get<int>();
  spec.last_year = j.at("year_range")[1].get<int>();
  if (spec.first_year > spec.last_year) {
    throw ConfigError("growth spec: first_year > last_year");
  }
  const std::size_t n_years = static_cast<std::size_t>(spec.last_year - spec.first_year + 1);
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer()) {
      throw ConfigError("growth spec: \"seed\" must be an integer");
    }
    spec.seed = j.at("seed").get<std::uint64_t>();
  }
  if (!j.contains("terms") || !j.at("terms").is_array()) {
    throw ConfigError("growth spec: \"terms\" (array) is required");
  }
  for (std::size_t i = 0; i < j.at("terms").size(); ++i) {
    const json& t = j.at("terms")[i];
    const std::string where = "terms[" + std::to_string(i) + "]";
    reject_unknown(t, {"text", "counts"}, where);
    if (!t.contains("text") || !t.at("text").is_string() ||
        t.at("text").get<std::string>().empty()) {
      throw ConfigError(where + ": \"text\" (non-empty string) is required");
    }
    spec.terms.push_back(TermTarget{t.at("text").get<std::string>(),
                                    counts_from_json(t.at("counts"), n_years, where)});
  }
  if (j.contains("joints")) {
    for (std::size_t i = 0; i < j.at("joints").size(); ++i) {
      const json& p = j.at("joints")[i];
      const std::string where = "joints[" + std::to_string(i) + "]";
      reject_unknown(p, {"u", "v", "counts"}, where);
      if (!p.contains("u") || !p.contains("v") || !p.at("u").is_string() ||
          !p.at("v").is_string()) {
        throw ConfigError(where + ": \"u\" and \"v\" (strings) are required");
      }
      spec.joints.push_back(PairTarget{p.at("u").get<std::string>(),
                                       p.at("v").get<std::string>(),
                                       counts_from_json(p.at("counts"), n_years, where)});
    }
  }
  return spec;
}

GrowthSpec load_growth_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open growth spec: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("growth spec is not valid JSON: " + std::string(e.what()));
  }
  return growth_spec_from_json(j);
}

namespace {

// Filler tokens live in their own namespace: 'z' + hex digits can never
// word-boundary-match a studied phrase unless the phrase itself looks
// like a filler token, which the final verification pass would catch.
std::string filler_token(DetRng& rng) {
  static const char* hex = "0123456789abcdef";
  std::string tok = "z";
  const std::size_t len = 3 + rng.uniform_below(5);
  for (std::size_t i = 0; i < len; ++i) {
    tok.push_back(hex[rng.uniform_below(16)]);
  }
  return tok;
}

void append_filler(std::string& text, DetRng& rng, std::size_t min_tokens) {
  const std::size_t n = min_tokens + rng.uniform_below(2);
  for (std::size_t i = 0; i < n; ++i) {
    if (!text.empty()) text.push_back(' ');
    text += filler_token(rng);
  }
}

std::string pair_doc_text(DetRng& rng, const std::string& u, const std::string& v) {
  std::string text;
  append_filler(text, rng, 0);
  if (!text.empty()) text.push_back(' ');
  text += u;
  text.push_back(' ');
  append_filler(text, rng, 1);
  text.push_back(' ');
  text += v;
  std::string tail;
  append_filler(tail, rng, 0);
  if (!tail.empty()) {
    text.push_back(' ');
    text += tail;
  }
  return text;
}

std::string single_doc_text(DetRng& rng, const std::string& t) {
  std::string text;
  append_filler(text, rng, 0);
  if (!text.empty()) text.push_back(' ');
  text += t;
  std::string tail;
  append_filler(tail, rng, 1);
  text.push_back(' ');
  text += tail;
  return text;
}

}  // namespace

Corpus generate_corpus(const GrowthSpec& spec) {
  const std::size_t n_years = static_cast<std::size_t>(spec.last_year - spec.first_year + 1);

  std::map<std::string, const TermTarget*> term_index;
  for (const TermTarget& t : spec.terms) {
    if (!term_index.emplace(t.text, &t).second) {
      throw InfeasibleSpecError("duplicate term target \"" + t.text + "\"");
    }
    if (t.counts.size() != n_years) {
      throw InfeasibleSpecError("term \"" + t.text + "\": counts length mismatch");
    }
  }
  // A phrase occurring inside another phrase makes exact single-count
  // targets unsatisfiable: every placement of the outer phrase is also a
  // hit for the inner one.
  for (const TermTarget& a : spec.terms) {
    for (const TermTarget& b : spec.terms) {
      if (a.text != b.text && phrase_matches(a.text, b.text)) {
        throw InfeasibleSpecError("term \"" + b.text + "\" occurs inside term \"" +
                                  a.text + "\"; exact counts cannot be realized");
      }
    }
  }
  for (const PairTarget& p : spec.joints) {
    if (!term_index.count(p.u) || !term_index.count(p.v)) {
      throw InfeasibleSpecError("joint target (" + p.u + ", " + p.v +
                                ") references an undeclared term");
    }
    if (p.u == p.v) {
      throw InfeasibleSpecError("joint target (" + p.u + ", " + p.v +
                                ") pairs a term with itself");
    }
    if (p.counts.size() != n_years) {
      throw InfeasibleSpecError("joint (" + p.u + ", " + p.v + "): counts length mismatch");
    }
  }

  for (std::size_t k = 0; k < n_years; ++k) {
    const int year = spec.first_year + static_cast<int>(k);
    std::map<std::string, std::int64_t> joint_load;
    for (const PairTarget& p : spec.joints) {
      const std::int64_t j = p.counts[k];
      for (const std::string* t : {&p.u, &p.v}) {
        const std::int64_t single = term_index.at(*t)->counts[k];
        if (j > single) {
          throw InfeasibleSpecError(
              "year " + std::to_string(year) + ": joint(" + p.u + ", " + p.v + ") = " +
              std::to_string(j) + " exceeds single(" + *t + ") = " + std::to_string(single));
        }
        joint_load[*t] += j;
      }
    }
    for (const auto& [text, load] : joint_load) {
      const std::int64_t single = term_index.at(text)->counts[k];
      if (load > single) {
        throw InfeasibleSpecError(
            "year " + std::to_string(year) + ": joint targets involving \"" + text +
            "\" sum to " + std::to_string(load) + " > single target " +
            std::to_string(single) + "; pairwise targets cannot be realized simultaneously");
      }
    }
  }

  DetRng rng(spec.seed);
  std::vector<Document> docs;
  std::int64_t next_id = 1;
  for (std::size_t k = 0; k < n_years; ++k) {
    const int year = spec.first_year + static_cast<int>(k);
    std::vector<std::string> texts;
    for (const PairTarget& p : spec.joints) {
      for (std::int64_t i = 0; i < p.counts[k]; ++i) {
        texts.push_back(pair_doc_text(rng, p.u, p.v));
      }
    }
    for (const TermTarget& t : spec.terms) {
      std::int64_t used = 0;
      for (const PairTarget& p : spec.joints) {
        if (p.u == t.text || p.v == t.text) used += p.counts[k];
      }
      for (std::int64_t i = used; i < t.counts[k]; ++i) {
        texts.push_back(single_doc_text(rng, t.text));
      }
    }
    rng.shuffle(texts);
    for (std::string& text : texts) {
      docs.push_back(Document{next_id++, year, std::move(text)});
    }
  }

  Corpus corpus(std::move(docs), spec.first_year, spec.last_year);

  // The construction is exact by design; re-count everything anyway so a
  // bad vocabulary never yields a silently wrong oracle.
  for (std::size_t k = 0; k < n_years; ++k) {
    const int year = spec.first_year + static_cast<int>(k);
    for (const TermTarget& t : spec.terms) {
      const std::int64_t got = count_hits(corpus, Query::phrase(t.text), year);
      if (got != t.counts[k]) {
        throw InfeasibleSpecError("verification failed: single(" + t.text + ", " +
                                  std::to_string(year) + ") = " + std::to_string(got) +
                                  ", target " + std::to_string(t.counts[k]));
      }
    }
    for (const PairTarget& p : spec.joints) {
      const Query q = Query::and_of(Query::phrase(p.u), Query::phrase(p.v));
      const std::int64_t got = count_hits(corpus, q, year);
      if (got != p.counts[k]) {
        throw InfeasibleSpecError("verification failed: joint(" + p.u + ", " + p.v +
                                  ", " + std::to_string(year) + ") = " + std::to_string(got) +
                                  ", target " + std::to_string(p.counts[k]));
      }
    }
  }
  return corpus;
}

void write_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StoreError("cannot open corpus file for writing: " + path.string());
  for (const Document& d : corpus.documents()) {
    json j{{"id", d.id}, {"year", d.year}, {"text", d.text}};
    out << j.dump() << '\n';
  }
  out.flush();
  if (!out) throw StoreError("corpus write failed: " + path.string());
}

Corpus read_corpus_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StoreError("cannot open corpus file: " + path.string());
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      throw StoreError("corpus line " + std::to_string(line_no) + " is not valid JSON");
    }
    reject_unknown(j, {"id", "year", "text"}, "corpus line " + std::to_string(line_no));
    if (!j.contains("id") || !j.contains("year") || !j.contains("text")) {
      throw StoreError("corpus line " + std::to_string(line_no) + " lacks id/year/text");
    }
    docs.push_back(Document{j.at("id").get<std::int64_t>(), j.at("year").get<int>(),
                            j.at("text").get<std::string>()});
  }
  if (docs.empty()) throw StoreError("corpus file is empty: " + path.string());
  int first = docs.front().year, last = docs.front().year;
  for (const Document& d : docs) {
    first = std::min(first, d.year);
    last = std::max(last, d.year);
  }
  return Corpus(std::move(docs), first, last);
}

std::optional<double> brute_force_nwd(const Corpus& corpus, const TermSpec& u,
                                      const TermSpec& v, int year,
                                      const StudyConfig& config) {
  const double cu = static_cast<double>(count_hits(corpus, Query::phrase(u.text), year));
  const double cv = static_cast<double>(count_hits(corpus, Query::phrase(v.text), year));
  const double joint = static_cast<double>(
      count_hits(corpus, Query::and_of(Query::phrase(u.text), Query::phrase(v.text)), year));
  const double ref = static_cast<double>(
      count_hits(corpus, Query::phrase(config.normalization_ref), year));
  const double big_n = config.normalization_factor * ref;
  const double big_m = std::max(cu, cv);
  const double small_m = std::min(cu, cv);
  if (joint <= 0.0) return std::nullopt;
  if (small_m <= 0.0) return std::nullopt;
  if (big_n <= small_m) return std::nullopt;
  return (std::log(big_m) - std::log(joint)) / (std::log(big_n) - std::log(small_m));
}

}  // namespace nwdlens
