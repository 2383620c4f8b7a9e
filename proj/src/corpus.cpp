#include "radtext/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <cctype>
#include <json.hpp>
#include <sstream>

#include "radtext/default_data.hpp"
#include "radtext/error.hpp"
#include "radtext/stemmer.hpp"
#include "text_util.hpp"

namespace radtext {
namespace {

bool token_char(char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-'; }

bool parse_bool(std::string_view v, const std::string& key) {
  if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "off" || v == "0" || v == "no") return false;
  throw ParseError("preprocess config: bad boolean for '" + key + "'");
}

const std::unordered_set<std::string>& abbreviations() {
  static const auto set = parse_word_list(data::k_abbreviations);
  return set;
}

}  // namespace

std::unordered_set<std::string> parse_word_list(std::string_view text) {
  std::unordered_set<std::string> words;
  for (std::string_view line : detail::split_lines(text)) {
    line = detail::trim(line);
    if (line.empty() || line.front() == '#') continue;
    std::string w(line);
    std::transform(w.begin(), w.end(), w.begin(), detail::ascii_lower);
    words.insert(std::move(w));
  }
  return words;
}

PreprocessConfig PreprocessConfig::defaults() {
  PreprocessConfig c;
  c.stopwords = parse_word_list(data::k_stopwords);
  return c;
}

PreprocessConfig PreprocessConfig::from_file(const std::string& path) {
  PreprocessConfig c = defaults();
  const std::string text = detail::read_file(path);
  std::size_t line_no = 0;
  for (std::string_view line : detail::split_lines(text)) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ParseError("preprocess config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string value(detail::trim(line.substr(eq + 1)));
    if (key == "stopword_path") {
      std::filesystem::path p(value);
      if (p.is_relative()) p = std::filesystem::path(path).parent_path() / p;
      c.stopwords = parse_word_list(detail::read_file(p.string()));
    } else if (key == "stem") {
      c.stem = parse_bool(value, key);
    } else if (key == "keep_digits") {
      c.keep_digits = parse_bool(value, key);
    } else if (key == "min_count") {
      try {
        c.min_count = std::stoi(value);
      } catch (const std::exception&) {
        throw ParseError("preprocess config: bad integer for min_count");
      }
      if (c.min_count < 1) throw ConfigError("preprocess config: min_count must be >= 1");
    } else {
      throw ParseError("preprocess config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  return c;
}

PreprocessConfig PreprocessConfig::without_stopwords() const {
  PreprocessConfig c = *this;
  c.stopwords.clear();
  return c;
}

std::vector<std::string> normalize(std::string_view raw, const PreprocessConfig& config) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    std::string_view tok = current;
    while (!tok.empty() && tok.front() == '-') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == '-') tok.remove_suffix(1);
    if (!tok.empty()) {
      const bool has_letter = std::any_of(tok.begin(), tok.end(), [](char c) { return c >= 'a' && c <= 'z'; });
      std::string t(tok);
      if ((has_letter || config.keep_digits) && !config.stopwords.contains(t)) {
        tokens.push_back(config.stem && has_letter ? default_stemmer().stem(t) : std::move(t));
      }
    }
    current.clear();
  };
  for (char ch : raw) {
    const char c = detail::ascii_lower(ch);
    if (token_char(c)) {
      current.push_back(c);
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

std::vector<std::pair<std::size_t, std::size_t>> split_sentences(std::string_view text) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  auto emit = [&](std::size_t start, std::size_t end) {
    while (start < end && is_space(text[start])) ++start;
    while (end > start && is_space(text[end - 1])) --end;
    if (start < end) spans.emplace_back(start, end);
  };

  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '?' && c != '!') continue;
    std::size_t j = i + 1;
    if (j >= text.size() || !is_space(text[j])) continue;
    while (j < text.size() && is_space(text[j])) ++j;
    if (j >= text.size()) continue;
    const char next = text[j];
    if (!((next >= 'A' && next <= 'Z') || (next >= '0' && next <= '9'))) continue;
    if (c == '.') {
      std::size_t w = i;
      while (w > start && !is_space(text[w - 1])) --w;
      std::string word(text.substr(w, i + 1 - w));
      std::size_t lead = 0;
      while (lead < word.size() && !std::isalnum(static_cast<unsigned char>(word[lead]))) ++lead;
      word.erase(0, lead);
      std::transform(word.begin(), word.end(), word.begin(), detail::ascii_lower);
      if (abbreviations().contains(word)) continue;
    }
    emit(start, i + 1);
    start = i + 1;
  }
  emit(start, text.size());
  return spans;
}

Report make_report(std::string report_id, std::optional<std::string> accession, std::string text,
                   const PreprocessConfig& config) {
  Report r{std::move(report_id), std::move(accession), std::move(text), {}};
  for (const auto& [b, e] : split_sentences(r.text)) {
    Sentence s;
    s.index = r.sentences.size();
    s.raw = r.text.substr(b, e - b);
    s.tokens = normalize(s.raw, config);
    s.char_span = {b, e};
    r.sentences.push_back(std::move(s));
  }
  return r;
}

std::vector<Report> parse_reports_jsonl(std::string_view content, const PreprocessConfig& config) {
  std::vector<Report> reports;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  for (std::string_view line : detail::split_lines(content)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(where + ": malformed JSON record");
    }
    if (!j.is_object()) throw ParseError(where + ": record is not an object");
    if (!j.contains("report_id") || !j["report_id"].is_string())
      throw ParseError(where + ": missing string field 'report_id'");
    if (!j.contains("text") || !j["text"].is_string()) throw ParseError(where + ": missing string field 'text'");
    std::optional<std::string> accession;
    if (j.contains("accession") && !j["accession"].is_null()) {
      if (!j["accession"].is_string()) throw ParseError(where + ": 'accession' must be a string");
      accession = j["accession"].get<std::string>();
    }
    std::string id = j["report_id"].get<std::string>();
    if (!seen.insert(id).second) throw ParseError(where + ": duplicate report_id '" + id + "'");
    reports.push_back(make_report(std::move(id), std::move(accession), j["text"].get<std::string>(), config));
  }
  return reports;
}

std::vector<Report> ingest_reports(const std::string& path, const PreprocessConfig& config) {
  return parse_reports_jsonl(detail::read_file(path), config);
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::vector<std::size_t> frequencies)
    : tokens_(std::move(tokens)), frequencies_(std::move(frequencies)) {
  if (tokens_.size() != frequencies_.size()) throw ConfigError("vocabulary: token/frequency size mismatch");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second)
      throw DataError("vocabulary: duplicate token '" + tokens_[i] + "'");
    total_ += frequencies_[i];
  }
}

int Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kNotFound : it->second;
}

std::string Vocabulary::to_tsv() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < tokens_.size(); ++i) out << tokens_[i] << '\t' << frequencies_[i] << '\n';
  return out.str();
}

Vocabulary Vocabulary::from_tsv(std::string_view tsv) {
  std::vector<std::string> tokens;
  std::vector<std::size_t> freqs;
  std::size_t line_no = 0;
  for (std::string_view line : detail::split_lines(tsv)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = detail::split(line, '\t');
    if (f.size() != 2) throw ParseError("vocabulary line " + std::to_string(line_no) + ": expected 2 fields");
    tokens.emplace_back(f[0]);
    try {
      freqs.push_back(std::stoull(std::string(f[1])));
    } catch (const std::exception&) {
      throw ParseError("vocabulary line " + std::to_string(line_no) + ": bad frequency");
    }
  }
  return Vocabulary(std::move(tokens), std::move(freqs));
}

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& token_streams, int min_count) {
  if (min_count < 1) throw ConfigError("build_vocabulary: min_count must be >= 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& stream : token_streams)
    for (const auto& t : stream) ++counts[t];
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, n] : counts)
    if (n >= static_cast<std::size_t>(min_count)) kept.emplace_back(tok, n);
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  std::vector<std::size_t> freqs;
  for (auto& [tok, n] : kept) {
    tokens.push_back(std::move(tok));
    freqs.push_back(n);
  }
  return Vocabulary(std::move(tokens), std::move(freqs));
}

Vocabulary build_vocabulary(const std::vector<Report>& reports, int min_count) {
  std::vector<std::vector<std::string>> streams;
  streams.reserve(reports.size());
  for (const auto& r : reports) streams.push_back(report_tokens(r));
  return build_vocabulary(streams, min_count);
}

std::vector<std::string> report_tokens(const Report& report) {
  std::vector<std::string> out;
  for (const auto& s : report.sentences) out.insert(out.end(), s.tokens.begin(), s.tokens.end());
  return out;
}

BowDocument to_bow(std::string doc_id, const std::vector<std::string>& tokens, const Vocabulary& vocab) {
  std::map<int, int> counts;
  for (const auto& t : tokens) {
    const int id = vocab.id(t);
    if (id != Vocabulary::kNotFound) ++counts[id];
  }
  BowDocument doc{std::move(doc_id), {}, 0};
  for (const auto& [id, n] : counts) {
    doc.terms.emplace_back(id, n);
    doc.length += n;
  }
  return doc;
}

BowDocument to_bow(const Report& report, const Vocabulary& vocab) {
  return to_bow(report.report_id, report_tokens(report), vocab);
}

}  // namespace radtext
