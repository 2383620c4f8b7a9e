#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace radtext {

/// Text normalization settings shared by every module that tokenizes text.
struct PreprocessConfig {
  std::unordered_set<std::string> stopwords;
  bool stem = true;
  bool keep_digits = false;
  int min_count = 1;

  /// Shipped stopword list, stemming on, digits dropped, min_count 1.
  static PreprocessConfig defaults();
  /// Reads `key = value` lines: stopword_path, stem, keep_digits, min_count.
  /// Relative stopword paths resolve against the config file's directory.
  static PreprocessConfig from_file(const std::string& path);
  /// Same settings with stopword removal disabled.
  PreprocessConfig without_stopwords() const;
};

std::unordered_set<std::string> parse_word_list(std::string_view text);

struct Sentence {
  std::size_t index = 0;
  std::string raw;
  std::vector<std::string> tokens;
  std::pair<std::size_t, std::size_t> char_span;  // [start, end) into Report::text
};

struct Report {
  std::string report_id;
  std::optional<std::string> accession;
  std::string text;
  std::vector<Sentence> sentences;
};

/// Lowercase, split into [a-z0-9-] runs, drop stopwords (and digit tokens
/// unless kept), then stem.
std::vector<std::string> normalize(std::string_view raw, const PreprocessConfig& config);

/// Splits on [.?!] followed by whitespace and an uppercase letter or digit,
/// unless the word carrying the period is a known abbreviation.
std::vector<std::pair<std::size_t, std::size_t>> split_sentences(std::string_view text);

Report make_report(std::string report_id, std::optional<std::string> accession, std::string text,
                   const PreprocessConfig& config);

/// One JSON object per line with `report_id`, `text` and optional `accession`.
std::vector<Report> ingest_reports(const std::string& path, const PreprocessConfig& config);
std::vector<Report> parse_reports_jsonl(std::string_view content, const PreprocessConfig& config);

class Vocabulary {
 public:
  static constexpr int kNotFound = -1;

  Vocabulary() = default;
  /// Ids are assigned in the given order.
  Vocabulary(std::vector<std::string> tokens, std::vector<std::size_t> frequencies);

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  int id(std::string_view token) const;
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  std::size_t frequency(std::size_t id) const { return frequencies_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::vector<std::size_t>& frequencies() const { return frequencies_; }
  std::size_t total_token_count() const { return total_; }

  /// TSV, one `token<TAB>frequency` line per id.
  std::string to_tsv() const;
  static Vocabulary from_tsv(std::string_view tsv);

 private:
  std::vector<std::string> tokens_;
  std::vector<std::size_t> frequencies_;
  std::unordered_map<std::string, int> index_;
  std::size_t total_ = 0;
};

/// Counts tokens over all sentences; keeps those with frequency >= min_count.
/// Ids are ordered by descending frequency, then token.
Vocabulary build_vocabulary(const std::vector<Report>& reports, int min_count);
Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& token_streams, int min_count);

struct BowDocument {
  std::string doc_id;
  std::vector<std::pair<int, int>> terms;  // (term_id, count), ascending term_id
  int length = 0;                          // N_d
};

BowDocument to_bow(std::string doc_id, const std::vector<std::string>& tokens, const Vocabulary& vocab);
BowDocument to_bow(const Report& report, const Vocabulary& vocab);

/// All sentence tokens of a report, in order.
std::vector<std::string> report_tokens(const Report& report);

}  // namespace radtext
