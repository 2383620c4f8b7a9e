#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "radtext/corpus.hpp"
#include "radtext/embed.hpp"
#include "radtext/keyimage.hpp"

namespace radtext {

struct LexiconEntry {
  std::string term;                 // normalized tokens joined by single spaces
  std::vector<std::string> tokens;
  std::set<std::string> semantic_types;
  bool in_ontology = false;
  bool in_radiology = false;
};

class DiseaseLexicon {
 public:
  DiseaseLexicon() = default;
  explicit DiseaseLexicon(std::vector<LexiconEntry> entries);

  const std::vector<LexiconEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool contains(std::string_view term) const { return index_.count(std::string(term)) > 0; }
  /// True when `token` is a single-token term.
  bool is_term_token(std::string_view token) const { return contains(token); }
  /// Length of the longest term starting at tokens[pos], or 0.
  std::size_t longest_match(const std::vector<std::string>& tokens, std::size_t pos) const;
  std::size_t max_term_length() const { return max_len_; }

 private:
  std::vector<LexiconEntry> entries_;
  std::map<std::string, std::size_t> index_;
  std::size_t max_len_ = 0;
};

/// Tokens for lexicon terms and trigger phrases: the corpus pipeline with
/// stopword removal off, so phrases such as "no evidence of" survive.
PreprocessConfig phrase_config(const PreprocessConfig& config);

/// Both inputs are `term<TAB>semantic_type<TAB>source` TSV. Keeps ontology
/// terms carrying one of `semantic_types` that also occur in the radiology
/// lexicon. Throws DataError on an empty intersection.
DiseaseLexicon parse_lexicon(std::string_view ontology_tsv, std::string_view radiology_tsv,
                             const std::set<std::string>& semantic_types, const PreprocessConfig& config);
DiseaseLexicon load_lexicon(const std::string& ontology_path, const std::string& radiology_path,
                            const std::set<std::string>& semantic_types, const PreprocessConfig& config);
/// Synthetic lexicon shipped with the library, T047 filter.
DiseaseLexicon default_lexicon(const PreprocessConfig& config);

enum class TriggerCategory { kPreNegation, kPostNegation, kPrePossibility, kPostPossibility, kPseudo, kTermination };
const char* to_string(TriggerCategory c);

struct Trigger {
  std::string phrase;
  std::vector<std::string> tokens;
  TriggerCategory category = TriggerCategory::kPreNegation;
};

class TriggerSet {
 public:
  TriggerSet() = default;
  explicit TriggerSet(std::vector<Trigger> triggers);

  /// `phrase<TAB>category`; '#' lines are comments.
  static TriggerSet parse(std::string_view tsv, const PreprocessConfig& config);
  static TriggerSet from_file(const std::string& path, const PreprocessConfig& config);
  static TriggerSet defaults(const PreprocessConfig& config);

  const std::vector<Trigger>& triggers() const { return triggers_; }
  /// Index of the longest trigger starting at tokens[pos], or -1.
  int longest_match(const std::vector<std::string>& tokens, std::size_t pos) const;

 private:
  std::vector<Trigger> triggers_;
  std::map<std::vector<std::string>, std::size_t> index_;
  std::size_t max_len_ = 0;
};

inline constexpr std::size_t kScopeLength = 6;

enum class Polarity { kAsserted, kNegated, kPossible };
const char* to_string(Polarity p);

struct AssertionResult {
  std::string report_id;
  std::size_t sentence_index = 0;
  std::string term;
  Polarity polarity = Polarity::kAsserted;
  std::optional<std::string> trigger;
  std::pair<std::size_t, std::size_t> term_span;  // token [begin, end)
  std::pair<std::size_t, std::size_t> scope;      // trigger scope, or the term span when asserted
};

/// Longest-match term spotting and trigger scoping over already normalized tokens.
std::vector<AssertionResult> detect_assertions(const std::vector<std::string>& tokens, const DiseaseLexicon& lexicon,
                                               const TriggerSet& triggers);
/// Re-normalizes the sentence text with `phrase_config(config)`.
std::vector<AssertionResult> detect_assertions(const Sentence& sentence, const DiseaseLexicon& lexicon,
                                               const TriggerSet& triggers, const PreprocessConfig& config);

/// Every sentence of every report, ordered by (report, sentence).
std::vector<AssertionResult> detect_corpus(const std::vector<Report>& reports, const DiseaseLexicon& lexicon,
                                           const TriggerSet& triggers, const PreprocessConfig& config,
                                           unsigned threads = 1);

struct BigramLabel {
  std::string image_key;
  std::string word1;
  std::string word2;
  std::vector<double> target;  // vector(word1) ++ vector(word2)
};

/// Pairs adjacent single-token lexicon terms greedily left to right; a term
/// without an adjacent partner is ignored. Pairs with an out-of-vocabulary
/// word are skipped and reported through `warnings`.
std::vector<BigramLabel> mine_disease_bigrams(const ContextWindow& window, const DiseaseLexicon& lexicon,
                                              const EmbeddingModel& embeddings,
                                              std::vector<std::string>* warnings = nullptr);

struct Label {
  std::string term;
  bool present = true;
  std::size_t frequency = 0;

  /// "cyst" or "no cyst".
  std::string name() const { return present ? term : "no " + term; }
};

struct LabelSpace {
  std::vector<Label> labels;  // present labels first, then absent; each by frequency desc, term

  std::size_t size() const { return labels.size(); }
  /// Label id, or -1.
  int id(std::string_view term, bool present) const;
  std::size_t present_count() const;
  std::size_t absent_count() const;
};

/// Asserted occurrences count toward (term, present), negated ones toward
/// (term, absent); possible ones are ignored. Throws DataError when nothing
/// reaches min_frequency.
LabelSpace build_label_space(const std::vector<AssertionResult>& results, std::size_t min_frequency = 10);

std::string format_label_space(const LabelSpace& space);
LabelSpace parse_label_space(std::string_view tsv);

/// Distinct labels asserted in each window's sentences, as (image_key, label_id) pairs.
std::vector<std::pair<std::string, int>> assign_labels(const std::vector<ContextWindow>& windows,
                                                       const std::vector<AssertionResult>& results,
                                                       const LabelSpace& space);

struct TermFrequency {
  std::string term;
  std::size_t asserted = 0;
  std::size_t negated = 0;
  std::size_t possible = 0;
};

/// Sorted by asserted count descending, then term.
std::vector<TermFrequency> polarity_frequency_table(const std::vector<AssertionResult>& results);
std::string polarity_frequency_csv(const std::vector<TermFrequency>& table);

std::string format_assertions(const std::vector<AssertionResult>& results);
std::vector<AssertionResult> parse_assertions(std::string_view tsv);

struct WindowTermStats {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t windows = 0;
};

/// Lexicon terms per context window (longest-match count over window tokens).
WindowTermStats lexicon_terms_per_window(const std::vector<ContextWindow>& windows, const DiseaseLexicon& lexicon);

}  // namespace radtext
