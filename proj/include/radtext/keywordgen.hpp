#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "radtext/classifier.hpp"
#include "radtext/embed.hpp"
#include "radtext/lda.hpp"
#include "radtext/termmine.hpp"

namespace radtext {

/// Ranked keywords per topic id, as a topic classifier's outputs index them.
using KeywordTable = std::vector<std::vector<std::string>>;

KeywordTable keyword_table(const LdaModel& model, const Vocabulary& vocab, std::size_t n = 50);
/// Sub-topics of every parent, in SubtopicResult::global_id order.
KeywordTable keyword_table(const SubtopicResult& subtopics, const Vocabulary& vocab, std::size_t n = 50);

struct LevelModel {
  TopicLevel level = TopicLevel::kDocument;
  const FeedForwardModel* classifier = nullptr;
  KeywordTable keywords;
};

struct LevelKeyword {
  TopicLevel level = TopicLevel::kDocument;
  int topic = -1;
  std::optional<std::string> keyword;
  double cosine = 0.0;
  std::size_t rank = 0;  // position of the keyword in the topic's list
};

struct InterpretationOutput {
  std::string image_key;
  std::vector<LevelKeyword> levels;
  std::vector<std::pair<std::string, double>> diseases;  // top-5, descending
  std::vector<std::string> warnings;
};

/// Best keyword of one topic list against both halves of a bi-gram output;
/// ties keep the higher-ranked keyword. nullopt when no keyword has a vector.
std::optional<LevelKeyword> match_keyword(std::span<const double> regression_output,
                                          const std::vector<std::string>& keywords,
                                          const EmbeddingModel& embeddings);

/// Per level: predicted topic, then the matched keyword from that topic's
/// list. Without a regression model the keywords are omitted.
std::vector<LevelKeyword> generate_keywords(std::span<const double> feature, const std::vector<LevelModel>& levels,
                                            const FeedForwardModel* regression, const EmbeddingModel* embeddings,
                                            std::vector<std::string>* warnings = nullptr);

InterpretationOutput interpret(const std::string& image_key, std::span<const double> feature,
                               const std::vector<LevelModel>& levels, const FeedForwardModel* regression,
                               const EmbeddingModel* embeddings, const FeedForwardModel* disease_model,
                               const LabelSpace* labels);

/// Lexicon terms (single tokens) present in a context window.
std::set<std::string> ground_truth_words(const ContextWindow& window, const DiseaseLexicon& lexicon);

/// Fraction of scored images whose best-cosine keyword is in its ground
/// truth set. Images with an empty or missing set are not scored.
double recall_at_1(const std::vector<InterpretationOutput>& outputs,
                   const std::map<std::string, std::set<std::string>>& ground_truth);

/// `image_key`, `level:keyword:cosine` per level, then `label:probability` pairs; tab-separated.
std::string format_interpretation(const InterpretationOutput& out);

}  // namespace radtext
