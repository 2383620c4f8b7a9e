#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "radtext/container.hpp"
#include "radtext/corpus.hpp"

namespace radtext {

struct LdaConfig {
  int num_topics = 10;
  double alpha = 0.0;  // <= 0 selects 50 / num_topics
  double beta = 0.01;
  int iterations = 200;
  std::uint64_t seed = 1;

  double effective_alpha() const { return alpha > 0.0 ? alpha : 50.0 / num_topics; }
};

/// Collapsed-Gibbs LDA state plus the topic-word matrix derived from it.
struct LdaModel {
  int num_topics = 0;
  int vocab_size = 0;
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  int iterations = 0;

  std::vector<double> phi;                       // K x V row-major, rows sum to 1
  std::vector<std::vector<int>> doc_topic_counts;  // D x K
  std::vector<int> topic_word_counts;            // K x V row-major
  std::vector<int> topic_counts;                 // K
  std::vector<std::vector<int>> doc_tokens;      // expanded term ids per training doc
  std::vector<std::vector<int>> assignments;     // topic per token, parallel to doc_tokens

  double phi_at(int topic, int word) const { return phi[static_cast<std::size_t>(topic) * vocab_size + word]; }
  int word_count(int topic, int word) const {
    return topic_word_counts[static_cast<std::size_t>(topic) * vocab_size + word];
  }
};

/// Called after every sweep with the live sampler state (phi not yet filled).
using SweepObserver = std::function<void(int sweep, const LdaModel& state)>;

/// Runs `iterations` Gibbs sweeps. Phi is built from the topic-word counts
/// averaged over the second half of the sweeps (the first half is burn-in).
LdaModel fit_lda(const std::vector<BowDocument>& docs, int vocab_size, const LdaConfig& config,
                 const SweepObserver& observer = {});

struct FoldInResult {
  std::vector<double> theta;  // averaged over the second half of the sweeps
  double log_likelihood = 0.0;
  int tokens = 0;  // in-vocabulary tokens scored
};

/// Estimates a document's topic mixture with phi frozen.
FoldInResult fold_in(const LdaModel& model, const BowDocument& doc, int iterations, std::uint64_t seed);

struct PerplexityResult {
  double perplexity = 0.0;
  double log_likelihood = 0.0;
  long long tokens = 0;
  int documents = 0;
  std::vector<std::string> warnings;  // documents skipped for having no known tokens
};

PerplexityResult evaluate_perplexity(const LdaModel& model, const std::vector<BowDocument>& heldout,
                                     int fold_in_iterations, std::uint64_t seed);
double perplexity(const LdaModel& model, const std::vector<BowDocument>& heldout, int fold_in_iterations,
                  std::uint64_t seed);

struct SelectionConfig {
  double split_fraction = 0.8;
  std::uint64_t seed = 1;
  int iterations = 200;
  int fold_in_iterations = 50;
  double alpha = 0.0;  // <= 0 selects 50 / K per candidate
  double beta = 0.01;
  double elbow_threshold = 0.01;
  int threads = 1;
};

struct PerplexityReport {
  std::vector<int> candidates;  // ascending
  std::vector<double> scores;
  int chosen = 0;
  int heldout_documents = 0;  // M
  int training_documents = 0;
};

/// Smallest candidate whose relative improvement to the next candidate is
/// below `threshold`; the largest candidate if none qualifies.
int elbow_choice(const std::vector<int>& candidates, const std::vector<double>& scores, double threshold);

PerplexityReport select_topic_count(const std::vector<BowDocument>& docs, int vocab_size,
                                    std::vector<int> candidates, const SelectionConfig& config);

/// Argmax of the fold-in mixture, lowest topic id on ties.
int assign_dominant_topic(const LdaModel& model, const BowDocument& doc, int fold_in_iterations = 50,
                          std::uint64_t seed = 1);

enum class SubtopicSelection {
  kPerParent,      // each parent runs its own elbow selection
  kSharedAverage,  // one count for all parents, from perplexities averaged over parents
};

struct SubtopicConfig {
  std::vector<int> candidates{2, 5, 10};
  int min_docs = 10;
  SubtopicSelection selection = SubtopicSelection::kPerParent;
  SelectionConfig select;
};

struct SubtopicResult {
  std::map<int, LdaModel> models;
  std::map<int, PerplexityReport> reports;
  std::vector<int> skipped_parents;
  std::vector<int> doc_parent;  // dominant parent per input doc
  std::map<int, std::vector<int>> members;  // parent -> doc indices

  /// Dense id across all sub-models, in (parent, sub-topic) order.
  int global_id(int parent, int subtopic) const;
  int total_subtopics() const;
};

SubtopicResult fit_subtopics(const LdaModel& parent, const std::vector<BowDocument>& docs,
                             const SubtopicConfig& config);

/// The n highest-probability words of a topic; ties by lower word id.
std::vector<std::pair<int, double>> top_keywords(const LdaModel& model, int topic_id, std::size_t n = 50);

enum class TopicLevel { kDocument, kDocumentSub, kSentence };
const char* to_string(TopicLevel level);

struct TopicNode {
  TopicLevel level = TopicLevel::kDocument;
  int topic_id = 0;
  std::optional<int> parent;
  std::vector<std::pair<std::string, double>> keywords;
  std::vector<std::string> member_doc_ids;
  std::vector<std::string> member_image_keys;
};

/// One node per topic of `model`; node ids are `id_offset + topic`.
std::vector<TopicNode> make_topic_nodes(TopicLevel level, const LdaModel& model, const Vocabulary& vocab,
                                        std::optional<int> parent = std::nullopt, int id_offset = 0,
                                        std::size_t n_keywords = 50);

Container lda_to_container(const LdaModel& model);
LdaModel lda_from_container(const Container& c);

/// `K,perplexity` rows.
std::string perplexity_csv(const PerplexityReport& report);

}  // namespace radtext
