#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "radtext/classifier.hpp"
#include "radtext/corpus.hpp"
#include "radtext/embed.hpp"

namespace radtext::synth {

struct PlantedLdaSpec {
  int num_topics = 5;
  int vocab_size = 50;
  int num_docs = 500;
  int doc_length = 40;
  double alpha = 0.1;
  /// Each topic owns a contiguous block of V / K words and puts no mass elsewhere.
  bool disjoint = true;
  /// Dirichlet concentration for word weights inside a topic's support; <= 0 means uniform.
  double word_concentration = 0.0;
  std::uint64_t seed = 1;
};

struct PlantedCorpus {
  std::vector<BowDocument> docs;
  std::vector<double> phi;                 // K x V row-major
  std::vector<std::vector<double>> theta;  // per document
};

/// Samples documents from the LDA generative process.
PlantedCorpus generate_lda_corpus(const PlantedLdaSpec& spec);

/// Exact log p(w | phi, alpha) by enumerating all K^N topic assignments and
/// integrating the symmetric Dirichlet prior analytically.
double exact_doc_likelihood(std::span<const double> phi, int num_topics, int vocab_size, double alpha,
                            const BowDocument& doc);

/// Largest total-variation distance between matched rows under the best
/// row permutation (exhaustive for K <= 8, greedy otherwise).
double matched_tv_distance(std::span<const double> estimated, std::span<const double> planted, int num_topics,
                           int vocab_size);

struct FeatureDatasetSpec {
  int classes = 3;
  std::size_t per_class = 100;
  std::size_t dim = 8;
  double separation = 5.0;  // norm of each class mean
  double noise = 1.0;       // per-coordinate standard deviation
  std::uint64_t seed = 1;
};

/// Class-conditional isotropic Gaussians around random class means, truncated
/// to each mean's nearest-mean region.
Dataset generate_feature_dataset(const FeatureDatasetSpec& spec);

struct PairedTaskSpec {
  int clusters = 16;          // task A has one class per cluster
  int task_b_classes = 2;     // task B label = cluster % task_b_classes
  std::size_t per_cluster = 60;
  std::size_t dim = 2;
  double radius = 4.0;
  double noise = 0.2;
  std::uint64_t seed = 1;
};

struct PairedTasks {
  Dataset task_a;
  Dataset task_b;  // same features, coarser labels: cluster % task_b_classes
};

/// Two related labelings of one feature distribution: clusters on a circle,
/// task B grouping clusters that are not adjacent.
PairedTasks generate_paired_tasks(const PairedTaskSpec& spec);

struct CloneCorpusSpec {
  int vocab_size = 30;
  int clone_pairs = 2;
  int sentences = 4000;
  int sentence_length = 12;
  double clone_sentence_rate = 0.3;
  std::uint64_t seed = 1;
};

struct CloneCorpus {
  std::vector<std::vector<std::string>> streams;
  std::vector<std::pair<std::string, std::string>> clones;
};

/// Word streams in which each clone pair appears in identical contexts: every
/// sentence containing one clone is emitted again with the other.
CloneCorpus generate_context_clone_corpus(const CloneCorpusSpec& spec);

struct KeywordSuiteSpec {
  std::size_t images = 20;
  int topics = 4;
  std::size_t keywords_per_topic = 10;
  std::size_t filler_words = 10;
  std::size_t dim = 16;
  std::uint64_t seed = 1;
};

/// Images with one-hot features, a topic classifier and a bi-gram regressor
/// whose first output half is exactly the vector of the image's planted
/// keyword; the second half is a filler word outside every topic list.
struct KeywordSuite {
  EmbeddingModel embeddings;
  std::vector<std::vector<std::string>> topic_keywords;
  FeedForwardModel topic_classifier;
  FeedForwardModel regression;
  std::vector<std::string> image_keys;
  std::vector<std::vector<double>> features;
  std::vector<std::string> planted;  // keyword per image
};

KeywordSuite generate_keyword_suite(const KeywordSuiteSpec& spec);

struct ReportCorpusSpec {
  std::size_t reports = 200;
  std::size_t feature_dim = 32;
  double feature_noise = 0.3;
  std::uint64_t seed = 1;
};

struct SyntheticReport {
  std::string report_id;
  std::string accession;
  std::string text;
};

/// Radiology-style reports over four organ themes with asserted, negated and
/// possible disease mentions and key-image references, plus one feature
/// vector per referenced image. Image features mix a theme direction with
/// one direction per disease asserted (or negated) in the referencing sentence.
struct ReportCorpus {
  std::vector<SyntheticReport> reports;
  std::vector<FeatureRecord> features;
};

ReportCorpus generate_report_corpus(const ReportCorpusSpec& spec);

}  // namespace radtext::synth
