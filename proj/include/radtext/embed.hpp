#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "radtext/container.hpp"
#include "radtext/corpus.hpp"

namespace radtext {

/// Binary Huffman tree over word frequencies. Inner nodes are numbered
/// 0..V-2 in creation order; the root is V-2.
struct HuffmanTree {
  std::vector<std::vector<std::uint8_t>> codes;  // per word, root to leaf
  std::vector<std::vector<int>> paths;           // inner node per code bit, root first

  std::size_t vocab_size() const { return codes.size(); }
};

/// Greedy min-merge; among equal weights the lower node id (leaves first,
/// by word id) is merged first and takes bit 0.
HuffmanTree build_huffman(std::span<const std::size_t> frequencies);

struct SkipGramConfig {
  std::size_t dim = 256;
  int window = 10;          // maximum; the effective window is uniform in [1, window]
  double subsample = 0.01;  // discard probability 1 - sqrt(subsample / f)
  int epochs = 5;
  double lr_start = 0.025;
  double lr_end = 0.0001;
  std::uint64_t seed = 1;
  std::size_t max_pairs = 0;  // stop after this many (center, context) pairs; 0 = run all epochs
};

struct EmbeddingModel {
  std::vector<std::string> words;
  std::vector<std::size_t> frequencies;
  std::size_t dim = 0;
  std::vector<double> input;  // V x dim word vectors
  std::vector<double> inner;  // (V-1) x dim inner-node vectors
  HuffmanTree tree;
  SkipGramConfig config;
  std::size_t pairs_trained = 0;

  std::size_t vocab_size() const { return words.size(); }
  /// Word id, or -1.
  int id(std::string_view word) const;
  std::span<const double> vector(std::size_t word_id) const {
    return std::span<const double>(input).subspan(word_id * dim, dim);
  }
  /// Vector of a word; throws DataError when out of vocabulary.
  std::span<const double> vector(std::string_view word) const;

  void rebuild_index();

 private:
  std::unordered_map<std::string, int> index_;
};

/// Model with small random input vectors and zero inner vectors.
EmbeddingModel init_embedding(const Vocabulary& vocab, const SkipGramConfig& config);

/// Skip-gram with hierarchical softmax, single worker, deterministic by seed.
EmbeddingModel train_skipgram(const Vocabulary& vocab, const std::vector<std::vector<std::string>>& streams,
                              const SkipGramConfig& config);

/// Probability that the discard rule drops a word with corpus fraction f.
double discard_probability(double f, double subsample);

/// p(target | context): product of path sigmoids along the target's code.
double hs_probability(const EmbeddingModel& model, std::string_view context_word, std::string_view target_word);
double hs_probability(const EmbeddingModel& model, std::size_t context, std::size_t target);

struct HsGradient {
  double loss = 0.0;                       // -log p(target | context)
  std::vector<double> d_context;           // dim
  std::vector<std::vector<double>> d_path; // one dim-vector per inner node on the target's path
};

HsGradient hs_loss_gradient(const EmbeddingModel& model, std::size_t context, std::size_t target);

double cosine_similarity(const EmbeddingModel& model, std::string_view a, std::string_view b);

/// Top-k words by cosine to the query, query excluded, ties by word id.
std::vector<std::pair<std::string, double>> nearest(const EmbeddingModel& model, std::string_view query,
                                                    std::size_t k);

/// "V dim" header, then one `word v1 ... vdim` line per word.
std::string format_vectors_text(const EmbeddingModel& model);
/// Vectors only; the tree is rebuilt with unit frequencies and inner vectors are zero.
EmbeddingModel parse_vectors_text(std::string_view text);

Container embedding_to_container(const EmbeddingModel& model);
EmbeddingModel embedding_from_container(const Container& c);

}  // namespace radtext
