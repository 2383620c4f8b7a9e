#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "radtext/embed.hpp"
#include "radtext/error.hpp"
#include "radtext/random.hpp"
#include "radtext/synth.hpp"

using namespace radtext;

namespace {

std::vector<std::size_t> code_lengths(const HuffmanTree& t) {
  std::vector<std::size_t> out;
  for (const auto& c : t.codes) out.push_back(c.size());
  return out;
}

double expected_length(std::span<const std::size_t> freqs, std::span<const std::size_t> lengths) {
  double s = 0.0;
  for (std::size_t i = 0; i < freqs.size(); ++i) s += static_cast<double>(freqs[i] * lengths[i]);
  return s;
}

// Minimum weighted depth over every full binary tree, by trying every merge order.
double brute_force_optimum(std::vector<std::size_t> weights) {
  if (weights.size() == 1) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < weights.size(); ++i)
    for (std::size_t j = i + 1; j < weights.size(); ++j) {
      std::vector<std::size_t> rest;
      for (std::size_t k = 0; k < weights.size(); ++k)
        if (k != i && k != j) rest.push_back(weights[k]);
      const std::size_t merged = weights[i] + weights[j];
      rest.push_back(merged);
      best = std::min(best, static_cast<double>(merged) + brute_force_optimum(rest));
    }
  return best;
}

bool prefix_free(const HuffmanTree& t) {
  for (std::size_t a = 0; a < t.codes.size(); ++a)
    for (std::size_t b = 0; b < t.codes.size(); ++b) {
      if (a == b) continue;
      const auto& x = t.codes[a];
      const auto& y = t.codes[b];
      if (x.size() <= y.size() && std::equal(x.begin(), x.end(), y.begin())) return false;
    }
  return true;
}

EmbeddingModel random_model(std::size_t V, std::size_t dim, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  std::vector<std::string> words;
  std::vector<std::size_t> freqs;
  for (std::size_t i = 0; i < V; ++i) {
    words.push_back("w" + std::to_string(i));
    freqs.push_back(1 + rng.below(20));
  }
  std::sort(freqs.rbegin(), freqs.rend());
  SkipGramConfig cfg;
  cfg.dim = dim;
  cfg.seed = seed;
  EmbeddingModel m = init_embedding(Vocabulary(words, freqs), cfg);
  for (double& v : m.input) v = rng.normal() * scale;
  for (double& v : m.inner) v = rng.normal() * scale;
  return m;
}

}  // namespace

TEST_CASE("huffman: small fixed cases") {
  std::vector<std::size_t> two{5, 3};
  CHECK(code_lengths(build_huffman(two)) == std::vector<std::size_t>{1, 1});
  std::vector<std::size_t> f{4, 2, 1, 1};
  CHECK(code_lengths(build_huffman(f)) == std::vector<std::size_t>{1, 2, 3, 3});
  std::vector<std::size_t> eq{1, 1, 1, 1};
  CHECK(code_lengths(build_huffman(eq)) == std::vector<std::size_t>{2, 2, 2, 2});
  std::vector<std::size_t> one{3};
  CHECK_THROWS_AS(build_huffman(one), DataError);
  std::vector<std::size_t> zero{3, 0};
  CHECK_THROWS_AS(build_huffman(zero), DataError);
}

TEST_CASE("huffman: optimal and prefix-free against brute force") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t V = 2 + rng.below(4);
    std::vector<std::size_t> f(V);
    for (auto& x : f) x = 1 + rng.below(10);
    const HuffmanTree t = build_huffman(f);
    const auto lengths = code_lengths(t);
    CHECK(prefix_free(t));
    CHECK(expected_length(f, lengths) == doctest::Approx(brute_force_optimum(f)));
    for (std::size_t w = 0; w < V; ++w) {
      CHECK(t.paths[w].size() == t.codes[w].size());
      CHECK(t.paths[w].front() == static_cast<int>(V) - 2);
      for (std::size_t u = 0; u < V; ++u)
        if (f[w] > f[u]) CHECK(lengths[w] <= lengths[u]);
    }
  }
}

TEST_CASE("hs_probability: normalisation and degenerate cases") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const EmbeddingModel m = random_model(64, 8, seed);
    for (std::size_t c = 0; c < 64; c += 9) {
      double total = 0.0;
      for (std::size_t w = 0; w < 64; ++w) total += hs_probability(m, c, w);
      CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
  EmbeddingModel two = random_model(2, 4, 3);
  CHECK(hs_probability(two, "w0", "w0") + hs_probability(two, "w0", "w1") == doctest::Approx(1.0).epsilon(1e-15));

  EmbeddingModel zero = random_model(10, 4, 4);
  std::fill(zero.input.begin(), zero.input.end(), 0.0);
  std::fill(zero.inner.begin(), zero.inner.end(), 0.0);
  for (std::size_t w = 0; w < 10; ++w)
    CHECK(hs_probability(zero, 0, w) == std::ldexp(1.0, -static_cast<int>(zero.tree.codes[w].size())));
  CHECK_THROWS_AS(hs_probability(zero, "w0", "nope"), DataError);
}

TEST_CASE("hs gradient matches central differences") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    EmbeddingModel m = random_model(12, 5, seed, 0.7);
    const std::size_t c = seed % 12;
    const std::size_t t = (seed * 5) % 12;
    const HsGradient g = hs_loss_gradient(m, c, t);
    CHECK(g.loss == doctest::Approx(-std::log(hs_probability(m, c, t))));
    const double h = 1e-5;
    auto loss = [&] { return hs_loss_gradient(m, c, t).loss; };
    auto check = [&](double& param, double analytic) {
      const double saved = param;
      param = saved + h;
      const double up = loss();
      param = saved - h;
      const double down = loss();
      param = saved;
      const double numeric = (up - down) / (2 * h);
      CHECK(std::abs(numeric - analytic) / std::max(1.0, std::abs(numeric) + std::abs(analytic)) <= 1e-4);
    };
    for (std::size_t d = 0; d < m.dim; ++d) check(m.input[c * m.dim + d], g.d_context[d]);
    for (std::size_t l = 0; l < g.d_path.size(); ++l)
      for (std::size_t d = 0; d < m.dim; ++d)
        check(m.inner[static_cast<std::size_t>(m.tree.paths[t][l]) * m.dim + d], g.d_path[l][d]);
  }
}

TEST_CASE("subsampling discard probability") {
  for (double f : {1e-6, 0.01, 0.3, 1.0}) CHECK(discard_probability(f, 1.0) == 0.0);
  CHECK(discard_probability(0.04, 0.01) == doctest::Approx(0.5));
  CHECK(discard_probability(0.005, 0.01) == 0.0);
}

TEST_CASE("skip-gram: clones end up as nearest neighbours") {
  synth::CloneCorpusSpec spec;
  spec.sentences = 2000;
  const auto corpus = synth::generate_context_clone_corpus(spec);
  const Vocabulary vocab = build_vocabulary(corpus.streams, 1);
  SkipGramConfig cfg;
  cfg.dim = 32;
  cfg.epochs = 3;
  cfg.seed = 11;
  const EmbeddingModel m = train_skipgram(vocab, corpus.streams, cfg);
  for (double v : m.input) REQUIRE(std::isfinite(v));
  for (const auto& [a, b] : corpus.clones) {
    CHECK(cosine_similarity(m, a, b) >= 0.7);
    CHECK(nearest(m, a, 1).front().first == b);
    CHECK(cosine_similarity(m, a, b) == doctest::Approx(cosine_similarity(m, b, a)));
  }
  const EmbeddingModel again = train_skipgram(vocab, corpus.streams, cfg);
  CHECK(again.input == m.input);
  CHECK(again.inner == m.inner);
}

TEST_CASE("skip-gram: pair budget and config errors") {
  synth::CloneCorpusSpec spec;
  spec.sentences = 200;
  const auto corpus = synth::generate_context_clone_corpus(spec);
  const Vocabulary vocab = build_vocabulary(corpus.streams, 1);
  SkipGramConfig cfg;
  cfg.dim = 8;
  cfg.max_pairs = 50000;
  CHECK(train_skipgram(vocab, corpus.streams, cfg).pairs_trained == 50000);
  cfg.dim = 0;
  CHECK_THROWS_AS(train_skipgram(vocab, corpus.streams, cfg), ConfigError);
  cfg.dim = 8;
  cfg.window = 0;
  CHECK_THROWS_AS(train_skipgram(vocab, corpus.streams, cfg), ConfigError);
}

TEST_CASE("nearest: ordering and bounds") {
  const EmbeddingModel m = random_model(6, 3, 9);
  const auto all = nearest(m, "w2", 100);
  CHECK(all.size() == 5);
  for (std::size_t i = 0; i + 1 < all.size(); ++i) CHECK(all[i].second >= all[i + 1].second);
  for (const auto& [w, c] : all) {
    CHECK(w != "w2");
    CHECK(c >= -1.0);
    CHECK(c <= 1.0);
  }
  CHECK(cosine_similarity(m, "w3", "w3") == doctest::Approx(1.0));
  CHECK_THROWS_AS(nearest(m, "zz", 1), DataError);

  EmbeddingModel tied = random_model(4, 2, 1);
  for (std::size_t w = 0; w < 4; ++w) {
    tied.input[w * 2] = 1.0;
    tied.input[w * 2 + 1] = 0.0;
  }
  const auto ranked = nearest(tied, "w1", 3);
  CHECK(ranked[0].first == "w0");
  CHECK(ranked[1].first == "w2");
  CHECK(ranked[2].first == "w3");
}

TEST_CASE("vector text and container round trips") {
  const EmbeddingModel m = random_model(7, 4, 2);
  const EmbeddingModel t = parse_vectors_text(format_vectors_text(m));
  CHECK(t.words == m.words);
  for (std::size_t i = 0; i < m.input.size(); ++i) CHECK(t.input[i] == m.input[i]);
  CHECK(format_vectors_text(m).substr(0, 4) == "7 4\n");
  CHECK_THROWS_AS(parse_vectors_text("2 3\na 1 2 3\n"), ParseError);
  CHECK_THROWS_AS(parse_vectors_text("1 2\na 1 x\n"), ParseError);

  const EmbeddingModel c = embedding_from_container(decode_container(encode_container(embedding_to_container(m))));
  CHECK(c.words == m.words);
  CHECK(c.frequencies == m.frequencies);
  CHECK(c.tree.codes == m.tree.codes);
  CHECK(hs_probability(c, 1, 2) == doctest::Approx(hs_probability(m, 1, 2)).epsilon(1e-5));
}
