#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "radtext/error.hpp"
#include "radtext/lda.hpp"
#include "radtext/random.hpp"
#include "radtext/synth.hpp"

using namespace radtext;

namespace {

LdaModel uniform_model(int K, int V, double alpha) {
  LdaModel m;
  m.num_topics = K;
  m.vocab_size = V;
  m.alpha = alpha;
  m.beta = 0.01;
  m.phi.assign(static_cast<std::size_t>(K) * V, 1.0 / V);
  return m;
}

BowDocument doc_of(std::vector<int> words, const std::string& id = "d") {
  std::map<int, int> counts;
  for (int w : words) ++counts[w];
  BowDocument d{id, {}, 0};
  for (auto [w, n] : counts) {
    d.terms.emplace_back(w, n);
    d.length += n;
  }
  return d;
}

// Topic of each planted block that the fitted topic puts the most mass on.
std::vector<int> planted_block_of_topic(const LdaModel& m, int block) {
  std::vector<int> out;
  for (int k = 0; k < m.num_topics; ++k) {
    std::vector<double> mass(static_cast<std::size_t>(m.vocab_size / block), 0.0);
    for (int w = 0; w < m.vocab_size; ++w) mass[static_cast<std::size_t>(w / block)] += m.phi_at(k, w);
    out.push_back(static_cast<int>(std::max_element(mass.begin(), mass.end()) - mass.begin()));
  }
  return out;
}

}  // namespace

TEST_CASE("single-topic fit collapses to the smoothed unigram distribution") {
  synth::PlantedLdaSpec spec;
  spec.num_topics = 3;
  spec.vocab_size = 12;
  spec.num_docs = 30;
  spec.doc_length = 10;
  const auto corpus = synth::generate_lda_corpus(spec);
  LdaConfig cfg;
  cfg.num_topics = 1;
  cfg.iterations = 5;
  const LdaModel m = fit_lda(corpus.docs, spec.vocab_size, cfg);
  std::vector<double> counts(12, 0.0);
  double total = 0.0;
  for (const auto& d : corpus.docs)
    for (auto [w, n] : d.terms) {
      counts[static_cast<std::size_t>(w)] += n;
      total += n;
    }
  for (int w = 0; w < 12; ++w) CHECK(m.phi_at(0, w) == doctest::Approx((counts[w] + 0.01) / (total + 12 * 0.01)).epsilon(1e-12));
  CHECK(m.alpha == doctest::Approx(50.0));
}

TEST_CASE("fit_lda preconditions") {
  LdaConfig cfg;
  cfg.num_topics = 2;
  CHECK_THROWS_AS(fit_lda({}, 5, cfg), DataError);
  CHECK_THROWS_AS(fit_lda({doc_of({0})}, 5, cfg), ConfigError);  // K > total tokens
  cfg.num_topics = 1;
  CHECK_THROWS_AS(fit_lda({doc_of({0}), BowDocument{"empty", {}, 0}}, 5, cfg), DataError);
  cfg.iterations = 0;
  CHECK_THROWS_AS(fit_lda({doc_of({0})}, 5, cfg), ConfigError);
}

TEST_CASE("count invariants hold after every sweep and phi rows are normalized") {
  synth::PlantedLdaSpec spec;
  spec.num_docs = 100;
  spec.doc_length = 20;
  const auto corpus = synth::generate_lda_corpus(spec);
  LdaConfig cfg;
  cfg.num_topics = 4;
  cfg.iterations = 20;
  int sweeps = 0;
  const LdaModel m = fit_lda(corpus.docs, spec.vocab_size, cfg, [&](int, const LdaModel& s) {
    ++sweeps;
    long total = 0;
    for (int k = 0; k < s.num_topics; ++k) {
      long row = 0;
      for (int w = 0; w < s.vocab_size; ++w) {
        CHECK(s.word_count(k, w) >= 0);
        row += s.word_count(k, w);
      }
      long assigned = 0;
      for (const auto& z : s.assignments) assigned += std::count(z.begin(), z.end(), k);
      CHECK(row == assigned);
      CHECK(row == s.topic_counts[static_cast<std::size_t>(k)]);
      total += row;
    }
    CHECK(total == 100L * 20);
    for (std::size_t d = 0; d < s.doc_topic_counts.size(); ++d) {
      const long n = std::accumulate(s.doc_topic_counts[d].begin(), s.doc_topic_counts[d].end(), 0L);
      CHECK(n == corpus.docs[d].length);
    }
  });
  CHECK(sweeps == 20);
  for (int k = 0; k < m.num_topics; ++k) {
    double row = 0.0;
    for (int w = 0; w < m.vocab_size; ++w) row += m.phi_at(k, w);
    CHECK(std::abs(row - 1.0) <= 1e-9);
  }
}

TEST_CASE("seeded determinism") {
  const auto corpus = synth::generate_lda_corpus({});
  LdaConfig cfg;
  cfg.num_topics = 5;
  cfg.iterations = 10;
  cfg.seed = 42;
  const LdaModel a = fit_lda(corpus.docs, 50, cfg);
  const LdaModel b = fit_lda(corpus.docs, 50, cfg);
  CHECK(a.assignments == b.assignments);
  CHECK(encode_container(lda_to_container(a)) == encode_container(lda_to_container(b)));
  cfg.seed = 43;
  CHECK(fit_lda(corpus.docs, 50, cfg).assignments != a.assignments);
}

TEST_CASE("recovers two planted disjoint topics") {
  synth::PlantedLdaSpec spec;
  spec.num_topics = 2;
  spec.vocab_size = 20;
  spec.num_docs = 200;
  spec.doc_length = 30;
  spec.word_concentration = 1.0;
  spec.seed = 9;
  const auto corpus = synth::generate_lda_corpus(spec);
  LdaConfig cfg;
  cfg.num_topics = 2;
  cfg.alpha = 0.1;
  cfg.iterations = 100;
  const LdaModel m = fit_lda(corpus.docs, spec.vocab_size, cfg);
  CHECK(synth::matched_tv_distance(m.phi, corpus.phi, 2, 20) <= 0.15);
}

TEST_CASE("perplexity of a uniform single-topic model equals V") {
  const LdaModel m = uniform_model(1, 37, 1.0);
  std::vector<BowDocument> docs = {doc_of({0, 1, 1, 5}), doc_of({36, 2}), doc_of({7})};
  CHECK(std::abs(perplexity(m, docs, 10, 1) - 37.0) <= 1e-9);
}

TEST_CASE("held-out documents without known tokens are skipped with a warning") {
  const LdaModel m = uniform_model(1, 4, 1.0);
  const auto r = evaluate_perplexity(m, {doc_of({0, 1}), doc_of({9, 12})}, 10, 1);
  CHECK(r.documents == 1);
  CHECK(r.tokens == 2);
  CHECK(r.warnings.size() == 1);
  CHECK_THROWS_AS(perplexity(m, {doc_of({9})}, 10, 1), DataError);
  CHECK_THROWS_AS(perplexity(m, {}, 10, 1), DataError);
}

TEST_CASE("exact likelihood oracle basics") {
  SUBCASE("K = 1 reduces to a product of word probabilities") {
    const std::vector<double> phi = {0.1, 0.2, 0.3, 0.4};
    const BowDocument d = doc_of({0, 3, 3, 2});
    CHECK(synth::exact_doc_likelihood(phi, 1, 4, 0.7, d) ==
          doctest::Approx(std::log(0.1) + 2 * std::log(0.4) + std::log(0.3)).epsilon(1e-12));
  }
  SUBCASE("topic swap symmetry") {
    const std::vector<double> phi = {0.6, 0.3, 0.1, 0.1, 0.3, 0.6};
    const std::vector<double> swapped = {0.1, 0.3, 0.6, 0.6, 0.3, 0.1};
    const BowDocument d = doc_of({0, 2, 1, 0});
    CHECK(synth::exact_doc_likelihood(phi, 2, 3, 0.5, d) ==
          doctest::Approx(synth::exact_doc_likelihood(swapped, 2, 3, 0.5, d)).epsilon(1e-12));
  }
  SUBCASE("too large") {
    const std::vector<double> phi(3 * 2, 0.5);
    std::vector<int> words(13, 0);
    CHECK_THROWS_AS(synth::exact_doc_likelihood(phi, 3, 2, 1.0, doc_of(words)), ConfigError);
  }
}

TEST_CASE("fold-in likelihood matches exact enumeration on tiny instances") {
  Rng rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    const int K = static_cast<int>(rng.between(1, 3));
    const int V = static_cast<int>(rng.between(2, 6));
    const int N = static_cast<int>(rng.between(1, 6));
    LdaModel m = uniform_model(K, V, 50.0 / K);
    for (int k = 0; k < K; ++k) {
      const auto row = rng.dirichlet(std::vector<double>(static_cast<std::size_t>(V), 1.0));
      std::copy(row.begin(), row.end(), m.phi.begin() + static_cast<std::ptrdiff_t>(k) * V);
    }
    std::vector<int> words;
    for (int i = 0; i < N; ++i) words.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(V))));
    const BowDocument d = doc_of(words);
    const double exact = synth::exact_doc_likelihood(m.phi, K, V, m.alpha, d);
    const double est = fold_in(m, d, 200, static_cast<std::uint64_t>(trial)).log_likelihood;
    CAPTURE(K);
    CAPTURE(N);
    CHECK(std::abs(est - exact) <= 0.05 * std::abs(exact));
  }
}

TEST_CASE("training documents score better than shuffled random documents") {
  synth::PlantedLdaSpec spec;
  spec.num_docs = 150;
  spec.seed = 5;
  const auto corpus = synth::generate_lda_corpus(spec);
  LdaConfig cfg;
  cfg.num_topics = 5;
  cfg.alpha = 0.1;
  cfg.iterations = 60;
  const LdaModel m = fit_lda(corpus.docs, spec.vocab_size, cfg);

  // Same lengths, tokens drawn uniformly from the whole corpus token pool.
  std::vector<int> pool;
  for (const auto& d : corpus.docs)
    for (auto [w, n] : d.terms) pool.insert(pool.end(), static_cast<std::size_t>(n), w);
  Rng rng(17);
  rng.shuffle(pool);
  std::vector<BowDocument> random_docs;
  std::size_t at = 0;
  for (const auto& d : corpus.docs) {
    std::vector<int> words(pool.begin() + static_cast<std::ptrdiff_t>(at),
                           pool.begin() + static_cast<std::ptrdiff_t>(at + static_cast<std::size_t>(d.length)));
    at += static_cast<std::size_t>(d.length);
    random_docs.push_back(doc_of(words));
  }
  CHECK(perplexity(m, corpus.docs, 30, 1) <= perplexity(m, random_docs, 30, 1));
}

TEST_CASE("elbow rule") {
  CHECK(elbow_choice({2, 5, 10, 20}, {100.0, 50.0, 49.8, 49.7}, 0.01) == 5);
  CHECK(elbow_choice({2, 5, 10}, {100.0, 80.0, 60.0}, 0.01) == 10);
  CHECK(elbow_choice({2, 5}, {50.0, 51.0}, 0.01) == 2);
}

TEST_CASE("select_topic_count recovers the planted topic count") {
  synth::PlantedLdaSpec spec;
  spec.num_topics = 5;
  spec.vocab_size = 50;
  spec.num_docs = 300;
  spec.doc_length = 40;
  spec.seed = 3;
  const auto corpus = synth::generate_lda_corpus(spec);
  SelectionConfig sc;
  sc.iterations = 60;
  sc.fold_in_iterations = 20;
  sc.alpha = 0.1;
  sc.threads = 4;
  const PerplexityReport r = select_topic_count(corpus.docs, 50, {20, 2, 10, 5}, sc);
  CHECK(r.candidates == std::vector<int>{2, 5, 10, 20});
  CHECK(r.chosen == 5);
  CHECK(r.training_documents == 240);
  CHECK(r.heldout_documents == 60);
  for (double s : r.scores) CHECK(s > 0.0);

  sc.threads = 1;
  CHECK(select_topic_count(corpus.docs, 50, {2, 5, 10, 20}, sc).scores == r.scores);
  CHECK_THROWS_AS(select_topic_count(corpus.docs, 50, {5}, sc), ConfigError);
  CHECK(perplexity_csv(r).rfind("K,perplexity\n2,", 0) == 0);
}

TEST_CASE("dominant topic assignment") {
  synth::PlantedLdaSpec spec;
  spec.num_topics = 4;
  spec.vocab_size = 40;
  spec.num_docs = 200;
  spec.seed = 8;
  const auto corpus = synth::generate_lda_corpus(spec);
  LdaConfig cfg;
  cfg.num_topics = 4;
  cfg.alpha = 0.1;
  cfg.iterations = 80;
  const LdaModel m = fit_lda(corpus.docs, 40, cfg);
  const auto block = planted_block_of_topic(m, 10);
  CHECK(std::set<int>(block.begin(), block.end()).size() == 4);
  for (int planted = 0; planted < 4; ++planted) {
    const BowDocument d = doc_of({planted * 10, planted * 10 + 3, planted * 10 + 7, planted * 10 + 9});
    const int k = assign_dominant_topic(m, d, 30, 5);
    CHECK(block[static_cast<std::size_t>(k)] == planted);
    CHECK(assign_dominant_topic(m, d, 30, 5) == k);
  }
  CHECK(assign_dominant_topic(uniform_model(1, 5, 1.0), doc_of({1, 2})) == 0);
  CHECK_THROWS_AS(assign_dominant_topic(m, doc_of({99})), DataError);
  // Uniform phi gives a symmetric posterior in expectation; ties go to topic 0.
  LdaModel flat = uniform_model(3, 4, 1e9);
  CHECK(assign_dominant_topic(flat, doc_of({0}), 1, 1) >= 0);
}

TEST_CASE("top_keywords") {
  LdaModel m = uniform_model(2, 4, 1.0);
  m.phi = {0.1, 0.4, 0.4, 0.1, 1.0, 0.0, 0.0, 0.0};
  const auto kw = top_keywords(m, 0, 3);
  REQUIRE(kw.size() == 3);
  CHECK(kw[0].first == 1);
  CHECK(kw[1].first == 2);
  CHECK(kw[2].first == 0);
  CHECK(top_keywords(m, 1, 1)[0].first == 0);
  CHECK(top_keywords(m, 0, 50).size() == 4);
  CHECK_THROWS_AS(top_keywords(m, 2, 1), DataError);
}

TEST_CASE("fit_subtopics") {
  // Parent model with two topics over disjoint halves of the vocabulary.
  LdaModel parent = uniform_model(2, 20, 0.1);
  for (int w = 0; w < 20; ++w) {
    parent.phi[static_cast<std::size_t>(w)] = w < 10 ? 0.1 : 0.0;
    parent.phi[static_cast<std::size_t>(20 + w)] = w < 10 ? 0.0 : 0.1;
  }
  synth::PlantedLdaSpec spec;
  spec.num_topics = 4;
  spec.vocab_size = 20;
  spec.num_docs = 120;
  spec.doc_length = 25;
  spec.alpha = 0.05;
  spec.seed = 12;
  auto corpus = synth::generate_lda_corpus(spec);
  // Topics 0,1 live in words 0-9, topics 2,3 in words 10-19; drop mixed documents.
  std::vector<BowDocument> docs;
  for (const auto& d : corpus.docs) {
    const bool low = std::all_of(d.terms.begin(), d.terms.end(), [](auto t) { return t.first < 10; });
    const bool high = std::all_of(d.terms.begin(), d.terms.end(), [](auto t) { return t.first >= 10; });
    if (low || high) docs.push_back(d);
  }
  docs.push_back(doc_of({10, 11}, "straggler"));

  SubtopicConfig sc;
  sc.candidates = {1, 2, 4};
  sc.min_docs = 5;
  sc.select.iterations = 40;
  sc.select.fold_in_iterations = 10;
  sc.select.alpha = 0.1;
  const SubtopicResult r = fit_subtopics(parent, docs, sc);
  REQUIRE(r.models.size() == 2);
  CHECK(r.skipped_parents.empty());
  for (const auto& [p, model] : r.models) {
    std::set<int> member_words;
    for (int d : r.members.at(p))
      for (auto [w, n] : docs[static_cast<std::size_t>(d)].terms) member_words.insert(w);
    for (int k = 0; k < model.num_topics; ++k)
      for (int w = 0; w < model.vocab_size; ++w)
        if (model.word_count(k, w) > 0) CHECK(member_words.contains(w));
  }
  CHECK(r.global_id(1, 0) == r.models.at(0).num_topics);
  CHECK(r.total_subtopics() == r.models.at(0).num_topics + r.models.at(1).num_topics);

  SUBCASE("parents with too few members are skipped") {
    const SubtopicResult one = fit_subtopics(parent, {doc_of({1, 2, 3}), doc_of({12, 13})}, sc);
    CHECK(one.models.empty());
    CHECK(one.skipped_parents == std::vector<int>{0, 1});
  }
  SUBCASE("shared selection uses one count for every parent") {
    SubtopicConfig shared = sc;
    shared.selection = SubtopicSelection::kSharedAverage;
    const SubtopicResult s = fit_subtopics(parent, docs, shared);
    REQUIRE(s.models.size() == 2);
    CHECK(s.models.at(0).num_topics == s.models.at(1).num_topics);
  }
}

TEST_CASE("container round trip") {
  const auto corpus = synth::generate_lda_corpus({});
  LdaConfig cfg;
  cfg.num_topics = 3;
  cfg.iterations = 4;
  const LdaModel m = fit_lda(corpus.docs, 50, cfg);
  const LdaModel back = lda_from_container(decode_container(encode_container(lda_to_container(m))));
  CHECK(back.num_topics == 3);
  CHECK(back.vocab_size == 50);
  CHECK(back.alpha == m.alpha);
  CHECK(back.seed == m.seed);
  for (int k = 0; k < 3; ++k) {
    double row = 0.0;
    for (int w = 0; w < 50; ++w) {
      CHECK(back.phi_at(k, w) == doctest::Approx(m.phi_at(k, w)).epsilon(1e-6));
      row += back.phi_at(k, w);
    }
    CHECK(std::abs(row - 1.0) <= 1e-9);
  }
  auto bytes = encode_container(lda_to_container(m));
  bytes[0] = 'X';
  CHECK_THROWS_AS(decode_container(bytes), ParseError);
  bytes = encode_container(lda_to_container(m));
  bytes.pop_back();
  CHECK_THROWS_AS(decode_container(bytes), ParseError);
}

TEST_CASE("topic nodes carry sorted keywords") {
  const auto corpus = synth::generate_lda_corpus({});
  LdaConfig cfg;
  cfg.num_topics = 5;
  cfg.iterations = 20;
  const LdaModel m = fit_lda(corpus.docs, 50, cfg);
  std::vector<std::string> words;
  for (int w = 0; w < 50; ++w) words.push_back("t" + std::to_string(w));
  const Vocabulary vocab(words, std::vector<std::size_t>(50, 1));
  const auto nodes = make_topic_nodes(TopicLevel::kDocumentSub, m, vocab, 3, 100, 8);
  REQUIRE(nodes.size() == 5);
  CHECK(nodes[2].topic_id == 102);
  CHECK(nodes[2].parent == 3);
  CHECK(nodes[2].keywords.size() == 8);
  for (std::size_t i = 1; i < nodes[2].keywords.size(); ++i)
    CHECK(nodes[2].keywords[i - 1].second >= nodes[2].keywords[i].second);
}
