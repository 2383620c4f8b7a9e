#include <doctest.h>

#include "radtext/error.hpp"
#include "radtext/keywordgen.hpp"
#include "radtext/synth.hpp"

using namespace radtext;

namespace {

std::vector<LevelModel> three_levels(const synth::KeywordSuite& s) {
  return {{TopicLevel::kDocument, &s.topic_classifier, s.topic_keywords},
          {TopicLevel::kDocumentSub, &s.topic_classifier, s.topic_keywords},
          {TopicLevel::kSentence, &s.topic_classifier, s.topic_keywords}};
}

}  // namespace

TEST_CASE("planted keyword suite is recovered exactly") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    synth::KeywordSuiteSpec spec;
    spec.seed = seed;
    const auto s = synth::generate_keyword_suite(spec);
    const auto levels = three_levels(s);
    std::vector<InterpretationOutput> outs;
    std::map<std::string, std::set<std::string>> truth;
    for (std::size_t i = 0; i < s.features.size(); ++i) {
      const auto out = interpret(s.image_keys[i], s.features[i], levels, &s.regression, &s.embeddings, nullptr, nullptr);
      REQUIRE(out.levels.size() == 3);
      for (const auto& l : out.levels) {
        CHECK(l.topic == static_cast<int>(i % 4));
        REQUIRE(l.keyword.has_value());
        CHECK(*l.keyword == s.planted[i]);
        CHECK(l.cosine >= 0.999);
        const auto& list = s.topic_keywords[static_cast<std::size_t>(l.topic)];
        CHECK(std::find(list.begin(), list.end(), *l.keyword) != list.end());
      }
      outs.push_back(out);
      truth[s.image_keys[i]] = {s.planted[i]};
    }
    CHECK(recall_at_1(outs, truth) == 1.0);
  }
}

TEST_CASE("degenerate keyword matches") {
  SkipGramConfig c;
  c.dim = 2;
  EmbeddingModel emb = init_embedding(Vocabulary({"a", "b", "c"}, {3, 2, 1}), c);
  emb.input = {0, 1, 0, 2, 0, -3};
  // Output halves along x: every keyword is orthogonal; the first in rank wins.
  const std::vector<double> out{1, 0, 5, 0};
  const auto m = match_keyword(out, {"b", "a", "c"}, emb);
  REQUIRE(m.has_value());
  CHECK(*m->keyword == "b");
  CHECK(m->rank == 0);
  CHECK(m->cosine == doctest::Approx(0.0));
  CHECK_FALSE(match_keyword(out, {"x", "y"}, emb).has_value());
  CHECK_THROWS_AS(match_keyword(std::vector<double>{1, 0}, {"a"}, emb), DataError);
}

TEST_CASE("interpretation without a regression model keeps disease predictions") {
  const auto s = synth::generate_keyword_suite({});
  FeedForwardModel disease = make_model({s.features[0].size(), 3}, Head::kSoftmax, 1);
  LabelSpace labels;
  labels.labels = {{"cyst", true, 10}, {"cyst", false, 12}, {"edema", true, 11}};
  const auto out = interpret(s.image_keys[0], s.features[0], three_levels(s), nullptr, nullptr, &disease, &labels);
  for (const auto& l : out.levels) CHECK_FALSE(l.keyword.has_value());
  REQUIRE(out.diseases.size() == 3);
  for (std::size_t i = 1; i < out.diseases.size(); ++i) CHECK(out.diseases[i - 1].second >= out.diseases[i].second);
  const std::string line = format_interpretation(out);
  CHECK(line.rfind(s.image_keys[0] + "\tdocument:-:-\tdocument_sub:-:-\tsentence:-:-\t", 0) == 0);
  CHECK(line.find("no cyst:") != std::string::npos);
}

TEST_CASE("keyword cosine survives serialization") {
  const auto s = synth::generate_keyword_suite({});
  const EmbeddingModel reloaded = embedding_from_container(decode_container(encode_container(embedding_to_container(s.embeddings))));
  const auto out = s.regression.logits(s.features[3]);
  const auto a = match_keyword(out, s.topic_keywords[3], s.embeddings);
  const auto b = match_keyword(out, s.topic_keywords[3], reloaded);
  REQUIRE(a);
  REQUIRE(b);
  CHECK(a->keyword == b->keyword);
  CHECK(std::abs(a->cosine - b->cosine) <= 1e-6);
}

TEST_CASE("recall at 1") {
  InterpretationOutput none{"i1", {{TopicLevel::kDocument, 0, std::nullopt, 0.0, 0}}, {}, {}};
  CHECK(recall_at_1({none}, {{"i1", {"cyst"}}}) == 0.0);

  InterpretationOutput two{"i2",
                           {{TopicLevel::kDocument, 0, std::string("cyst"), 0.4, 0},
                            {TopicLevel::kSentence, 1, std::string("tumor"), 0.8, 2}},
                           {},
                           {}};
  CHECK(recall_at_1({two}, {{"i2", {"cyst"}}}) == 0.0);
  CHECK(recall_at_1({two}, {{"i2", {"cyst", "tumor"}}}) == 1.0);
  CHECK(recall_at_1({two, none}, {{"i2", {"tumor"}}, {"i1", {}}}) == 1.0);
  CHECK(recall_at_1({two, none}, {{"i2", {"tumor"}}, {"i1", {"x"}}}) == 0.5);

  ContextWindow w;
  w.tokens = {"cyst", "liver", "tumor"};
  const DiseaseLexicon lex = default_lexicon(PreprocessConfig::defaults());
  CHECK(ground_truth_words(w, lex) == std::set<std::string>{"cyst", "tumor"});
}

TEST_CASE("keyword tables follow the topic models") {
  synth::PlantedLdaSpec ps;
  ps.num_topics = 2;
  ps.vocab_size = 10;
  ps.num_docs = 100;
  const auto corpus = synth::generate_lda_corpus(ps);
  LdaConfig lc;
  lc.num_topics = 2;
  lc.iterations = 50;
  const LdaModel m = fit_lda(corpus.docs, 10, lc);
  std::vector<std::string> words;
  for (int i = 0; i < 10; ++i) words.push_back("w" + std::to_string(i));
  const Vocabulary vocab(words, std::vector<std::size_t>(10, 1));
  const auto table = keyword_table(m, vocab, 3);
  REQUIRE(table.size() == 2);
  for (int k = 0; k < 2; ++k) {
    const auto top = top_keywords(m, k, 3);
    for (std::size_t r = 0; r < 3; ++r) CHECK(table[static_cast<std::size_t>(k)][r] == vocab.token(static_cast<std::size_t>(top[r].first)));
  }
}
