#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "radtext/error.hpp"
#include "radtext/synth.hpp"

using namespace radtext;
using namespace radtext::synth;

namespace {

// Multiclass perceptron with bias; true when it reaches zero training errors.
bool perceptron_separates(const Dataset& d, int classes, int max_epochs = 1000) {
  const std::size_t F = d.front().x.size();
  std::vector<std::vector<double>> w(static_cast<std::size_t>(classes), std::vector<double>(F + 1, 0.0));
  auto score = [&](int c, const Sample& s) {
    const auto& wc = w[static_cast<std::size_t>(c)];
    double v = wc[F];
    for (std::size_t i = 0; i < F; ++i) v += wc[i] * s.x[i];
    return v;
  };
  for (int e = 0; e < max_epochs; ++e) {
    int errors = 0;
    for (const auto& s : d) {
      int best = 0;
      for (int c = 1; c < classes; ++c)
        if (score(c, s) > score(best, s)) best = c;
      if (best == s.label) continue;
      ++errors;
      auto& up = w[static_cast<std::size_t>(s.label)];
      auto& down = w[static_cast<std::size_t>(best)];
      for (std::size_t i = 0; i < F; ++i) {
        up[i] += s.x[i];
        down[i] -= s.x[i];
      }
      up[F] += 1;
      down[F] -= 1;
    }
    if (errors == 0) return true;
  }
  return false;
}

std::vector<double> expand(const BowDocument& d) {
  std::vector<double> w;
  for (const auto& [id, n] : d.terms) w.insert(w.end(), static_cast<std::size_t>(n), id);
  return w;
}

}  // namespace

TEST_CASE("planted LDA corpus shape") {
  PlantedLdaSpec spec;
  const PlantedCorpus c = generate_lda_corpus(spec);
  CHECK(c.docs.size() == 500);
  CHECK(c.theta.size() == 500);
  for (const auto& d : c.docs) {
    int n = 0;
    for (const auto& [w, k] : d.terms) n += k;
    CHECK(n == 40);
    CHECK(d.length == 40);
  }
  for (int k = 0; k < 5; ++k) {
    double sum = 0.0;
    for (int w = 0; w < 50; ++w) {
      const double p = c.phi[static_cast<std::size_t>(k * 50 + w)];
      sum += p;
      if (w / 10 != k) CHECK(p == 0.0);
    }
    CHECK(sum == doctest::Approx(1.0));
  }
  const PlantedCorpus again = generate_lda_corpus(spec);
  CHECK(again.phi == c.phi);
  CHECK(again.docs[17].terms == c.docs[17].terms);

  spec.doc_length = 0;
  CHECK_THROWS_AS(generate_lda_corpus(spec), ConfigError);
  spec.doc_length = 10;
  spec.num_topics = 60;
  CHECK_THROWS_AS(generate_lda_corpus(spec), ConfigError);
}

TEST_CASE("planted LDA word frequencies follow the mixture") {
  PlantedLdaSpec spec;
  spec.num_topics = 3;
  spec.vocab_size = 9;
  spec.num_docs = 4000;
  spec.doc_length = 20;
  spec.disjoint = false;
  spec.seed = 12;
  const PlantedCorpus c = generate_lda_corpus(spec);
  std::vector<double> observed(9, 0.0);
  std::vector<double> expected(9, 0.0);
  for (std::size_t d = 0; d < c.docs.size(); ++d) {
    for (const auto& [w, n] : c.docs[d].terms) observed[static_cast<std::size_t>(w)] += n;
    for (std::size_t k = 0; k < 3; ++k)
      for (std::size_t w = 0; w < 9; ++w) expected[w] += 20.0 * c.theta[d][k] * c.phi[k * 9 + w];
  }
  for (std::size_t w = 0; w < 9; ++w) CHECK(std::abs(observed[w] - expected[w]) <= 5 * std::sqrt(expected[w]) + 1);
}

TEST_CASE("exact likelihood against closed forms") {
  const std::vector<double> phi{0.5, 0.3, 0.2, 0.1, 0.1, 0.8};
  const BowDocument one{"d", {{0, 1}, {2, 1}}, 2};
  // K = 1: product of word probabilities.
  CHECK(exact_doc_likelihood(std::span<const double>(phi).first(3), 1, 3, 0.7, one) ==
        doctest::Approx(std::log(0.5 * 0.2)));
  // K = 2, N = 2: E[theta_a theta_b] under a symmetric Dirichlet.
  const double a = 0.4;
  const double same = a * (a + 1) / (2 * a * (2 * a + 1));
  const double diff = a * a / (2 * a * (2 * a + 1));
  double p = 0.0;
  for (int z1 = 0; z1 < 2; ++z1)
    for (int z2 = 0; z2 < 2; ++z2)
      p += (z1 == z2 ? same : diff) * phi[static_cast<std::size_t>(z1 * 3 + 0)] * phi[static_cast<std::size_t>(z2 * 3 + 2)];
  CHECK(exact_doc_likelihood(phi, 2, 3, a, one) == doctest::Approx(std::log(p)).epsilon(1e-12));
  const BowDocument big{"d", {{0, 25}}, 25};
  CHECK_THROWS_AS(exact_doc_likelihood(phi, 2, 3, a, big), ConfigError);
  CHECK(expand(one).size() == 2);
}

TEST_CASE("matched TV distance is permutation invariant") {
  const std::vector<double> planted{1, 0, 0, 0, 1, 0, 0, 0, 1};
  const std::vector<double> permuted{0, 0, 1, 1, 0, 0, 0, 1, 0};
  CHECK(matched_tv_distance(permuted, planted, 3, 3) == 0.0);
  const std::vector<double> blurred{0.9, 0.1, 0, 0, 1, 0, 0, 0, 1};
  CHECK(matched_tv_distance(blurred, planted, 3, 3) == doctest::Approx(0.1));
}

TEST_CASE("feature dataset is linearly separable") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    FeatureDatasetSpec spec;
    spec.seed = seed;
    const Dataset d = generate_feature_dataset(spec);
    CHECK(d.size() == 300);
    CHECK(perceptron_separates(d, 3));
  }
  FeatureDatasetSpec bad;
  bad.classes = 1;
  CHECK_THROWS_AS(generate_feature_dataset(bad), ConfigError);
}

TEST_CASE("paired tasks share features") {
  const PairedTasks t = generate_paired_tasks(PairedTaskSpec{});
  REQUIRE(t.task_a.size() == t.task_b.size());
  for (std::size_t i = 0; i < t.task_a.size(); ++i) {
    CHECK(t.task_a[i].x == t.task_b[i].x);
    CHECK(t.task_b[i].label == t.task_a[i].label % 2);
  }
  CHECK(perceptron_separates(t.task_a, 16));
}

TEST_CASE("clone corpus puts clones in identical contexts") {
  const CloneCorpus c = generate_context_clone_corpus(CloneCorpusSpec{});
  REQUIRE(c.clones.size() == 2);
  for (const auto& [a, b] : c.clones) {
    std::map<std::vector<std::string>, int> ctx_a;
    std::map<std::vector<std::string>, int> ctx_b;
    for (const auto& s : c.streams)
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != a && s[i] != b) continue;
        std::vector<std::string> masked = s;
        masked[i] = "_";
        ++(s[i] == a ? ctx_a : ctx_b)[masked];
      }
    CHECK_FALSE(ctx_a.empty());
    CHECK(ctx_a == ctx_b);
  }
  const CloneCorpus again = generate_context_clone_corpus(CloneCorpusSpec{});
  CHECK(again.streams == c.streams);
}
