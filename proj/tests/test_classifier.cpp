#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "radtext/classifier.hpp"
#include "radtext/error.hpp"
#include "radtext/random.hpp"
#include "radtext/synth.hpp"

using namespace radtext;

namespace {

Dataset labelled(const std::vector<std::size_t>& per_class, std::size_t dim = 3, std::uint64_t seed = 1) {
  Rng rng(seed);
  Dataset d;
  for (std::size_t c = 0; c < per_class.size(); ++c)
    for (std::size_t i = 0; i < per_class[c]; ++i) {
      Sample s;
      s.key = "c" + std::to_string(c) + "_" + std::to_string(i);
      for (std::size_t j = 0; j < dim; ++j) s.x.push_back(rng.normal());
      s.label = static_cast<int>(c);
      d.push_back(std::move(s));
    }
  return d;
}

Dataset regression_batch(std::size_t n, std::size_t in, std::size_t out, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.key = "r" + std::to_string(i);
    for (std::size_t j = 0; j < in; ++j) s.x.push_back(rng.normal());
    for (std::size_t j = 0; j < out; ++j) s.target.push_back(rng.normal());
    d.push_back(std::move(s));
  }
  return d;
}

}  // namespace

TEST_CASE("softmax values and invariants") {
  const std::vector<double> zero{0, 0, 0};
  for (double p : softmax(zero)) CHECK(p == doctest::Approx(1.0 / 3));
  const std::vector<double> z{1, 2, 3};
  const auto p = softmax(z);
  CHECK(p[0] == doctest::Approx(0.09003).epsilon(1e-4));
  CHECK(p[1] == doctest::Approx(0.24473).epsilon(1e-4));
  CHECK(p[2] == doctest::Approx(0.66524).epsilon(1e-4));
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> v(6);
    for (double& x : v) x = rng.normal() * 50;
    const double c = rng.normal() * 1000;
    std::vector<double> shifted = v;
    for (double& x : shifted) x += c;
    const auto a = softmax(v);
    const auto b = softmax(shifted);
    CHECK(std::accumulate(a.begin(), a.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i] >= 0.0);
      CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-9));
    }
  }
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(800.0) == 1.0);
}

TEST_CASE("gradient check for both heads") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const FeedForwardModel sm = make_model({4, 6, 5, 3}, Head::kSoftmax, seed);
    const Dataset batch = labelled({2, 2, 2}, 4, seed);
    CHECK(gradient_check(sm, batch) <= 1e-4);

    const FeedForwardModel sx = make_model({4, 7, 6}, Head::kSigmoidCrossEntropy, seed);
    const Dataset reg = regression_batch(5, 4, 6, seed);
    CHECK(gradient_check(sx, reg) <= 1e-4);
    CHECK(batch_loss(sx, reg) >= 0.0);
  }
  FeedForwardModel zero = make_model({3, 4, 2}, Head::kSoftmax, 1);
  for (auto& l : zero.layers) std::fill(l.weights.begin(), l.weights.end(), 0.0);
  Sample s{"z", {0, 0, 0}, 1, {}, {}};
  Gradients g;
  const double loss = loss_and_gradient(zero, std::span<const Sample>(&s, 1), g);
  CHECK(loss == doctest::Approx(std::log(2.0)));
  for (const auto& layer : g.weights)
    for (double v : layer) CHECK(std::isfinite(v));
}

TEST_CASE("split counts and stratified split") {
  SplitSpec spec;
  const auto c100 = split_counts(100, spec);
  CHECK(c100.train == 85);
  CHECK(c100.cv == 5);
  CHECK(c100.test == 10);
  const auto c7 = split_counts(7, spec);
  CHECK(c7.test == 1);
  CHECK(c7.cv == 0);
  CHECK(c7.train == 6);
  SplitSpec bad;
  bad.train = 0.9;
  CHECK_THROWS_AS(split_counts(10, bad), ConfigError);

  const Dataset d = labelled({40, 100, 23});
  const Split s = split_dataset(d, spec);
  std::vector<int> seen(d.size(), 0);
  for (const auto* part : {&s.train, &s.cv, &s.test})
    for (std::size_t i : *part) ++seen[i];
  for (int v : seen) CHECK(v == 1);
  for (int c = 0; c < 3; ++c) {
    const std::size_t n = c == 0 ? 40 : c == 1 ? 100 : 23;
    const auto want = split_counts(n, spec);
    auto count = [&](const std::vector<std::size_t>& idx) {
      return static_cast<std::size_t>(std::count_if(idx.begin(), idx.end(), [&](std::size_t i) { return d[i].label == c; }));
    };
    CHECK(count(s.train) == want.train);
    CHECK(count(s.cv) == want.cv);
    CHECK(count(s.test) == want.test);
  }
  const Split again = split_dataset(d, spec);
  CHECK(again.test == s.test);
}

TEST_CASE("grouped split keeps patients together") {
  Dataset d = labelled({60, 60}, 2, 4);
  for (std::size_t i = 0; i < d.size(); ++i) d[i].group = "patient" + std::to_string(i % 17);
  SplitSpec spec;
  spec.group_by_patient = true;
  const Split s = split_dataset(d, spec);
  std::map<std::string, std::set<int>> where;
  int part = 0;
  for (const auto* p : {&s.train, &s.cv, &s.test}) {
    for (std::size_t i : *p) where[d[i].group].insert(part);
    ++part;
  }
  for (const auto& [g, parts] : where) CHECK(parts.size() == 1);
  CHECK(s.train.size() + s.cv.size() + s.test.size() == d.size());
  CHECK_FALSE(s.test.empty());
}

TEST_CASE("filter_small_classes drops deficient classes") {
  const Dataset d = labelled({50, 9, 30, 2, 10});
  const auto r = filter_small_classes(d, SplitSpec{});
  CHECK(r.dropped_labels == std::vector<int>{1, 3});
  CHECK(r.kept_labels == std::vector<int>{0, 2, 4});
  CHECK(r.data.size() == 90);
  for (const auto& s : r.data) CHECK(s.label >= 0);
  for (const auto& s : r.data) CHECK(s.label < 3);
  const auto all = filter_small_classes(labelled({40, 40}), SplitSpec{});
  CHECK(all.dropped_labels.empty());
  CHECK_THROWS_AS(filter_small_classes(labelled({3, 2}), SplitSpec{}), DataError);
}

TEST_CASE("training on separable data") {
  synth::FeatureDatasetSpec fs;
  fs.seed = 5;
  const Dataset d = synth::generate_feature_dataset(fs);
  const Split s = split_dataset(d, SplitSpec{});
  TrainConfig cfg;
  cfg.hidden = {16};
  cfg.epochs = 20;
  const auto r = train(select(d, s.train), select(d, s.cv), cfg);
  const auto e = evaluate(r.model, select(d, s.test));
  CHECK(e.top1 >= 0.95);
  CHECK(e.top5 >= e.top1);
  CHECK(r.trace.front().iteration == 0);
  CHECK(r.trace.size() == static_cast<std::size_t>(cfg.epochs) + 1);
  for (std::size_t c = 0; c < e.confusion.size(); ++c)
    CHECK(std::accumulate(e.confusion[c].begin(), e.confusion[c].end(), 0L) == e.support[c]);

  const auto again = train(select(d, s.train), select(d, s.cv), cfg);
  CHECK(again.model.layers[0].weights == r.model.layers[0].weights);

  cfg.epochs = 0;
  CHECK_THROWS_AS(train(select(d, s.train), {}, cfg), ConfigError);
}

TEST_CASE("regression head memorizes bi-gram targets") {
  const Dataset d = regression_batch(10, 12, 16, 8);
  TrainConfig cfg;
  cfg.head = Head::kSigmoidCrossEntropy;
  cfg.hidden = {32};
  cfg.epochs = 1500;
  cfg.batch_size = 10;
  cfg.base_lr = 0.5;
  const auto r = train(d, d, cfg);
  CHECK(mean_half_cosine(r.model, d) >= 0.9);
}

TEST_CASE("fine-tuning replaces only the output layer") {
  const FeedForwardModel base = make_model({8, 20, 12, 60}, Head::kSoftmax, 3);
  const FeedForwardModel ft = replace_output_layer(base, 77, Head::kSoftmax, 0.001, 0.01, 4);
  CHECK(ft.layer_sizes() == std::vector<std::size_t>{8, 20, 12, 77});
  for (std::size_t i = 0; i + 1 < base.layers.size(); ++i) {
    CHECK(ft.layers[i].weights == base.layers[i].weights);
    CHECK(ft.layers[i].bias == base.layers[i].bias);
    CHECK(ft.layers[i].lr_multiplier == 1.0);
  }
  CHECK(ft.layers.back().lr_multiplier == doctest::Approx(10.0));

  const Dataset d = labelled({30, 30}, 4);
  FineTuneConfig fc;
  CHECK_THROWS_AS(fine_tune(base, d, {}, fc), DataError);
}

TEST_CASE("predict_topk and evaluate") {
  const FeedForwardModel m = make_model({3, 5, 4}, Head::kSoftmax, 2);
  const std::vector<double> x{0.3, -1.0, 2.0};
  const auto all = predict_topk(m, x, 10);
  CHECK(all.size() == 4);
  double total = 0.0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    total += all[i].second;
    if (i > 0) CHECK(all[i - 1].second >= all[i].second);
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(predict_topk(m, x, 0), ConfigError);

  const FeedForwardModel one = make_model({3, 1}, Head::kSoftmax, 1);
  CHECK(predict_topk(one, x, 1).front() == std::pair<int, double>{0, 1.0});

  // A model that reads the label straight off a one-hot feature is perfect.
  FeedForwardModel perfect = make_model({3, 3}, Head::kSoftmax, 1);
  std::fill(perfect.layers[0].weights.begin(), perfect.layers[0].weights.end(), 0.0);
  for (std::size_t c = 0; c < 3; ++c) perfect.layers[0].weights[c * 3 + c] = 10.0;
  Dataset test;
  for (int i = 0; i < 30; ++i) {
    Sample s;
    s.label = i % 3;
    s.x.assign(3, 0.0);
    s.x[static_cast<std::size_t>(s.label)] = 1.0;
    test.push_back(s);
  }
  const auto e = evaluate(perfect, test);
  CHECK(e.top1 == 1.0);
  CHECK(e.top5 == 1.0);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b) CHECK(e.confusion[a][b] == (a == b ? 10 : 0));
  CHECK(confusion_csv(e).substr(0, 30) == "truth,pred_0,pred_1,pred_2,sup");
}

TEST_CASE("uninformative predictor scores near chance") {
  const int K = 10;
  const std::size_t n = 20000;
  FeedForwardModel flat = make_model({2, K}, Head::kSoftmax, 1);
  Rng rng(9);
  for (auto& l : flat.layers) std::fill(l.weights.begin(), l.weights.end(), 0.0);
  for (double& b : flat.layers[0].bias) b = 0.0;
  // Random weights would favour some classes; instead relabel uniformly at random
  // so the constant argmax (class 0) is right with probability 1/K.
  Dataset test;
  for (std::size_t i = 0; i < n; ++i) test.push_back(Sample{"u", {rng.normal(), rng.normal()}, static_cast<int>(rng.below(K)), {}, {}});
  const auto e = evaluate(flat, test);
  const double p = 1.0 / K;
  const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(n));
  CHECK(std::abs(e.top1 - p) <= 3 * sigma);
  CHECK(e.top5 >= e.top1);
}

TEST_CASE("model container and feature files") {
  const FeedForwardModel m = make_model({4, 3, 2}, Head::kSigmoidCrossEntropy, 7);
  const FeedForwardModel r = model_from_container(decode_container(encode_container(model_to_container(m))));
  CHECK(r.layer_sizes() == m.layer_sizes());
  CHECK(r.head == m.head);
  const std::vector<double> x{1, 2, 3, 4};
  const auto a = m.logits(x);
  const auto b = r.logits(x);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-5));

  const std::vector<FeatureRecord> recs{{"r1:1:3", {0.5, -1.25}, ""}, {"r2:-:7", {1e-3, 4}, "scan7"}};
  const auto parsed = parse_features(format_features(recs));
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[1].image_key == "r2:-:7");
  CHECK(parsed[1].feature == recs[1].feature);
  CHECK(parsed[1].provenance == "scan7");
  CHECK_THROWS_AS(parse_features("2 2\na 1 2\n"), ParseError);
  CHECK_THROWS_AS(parse_features("1 2\na 1 nan\n"), ParseError);
  CHECK_THROWS_AS(parse_features("2 1\na 1\na 2\n"), ParseError);
  CHECK(trace_csv({{0, 0.5}, {10, 1}}) == "iteration,cv_score\n0,0.5\n10,1\n");
}
