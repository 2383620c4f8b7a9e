#include "radtext/classifier.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "radtext/error.hpp"
#include "radtext/random.hpp"
#include "text_util.hpp"

namespace radtext {
namespace {

// log(1 + e^x) without overflow.
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

Layer make_layer(std::size_t in, std::size_t out, Rng& rng) {
  Layer l;
  l.in = in;
  l.out = out;
  const double r = std::sqrt(6.0 / static_cast<double>(in + out));
  l.weights.resize(in * out);
  for (double& w : l.weights) w = rng.uniform(-r, r);
  l.bias.assign(out, 0.0);
  return l;
}

// Activations of every layer: acts[0] = x, acts[i+1] = output of layer i.
std::vector<std::vector<double>> forward(const FeedForwardModel& m, std::span<const double> x) {
  if (x.size() != m.input_dim())
    throw DataError("feature dimension " + std::to_string(x.size()) + " does not match model input " +
                    std::to_string(m.input_dim()));
  std::vector<std::vector<double>> acts;
  acts.emplace_back(x.begin(), x.end());
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    const Layer& l = m.layers[li];
    const auto& a = acts.back();
    std::vector<double> z(l.bias);
    for (std::size_t o = 0; o < l.out; ++o) {
      const double* w = &l.weights[o * l.in];
      double s = 0.0;
      for (std::size_t i = 0; i < l.in; ++i) s += w[i] * a[i];
      z[o] += s;
    }
    if (li + 1 < m.layers.size())
      for (double& v : z) v = std::tanh(v);
    acts.push_back(std::move(z));
  }
  return acts;
}

void check_sample(const FeedForwardModel& m, const Sample& s) {
  if (m.head == Head::kSoftmax) {
    if (s.label < 0 || static_cast<std::size_t>(s.label) >= m.output_dim())
      throw DataError("sample '" + s.key + "': label " + std::to_string(s.label) + " outside model's " +
                      std::to_string(m.output_dim()) + " classes");
  } else if (s.target.size() != m.output_dim()) {
    throw DataError("sample '" + s.key + "': target dimension " + std::to_string(s.target.size()) +
                    " does not match model output " + std::to_string(m.output_dim()));
  }
}

// Loss of one sample and its gradient with respect to the output pre-activations.
double head_loss(const FeedForwardModel& m, const Sample& s, std::span<const double> z, std::vector<double>* dz) {
  double loss = 0.0;
  if (m.head == Head::kSoftmax) {
    const auto p = softmax(z);
    const double zmax = *std::max_element(z.begin(), z.end());
    double lse = 0.0;
    for (double v : z) lse += std::exp(v - zmax);
    loss = zmax + std::log(lse) - z[static_cast<std::size_t>(s.label)];
    if (dz) {
      dz->assign(p.begin(), p.end());
      (*dz)[static_cast<std::size_t>(s.label)] -= 1.0;
    }
  } else {
    if (dz) dz->resize(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) {
      const double t = sigmoid(s.target[j]);
      loss += t * softplus(-z[j]) + (1.0 - t) * softplus(z[j]);
      if (dz) (*dz)[j] = sigmoid(z[j]) - t;
    }
  }
  return loss;
}

std::size_t class_count(const Dataset& a, const Dataset& b) {
  int top = -1;
  for (const auto* d : {&a, &b})
    for (const auto& s : *d) {
      if (s.label < 0) throw DataError("sample '" + s.key + "' has no class label");
      top = std::max(top, s.label);
    }
  return static_cast<std::size_t>(top + 1);
}

double cv_score(const FeedForwardModel& m, const Dataset& cv) {
  if (cv.empty()) return 0.0;
  if (m.head == Head::kSigmoidCrossEntropy) return mean_half_cosine(m, cv);
  std::size_t hit = 0;
  for (const auto& s : cv) {
    const auto z = m.logits(s.x);
    const auto best = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
    hit += best == s.label;
  }
  return static_cast<double>(hit) / static_cast<double>(cv.size());
}

std::string number(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::vector<FeatureRecord> parse_features(std::string_view text) {
  const auto lines = detail::split_lines(text);
  if (lines.empty()) throw ParseError("features: missing 'N F' header");
  std::istringstream header{std::string(lines[0])};
  std::size_t n = 0;
  std::size_t f = 0;
  std::string extra;
  if (!(header >> n >> f) || (header >> extra) || f == 0) throw ParseError("features line 1: expected 'N F'");
  std::vector<FeatureRecord> out;
  std::map<std::string, std::size_t> seen;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (detail::trim(lines[li]).empty()) continue;
    const std::string where = "features line " + std::to_string(li + 1) + ": ";
    std::istringstream row{std::string(lines[li])};
    FeatureRecord r;
    row >> r.image_key;
    for (std::size_t d = 0; d < f; ++d) {
      std::string tok;
      if (!(row >> tok)) throw ParseError(where + "expected " + std::to_string(f) + " values");
      double v = 0.0;
      const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || !std::isfinite(v))
        throw ParseError(where + "bad value '" + tok + "'");
      r.feature.push_back(v);
    }
    std::string prov;
    if (row >> prov) r.provenance = prov;
    if (row >> extra) throw ParseError(where + "trailing fields");
    if (!seen.emplace(r.image_key, li).second) throw ParseError(where + "duplicate image key '" + r.image_key + "'");
    out.push_back(std::move(r));
  }
  if (out.size() != n)
    throw ParseError("features: header announces " + std::to_string(n) + " rows, found " + std::to_string(out.size()));
  return out;
}

std::vector<FeatureRecord> read_features(const std::string& path) { return parse_features(detail::read_file(path)); }

std::string format_features(const std::vector<FeatureRecord>& records) {
  std::ostringstream out;
  const std::size_t f = records.empty() ? 0 : records.front().feature.size();
  out << records.size() << ' ' << f << '\n';
  for (const auto& r : records) {
    if (r.feature.size() != f) throw DataError("format_features: inconsistent feature dimension");
    out << r.image_key;
    for (double v : r.feature) out << ' ' << number(v);
    if (!r.provenance.empty()) out << ' ' << r.provenance;
    out << '\n';
  }
  return out.str();
}

std::vector<double> softmax(std::span<const double> z) {
  std::vector<double> p(z.size());
  if (z.empty()) return p;
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) sum += p[i] = std::exp(z[i] - zmax);
  for (double& v : p) v /= sum;
  return p;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

const char* to_string(Head head) { return head == Head::kSoftmax ? "softmax" : "sigmoid_xent"; }

Head parse_head(std::string_view s) {
  if (s == "softmax") return Head::kSoftmax;
  if (s == "sigmoid_xent") return Head::kSigmoidCrossEntropy;
  throw ConfigError("unknown head '" + std::string(s) + "' (expected softmax or sigmoid_xent)");
}

std::vector<std::size_t> FeedForwardModel::layer_sizes() const {
  std::vector<std::size_t> out;
  if (layers.empty()) return out;
  out.push_back(layers.front().in);
  for (const auto& l : layers) out.push_back(l.out);
  return out;
}

std::size_t FeedForwardModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

std::vector<double> FeedForwardModel::logits(std::span<const double> x) const {
  return std::move(forward(*this, x).back());
}

std::vector<double> FeedForwardModel::predict(std::span<const double> x) const {
  auto z = logits(x);
  if (head == Head::kSoftmax) return softmax(z);
  for (double& v : z) v = sigmoid(v);
  return z;
}

FeedForwardModel make_model(const std::vector<std::size_t>& sizes, Head head, std::uint64_t seed) {
  if (sizes.size() < 2) throw ConfigError("model needs at least input and output sizes");
  for (std::size_t s : sizes)
    if (s == 0) throw ConfigError("layer sizes must be positive");
  FeedForwardModel m;
  m.head = head;
  m.seed = seed;
  Rng rng(seed);
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) m.layers.push_back(make_layer(sizes[i], sizes[i + 1], rng));
  return m;
}

double loss_and_gradient(const FeedForwardModel& model, std::span<const Sample> batch, Gradients& grads) {
  const std::size_t L = model.layers.size();
  grads.weights.resize(L);
  grads.bias.resize(L);
  for (std::size_t li = 0; li < L; ++li) {
    grads.weights[li].assign(model.layers[li].weights.size(), 0.0);
    grads.bias[li].assign(model.layers[li].out, 0.0);
  }
  if (batch.empty()) return 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  std::vector<double> delta;
  std::vector<double> prev;
  for (const Sample& s : batch) {
    check_sample(model, s);
    const auto acts = forward(model, s.x);
    total += head_loss(model, s, acts.back(), &delta);
    for (std::size_t li = L; li-- > 0;) {
      const Layer& l = model.layers[li];
      const auto& a = acts[li];
      auto& gw = grads.weights[li];
      auto& gb = grads.bias[li];
      for (std::size_t o = 0; o < l.out; ++o) {
        const double d = delta[o] * scale;
        gb[o] += d;
        double* row = &gw[o * l.in];
        for (std::size_t i = 0; i < l.in; ++i) row[i] += d * a[i];
      }
      if (li == 0) break;
      prev.assign(l.in, 0.0);
      for (std::size_t o = 0; o < l.out; ++o) {
        const double* w = &l.weights[o * l.in];
        for (std::size_t i = 0; i < l.in; ++i) prev[i] += w[i] * delta[o];
      }
      for (std::size_t i = 0; i < l.in; ++i) prev[i] *= 1.0 - a[i] * a[i];  // tanh'
      delta.swap(prev);
    }
  }
  return total * scale;
}

double batch_loss(const FeedForwardModel& model, std::span<const Sample> batch) {
  if (batch.empty()) return 0.0;
  double total = 0.0;
  for (const Sample& s : batch) {
    check_sample(model, s);
    total += head_loss(model, s, model.logits(s.x), nullptr);
  }
  return total / static_cast<double>(batch.size());
}

double gradient_check(const FeedForwardModel& model, std::span<const Sample> batch) {
  Gradients g;
  loss_and_gradient(model, batch, g);
  FeedForwardModel probe = model;
  double worst = 0.0;
  auto compare = [&](double& param, double analytic) {
    const double saved = param;
    const double h = 1e-5 * std::max(1.0, std::abs(saved));
    param = saved + h;
    const double up = batch_loss(probe, batch);
    param = saved - h;
    const double down = batch_loss(probe, batch);
    param = saved;
    const double numeric = (up - down) / (2 * h);
    const double denom = std::max(std::abs(numeric) + std::abs(analytic), 1e-6);
    worst = std::max(worst, std::abs(numeric - analytic) / denom);
  };
  for (std::size_t li = 0; li < probe.layers.size(); ++li) {
    for (std::size_t i = 0; i < probe.layers[li].weights.size(); ++i) compare(probe.layers[li].weights[i], g.weights[li][i]);
    for (std::size_t i = 0; i < probe.layers[li].bias.size(); ++i) compare(probe.layers[li].bias[i], g.bias[li][i]);
  }
  return worst;
}

SplitCounts split_counts(std::size_t n, const SplitSpec& spec) {
  if (spec.train < 0 || spec.cv < 0 || spec.test < 0 || std::abs(spec.train + spec.cv + spec.test - 1.0) > 1e-9)
    throw ConfigError("split fractions must be nonnegative and sum to 1");
  SplitCounts c;
  c.test = static_cast<std::size_t>(std::llround(spec.test * static_cast<double>(n)));
  c.cv = std::min(n - c.test, static_cast<std::size_t>(std::llround(spec.cv * static_cast<double>(n))));
  c.train = n - c.test - c.cv;
  return c;
}

Split split_dataset(const Dataset& data, const SplitSpec& spec) {
  split_counts(0, spec);  // validates fractions
  Rng rng(spec.seed);
  Split out;
  if (spec.group_by_patient) {
    // Whole groups go to one split; groups are shuffled, then test and cv are
    // filled until they reach their rounded sample quotas.
    std::map<std::string, std::vector<std::size_t>> groups;
    std::vector<std::vector<std::size_t>> units;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data[i].group.empty())
        units.push_back({i});
      else
        groups[data[i].group].push_back(i);
    }
    for (auto& [g, members] : groups) units.push_back(std::move(members));
    rng.shuffle(units);
    const SplitCounts want = split_counts(data.size(), spec);
    for (auto& u : units) {
      auto* dest = &out.train;
      if (out.test.size() < want.test)
        dest = &out.test;
      else if (out.cv.size() < want.cv)
        dest = &out.cv;
      dest->insert(dest->end(), u.begin(), u.end());
    }
  } else {
    std::map<int, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < data.size(); ++i) strata[data[i].label].push_back(i);
    for (auto& [label, idx] : strata) {
      rng.shuffle(idx);
      const SplitCounts c = split_counts(idx.size(), spec);
      out.test.insert(out.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(c.test));
      out.cv.insert(out.cv.end(), idx.begin() + static_cast<std::ptrdiff_t>(c.test),
                    idx.begin() + static_cast<std::ptrdiff_t>(c.test + c.cv));
      out.train.insert(out.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(c.test + c.cv), idx.end());
    }
  }
  for (auto* v : {&out.train, &out.cv, &out.test}) std::sort(v->begin(), v->end());
  return out;
}

Dataset select(const Dataset& data, const std::vector<std::size_t>& indices) {
  Dataset out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(data.at(i));
  return out;
}

FilterResult filter_small_classes(const Dataset& data, const SplitSpec& spec, std::size_t min_per_split) {
  std::map<int, std::size_t> counts;
  for (const auto& s : data) {
    if (s.label < 0) throw DataError("filter_small_classes: sample '" + s.key + "' has no class label");
    ++counts[s.label];
  }
  FilterResult r;
  std::map<int, int> remap;
  for (const auto& [label, n] : counts) {
    const SplitCounts c = split_counts(n, spec);
    if (c.train < min_per_split || c.cv < min_per_split || c.test < min_per_split) {
      r.dropped_labels.push_back(label);
    } else {
      remap[label] = static_cast<int>(r.kept_labels.size());
      r.kept_labels.push_back(label);
    }
  }
  if (r.kept_labels.empty()) throw DataError("filter_small_classes: no class survives the split requirement");
  for (const auto& s : data) {
    auto it = remap.find(s.label);
    if (it == remap.end()) continue;
    Sample copy = s;
    copy.label = it->second;
    r.data.push_back(std::move(copy));
  }
  return r;
}

TrainResult train(const Dataset& train_set, const Dataset& cv_set, const TrainConfig& config,
                  const FeedForwardModel* init) {
  if (config.epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (config.batch_size < 1) throw ConfigError("train: batch size must be >= 1");
  if (config.base_lr <= 0) throw ConfigError("train: learning rate must be positive");
  if (train_set.empty()) throw DataError("train: training set is empty");
  const std::size_t F = train_set.front().x.size();
  for (const auto* d : {&train_set, &cv_set})
    for (const auto& s : *d)
      if (s.x.size() != F) throw DataError("train: sample '" + s.key + "' has inconsistent feature dimension");

  TrainResult result;
  if (init) {
    result.model = *init;
    if (result.model.layers.empty() || result.model.input_dim() != F)
      throw DataError("train: initial model expects " +
                      std::to_string(result.model.layers.empty() ? 0 : result.model.input_dim()) +
                      " features, data has " + std::to_string(F));
    if (result.model.head != config.head) throw ConfigError("train: initial model head differs from config");
  } else {
    std::vector<std::size_t> sizes{F};
    sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
    sizes.push_back(config.head == Head::kSoftmax ? class_count(train_set, cv_set) : train_set.front().target.size());
    result.model = make_model(sizes, config.head, derive_seed(config.seed, 0));
  }
  FeedForwardModel& m = result.model;
  for (const auto* d : {&train_set, &cv_set})
    for (const auto& s : *d) check_sample(m, s);
  for (const auto& l : m.layers)
    if (!(l.lr_multiplier > 0)) throw ConfigError("train: learning-rate multipliers must be positive");

  Rng rng(derive_seed(config.seed, 1));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Sample> batch;
  Gradients g;
  long iteration = 0;
  result.trace.push_back({0, cv_score(m, cv_set)});
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i)
        batch.push_back(train_set[order[i]]);
      loss_and_gradient(m, batch, g);
      for (std::size_t li = 0; li < m.layers.size(); ++li) {
        Layer& l = m.layers[li];
        const double lr = config.base_lr * l.lr_multiplier;
        for (std::size_t i = 0; i < l.weights.size(); ++i) l.weights[i] -= lr * g.weights[li][i];
        for (std::size_t i = 0; i < l.bias.size(); ++i) l.bias[i] -= lr * g.bias[li][i];
      }
      ++iteration;
      if (config.eval_every > 0 && iteration % config.eval_every == 0) result.trace.push_back({iteration, cv_score(m, cv_set)});
    }
    if (config.eval_every == 0) result.trace.push_back({iteration, cv_score(m, cv_set)});
  }
  if (result.trace.back().iteration != iteration) result.trace.push_back({iteration, cv_score(m, cv_set)});
  return result;
}

FeedForwardModel replace_output_layer(const FeedForwardModel& base, std::size_t new_outputs, Head head,
                                      double base_lr, double new_layer_lr, std::uint64_t seed) {
  if (base.layers.empty()) throw ConfigError("replace_output_layer: base model has no layers");
  if (new_outputs == 0) throw ConfigError("replace_output_layer: output size must be positive");
  if (!(base_lr > 0) || !(new_layer_lr > 0)) throw ConfigError("replace_output_layer: learning rates must be positive");
  FeedForwardModel m;
  m.head = head;
  m.seed = seed;
  m.layers.assign(base.layers.begin(), base.layers.end() - 1);
  for (auto& l : m.layers) l.lr_multiplier = 1.0;
  Rng rng(seed);
  Layer out = make_layer(base.layers.back().in, new_outputs, rng);
  out.lr_multiplier = new_layer_lr / base_lr;
  m.layers.push_back(std::move(out));
  return m;
}

TrainResult fine_tune(const FeedForwardModel& base, const Dataset& train_set, const Dataset& cv_set,
                      const FineTuneConfig& config) {
  if (!train_set.empty() && !base.layers.empty() && train_set.front().x.size() != base.input_dim())
    throw DataError("fine_tune: data has " + std::to_string(train_set.front().x.size()) +
                    " features, base model expects " + std::to_string(base.input_dim()));
  std::size_t outputs = config.new_outputs;
  if (outputs == 0)
    outputs = config.head == Head::kSoftmax ? class_count(train_set, cv_set)
                                            : (train_set.empty() ? 0 : train_set.front().target.size());
  const FeedForwardModel start =
      replace_output_layer(base, outputs, config.head, config.base_lr, config.new_layer_lr, derive_seed(config.seed, 0));
  TrainConfig tc;
  tc.head = config.head;
  tc.epochs = config.epochs;
  tc.base_lr = config.base_lr;
  tc.batch_size = config.batch_size;
  tc.seed = config.seed;
  tc.eval_every = config.eval_every;
  return train(train_set, cv_set, tc, &start);
}

std::vector<std::pair<int, double>> predict_topk(const FeedForwardModel& model, std::span<const double> x,
                                                 std::size_t k) {
  if (k < 1) throw ConfigError("predict_topk: k must be >= 1");
  const auto p = model.predict(x);
  std::vector<int> ids(p.size());
  std::iota(ids.begin(), ids.end(), 0);
  const std::size_t n = std::min(k, ids.size());
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n), ids.end(), [&](int a, int b) {
    return p[static_cast<std::size_t>(a)] != p[static_cast<std::size_t>(b)] ? p[static_cast<std::size_t>(a)] > p[static_cast<std::size_t>(b)]
                                                                            : a < b;
  });
  std::vector<std::pair<int, double>> out;
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(ids[i], p[static_cast<std::size_t>(ids[i])]);
  return out;
}

EvalReport evaluate(const FeedForwardModel& model, const Dataset& test_set, std::vector<std::size_t> ks) {
  if (test_set.empty()) throw DataError("evaluate: test set is empty");
  for (std::size_t k : ks)
    if (k < 1) throw ConfigError("evaluate: k must be >= 1");
  const std::size_t K = model.output_dim();
  EvalReport r;
  r.ks = ks;
  r.topk.assign(ks.size(), 0.0);
  r.confusion.assign(K, std::vector<long>(K, 0));
  r.support.assign(K, 0);
  const std::size_t kmax = std::max<std::size_t>(5, ks.empty() ? 1 : *std::max_element(ks.begin(), ks.end()));
  std::size_t hit1 = 0;
  std::size_t hit5 = 0;
  for (const auto& s : test_set) {
    check_sample(model, s);
    const auto top = predict_topk(model, s.x, kmax);
    std::size_t rank = top.size();
    for (std::size_t i = 0; i < top.size(); ++i)
      if (top[i].first == s.label) rank = i;
    for (std::size_t j = 0; j < ks.size(); ++j) r.topk[j] += rank < ks[j];
    hit1 += rank < 1;
    hit5 += rank < 5;
    ++r.confusion[static_cast<std::size_t>(s.label)][static_cast<std::size_t>(top.front().first)];
    ++r.support[static_cast<std::size_t>(s.label)];
  }
  const double n = static_cast<double>(test_set.size());
  for (double& v : r.topk) v /= n;
  r.top1 = static_cast<double>(hit1) / n;
  r.top5 = static_cast<double>(hit5) / n;
  return r;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0.0;
  double aa = 0.0;
  double bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
}

double mean_half_cosine(const FeedForwardModel& model, const Dataset& data) {
  if (data.empty()) return 0.0;
  const std::size_t out = model.output_dim();
  if (out % 2 != 0) throw DataError("mean_half_cosine: output dimension is odd");
  const std::size_t h = out / 2;
  double total = 0.0;
  for (const auto& s : data) {
    if (s.target.size() != out) throw DataError("mean_half_cosine: target dimension mismatch");
    const auto z = model.logits(s.x);
    const std::span<const double> zs(z);
    const std::span<const double> ts(s.target);
    total += cosine(zs.first(h), ts.first(h)) + cosine(zs.subspan(h), ts.subspan(h));
  }
  return total / (2.0 * static_cast<double>(data.size()));
}

Container model_to_container(const FeedForwardModel& model) {
  Container c;
  c.kind = "ffnn";
  c.meta["head"] = std::string(to_string(model.head));
  c.meta["seed"] = static_cast<std::int64_t>(model.seed);
  c.meta["layers"] = static_cast<std::int64_t>(model.layers.size());
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const Layer& l = model.layers[i];
    const std::string p = "layer" + std::to_string(i) + ".";
    c.meta[p + "lr_multiplier"] = l.lr_multiplier;
    c.matrices[p + "weights"] = to_matrix32(l.out, l.in, l.weights);
    c.matrices[p + "bias"] = to_matrix32(1, l.out, l.bias);
  }
  return c;
}

FeedForwardModel model_from_container(const Container& c) {
  if (c.kind != "ffnn") throw ParseError("container holds '" + c.kind + "', expected 'ffnn'");
  FeedForwardModel m;
  m.head = parse_head(c.get_string("head"));
  m.seed = static_cast<std::uint64_t>(c.get_int("seed"));
  const auto n = c.get_int("layers");
  if (n < 1) throw ParseError("ffnn container: no layers");
  for (std::int64_t i = 0; i < n; ++i) {
    const std::string p = "layer" + std::to_string(i) + ".";
    const Matrix32& w = c.get_matrix(p + "weights");
    const Matrix32& b = c.get_matrix(p + "bias");
    if (b.rows != 1 || b.cols != w.rows) throw ParseError("ffnn container: bias shape mismatch in " + p);
    if (!m.layers.empty() && m.layers.back().out != w.cols) throw ParseError("ffnn container: layer shapes incompatible at " + p);
    Layer l;
    l.in = w.cols;
    l.out = w.rows;
    l.weights = from_matrix32(w);
    l.bias = from_matrix32(b);
    l.lr_multiplier = c.get_double(p + "lr_multiplier");
    m.layers.push_back(std::move(l));
  }
  return m;
}

std::string trace_csv(const std::vector<TracePoint>& trace) {
  std::string out = "iteration,cv_score\n";
  for (const auto& t : trace) out += std::to_string(t.iteration) + ',' + number(t.cv_score) + '\n';
  return out;
}

std::string confusion_csv(const EvalReport& report) {
  std::string out = "truth";
  for (std::size_t j = 0; j < report.confusion.size(); ++j) out += ",pred_" + std::to_string(j);
  out += ",support\n";
  for (std::size_t i = 0; i < report.confusion.size(); ++i) {
    out += std::to_string(i);
    for (long v : report.confusion[i]) out += ',' + std::to_string(v);
    out += ',' + std::to_string(report.support[i]) + '\n';
  }
  return out;
}

}  // namespace radtext
