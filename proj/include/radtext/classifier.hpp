#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "radtext/container.hpp"

namespace radtext {

/// One training or evaluation item: a feature vector plus either a class
/// label (softmax head) or a real-valued target (sigmoid cross-entropy head).
struct Sample {
  std::string key;
  std::vector<double> x;
  int label = -1;
  std::vector<double> target;
  std::string group;  // patient id for grouped splits; may be empty
};

using Dataset = std::vector<Sample>;

struct FeatureRecord {
  std::string image_key;
  std::vector<double> feature;
  std::string provenance;
};

/// Header "N F" then N lines of `image_key f1 ... fF`.
std::vector<FeatureRecord> parse_features(std::string_view text);
std::vector<FeatureRecord> read_features(const std::string& path);
std::string format_features(const std::vector<FeatureRecord>& records);

/// Max-shifted normalized exponential.
std::vector<double> softmax(std::span<const double> z);
double sigmoid(double x);

enum class Head { kSoftmax, kSigmoidCrossEntropy };
const char* to_string(Head head);
Head parse_head(std::string_view s);

struct Layer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> bias;     // out
  double lr_multiplier = 1.0;
};

/// Fully connected network: tanh hidden layers, linear output layer feeding
/// the head.
struct FeedForwardModel {
  std::vector<Layer> layers;
  Head head = Head::kSoftmax;
  std::uint64_t seed = 0;

  std::vector<std::size_t> layer_sizes() const;
  std::size_t input_dim() const { return layers.front().in; }
  std::size_t output_dim() const { return layers.back().out; }
  std::size_t parameter_count() const;

  /// Output-layer pre-activations.
  std::vector<double> logits(std::span<const double> x) const;
  /// Softmax probabilities or per-unit sigmoids, depending on the head.
  std::vector<double> predict(std::span<const double> x) const;
};

/// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), zero biases.
FeedForwardModel make_model(const std::vector<std::size_t>& sizes, Head head, std::uint64_t seed);

struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> bias;
};

/// Mean loss over the batch. Softmax head: cross-entropy of the normalized
/// exponential. Sigmoid head: sum over units of binary cross-entropy between
/// sigmoid(target) and sigmoid(output).
double batch_loss(const FeedForwardModel& model, std::span<const Sample> batch);
double loss_and_gradient(const FeedForwardModel& model, std::span<const Sample> batch, Gradients& grads);

/// Largest relative deviation between the analytic gradient and central
/// differences over every parameter.
double gradient_check(const FeedForwardModel& model, std::span<const Sample> batch);

struct SplitSpec {
  double train = 0.85;
  double cv = 0.05;
  double test = 0.10;
  std::uint64_t seed = 1;
  bool group_by_patient = false;
};

struct SplitCounts {
  std::size_t train = 0;
  std::size_t cv = 0;
  std::size_t test = 0;
};

/// Per-class allocation: cv and test sizes rounded to nearest, train takes the rest.
SplitCounts split_counts(std::size_t n, const SplitSpec& spec);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> cv;
  std::vector<std::size_t> test;
};

/// Stratified by label; grouped by Sample::group when requested.
Split split_dataset(const Dataset& data, const SplitSpec& spec);
Dataset select(const Dataset& data, const std::vector<std::size_t>& indices);

struct FilterResult {
  Dataset data;                    // surviving samples, labels re-indexed densely
  std::vector<int> kept_labels;    // new label -> original label
  std::vector<int> dropped_labels; // original labels removed
};

/// Drops classes whose split allocation leaves fewer than `min_per_split`
/// items in any of train, cv or test.
FilterResult filter_small_classes(const Dataset& data, const SplitSpec& spec, std::size_t min_per_split = 1);

struct TrainConfig {
  std::vector<std::size_t> hidden;  // hidden layer sizes for random init
  Head head = Head::kSoftmax;
  int epochs = 10;
  double base_lr = 0.01;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  int eval_every = 0;  // iterations between cv evaluations; 0 = once per epoch
};

struct TracePoint {
  long iteration = 0;
  double cv_score = 0.0;  // top-1 accuracy, or mean half-vector cosine for the sigmoid head
};

struct TrainResult {
  FeedForwardModel model;
  std::vector<TracePoint> trace;
};

/// Mini-batch SGD. Each layer steps with base_lr * lr_multiplier. When `init`
/// is given training starts from a copy of it instead of a random model.
TrainResult train(const Dataset& train_set, const Dataset& cv_set, const TrainConfig& config,
                  const FeedForwardModel* init = nullptr);

/// Copies every layer but the last from `base` and appends a freshly
/// initialized output layer. Copied layers step at base_lr, the new layer at
/// new_layer_lr.
FeedForwardModel replace_output_layer(const FeedForwardModel& base, std::size_t new_outputs, Head head,
                                      double base_lr, double new_layer_lr, std::uint64_t seed);

struct FineTuneConfig {
  std::size_t new_outputs = 0;
  Head head = Head::kSoftmax;
  double base_lr = 0.001;
  double new_layer_lr = 0.01;
  int epochs = 10;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  int eval_every = 0;
};

TrainResult fine_tune(const FeedForwardModel& base, const Dataset& train_set, const Dataset& cv_set,
                      const FineTuneConfig& config);

/// Highest-probability labels, ties by lower label id.
std::vector<std::pair<int, double>> predict_topk(const FeedForwardModel& model, std::span<const double> x,
                                                 std::size_t k);

struct EvalReport {
  std::vector<std::size_t> ks;
  std::vector<double> topk;  // parallel to ks
  double top1 = 0.0;
  double top5 = 0.0;
  std::vector<std::vector<long>> confusion;  // [truth][argmax]
  std::vector<long> support;
};

EvalReport evaluate(const FeedForwardModel& model, const Dataset& test_set, std::vector<std::size_t> ks = {1, 5});

/// Cosine of each output half against the matching target half, averaged
/// over halves and samples. Used for bi-gram regressors.
double mean_half_cosine(const FeedForwardModel& model, const Dataset& data);
double cosine(std::span<const double> a, std::span<const double> b);

Container model_to_container(const FeedForwardModel& model);
FeedForwardModel model_from_container(const Container& c);

std::string trace_csv(const std::vector<TracePoint>& trace);
std::string confusion_csv(const EvalReport& report);

}  // namespace radtext
