#include "radtext/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "radtext/error.hpp"
#include "radtext/keyimage.hpp"
#include "radtext/random.hpp"

namespace radtext::synth {
namespace {

double total_variation(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

std::size_t nearest_mean(const std::vector<std::vector<double>>& means, const std::vector<double>& x) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < means.size(); ++c) {
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) d += (x[i] - means[c][i]) * (x[i] - means[c][i]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace

PlantedCorpus generate_lda_corpus(const PlantedLdaSpec& spec) {
  if (spec.num_topics < 1 || spec.vocab_size < spec.num_topics)
    throw ConfigError("generate_lda_corpus: need 1 <= K <= V");
  if (spec.doc_length < 1) throw ConfigError("generate_lda_corpus: document length must be >= 1");
  if (spec.num_docs < 1) throw ConfigError("generate_lda_corpus: need at least one document");
  if (spec.alpha <= 0.0) throw ConfigError("generate_lda_corpus: alpha must be positive");

  const auto K = static_cast<std::size_t>(spec.num_topics);
  const auto V = static_cast<std::size_t>(spec.vocab_size);
  Rng rng(spec.seed);
  PlantedCorpus out;
  out.phi.assign(K * V, 0.0);

  for (std::size_t k = 0; k < K; ++k) {
    std::size_t lo = 0;
    std::size_t hi = V;
    if (spec.disjoint) {
      const std::size_t block = V / K;
      lo = k * block;
      hi = (k + 1 == K) ? V : lo + block;
    }
    const std::size_t n = hi - lo;
    std::vector<double> w;
    if (spec.word_concentration > 0.0) {
      w = rng.dirichlet(std::vector<double>(n, spec.word_concentration));
    } else if (spec.disjoint) {
      w.assign(n, 1.0 / static_cast<double>(n));
    } else {
      w = rng.dirichlet(std::vector<double>(n, 0.1));
    }
    std::copy(w.begin(), w.end(), out.phi.begin() + static_cast<std::ptrdiff_t>(k * V + lo));
  }

  const std::vector<double> alpha(K, spec.alpha);
  for (int d = 0; d < spec.num_docs; ++d) {
    std::vector<double> theta = rng.dirichlet(alpha);
    std::vector<int> counts(V, 0);
    for (int i = 0; i < spec.doc_length; ++i) {
      const std::size_t z = rng.categorical(theta);
      const std::size_t w = rng.categorical(std::span<const double>(out.phi).subspan(z * V, V));
      ++counts[w];
    }
    BowDocument doc{"d" + std::to_string(d), {}, spec.doc_length};
    for (std::size_t w = 0; w < V; ++w)
      if (counts[w] > 0) doc.terms.emplace_back(static_cast<int>(w), counts[w]);
    out.docs.push_back(std::move(doc));
    out.theta.push_back(std::move(theta));
  }
  return out;
}

double exact_doc_likelihood(std::span<const double> phi, int num_topics, int vocab_size, double alpha,
                            const BowDocument& doc) {
  const auto K = static_cast<std::size_t>(num_topics);
  const auto V = static_cast<std::size_t>(vocab_size);
  if (phi.size() != K * V) throw ConfigError("exact_doc_likelihood: phi shape mismatch");
  std::vector<std::size_t> words;
  for (const auto& [w, n] : doc.terms) words.insert(words.end(), static_cast<std::size_t>(n), static_cast<std::size_t>(w));
  const std::size_t N = words.size();
  double assignments = 1.0;
  for (std::size_t i = 0; i < N; ++i) {
    assignments *= static_cast<double>(K);
    if (assignments > 1e6) throw ConfigError("exact_doc_likelihood: K^N exceeds 10^6 assignments");
  }

  // log p(z | alpha) depends on z only through its topic counts.
  const double log_norm = std::lgamma(K * alpha) - std::lgamma(K * alpha + static_cast<double>(N)) -
                          static_cast<double>(K) * std::lgamma(alpha);
  std::vector<std::size_t> z(N, 0);
  std::vector<int> counts(K, 0);
  counts[0] = static_cast<int>(N);
  double total = -std::numeric_limits<double>::infinity();
  for (;;) {
    double lp = log_norm;
    for (std::size_t k = 0; k < K; ++k) lp += std::lgamma(alpha + counts[k]);
    for (std::size_t i = 0; i < N; ++i) lp += std::log(phi[z[i] * V + words[i]]);
    total = log_sum_exp(total, lp);

    std::size_t pos = 0;
    while (pos < N) {
      --counts[z[pos]];
      if (++z[pos] < K) {
        ++counts[z[pos]];
        break;
      }
      z[pos] = 0;
      ++counts[0];
      ++pos;
    }
    if (pos == N) break;
  }
  return total;
}

double matched_tv_distance(std::span<const double> estimated, std::span<const double> planted, int num_topics,
                           int vocab_size) {
  const auto K = static_cast<std::size_t>(num_topics);
  const auto V = static_cast<std::size_t>(vocab_size);
  if (estimated.size() != K * V || planted.size() != K * V) throw ConfigError("matched_tv_distance: shape mismatch");
  std::vector<std::vector<double>> tv(K, std::vector<double>(K));
  for (std::size_t a = 0; a < K; ++a)
    for (std::size_t b = 0; b < K; ++b) tv[a][b] = total_variation(estimated.subspan(a * V, V), planted.subspan(b * V, V));

  if (K <= 8) {
    std::vector<std::size_t> perm(K);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    double best = std::numeric_limits<double>::infinity();
    do {
      double worst = 0.0;
      for (std::size_t a = 0; a < K; ++a) worst = std::max(worst, tv[a][perm[a]]);
      best = std::min(best, worst);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }
  std::vector<bool> used(K, false);
  double worst = 0.0;
  for (std::size_t a = 0; a < K; ++a) {
    std::size_t pick = K;
    for (std::size_t b = 0; b < K; ++b)
      if (!used[b] && (pick == K || tv[a][b] < tv[a][pick])) pick = b;
    used[pick] = true;
    worst = std::max(worst, tv[a][pick]);
  }
  return worst;
}

Dataset generate_feature_dataset(const FeatureDatasetSpec& spec) {
  if (spec.classes < 2) throw ConfigError("generate_feature_dataset: need at least 2 classes");
  if (spec.dim < 1) throw ConfigError("generate_feature_dataset: dimension must be >= 1");
  if (!(spec.separation > 0.0)) throw ConfigError("generate_feature_dataset: separation must be positive");
  Rng rng(spec.seed);
  std::vector<std::vector<double>> means;
  for (int c = 0; c < spec.classes; ++c) {
    std::vector<double> m(spec.dim);
    double norm = 0.0;
    while (norm == 0.0) {
      norm = 0.0;
      for (double& v : m) {
        v = rng.normal();
        norm += v * v;
      }
      norm = std::sqrt(norm);
    }
    for (double& v : m) v *= spec.separation / norm;
    means.push_back(std::move(m));
  }
  Dataset data;
  for (int c = 0; c < spec.classes; ++c) {
    for (std::size_t i = 0; i < spec.per_class; ++i) {
      Sample s;
      s.key = "c" + std::to_string(c) + "_" + std::to_string(i);
      s.label = c;
      // Redraw points that land nearer another class mean; the nearest-mean
      // regions are linear, so the classes stay linearly separable.
      do {
        s.x = means[static_cast<std::size_t>(c)];
        for (double& v : s.x) v += spec.noise * rng.normal();
      } while (nearest_mean(means, s.x) != static_cast<std::size_t>(c));
      data.push_back(std::move(s));
    }
  }
  return data;
}

PairedTasks generate_paired_tasks(const PairedTaskSpec& spec) {
  if (spec.clusters < 2 || spec.task_b_classes < 2 || spec.task_b_classes > spec.clusters)
    throw ConfigError("generate_paired_tasks: need 2 <= task B classes <= clusters");
  if (spec.dim < 2) throw ConfigError("generate_paired_tasks: dimension must be >= 2");
  Rng rng(spec.seed);
  PairedTasks out;
  const double pi = 3.14159265358979323846;
  for (std::size_t i = 0; i < spec.per_cluster; ++i) {
    for (int c = 0; c < spec.clusters; ++c) {
      Sample s;
      s.key = "p" + std::to_string(c) + "_" + std::to_string(i);
      s.x.assign(spec.dim, 0.0);
      const double angle = 2.0 * pi * c / spec.clusters;
      s.x[0] = spec.radius * std::cos(angle);
      s.x[1] = spec.radius * std::sin(angle);
      for (double& v : s.x) v += spec.noise * rng.normal();
      s.label = c;
      out.task_a.push_back(s);
      s.label = c % spec.task_b_classes;
      out.task_b.push_back(std::move(s));
    }
  }
  return out;
}

CloneCorpus generate_context_clone_corpus(const CloneCorpusSpec& spec) {
  if (spec.vocab_size < 4) throw ConfigError("generate_context_clone_corpus: V must be >= 4");
  const int base = spec.vocab_size - 2 * spec.clone_pairs;
  const int groups = spec.clone_pairs + 2;
  if (spec.clone_pairs < 0 || base < 2 * groups)
    throw ConfigError("generate_context_clone_corpus: too many clone pairs for the vocabulary");
  if (spec.sentence_length < 2) throw ConfigError("generate_context_clone_corpus: sentence length must be >= 2");

  auto word = [](int id) { return "w" + std::to_string(id); };
  std::vector<std::vector<int>> members(static_cast<std::size_t>(groups));
  for (int w = 0; w < base; ++w) members[static_cast<std::size_t>(w % groups)].push_back(w);

  CloneCorpus out;
  for (int p = 0; p < spec.clone_pairs; ++p) out.clones.emplace_back(word(base + 2 * p), word(base + 2 * p + 1));

  Rng rng(spec.seed);
  auto sentence_from = [&](int g) {
    const auto& m = members[static_cast<std::size_t>(g)];
    std::vector<std::string> s;
    for (int i = 0; i < spec.sentence_length; ++i) s.push_back(word(m[rng.below(m.size())]));
    return s;
  };
  for (int i = 0; i < spec.sentences; ++i) {
    if (spec.clone_pairs > 0 && rng.uniform() < spec.clone_sentence_rate) {
      const int p = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.clone_pairs)));
      std::vector<std::string> s = sentence_from(p);
      const std::size_t at = rng.below(s.size());
      s[at] = out.clones[static_cast<std::size_t>(p)].first;
      out.streams.push_back(s);
      s[at] = out.clones[static_cast<std::size_t>(p)].second;
      out.streams.push_back(std::move(s));
    } else {
      out.streams.push_back(sentence_from(static_cast<int>(rng.below(static_cast<std::uint64_t>(groups)))));
    }
  }
  return out;
}

}  // namespace radtext::synth

namespace radtext::synth {

KeywordSuite generate_keyword_suite(const KeywordSuiteSpec& spec) {
  if (spec.images < 1 || spec.topics < 1 || spec.keywords_per_topic < 1 || spec.filler_words < 1 || spec.dim < 2)
    throw ConfigError("generate_keyword_suite: every size must be positive (dim >= 2)");
  Rng rng(spec.seed);
  const auto T = static_cast<std::size_t>(spec.topics);
  std::vector<std::string> words;
  for (std::size_t i = 0; i < T * spec.keywords_per_topic; ++i) words.push_back("kw" + std::to_string(i));
  for (std::size_t i = 0; i < spec.filler_words; ++i) words.push_back("filler" + std::to_string(i));

  KeywordSuite s;
  SkipGramConfig ec;
  ec.dim = spec.dim;
  ec.seed = spec.seed;
  s.embeddings = init_embedding(Vocabulary(words, std::vector<std::size_t>(words.size(), 1)), ec);
  for (double& v : s.embeddings.input) v = rng.normal();
  for (std::size_t t = 0; t < T; ++t)
    s.topic_keywords.emplace_back(words.begin() + static_cast<std::ptrdiff_t>(t * spec.keywords_per_topic),
                                  words.begin() + static_cast<std::ptrdiff_t>((t + 1) * spec.keywords_per_topic));

  const std::size_t n = spec.images;
  s.topic_classifier = make_model({n, T}, Head::kSoftmax, derive_seed(spec.seed, 1));
  s.regression = make_model({n, 2 * spec.dim}, Head::kSigmoidCrossEntropy, derive_seed(spec.seed, 2));
  Layer& tc = s.topic_classifier.layers[0];
  Layer& rg = s.regression.layers[0];
  std::fill(tc.weights.begin(), tc.weights.end(), 0.0);
  std::fill(rg.weights.begin(), rg.weights.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t topic = i % T;
    const std::string& kw = s.topic_keywords[topic][rng.below(spec.keywords_per_topic)];
    const std::string& filler = words[T * spec.keywords_per_topic + rng.below(spec.filler_words)];
    tc.weights[topic * n + i] = 10.0;
    const auto a = s.embeddings.vector(kw);
    const auto b = s.embeddings.vector(filler);
    for (std::size_t d = 0; d < spec.dim; ++d) {
      rg.weights[d * n + i] = a[d];
      rg.weights[(spec.dim + d) * n + i] = b[d];
    }
    std::vector<double> x(n, 0.0);
    x[i] = 1.0;
    s.features.push_back(std::move(x));
    s.image_keys.push_back("planted" + std::to_string(i) + ":-:1");
    s.planted.push_back(kw);
  }
  return s;
}

}  // namespace radtext::synth

namespace radtext::synth {
namespace {

struct Theme {
  const char* exam;
  const char* organ;
  std::vector<const char*> anatomy;
  std::vector<const char*> diseases;
  std::vector<const char*> descriptors;
};

const std::vector<Theme>& themes() {
  static const std::vector<Theme> t = {
      {"CT of the abdomen", "liver",
       {"liver", "hepatic lobe", "portal vein", "gallbladder", "biliary tree"},
       {"cyst", "hemangioma", "cirrhosis", "metastasis", "abscess"},
       {"hypodense", "enhancing", "small", "lobulated"}},
      {"CT of the chest", "lung",
       {"right lung", "left lower lobe", "pleural space", "mediastinum", "upper lobe"},
       {"pneumothorax", "effusion", "atelectasis", "pneumonia", "emphysema"},
       {"small", "moderate", "dependent", "patchy"}},
      {"CT of the kidneys", "kidney",
       {"left kidney", "right kidney", "renal pelvis", "ureter", "cortex"},
       {"cyst", "hydronephrosis", "adenoma", "carcinoma", "infarct"},
       {"simple", "exophytic", "mild", "cortical"}},
      {"MRI of the brain", "brain",
       {"frontal lobe", "ventricles", "white matter", "basal ganglia", "cerebellum"},
       {"infarct", "hemorrhage", "edema", "aneurysm", "tumor"},
       {"acute", "chronic", "focal", "punctate"}},
  };
  return t;
}

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

}  // namespace

ReportCorpus generate_report_corpus(const ReportCorpusSpec& spec) {
  if (spec.reports < 1 || spec.feature_dim < 2) throw ConfigError("generate_report_corpus: need reports and feature_dim >= 2");
  Rng rng(spec.seed);
  const auto& th = themes();
  std::vector<std::string> disease_names;
  for (const auto& t : th)
    for (const char* d : t.diseases)
      if (std::find(disease_names.begin(), disease_names.end(), d) == disease_names.end()) disease_names.emplace_back(d);

  auto direction = [&] {
    std::vector<double> v(spec.feature_dim);
    double n = 0.0;
    for (double& x : v) {
      x = rng.normal();
      n += x * x;
    }
    for (double& x : v) x /= std::sqrt(n);
    return v;
  };
  std::vector<std::vector<double>> theme_dir;
  for (std::size_t i = 0; i < th.size(); ++i) theme_dir.push_back(direction());
  std::map<std::string, std::vector<double>> disease_dir;
  for (const auto& d : disease_names) disease_dir[d] = direction();

  auto pick = [&](const auto& v) { return std::string(v[rng.below(v.size())]); };

  ReportCorpus out;
  std::set<std::string> used_keys;
  for (std::size_t r = 0; r < spec.reports; ++r) {
    const std::size_t t = rng.below(th.size());
    const Theme& theme = th[t];
    std::string text = capitalize(theme.exam) + " was performed with contrast.";
    std::int64_t series = 2 + static_cast<std::int64_t>(rng.below(8));
    std::int64_t next_image = 5 + static_cast<std::int64_t>(rng.below(20));
    const std::size_t findings = 2 + rng.below(4);
    for (std::size_t f = 0; f < findings; ++f) {
      const std::string d = pick(theme.diseases);
      const std::string place = pick(theme.anatomy);
      const double u = rng.uniform();
      std::string sentence;
      double weight = 1.0;
      std::vector<std::pair<std::string, double>> mentioned;
      if (u < 0.5) {
        sentence = rng.uniform() < 0.5 ? "There is a " + pick(theme.descriptors) + " " + d + " in the " + place
                                       : "A " + d + " is seen in the " + place;
      } else if (u < 0.65) {
        std::string d2 = pick(theme.diseases);
        if (d2 == d) d2 = theme.diseases[(std::find(theme.diseases.begin(), theme.diseases.end(), d) - theme.diseases.begin() + 1) % theme.diseases.size()];
        sentence = "Both " + d + " and " + d2 + " are noted in the " + place;
        mentioned.emplace_back(d2, 1.0);
      } else if (u < 0.9) {
        const int form = static_cast<int>(rng.below(3));
        sentence = form == 0 ? "No evidence of " + d + " in the " + place
                 : form == 1 ? "No " + d + " is identified in the " + place
                             : "The previously seen " + d + " has resolved";
        weight = -0.5;
      } else {
        sentence = "Possible " + d + " in the " + place;
        weight = 0.3;
      }
      mentioned.emplace_back(d, weight);

      std::vector<std::int64_t> images;
      const double v = rng.uniform();
      if (v < 0.45) {
        images = {next_image};
        sentence += " on series " + std::to_string(series) + ", image " + std::to_string(next_image);
      } else if (v < 0.65) {
        const std::int64_t hi = next_image + 1 + static_cast<std::int64_t>(rng.below(3));
        for (std::int64_t i = next_image; i <= hi; ++i) images.push_back(i);
        sentence += " on images " + std::to_string(next_image) + "-" + std::to_string(hi);
      } else if (v < 0.75) {
        images = {next_image, next_image + 3};
        sentence += " (image " + std::to_string(next_image) + " and " + std::to_string(next_image + 3) + ")";
      }
      text += " " + sentence + ".";
      const bool has_series = v < 0.45;
      for (std::int64_t img : images) {
        const ImageKey key{"R" + std::to_string(r + 1), has_series ? std::optional<std::int64_t>(series) : std::nullopt, img};
        if (!used_keys.insert(key.str()).second) continue;
        FeatureRecord rec;
        rec.image_key = key.str();
        rec.feature = theme_dir[t];
        for (double& x : rec.feature) x *= 2.0;
        for (const auto& [name, w] : mentioned) {
          const auto& dir = disease_dir[name];
          for (std::size_t i = 0; i < rec.feature.size(); ++i) rec.feature[i] += 2.0 * w * dir[i];
        }
        for (double& x : rec.feature) x += spec.feature_noise * rng.normal();
        out.features.push_back(std::move(rec));
      }
      next_image += 4 + static_cast<std::int64_t>(rng.below(10));
      if (rng.uniform() < 0.2) ++series;
    }
    text += " Otherwise normal " + std::string(theme.organ) + ".";
    out.reports.push_back({"R" + std::to_string(r + 1), "ACC" + std::to_string(100000 + r), text});
  }
  return out;
}

}  // namespace radtext::synth
