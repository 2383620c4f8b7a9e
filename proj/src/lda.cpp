#include "radtext/lda.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <sstream>

#include "radtext/error.hpp"
#include "radtext/random.hpp"

namespace radtext {
namespace {

std::vector<int> expand_tokens(const BowDocument& doc, int vocab_size) {
  std::vector<int> tokens;
  tokens.reserve(static_cast<std::size_t>(doc.length));
  for (const auto& [w, n] : doc.terms) {
    if (w < 0 || w >= vocab_size) continue;
    tokens.insert(tokens.end(), static_cast<std::size_t>(n), w);
  }
  return tokens;
}

void normalize_rows(std::vector<double>& m, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < cols; ++c) sum += m[r * cols + c];
    for (std::size_t c = 0; c < cols; ++c) m[r * cols + c] /= sum;
  }
}

}  // namespace

LdaModel fit_lda(const std::vector<BowDocument>& docs, int vocab_size, const LdaConfig& config,
                 const SweepObserver& observer) {
  if (docs.empty()) throw DataError("fit_lda: empty corpus");
  if (config.num_topics < 1) throw ConfigError("fit_lda: number of topics must be >= 1");
  if (config.iterations < 1) throw ConfigError("fit_lda: iterations must be >= 1");
  if (vocab_size < 1) throw ConfigError("fit_lda: vocabulary is empty");
  if (config.beta <= 0.0) throw ConfigError("fit_lda: beta must be positive");

  const int K = config.num_topics;
  const int V = vocab_size;
  LdaModel m;
  m.num_topics = K;
  m.vocab_size = V;
  m.alpha = config.effective_alpha();
  m.beta = config.beta;
  m.seed = config.seed;
  m.iterations = config.iterations;

  long long total_tokens = 0;
  for (const auto& d : docs) {
    m.doc_tokens.push_back(expand_tokens(d, V));
    if (m.doc_tokens.back().empty()) throw DataError("fit_lda: document '" + d.doc_id + "' has no tokens");
    total_tokens += static_cast<long long>(m.doc_tokens.back().size());
  }
  if (K > total_tokens) throw ConfigError("fit_lda: more topics than tokens in the corpus");

  m.doc_topic_counts.assign(docs.size(), std::vector<int>(static_cast<std::size_t>(K), 0));
  m.topic_word_counts.assign(static_cast<std::size_t>(K) * V, 0);
  m.topic_counts.assign(static_cast<std::size_t>(K), 0);
  m.assignments.resize(docs.size());

  Rng rng(config.seed);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    auto& z = m.assignments[d];
    z.resize(m.doc_tokens[d].size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      const int k = static_cast<int>(rng.below(static_cast<std::uint64_t>(K)));
      const int w = m.doc_tokens[d][i];
      z[i] = k;
      ++m.doc_topic_counts[d][k];
      ++m.topic_word_counts[static_cast<std::size_t>(k) * V + w];
      ++m.topic_counts[k];
    }
  }

  const double vbeta = V * m.beta;
  const int burn_in = config.iterations / 2;
  std::vector<double> accum(static_cast<std::size_t>(K) * V, 0.0);
  int samples = 0;
  std::vector<double> p(static_cast<std::size_t>(K));

  for (int sweep = 0; sweep < config.iterations; ++sweep) {
    for (std::size_t d = 0; d < docs.size(); ++d) {
      auto& z = m.assignments[d];
      auto& ndk = m.doc_topic_counts[d];
      const auto& words = m.doc_tokens[d];
      for (std::size_t i = 0; i < words.size(); ++i) {
        const int w = words[i];
        int k = z[i];
        --ndk[k];
        --m.topic_word_counts[static_cast<std::size_t>(k) * V + w];
        --m.topic_counts[k];

        double total = 0.0;
        for (int t = 0; t < K; ++t) {
          total += (ndk[t] + m.alpha) * (m.topic_word_counts[static_cast<std::size_t>(t) * V + w] + m.beta) /
                   (m.topic_counts[t] + vbeta);
          p[t] = total;
        }
        const double u = rng.uniform() * total;
        k = static_cast<int>(std::upper_bound(p.begin(), p.end(), u) - p.begin());
        if (k >= K) k = K - 1;

        z[i] = k;
        ++ndk[k];
        ++m.topic_word_counts[static_cast<std::size_t>(k) * V + w];
        ++m.topic_counts[k];
      }
    }
    if (sweep >= burn_in) {
      for (std::size_t j = 0; j < accum.size(); ++j) accum[j] += m.topic_word_counts[j];
      ++samples;
    }
    if (observer) observer(sweep, m);
  }

  m.phi.resize(accum.size());
  for (std::size_t j = 0; j < accum.size(); ++j) m.phi[j] = accum[j] / samples + m.beta;
  normalize_rows(m.phi, static_cast<std::size_t>(K), static_cast<std::size_t>(V));
  return m;
}

FoldInResult fold_in(const LdaModel& model, const BowDocument& doc, int iterations, std::uint64_t seed) {
  if (iterations < 1) throw ConfigError("fold_in: iterations must be >= 1");
  const int K = model.num_topics;
  FoldInResult r;
  r.theta.assign(static_cast<std::size_t>(K), 0.0);
  const std::vector<int> words = expand_tokens(doc, model.vocab_size);
  r.tokens = static_cast<int>(words.size());
  if (words.empty()) return r;

  Rng rng(seed);
  std::vector<int> z(words.size());
  std::vector<int> ndk(static_cast<std::size_t>(K), 0);
  for (std::size_t i = 0; i < words.size(); ++i) {
    z[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(K)));
    ++ndk[z[i]];
  }
  const int burn_in = iterations / 2;
  int samples = 0;
  const double denom = words.size() + K * model.alpha;
  std::vector<double> p(static_cast<std::size_t>(K));
  for (int sweep = 0; sweep < iterations; ++sweep) {
    for (std::size_t i = 0; i < words.size(); ++i) {
      --ndk[z[i]];
      double total = 0.0;
      for (int t = 0; t < K; ++t) {
        total += (ndk[t] + model.alpha) * model.phi_at(t, words[i]);
        p[t] = total;
      }
      const double u = rng.uniform() * total;
      int k = static_cast<int>(std::upper_bound(p.begin(), p.end(), u) - p.begin());
      if (k >= K) k = K - 1;
      z[i] = k;
      ++ndk[k];
    }
    if (sweep >= burn_in) {
      for (int t = 0; t < K; ++t) r.theta[t] += (ndk[t] + model.alpha) / denom;
      ++samples;
    }
  }
  double sum = 0.0;
  for (double& x : r.theta) {
    x /= samples;
    sum += x;
  }
  for (double& x : r.theta) x /= sum;

  for (int w : words) {
    double pw = 0.0;
    for (int t = 0; t < K; ++t) pw += r.theta[t] * model.phi_at(t, w);
    r.log_likelihood += std::log(pw);
  }
  return r;
}

PerplexityResult evaluate_perplexity(const LdaModel& model, const std::vector<BowDocument>& heldout,
                                     int fold_in_iterations, std::uint64_t seed) {
  if (model.phi.empty()) throw DataError("perplexity: model is not trained");
  if (heldout.empty()) throw DataError("perplexity: held-out set is empty");
  PerplexityResult r;
  for (std::size_t d = 0; d < heldout.size(); ++d) {
    const FoldInResult f = fold_in(model, heldout[d], fold_in_iterations, derive_seed(seed, d));
    if (f.tokens == 0) {
      r.warnings.push_back("held-out document '" + heldout[d].doc_id + "' has no in-vocabulary tokens; skipped");
      continue;
    }
    r.log_likelihood += f.log_likelihood;
    r.tokens += f.tokens;
    ++r.documents;
  }
  if (r.tokens == 0) throw DataError("perplexity: no held-out document has in-vocabulary tokens");
  r.perplexity = std::exp(-r.log_likelihood / static_cast<double>(r.tokens));
  return r;
}

double perplexity(const LdaModel& model, const std::vector<BowDocument>& heldout, int fold_in_iterations,
                  std::uint64_t seed) {
  return evaluate_perplexity(model, heldout, fold_in_iterations, seed).perplexity;
}

int elbow_choice(const std::vector<int>& candidates, const std::vector<double>& scores, double threshold) {
  if (candidates.empty() || candidates.size() != scores.size())
    throw ConfigError("elbow_choice: candidates and scores must align");
  for (std::size_t i = 0; i + 1 < candidates.size(); ++i) {
    const double improvement = (scores[i] - scores[i + 1]) / scores[i];
    if (improvement < threshold) return candidates[i];
  }
  return candidates.back();
}

PerplexityReport select_topic_count(const std::vector<BowDocument>& docs, int vocab_size,
                                    std::vector<int> candidates, const SelectionConfig& config) {
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  if (candidates.size() < 2) throw ConfigError("select_topic_count: need at least 2 distinct candidates");
  if (!(config.split_fraction > 0.0 && config.split_fraction < 1.0))
    throw ConfigError("select_topic_count: split fraction must be in (0, 1)");

  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(config.seed);
  rng.shuffle(order);
  const auto n_train = static_cast<std::size_t>(std::llround(config.split_fraction * docs.size()));
  if (n_train < 1 || n_train >= docs.size())
    throw DataError("select_topic_count: too few documents for a train/test split");

  std::vector<BowDocument> train;
  std::vector<BowDocument> test;
  for (std::size_t i = 0; i < order.size(); ++i) (i < n_train ? train : test).push_back(docs[order[i]]);

  PerplexityReport report;
  report.candidates = candidates;
  report.training_documents = static_cast<int>(train.size());
  report.heldout_documents = static_cast<int>(test.size());
  report.scores.assign(candidates.size(), 0.0);

  auto score_one = [&](std::size_t i) {
    LdaConfig lc;
    lc.num_topics = candidates[i];
    lc.alpha = config.alpha;
    lc.beta = config.beta;
    lc.iterations = config.iterations;
    lc.seed = derive_seed(config.seed, static_cast<std::uint64_t>(candidates[i]));
    const LdaModel model = fit_lda(train, vocab_size, lc);
    return perplexity(model, test, config.fold_in_iterations, derive_seed(lc.seed, 0x9e37));
  };

  const std::size_t threads = static_cast<std::size_t>(std::max(1, config.threads));
  for (std::size_t start = 0; start < candidates.size(); start += threads) {
    std::vector<std::future<double>> jobs;
    const std::size_t end = std::min(candidates.size(), start + threads);
    for (std::size_t i = start; i < end; ++i)
      jobs.push_back(std::async(threads > 1 ? std::launch::async : std::launch::deferred, score_one, i));
    for (std::size_t i = start; i < end; ++i) report.scores[i] = jobs[i - start].get();
  }
  report.chosen = elbow_choice(report.candidates, report.scores, config.elbow_threshold);
  return report;
}

int assign_dominant_topic(const LdaModel& model, const BowDocument& doc, int fold_in_iterations,
                          std::uint64_t seed) {
  if (model.phi.empty()) throw DataError("assign_dominant_topic: model is not trained");
  const FoldInResult f = fold_in(model, doc, fold_in_iterations, seed);
  if (f.tokens == 0) throw DataError("assign_dominant_topic: document '" + doc.doc_id + "' has no known tokens");
  int best = 0;
  for (int k = 1; k < model.num_topics; ++k)
    if (f.theta[k] > f.theta[best]) best = k;
  return best;
}

int SubtopicResult::global_id(int parent, int subtopic) const {
  int offset = 0;
  for (const auto& [p, model] : models) {
    if (p == parent) {
      if (subtopic < 0 || subtopic >= model.num_topics) break;
      return offset + subtopic;
    }
    offset += model.num_topics;
  }
  throw DataError("subtopic (" + std::to_string(parent) + ", " + std::to_string(subtopic) + ") does not exist");
}

int SubtopicResult::total_subtopics() const {
  int n = 0;
  for (const auto& [p, model] : models) n += model.num_topics;
  return n;
}

SubtopicResult fit_subtopics(const LdaModel& parent, const std::vector<BowDocument>& docs,
                             const SubtopicConfig& config) {
  const std::size_t min_docs = static_cast<std::size_t>(std::max(2, config.min_docs));
  SubtopicResult result;
  result.doc_parent.assign(docs.size(), -1);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const int k = assign_dominant_topic(parent, docs[d], config.select.fold_in_iterations,
                                        derive_seed(config.select.seed, d));
    result.doc_parent[d] = k;
    result.members[k].push_back(static_cast<int>(d));
  }

  struct Eligible {
    int parent;
    std::vector<BowDocument> docs;
    std::vector<int> candidates;
  };
  std::vector<Eligible> eligible;
  for (int k = 0; k < parent.num_topics; ++k) {
    const auto it = result.members.find(k);
    if (it == result.members.end() || it->second.size() < min_docs) {
      result.skipped_parents.push_back(k);
      continue;
    }
    Eligible e{k, {}, {}};
    long long tokens = 0;
    for (int d : it->second) {
      e.docs.push_back(docs[static_cast<std::size_t>(d)]);
      tokens += docs[static_cast<std::size_t>(d)].length;
    }
    // Candidates must fit within the smaller training split.
    const long long usable = static_cast<long long>(tokens * config.select.split_fraction) / 2;
    for (int c : config.candidates)
      if (c >= 1 && c <= std::max(1LL, usable)) e.candidates.push_back(c);
    if (e.candidates.empty()) {
      result.skipped_parents.push_back(k);
      continue;
    }
    eligible.push_back(std::move(e));
  }

  for (auto& e : eligible) {
    SelectionConfig sc = config.select;
    sc.seed = derive_seed(config.select.seed, 1000 + static_cast<std::uint64_t>(e.parent));
    if (e.candidates.size() >= 2) {
      result.reports[e.parent] = select_topic_count(e.docs, parent.vocab_size, e.candidates, sc);
    } else {
      PerplexityReport single;
      single.candidates = e.candidates;
      single.chosen = e.candidates.front();
      result.reports[e.parent] = single;
    }
  }

  int shared = 0;
  if (config.selection == SubtopicSelection::kSharedAverage && !eligible.empty()) {
    // Average each candidate's score over the parents that evaluated it.
    std::map<int, std::pair<double, int>> sums;
    for (const auto& [p, rep] : result.reports)
      for (std::size_t i = 0; i < rep.scores.size(); ++i) {
        sums[rep.candidates[i]].first += rep.scores[i];
        ++sums[rep.candidates[i]].second;
      }
    std::vector<int> cands;
    std::vector<double> avg;
    for (const auto& [c, s] : sums) {
      cands.push_back(c);
      avg.push_back(s.first / s.second);
    }
    shared = cands.empty() ? eligible.front().candidates.front()
                           : elbow_choice(cands, avg, config.select.elbow_threshold);
  }

  for (auto& e : eligible) {
    int k = result.reports[e.parent].chosen;
    if (config.selection == SubtopicSelection::kSharedAverage) {
      k = e.candidates.front();
      for (int c : e.candidates)
        if (c <= shared) k = c;
    }
    LdaConfig lc;
    lc.num_topics = k;
    lc.alpha = config.select.alpha;
    lc.beta = config.select.beta;
    lc.iterations = config.select.iterations;
    lc.seed = derive_seed(config.select.seed, 5000 + static_cast<std::uint64_t>(e.parent));
    result.models.emplace(e.parent, fit_lda(e.docs, parent.vocab_size, lc));
  }
  std::sort(result.skipped_parents.begin(), result.skipped_parents.end());
  return result;
}

std::vector<std::pair<int, double>> top_keywords(const LdaModel& model, int topic_id, std::size_t n) {
  if (topic_id < 0 || topic_id >= model.num_topics) throw DataError("top_keywords: topic id out of range");
  std::vector<int> ids(static_cast<std::size_t>(model.vocab_size));
  std::iota(ids.begin(), ids.end(), 0);
  const std::size_t count = std::min(n, ids.size());
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(count), ids.end(), [&](int a, int b) {
    const double pa = model.phi_at(topic_id, a);
    const double pb = model.phi_at(topic_id, b);
    return pa != pb ? pa > pb : a < b;
  });
  std::vector<std::pair<int, double>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.emplace_back(ids[i], model.phi_at(topic_id, ids[i]));
  return out;
}

const char* to_string(TopicLevel level) {
  switch (level) {
    case TopicLevel::kDocument: return "document";
    case TopicLevel::kDocumentSub: return "document_sub";
    case TopicLevel::kSentence: return "sentence";
  }
  return "unknown";
}

std::vector<TopicNode> make_topic_nodes(TopicLevel level, const LdaModel& model, const Vocabulary& vocab,
                                        std::optional<int> parent, int id_offset, std::size_t n_keywords) {
  if (static_cast<int>(vocab.size()) != model.vocab_size)
    throw DataError("make_topic_nodes: vocabulary does not match the model");
  std::vector<TopicNode> nodes;
  for (int k = 0; k < model.num_topics; ++k) {
    TopicNode node;
    node.level = level;
    node.topic_id = id_offset + k;
    node.parent = parent;
    for (const auto& [w, p] : top_keywords(model, k, n_keywords))
      node.keywords.emplace_back(vocab.token(static_cast<std::size_t>(w)), p);
    nodes.push_back(std::move(node));
  }
  return nodes;
}

Container lda_to_container(const LdaModel& model) {
  Container c;
  c.kind = "lda";
  c.meta["K"] = std::int64_t{model.num_topics};
  c.meta["V"] = std::int64_t{model.vocab_size};
  c.meta["alpha"] = model.alpha;
  c.meta["beta"] = model.beta;
  c.meta["seed"] = static_cast<std::int64_t>(model.seed);
  c.meta["iterations"] = std::int64_t{model.iterations};
  c.matrices["phi"] = to_matrix32(static_cast<std::size_t>(model.num_topics),
                                  static_cast<std::size_t>(model.vocab_size), model.phi);
  return c;
}

LdaModel lda_from_container(const Container& c) {
  if (c.kind != "lda") throw ParseError("container holds '" + c.kind + "', expected 'lda'");
  LdaModel m;
  m.num_topics = static_cast<int>(c.get_int("K"));
  m.vocab_size = static_cast<int>(c.get_int("V"));
  m.alpha = c.get_double("alpha");
  m.beta = c.get_double("beta");
  m.seed = static_cast<std::uint64_t>(c.get_int("seed"));
  m.iterations = static_cast<int>(c.get_int("iterations"));
  const Matrix32& phi = c.get_matrix("phi");
  if (static_cast<int>(phi.rows) != m.num_topics || static_cast<int>(phi.cols) != m.vocab_size)
    throw ParseError("lda container: phi shape does not match K x V");
  m.phi = from_matrix32(phi);
  // binary32 storage loses the exact row sums.
  normalize_rows(m.phi, phi.rows, phi.cols);
  return m;
}

std::string perplexity_csv(const PerplexityReport& report) {
  std::ostringstream out;
  out.precision(10);
  out << "K,perplexity\n";
  for (std::size_t i = 0; i < report.candidates.size(); ++i)
    out << report.candidates[i] << ',' << report.scores[i] << '\n';
  return out.str();
}

}  // namespace radtext
