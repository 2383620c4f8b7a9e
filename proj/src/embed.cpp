#include "radtext/embed.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <queue>
#include <sstream>

#include "radtext/error.hpp"
#include "radtext/random.hpp"
#include "text_util.hpp"

namespace radtext {
namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

HuffmanTree build_huffman(std::span<const std::size_t> frequencies) {
  const std::size_t V = frequencies.size();
  if (V < 2) throw DataError("build_huffman: need at least 2 words");
  for (std::size_t f : frequencies)
    if (f < 1) throw DataError("build_huffman: frequencies must be >= 1");

  // Node ids: leaves 0..V-1, inner nodes V..2V-2.
  using Entry = std::pair<std::size_t, std::size_t>;  // (weight, node id)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  for (std::size_t i = 0; i < V; ++i) heap.emplace(frequencies[i], i);
  std::vector<std::size_t> parent(2 * V - 1, 0);
  std::vector<std::uint8_t> bit(2 * V - 1, 0);
  std::size_t next = V;
  while (heap.size() > 1) {
    const auto [w0, n0] = heap.top();
    heap.pop();
    const auto [w1, n1] = heap.top();
    heap.pop();
    parent[n0] = next;
    parent[n1] = next;
    bit[n0] = 0;
    bit[n1] = 1;
    heap.emplace(w0 + w1, next);
    ++next;
  }
  const std::size_t root = 2 * V - 2;

  HuffmanTree t;
  t.codes.resize(V);
  t.paths.resize(V);
  for (std::size_t w = 0; w < V; ++w) {
    std::vector<std::uint8_t> code;
    std::vector<int> path;
    for (std::size_t n = w; n != root; n = parent[n]) {
      code.push_back(bit[n]);
      path.push_back(static_cast<int>(parent[n] - V));
    }
    std::reverse(code.begin(), code.end());
    std::reverse(path.begin(), path.end());
    t.codes[w] = std::move(code);
    t.paths[w] = std::move(path);
  }
  return t;
}

int EmbeddingModel::id(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? -1 : it->second;
}

std::span<const double> EmbeddingModel::vector(std::string_view word) const {
  const int i = id(word);
  if (i < 0) throw DataError("word '" + std::string(word) + "' is not in the embedding vocabulary");
  return vector(static_cast<std::size_t>(i));
}

void EmbeddingModel::rebuild_index() {
  index_.clear();
  for (std::size_t i = 0; i < words.size(); ++i) index_.emplace(words[i], static_cast<int>(i));
}

EmbeddingModel init_embedding(const Vocabulary& vocab, const SkipGramConfig& config) {
  if (config.dim == 0) throw ConfigError("skip-gram: dimension must be positive");
  if (config.window <= 0) throw ConfigError("skip-gram: window must be positive");
  if (config.epochs < 1 && config.max_pairs == 0) throw ConfigError("skip-gram: epochs must be >= 1");
  if (config.subsample <= 0.0) throw ConfigError("skip-gram: subsample threshold must be positive");
  EmbeddingModel m;
  m.words = vocab.tokens();
  m.frequencies = vocab.frequencies();
  m.dim = config.dim;
  m.config = config;
  m.tree = build_huffman(m.frequencies);
  m.rebuild_index();
  Rng rng(config.seed);
  m.input.resize(m.words.size() * m.dim);
  for (double& v : m.input) v = (rng.uniform() - 0.5) / static_cast<double>(m.dim);
  m.inner.assign((m.words.size() - 1) * m.dim, 0.0);
  return m;
}

double discard_probability(double f, double subsample) {
  if (f <= 0.0) return 0.0;
  return std::clamp(1.0 - std::sqrt(subsample / f), 0.0, 1.0);
}

EmbeddingModel train_skipgram(const Vocabulary& vocab, const std::vector<std::vector<std::string>>& streams,
                              const SkipGramConfig& config) {
  EmbeddingModel m = init_embedding(vocab, config);
  const std::size_t dim = m.dim;
  const double total_count = static_cast<double>(vocab.total_token_count());
  if (total_count == 0.0) throw DataError("skip-gram: corpus is empty");

  std::vector<std::vector<int>> ids;
  std::size_t corpus_words = 0;
  for (const auto& s : streams) {
    std::vector<int> row;
    for (const auto& t : s)
      if (const int i = m.id(t); i >= 0) row.push_back(i);
    corpus_words += row.size();
    ids.push_back(std::move(row));
  }
  if (corpus_words == 0) throw DataError("skip-gram: no in-vocabulary tokens");

  std::vector<double> keep_prob(m.words.size());
  for (std::size_t w = 0; w < m.words.size(); ++w)
    keep_prob[w] = 1.0 - discard_probability(static_cast<double>(m.frequencies[w]) / total_count, config.subsample);

  Rng rng(derive_seed(config.seed, 1));
  const double planned_words = static_cast<double>(corpus_words) * std::max(1, config.epochs);
  std::size_t words_seen = 0;
  std::vector<double> grad(dim);
  std::vector<int> kept;

  auto learning_rate = [&] {
    const double progress = config.max_pairs > 0
                                ? static_cast<double>(m.pairs_trained) / static_cast<double>(config.max_pairs)
                                : static_cast<double>(words_seen) / planned_words;
    return std::max(config.lr_end, config.lr_start - (config.lr_start - config.lr_end) * progress);
  };

  bool done = false;
  for (int epoch = 0; !done; ++epoch) {
    if (config.max_pairs == 0 && epoch >= config.epochs) break;
    const std::size_t pairs_before = m.pairs_trained;
    for (const auto& row : ids) {
      kept.clear();
      for (int w : row)
        if (rng.uniform() < keep_prob[static_cast<std::size_t>(w)]) kept.push_back(w);
      for (std::size_t i = 0; i < kept.size() && !done; ++i) {
        const auto b = static_cast<std::size_t>(rng.between(1, config.window));
        const std::size_t lo = i >= b ? i - b : 0;
        const std::size_t hi = std::min(kept.size() - 1, i + b);
        const auto center = static_cast<std::size_t>(kept[i]);
        for (std::size_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          const double lr = learning_rate();
          double* ctx = &m.input[static_cast<std::size_t>(kept[j]) * dim];
          std::fill(grad.begin(), grad.end(), 0.0);
          const auto& code = m.tree.codes[center];
          const auto& path = m.tree.paths[center];
          for (std::size_t l = 0; l < code.size(); ++l) {
            double* node = &m.inner[static_cast<std::size_t>(path[l]) * dim];
            double x = 0.0;
            for (std::size_t d = 0; d < dim; ++d) x += ctx[d] * node[d];
            const double g = (1.0 - code[l] - sigmoid(x)) * lr;
            for (std::size_t d = 0; d < dim; ++d) grad[d] += g * node[d];
            for (std::size_t d = 0; d < dim; ++d) node[d] += g * ctx[d];
          }
          for (std::size_t d = 0; d < dim; ++d) ctx[d] += grad[d];
          ++m.pairs_trained;
          if (config.max_pairs > 0 && m.pairs_trained >= config.max_pairs) {
            done = true;
            break;
          }
        }
      }
      words_seen += row.size();
      if (done) break;
    }
    if (m.pairs_trained == pairs_before) break;  // nothing left to train on
  }
  return m;
}

double hs_probability(const EmbeddingModel& model, std::size_t context, std::size_t target) {
  const auto& code = model.tree.codes.at(target);
  const auto& path = model.tree.paths[target];
  const auto v = model.vector(context);
  double p = 1.0;
  for (std::size_t l = 0; l < code.size(); ++l) {
    const double x = dot(v, std::span<const double>(model.inner).subspan(static_cast<std::size_t>(path[l]) * model.dim, model.dim));
    p *= sigmoid(code[l] == 0 ? x : -x);
  }
  return p;
}

double hs_probability(const EmbeddingModel& model, std::string_view context_word, std::string_view target_word) {
  const int c = model.id(context_word);
  const int t = model.id(target_word);
  if (c < 0 || t < 0) throw DataError("hs_probability: word not in vocabulary");
  return hs_probability(model, static_cast<std::size_t>(c), static_cast<std::size_t>(t));
}

HsGradient hs_loss_gradient(const EmbeddingModel& model, std::size_t context, std::size_t target) {
  const auto& code = model.tree.codes.at(target);
  const auto& path = model.tree.paths[target];
  const auto v = model.vector(context);
  HsGradient g;
  g.d_context.assign(model.dim, 0.0);
  for (std::size_t l = 0; l < code.size(); ++l) {
    const auto u = std::span<const double>(model.inner).subspan(static_cast<std::size_t>(path[l]) * model.dim, model.dim);
    const double x = dot(v, u);
    const double s = sigmoid(x);
    g.loss -= std::log(code[l] == 0 ? s : 1.0 - s);
    const double dx = -(1.0 - code[l] - s);
    std::vector<double> du(model.dim);
    for (std::size_t d = 0; d < model.dim; ++d) {
      g.d_context[d] += dx * u[d];
      du[d] = dx * v[d];
    }
    g.d_path.push_back(std::move(du));
  }
  return g;
}

double cosine_similarity(const EmbeddingModel& model, std::string_view a, std::string_view b) {
  const auto va = model.vector(a);
  const auto vb = model.vector(b);
  const double na = std::sqrt(dot(va, va));
  const double nb = std::sqrt(dot(vb, vb));
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot(va, vb) / (na * nb), -1.0, 1.0);
}

std::vector<std::pair<std::string, double>> nearest(const EmbeddingModel& model, std::string_view query,
                                                    std::size_t k) {
  const int q = model.id(query);
  if (q < 0) throw DataError("nearest: '" + std::string(query) + "' is not in the vocabulary");
  if (k < 1) throw ConfigError("nearest: k must be >= 1");
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t w = 0; w < model.vocab_size(); ++w) {
    if (static_cast<int>(w) == q) continue;
    scored.emplace_back(cosine_similarity(model, query, model.words[w]), w);
  }
  const std::size_t n = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(),
                    [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(model.words[scored[i].second], scored[i].first);
  return out;
}

std::string format_vectors_text(const EmbeddingModel& model) {
  std::ostringstream out;
  out << model.vocab_size() << ' ' << model.dim << '\n';
  for (std::size_t w = 0; w < model.vocab_size(); ++w) {
    out << model.words[w];
    for (double v : model.vector(w)) out << ' ' << format_double(v);
    out << '\n';
  }
  return out.str();
}

EmbeddingModel parse_vectors_text(std::string_view text) {
  const auto lines = detail::split_lines(text);
  if (lines.empty()) throw ParseError("vectors: missing header");
  std::istringstream header{std::string(lines[0])};
  std::size_t V = 0;
  std::size_t dim = 0;
  if (!(header >> V >> dim) || dim == 0) throw ParseError("vectors: bad header");
  if (lines.size() < V + 1) throw ParseError("vectors: fewer rows than announced");
  EmbeddingModel m;
  m.dim = dim;
  m.config.dim = dim;
  for (std::size_t i = 0; i < V; ++i) {
    std::istringstream row{std::string(lines[i + 1])};
    std::string word;
    if (!(row >> word)) throw ParseError("vectors line " + std::to_string(i + 2) + ": missing word");
    m.words.push_back(word);
    for (std::size_t d = 0; d < dim; ++d) {
      std::string tok;
      double v = 0.0;
      if (!(row >> tok)) throw ParseError("vectors line " + std::to_string(i + 2) + ": too few values");
      const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
        throw ParseError("vectors line " + std::to_string(i + 2) + ": bad number '" + tok + "'");
      m.input.push_back(v);
    }
  }
  m.frequencies.assign(V, 1);
  if (V >= 2) m.tree = build_huffman(m.frequencies);
  m.inner.assign(V >= 1 ? (V - 1) * dim : 0, 0.0);
  m.rebuild_index();
  if (V > 0 && m.words.size() != V) throw ParseError("vectors: inconsistent rows");
  std::vector<std::string> sorted = m.words;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw ParseError("vectors: duplicate word");
  return m;
}

Container embedding_to_container(const EmbeddingModel& model) {
  Container c;
  c.kind = "embedding";
  c.meta["V"] = static_cast<std::int64_t>(model.vocab_size());
  c.meta["dim"] = static_cast<std::int64_t>(model.dim);
  c.meta["window"] = std::int64_t{model.config.window};
  c.meta["subsample"] = model.config.subsample;
  c.meta["epochs"] = std::int64_t{model.config.epochs};
  c.meta["lr_start"] = model.config.lr_start;
  c.meta["lr_end"] = model.config.lr_end;
  c.meta["seed"] = static_cast<std::int64_t>(model.config.seed);
  c.meta["max_pairs"] = static_cast<std::int64_t>(model.config.max_pairs);
  c.meta["pairs_trained"] = static_cast<std::int64_t>(model.pairs_trained);
  std::string words;
  std::string freqs;
  for (std::size_t i = 0; i < model.vocab_size(); ++i) {
    words += model.words[i] + '\n';
    freqs += std::to_string(model.frequencies[i]) + '\n';
  }
  c.meta["words"] = words;
  c.meta["frequencies"] = freqs;
  c.matrices["input"] = to_matrix32(model.vocab_size(), model.dim, model.input);
  c.matrices["inner"] = to_matrix32(model.vocab_size() - 1, model.dim, model.inner);
  return c;
}

EmbeddingModel embedding_from_container(const Container& c) {
  if (c.kind != "embedding") throw ParseError("container holds '" + c.kind + "', expected 'embedding'");
  EmbeddingModel m;
  const auto V = static_cast<std::size_t>(c.get_int("V"));
  m.dim = static_cast<std::size_t>(c.get_int("dim"));
  m.config.dim = m.dim;
  m.config.window = static_cast<int>(c.get_int("window"));
  m.config.subsample = c.get_double("subsample");
  m.config.epochs = static_cast<int>(c.get_int("epochs"));
  m.config.lr_start = c.get_double("lr_start");
  m.config.lr_end = c.get_double("lr_end");
  m.config.seed = static_cast<std::uint64_t>(c.get_int("seed"));
  m.config.max_pairs = static_cast<std::size_t>(c.get_int("max_pairs"));
  m.pairs_trained = static_cast<std::size_t>(c.get_int("pairs_trained"));
  for (std::string_view w : detail::split_lines(c.get_string("words"))) m.words.emplace_back(w);
  for (std::string_view f : detail::split_lines(c.get_string("frequencies")))
    m.frequencies.push_back(std::stoull(std::string(f)));
  if (m.words.size() != V || m.frequencies.size() != V) throw ParseError("embedding container: word list size mismatch");
  const Matrix32& input = c.get_matrix("input");
  const Matrix32& inner = c.get_matrix("inner");
  if (input.rows != V || input.cols != m.dim || inner.rows + 1 != V || inner.cols != m.dim)
    throw ParseError("embedding container: matrix shape mismatch");
  m.input = from_matrix32(input);
  m.inner = from_matrix32(inner);
  m.tree = build_huffman(m.frequencies);
  m.rebuild_index();
  return m;
}

}  // namespace radtext
