#include <algorithm>
#include <CLI11.hpp>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "formats.hpp"
#include "radtext/classifier.hpp"
#include "radtext/cli.hpp"
#include "radtext/corpus.hpp"
#include "radtext/embed.hpp"
#include "radtext/error.hpp"
#include "radtext/keyimage.hpp"
#include "radtext/keywordgen.hpp"
#include "radtext/lda.hpp"
#include "radtext/random.hpp"
#include "radtext/synth.hpp"
#include "radtext/termmine.hpp"
#include "session.hpp"
#include "text_util.hpp"

namespace radtext::cli {

namespace fs = std::filesystem;

namespace {

using Action = std::function<void(Session&)>;

/// An input option that falls back to a file of the given name in the input
/// directory (by default the output directory).
std::string input(const Session& s, const std::string& given, const std::string& fallback) {
  return given.empty() ? (s.in_dir / fallback).string() : given;
}

PreprocessConfig preprocess(const std::string& path) {
  return path.empty() ? PreprocessConfig::defaults() : PreprocessConfig::from_file(path);
}

std::vector<BowDocument> read_bow(Session& s, const std::string& path, std::size_t* v) {
  return parse_bow(s.read_input(path), v);
}

std::string group_of(const std::string& key) { return key.substr(0, key.find(':')); }

std::map<std::string, std::vector<double>> feature_map(Session& s, const std::string& path) {
  std::map<std::string, std::vector<double>> m;
  for (auto& r : parse_features(s.read_input(path))) m.emplace(r.image_key, std::move(r.feature));
  return m;
}

Dataset labelled_dataset(const std::map<std::string, std::vector<double>>& features,
                         const std::vector<std::pair<std::string, int>>& labels, std::ostream& out) {
  Dataset data;
  std::size_t missing = 0;
  for (const auto& [key, label] : labels) {
    auto it = features.find(key);
    if (it == features.end()) {
      ++missing;
      continue;
    }
    data.push_back(Sample{key, it->second, label, {}, group_of(key)});
  }
  if (missing) out << "warning: " << missing << " labelled images have no feature vector\n";
  if (data.empty()) throw DataError("no labelled image has a feature vector");
  return data;
}

struct TrainOptions {
  std::string features;
  std::string labels;
  std::string hidden = "256";
  int epochs = 10;
  double lr = 0.01;
  std::size_t batch = 32;
  int eval_every = 0;
  double cv = 0.05;
  double test = 0.10;
  bool grouped = false;
  std::string name;

  void add(CLI::App* sub, const std::string& default_name) {
    name = default_name;
    sub->add_option("--features", features, "feature file (default <out>/features.txt)");
    sub->add_option("--hidden", hidden, "comma-separated hidden layer sizes")->capture_default_str();
    sub->add_option("--epochs", epochs)->capture_default_str();
    sub->add_option("--lr", lr, "base learning rate")->capture_default_str();
    sub->add_option("--batch", batch)->capture_default_str();
    sub->add_option("--eval-every", eval_every, "iterations between cv evaluations (0 = per epoch)");
    sub->add_option("--cv", cv, "cv fraction")->capture_default_str();
    sub->add_option("--test", test, "test fraction")->capture_default_str();
    sub->add_flag("--group-by-patient", grouped, "keep each report's images in one split");
    sub->add_option("--name", name, "artifact name prefix")->capture_default_str();
  }
  SplitSpec split(std::uint64_t seed) const { return SplitSpec{1.0 - cv - test, cv, test, seed, grouped}; }
  TrainConfig config(Head head, std::uint64_t seed) const {
    TrainConfig c;
    c.hidden = parse_size_list(hidden);
    c.head = head;
    c.epochs = epochs;
    c.base_lr = lr;
    c.batch_size = batch;
    c.seed = seed;
    c.eval_every = eval_every;
    return c;
  }
};

std::string eval_csv(const EvalReport& r, std::size_t n) {
  std::ostringstream out;
  out << "metric,value\n";
  for (std::size_t i = 0; i < r.ks.size(); ++i) out << "top" << r.ks[i] << ',' << fmt(r.topk[i]) << '\n';
  out << "samples," << n << '\n';
  return out.str();
}

std::string samples_tsv(const Dataset& data) {
  std::vector<std::pair<std::string, int>> rows;
  for (const auto& d : data) rows.emplace_back(d.key, d.label);
  return format_int_pairs(rows, "image_key\tlabel");
}

/// Splits, trains (or fine-tunes), evaluates on the test split and writes the artifacts.
void train_and_report(Session& s, const Dataset& data, const TrainOptions& o, Head head,
                      const FeedForwardModel* init, const FineTuneConfig* ft) {
  const Split split = split_dataset(data, o.split(s.seed));
  const Dataset tr = select(data, split.train), cv = select(data, split.cv), te = select(data, split.test);
  *s.out << "split: train " << tr.size() << ", cv " << cv.size() << ", test " << te.size() << '\n';
  TrainResult result;
  if (ft) {
    result = fine_tune(*init, tr, cv, *ft);
  } else {
    result = train(tr, cv, o.config(head, s.seed), init);
  }
  s.write_container_output(o.name + ".rtx", model_to_container(result.model));
  s.write_output(o.name + "_trace.csv", trace_csv(result.trace));
  s.write_output(o.name + "_samples.tsv", samples_tsv(data));
  if (head == Head::kSoftmax) {
    if (!te.empty()) {
      const EvalReport r = evaluate(result.model, te);
      s.write_output(o.name + "_eval.csv", eval_csv(r, te.size()));
      s.write_output(o.name + "_confusion.csv", confusion_csv(r));
      *s.out << "test top-1 " << fmt(r.top1) << ", top-5 " << fmt(r.top5) << '\n';
    }
  } else if (!te.empty()) {
    const double c = mean_half_cosine(result.model, te);
    s.write_output(o.name + "_eval.csv",
                   "metric,value\nmean_half_cosine," + fmt(c) + "\nsamples," + std::to_string(te.size()) + "\n");
    *s.out << "test mean half-vector cosine " << fmt(c) << '\n';
  }
}

Dataset bigram_dataset(Session& s, const std::map<std::string, std::vector<double>>& features,
                       const std::string& bigram_path, const EmbeddingModel& emb) {
  Dataset data;
  std::size_t skipped = 0;
  for (const auto& [key, pair] : parse_pairs(s.read_input(bigram_path))) {
    const auto tab = pair.find('\t');
    if (tab == std::string::npos) throw ParseError("bigram rows need image_key, word1 and word2");
    const std::string w1 = pair.substr(0, tab), w2 = pair.substr(tab + 1);
    auto it = features.find(key);
    if (it == features.end() || emb.id(w1) < 0 || emb.id(w2) < 0) {
      ++skipped;
      continue;
    }
    Sample smp{key, it->second, 0, {}, group_of(key)};
    const auto a = emb.vector(w1), b = emb.vector(w2);
    smp.target.assign(a.begin(), a.end());
    smp.target.insert(smp.target.end(), b.begin(), b.end());
    data.push_back(std::move(smp));
  }
  if (skipped) *s.out << "warning: " << skipped << " bi-grams skipped (no feature or no word vector)\n";
  if (data.empty()) throw DataError("no usable bi-gram samples");
  return data;
}

std::string vocab_for_bow(const std::vector<BowDocument>& docs, std::size_t v, const std::string& prefix) {
  std::vector<std::size_t> freq(v, 0);
  for (const auto& d : docs)
    for (auto [id, c] : d.terms) freq[static_cast<std::size_t>(id)] += static_cast<std::size_t>(c);
  std::vector<std::string> names;
  const std::size_t width = std::to_string(v > 0 ? v - 1 : 0).size();
  for (std::size_t i = 0; i < v; ++i) {
    std::string n = std::to_string(i);
    names.push_back(prefix + std::string(width - n.size(), '0') + n);
  }
  return Vocabulary(names, freq).to_tsv();
}

int dominant(const std::vector<int>& counts) {
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

std::string topics_tsv(const LdaModel& model, const Vocabulary& vocab, std::size_t n) {
  std::ostringstream out;
  out << "# topic\tword:probability ...\n";
  for (int k = 0; k < model.num_topics; ++k) {
    out << k << '\t';
    const auto top = top_keywords(model, k, n);
    for (std::size_t i = 0; i < top.size(); ++i)
      out << (i ? " " : "") << vocab.token(static_cast<std::size_t>(top[i].first)) << ':' << fmt(top[i].second);
    out << '\n';
  }
  return out.str();
}

void require_nonempty(const std::string& value, const std::string& flag) {
  if (value.empty()) throw ConfigError(flag + " is required");
}

// ---------------------------------------------------------------------------

void add_ingest(CLI::App& app, Action& action) {
  struct O {
    std::string reports, preprocess;
    int min_count = 1;
  };
  auto o = std::make_shared<O>();
  auto* sub = app.add_subcommand("ingest", "normalize a JSONL report corpus and build the vocabulary");
  sub->add_option("--reports", o->reports, "JSONL reports (default <out>/reports.jsonl)");
  sub->add_option("--preprocess", o->preprocess, "preprocessing config file");
  sub->add_option("--min-count", o->min_count)->capture_default_str();
  sub->callback([&action, o] {
    action = [o](Session& s) {
      const auto config = preprocess(o->preprocess);
      if (!o->preprocess.empty()) s.read_input(o->preprocess);
      const auto reports = parse_reports_jsonl(s.read_input(input(s, o->reports, "reports.jsonl")), config);
      const Vocabulary vocab = build_vocabulary(reports, o->min_count);
      std::vector<BowDocument> docs, sentences;
      for (const auto& r : reports) {
        docs.push_back(to_bow(r, vocab));
        for (const auto& sen : r.sentences) {
          auto b = to_bow(r.report_id + "#" + std::to_string(sen.index), sen.tokens, vocab);
          if (b.length > 0) sentences.push_back(std::move(b));
        }
      }
      s.write_output("corpus.jsonl", format_corpus(reports));
      s.write_output("vocab.tsv", vocab.to_tsv());
      s.write_output("docs.tsv", format_bow(docs, vocab.size()));
      s.write_output("sentence_docs.tsv", format_bow(sentences, vocab.size()));
      *s.out << reports.size() << " reports, " << vocab.size() << " vocabulary words\n";
    };
  });
}

void add_extract_refs(CLI::App& app, Action& action) {
  auto corpus = std::make_shared<std::string>();
  auto* sub = app.add_subcommand("extract-refs", "find key-image references and their context windows");
  sub->add_option("--corpus", *corpus, "corpus.jsonl (default <out>/corpus.jsonl)");
  sub->callback([&action, corpus] {
    action = [corpus](Session& s) {
      const auto reports = parse_corpus(s.read_input(input(s, *corpus, "corpus.jsonl")));
      std::vector<KeyImageRef> refs;
      std::vector<ExtractionWarning> warnings;
      std::vector<ContextWindow> windows;
      for (const auto& r : reports) {
        for (const auto& ref : extract_image_references(r, &warnings)) {
          for (auto& w : context_window(r, ref)) windows.push_back(std::move(w));
          refs.push_back(ref);
        }
      }
      s.write_output("refs.txt", format_extraction_report(refs, warnings));
      s.write_output("windows.tsv", format_windows(windows));
      *s.out << refs.size() << " references, " << windows.size() << " image windows, " << warnings.size()
             << " warnings\n";
    };
  });
}

struct LdaOptions {
  std::string docs;
  int iterations = 200;
  double alpha = 0.0;
  double beta = 0.01;
  int fold_in = 50;

  void add(CLI::App* sub) {
    sub->add_option("--docs", docs, "bag-of-words file (default <out>/docs.tsv)");
    sub->add_option("--iterations", iterations, "Gibbs sweeps")->capture_default_str();
    sub->add_option("--alpha", alpha, "Dirichlet prior on topics (<= 0 means 50/K)")->capture_default_str();
    sub->add_option("--beta", beta)->capture_default_str();
    sub->add_option("--fold-in", fold_in, "fold-in sweeps for held-out documents")->capture_default_str();
  }
};

void add_lda_select(CLI::App& app, Action& action) {
  struct O {
    LdaOptions lda;
    std::string candidates = "2,5,10,20,40,80";
    double split = 0.8;
    double elbow = 0.01;
    std::string name = "perplexity";
  };
  auto o = std::make_shared<O>();
  auto* sub = app.add_subcommand("lda-select", "choose the topic count from held-out perplexity");
  o->lda.add(sub);
  sub->add_option("--candidates", o->candidates)->capture_default_str();
  sub->add_option("--split", o->split, "training fraction")->capture_default_str();
  sub->add_option("--elbow", o->elbow, "relative improvement threshold")->capture_default_str();
  sub->add_option("--name", o->name)->capture_default_str();
  sub->callback([&action, o] {
    action = [o](Session& s) {
      std::size_t v = 0;
      const auto docs = read_bow(s, input(s, o->lda.docs, "docs.tsv"), &v);
      SelectionConfig c;
      c.split_fraction = o->split;
      c.seed = s.seed;
      c.iterations = o->lda.iterations;
      c.fold_in_iterations = o->lda.fold_in;
      c.alpha = o->lda.alpha;
      c.beta = o->lda.beta;
      c.elbow_threshold = o->elbow;
      c.threads = static_cast<int>(s.threads);
      const auto report = select_topic_count(docs, static_cast<int>(v), parse_int_list(o->candidates), c);
      s.write_output(o->name + ".csv", perplexity_csv(report));
      std::ostringstream sel;
      sel << "chosen\t" << report.chosen << "\ntraining_documents\t" << report.training_documents
          << "\nheldout_documents\t" << report.heldout_documents << '\n';
      s.write_output(o->name + "_selection.tsv", sel.str());
      *s.out << "chosen K = " << report.chosen << '\n';
    };
  });
}

void add_lda_fit(CLI::App& app, Action& action) {
  struct O {
    LdaOptions lda;
    std::string vocab, selection;
    int topics = 10;
    std::size_t keywords = 50;
    std::string name = "lda";
  };
  auto o = std::make_shared<O>();
  auto* sub = app.add_subcommand("lda-fit", "fit an LDA topic model by collapsed Gibbs sampling");
  o->lda.add(sub);
  sub->add_option("--vocab", o->vocab, "vocabulary (default <out>/vocab.tsv)");
  sub->add_option("--topics", o->topics, "number of topics")->capture_default_str();
  sub->add_option("--selection", o->selection, "take the topic count from an lda-select result");
  sub->add_option("--keywords", o->keywords, "keywords kept per topic")->capture_default_str();
  sub->add_option("--name", o->name)->capture_default_str();
  sub->callback([&action, o] {
    action = [o](Session& s) {
      std::size_t v = 0;
      const auto docs = read_bow(s, input(s, o->lda.docs, "docs.tsv"), &v);
      const Vocabulary vocab = Vocabulary::from_tsv(s.read_input(input(s, o->vocab, "vocab.tsv")));
      if (vocab.size() != v) throw DataError("vocabulary size does not match the bag-of-words header");
      LdaConfig c;
      c.num_topics = o->topics;
      if (!o->selection.empty()) {
        for (auto& [k, val] : parse_pairs(s.read_input(o->selection)))
          if (k == "chosen") c.num_topics = std::stoi(val);
      }
      c.alpha = o->lda.alpha;
      c.beta = o->lda.beta;
      c.iterations = o->lda.iterations;
      c.seed = s.seed;
      const LdaModel model = fit_lda(docs, static_cast<int>(v), c);
      std::vector<std::pair<std::string, int>> assign;
      for (std::size_t d = 0; d < docs.size(); ++d)
        if (docs[d].length > 0) assign.emplace_back(docs[d].doc_id, dominant(model.doc_topic_counts[d]));
      s.write_container_output(o->name + ".rtx", lda_to_container(model));
      s.write_output(o->name + "_topics.tsv", topics_tsv(model, vocab, 20));
      s.write_output(o->name + "_keywords.tsv", format_keyword_table(keyword_table(model, vocab, o->keywords)));
      s.write_output(o->name + "_assignments.tsv", format_int_pairs(assign, "doc_id\ttopic"));
      *s.out << "fitted K = " << model.num_topics << " on " << docs.size() << " documents\n";
    };
  });
}

void add_lda_subtopics(CLI::App& app, Action& action) {
  struct O {
    LdaOptions lda;
    std::string model, vocab;
    std::string candidates = "2,5,10";
    int min_docs = 10;
    bool shared = false;
    std::size_t keywords = 50;
    std::string name = "subtopics";
  };
  auto o = std::make_shared<O>();
  auto* sub = app.add_subcommand("lda-subtopics", "refine each document topic into sub-topics");
  o->lda.add(sub);
  sub->add_option("--model", o->model, "parent LDA model (default <out>/lda.rtx)");
  sub->add_option("--vocab", o->vocab, "vocabulary (default <out>/vocab.tsv)");
  sub->add_option("--candidates", o->candidates)->capture_default_str();
  sub->add_option("--min-docs", o->min_docs, "parents with fewer documents are not refined")->capture_default_str();
  sub->add_flag("--shared-count", o->shared, "use one sub-topic count for every parent");
  sub->add_option("--keywords", o->keywords)->capture_default_str();
  sub->add_option("--name", o->name)->capture_default_str();
  sub->callback([&action, o] {
    action = [o](Session& s) {
      const LdaModel parent = lda_from_container(s.read_container_input(input(s, o->model, "lda.rtx")));
      std::size_t v = 0;
      const auto docs = read_bow(s, input(s, o->lda.docs, "docs.tsv"), &v);
      const Vocabulary vocab = Vocabulary::from_tsv(s.read_input(input(s, o->vocab, "vocab.tsv")));
      SubtopicConfig c;
      c.candidates = parse_int_list(o->candidates);
      c.min_docs = o->min_docs;
      c.selection = o->shared ? SubtopicSelection::kSharedAverage : SubtopicSelection::kPerParent;
      c.select.seed = s.seed;
      c.select.iterations = o->lda.iterations;
      c.select.fold_in_iterations = o->lda.fold_in;
      c.select.alpha = o->lda.alpha;
      c.select.beta = o->lda.beta;
      c.select.threads = static_cast<int>(s.threads);
      const SubtopicResult r = fit_subtopics(parent, docs, c);
      std::vector<std::pair<std::string, int>> assign;
      std::ostringstream table;
      table << "# global_id\tparent\tsubtopic\n";
      for (const auto& [p, model] : r.models) {
        for (int k = 0; k < model.num_topics; ++k) table << r.global_id(p, k) << '\t' << p << '\t' << k << '\n';
        const auto& members = r.members.at(p);
        for (std::size_t i = 0; i < members.size(); ++i)
          assign.emplace_back(docs[static_cast<std::size_t>(members[i])].doc_id,
                              r.global_id(p, dominant(model.doc_topic_counts[i])));
      }
      std::sort(assign.begin(), assign.end());
      s.write_output(o->name + "_table.tsv", table.str());
      s.write_output(o->name + "_keywords.tsv", format_keyword_table(keyword_table(r, vocab, o->keywords)));
      s.write_output(o->name + "_assignments.tsv", format_int_pairs(assign, "doc_id\tsubtopic"));
      *s.out << r.total_subtopics() << " sub-topics under " << r.models.size() << " parents, "
             << r.skipped_parents.size() << " parents skipped\n";
    };
  });
}

void add_w2v_train(CLI::App& app, Action& action) {
  struct O {
    std::string corpus, streams, query;
    SkipGramConfig c;
    int min_count = 1;
    std::size_t neighbors = 5;
  };
  auto o = std::make_shared<O>();
  auto* sub = app.add_subcommand("w2v-train", "train skip-gram word vectors with hierarchical softmax");
  sub->add_option("--corpus", o->corpus, "corpus.jsonl (default <out>/corpus.jsonl)");
  sub->add_option("--streams", o->streams, "plain token streams, one sentence per line");
  sub->add_option("--dim", o->c.dim)->capture_default_str();
  sub->add_option("--window", o->c.window)->capture_default_str();
  sub->add_option("--subsample", o->c.subsample)->capture_default_str();
  sub->add_option("--epochs", o->c.epochs)->capture_default_str();
  sub->add_option("--lr", o->c.lr_start)->capture_default_str();
  sub->add_option("--lr-end", o->c.lr_end)->capture_default_str();
  sub->add_option("--max-pairs", o->c.max_pairs, "stop after this many training pairs (0 = all epochs)");
  sub->add_option("--min-count", o->min_count)->capture_default_str();
  sub->add_option("--query", o->query, "comma-separated words for the neighbour table");
  sub->add_option("--neighbors", o->neighbors)->capture_default_str();
  sub->callback([&action, o] {
    action = [o](Session& s) {
      std::vector<std::vector<std::string>> streams;
      if (!o->streams.empty()) {
        for (auto line : detail::split_lines(s.read_input(o->streams))) {
          std::vector<std::string> t;
          for (auto w : detail::split(line, ' '))
            if (!w.empty()) t.emplace_back(w);
          if (!t.empty()) streams.push_back(std::move(t));
        }
      } else {
        for (const auto& r : parse_corpus(s.read_input(input(s, o->corpus, "corpus.jsonl"))))
          for (const auto& sen : r.sentences)
            if (!sen.tokens.empty()) streams.push_back(sen.tokens);
      }
      const Vocabulary vocab = build_vocabulary(streams, o->min_count);
      SkipGramConfig c = o->c;
      c.seed = s.seed;
      const EmbeddingModel m = train_skipgram(vocab, streams, c);
      std::vector<std::string> queries;
      if (!o->query.empty()) {
        for (auto q : detail::split(o->query, ','))
          if (!q.empty()) queries.emplace_back(q);
      } else {
        for (std::size_t i = 0; i < std::min<std::size_t>(20, vocab.size()); ++i) queries.push_back(vocab.token(i));
      }
      std::ostringstream nb;
      nb << "# word\tneighbor:cosine ...\n";
      for (const auto& q : queries) {
        if (m.id(q) < 0) throw DataError("query word '" + q + "' is not in the vocabulary");
        nb << q << '\t';
        const auto near = nearest(m, q, o->neighbors);
        for (std::size_t i = 0; i < near.size(); ++i) nb << (i ? " " : "") << near[i].first << ':' << fmt(near[i].second);
        nb << '\n';
      }
      s.write_output("vectors.txt", format_vectors_text(m));
      s.write_container_output("embedding.rtx", embedding_to_container(m));
      s.write_output("neighbors.tsv", nb.str());
      *s.out << m.vocab_size() << " words, " << m.pairs_trained << " training pairs\n";
    };
  });
}

struct LexiconOptions {
  std::string ontology, radiology, types = "T047", triggers, preprocess;

  void add(CLI::App* sub) {
    sub->add_option("--ontology", ontology, "ontology term table (default built in)");
    sub->add_option("--radiology", radiology, "radiology term table (default built in)");
    sub->add_option("--semantic-types", types, "comma-separated semantic types kept")->capture_default_str();
    sub->add_option("--triggers", triggers, "trigger table (default built in)");
    sub->add_option("--preprocess", preprocess, "preprocessing config file");
  }
  PreprocessConfig config(Session& s) const {
    if (!preprocess.empty()) s.read_input(preprocess);
    return cli::preprocess(preprocess);
  }
  DiseaseLexicon lexicon(Session& s, const PreprocessConfig& c) const {
    std::set<std::string> t;
    for (auto x : detail::split(types, ','))
      if (!x.empty()) t.emplace(x);
    if (ontology.empty() != radiology.empty())
      throw ConfigError("--ontology and --radiology must be given together");
    if (ontology.empty() && t == std::set<std::string>{"T047"}) return default_lexicon(c);
    if (ontology.empty()) throw ConfigError("non-default semantic types need --ontology and --radiology");
    return parse_lexicon(s.read_input(ontology), s.read_input(radiology), t, c);
  }
  TriggerSet trigger_set(Session& s, const PreprocessConfig& c) const {
    return triggers.empty() ? TriggerSet::defaults(c) : TriggerSet::parse(s.read_input(triggers), c);
  }
};

void add_mine_terms(CLI::App& app, Action& action) {
  struct O {
    LexiconOptions lex;
    std::string corpus, windows, embeddings;
  };
  auto o = std::make_shared<O>();
  auto* sub = app.add_subcommand("mine-terms", "detect disease terms with their polarity and mine bi-grams");
  o->lex.add(sub);
  sub->add_option("--corpus", o->corpus, "corpus.jsonl (default <out>/corpus.jsonl)");
  sub->add_option("--windows", o->windows, "context windows (default <out>/windows.tsv)");
  sub->add_option("--embeddings", o->embeddings, "word vectors; enables bi-gram mining");
  sub->callback([&action, o] {
    action = [o](Session& s) {
      const auto config = o->lex.config(s);
      const auto lexicon = o->lex.lexicon(s, config);
      const auto triggers = o->lex.trigger_set(s, config);
      const auto reports = parse_corpus(s.read_input(input(s, o->corpus, "corpus.jsonl")));
      const auto windows = parse_windows(s.read_input(input(s, o->windows, "windows.tsv")));
      const auto results = detect_corpus(reports, lexicon, triggers, config, s.threads);
      s.write_output("assertions.tsv", format_assertions(results));
      s.write_output("term_frequency.csv", polarity_frequency_csv(polarity_frequency_table(results)));
      const auto stats = lexicon_terms_per_window(windows, lexicon);
      s.write_output("window_stats.csv", "windows,mean_terms,stddev_terms\n" + std::to_string(stats.windows) + "," +
                                             fmt(stats.mean) + "," + fmt(stats.stddev) + "\n");
      if (!o->embeddings.empty()) {
        const EmbeddingModel emb = embedding_from_container(s.read_container_input(o->embeddings));
        std::vector<std::string> warnings;
        std::ostringstream out;
        out << "# image_key\tword1\tword2\n";
        std::size_t n = 0;
        for (const auto& w : windows) {
          for (const auto& b : mine_disease_bigrams(w, lexicon, emb, &warnings)) {
            out << b.image_key << '\t' << b.word1 << '\t' << b.word2 << '\n';
            ++n;
          }
        }
        s.write_output("bigrams.tsv", out.str());
        for (const auto& w : warnings) *s.out << "warning: " << w << '\n';
        *s.out << n << " bi-gram labels\n";
      }
      *s.out << lexicon.size() << " lexicon terms, " << results.size() << " term occurrences\n";
    };
  });
}

void add_build_labels(CLI::App& app, Action& action) {
  struct O {
    std::string assertions, windows;
    std::size_t min_frequency = 10;
  };
  auto o = std::make_shared<O>();
  auto* sub = app.add_subcommand("build-labels", "build the disease label space and per-image labels");
  sub->add_option("--assertions", o->assertions, "default <out>/assertions.tsv");
  sub->add_option("--windows", o->windows, "default <out>/windows.tsv");
  sub->add_option("--min-frequency", o->min_frequency)->capture_default_str();
  sub->callback([&action, o] {
    action = [o](Session& s) {
      const auto results = parse_assertions(s.read_input(input(s, o->assertions, "assertions.tsv")));
      const auto windows = parse_windows(s.read_input(input(s, o->windows, "windows.tsv")));
      const LabelSpace space = build_label_space(results, o->min_frequency);
      const auto labels = assign_labels(windows, results, space);
      s.write_output("labels.tsv", format_label_space(space));
      s.write_output("image_labels.tsv", format_int_pairs(labels, "image_key\tlabel_id"));
      *s.out << space.present_count() << " presence labels, " << space.absent_count() << " absence labels, "
             << labels.size() << " image labels\n";
    };
  });
}

void add_train_topic(CLI::App& app, Action& action) {
  struct O {
    TrainOptions t;
    std::string windows, assignments, level = "document";
  };
  auto o = std::make_shared<O>();
  auto* sub = app.add_subcommand("train-topic", "train an image-to-topic classifier");
  o->t.add(sub, "");
  sub->add_option("--labels", o->t.labels, "image_key<TAB>topic rows; bypasses --windows/--assignments");
  sub->add_option("--windows", o->windows, "default <out>/windows.tsv");
  sub->add_option("--assignments", o->assignments, "doc_id<TAB>topic rows from lda-fit or lda-subtopics");
  sub->add_option("--level", o->level, "document, document_sub or sentence")
      ->check(CLI::IsMember({"document", "document_sub", "sentence"}))
      ->capture_default_str();
  sub->callback([&action, o] {
    action = [o](Session& s) {
      TrainOptions t = o->t;
      if (t.name.empty()) t.name = "topic_" + o->level;
      std::vector<std::pair<std::string, int>> labels;
      if (!t.labels.empty()) {
        labels = parse_int_pairs(s.read_input(t.labels));
      } else {
        require_nonempty(o->assignments, "--assignments");
        const auto windows = parse_windows(s.read_input(input(s, o->windows, "windows.tsv")));
        std::map<std::string, int> topic;
        for (auto& [k, v] : parse_int_pairs(s.read_input(o->assignments))) topic[k] = v;
        std::set<std::string> seen;
        for (const auto& w : windows) {
          const std::string doc = o->level == "sentence"
                                      ? w.image_key.report_id + "#" + std::to_string(w.referencing_sentence)
                                      : w.image_key.report_id;
          auto it = topic.find(doc);
          if (it != topic.end() && seen.insert(w.image_key.str()).second)
            labels.emplace_back(w.image_key.str(), it->second);
        }
      }
      const Dataset data = labelled_dataset(feature_map(s, input(s, t.features, "features.txt")), labels, *s.out);
      train_and_report(s, data, t, Head::kSoftmax, nullptr, nullptr);
    };
  });
}

void add_train_disease(CLI::App& app, Action& action) {
  struct O {
    TrainOptions t;
    std::string space, init;
    double new_lr = 0.01;
    std::size_t min_per_split = 1;
  };
  auto o = std::make_shared<O>();
  auto* sub = app.add_subcommand("train-disease", "train the disease (presence/absence) classifier");
  o->t.add(sub, "disease");
  sub->add_option("--labels", o->t.labels, "image labels (default <out>/image_labels.tsv)");
  sub->add_option("--label-space", o->space, "label space (default <out>/labels.tsv)");
  sub->add_option("--init", o->init, "fine-tune from this model instead of random initialization");
  sub->add_option("--new-lr", o->new_lr, "learning rate of the replaced output layer when fine-tuning")
      ->capture_default_str();
  sub->add_option("--min-per-split", o->min_per_split)->capture_default_str();
  sub->callback([&action, o] {
    action = [o](Session& s) {
      const LabelSpace space = parse_label_space(s.read_input(input(s, o->space, "labels.tsv")));
      const auto labels = parse_int_pairs(s.read_input(input(s, o->t.labels, "image_labels.tsv")));
      for (const auto& [k, l] : labels)
        if (l < 0 || static_cast<std::size_t>(l) >= space.size())
          throw DataError("image '" + k + "' has a label outside the label space");
      const Dataset data = labelled_dataset(feature_map(s, input(s, o->t.features, "features.txt")), labels, *s.out);
      const FilterResult f = filter_small_classes(data, o->t.split(s.seed), o->min_per_split);
      LabelSpace kept;
      for (int l : f.kept_labels) kept.labels.push_back(space.labels[static_cast<std::size_t>(l)]);
      *s.out << f.kept_labels.size() << " classes kept, " << f.dropped_labels.size() << " dropped\n";
      s.write_output(o->t.name + "_labels.tsv", format_label_space(kept));
      if (o->init.empty()) {
        train_and_report(s, f.data, o->t, Head::kSoftmax, nullptr, nullptr);
      } else {
        const FeedForwardModel base = model_from_container(s.read_container_input(o->init));
        FineTuneConfig ft{kept.size(), Head::kSoftmax, o->t.lr, o->new_lr, o->t.epochs, o->t.batch, s.seed,
                          o->t.eval_every};
        train_and_report(s, f.data, o->t, Head::kSoftmax, &base, &ft);
      }
    };
  });
}

void add_train_bigram(CLI::App& app, Action& action) {
  struct O {
    TrainOptions t;
    std::string bigrams, embeddings;
  };
  auto o = std::make_shared<O>();
  auto* sub = app.add_subcommand("train-bigram", "train the image-to-word-vector regression");
  o->t.add(sub, "bigram");
  sub->add_option("--bigrams", o->bigrams, "default <out>/bigrams.tsv");
  sub->add_option("--embeddings", o->embeddings, "default <out>/embedding.rtx");
  sub->callback([&action, o] {
    action = [o](Session& s) {
      const EmbeddingModel emb =
          embedding_from_container(s.read_container_input(input(s, o->embeddings, "embedding.rtx")));
      const auto features = feature_map(s, input(s, o->t.features, "features.txt"));
      const Dataset data = bigram_dataset(s, features, input(s, o->bigrams, "bigrams.tsv"), emb);
      train_and_report(s, data, o->t, Head::kSigmoidCrossEntropy, nullptr, nullptr);
    };
  });
}

void add_fine_tune(CLI::App& app, Action& action) {
  struct O {
    TrainOptions t;
    std::string model;
    double new_lr = 0.01;
  };
  auto o = std::make_shared<O>();
  auto* sub = app.add_subcommand("fine-tune", "replace a model's output layer and fine-tune it on new labels");
  o->t.add(sub, "finetuned");
  o->t.lr = 0.001;
  sub->add_option("--model", o->model, "base model")->required();
  sub->add_option("--labels", o->t.labels, "image_key<TAB>label rows")->required();
  sub->add_option("--new-lr", o->new_lr, "learning rate of the new output layer")->capture_default_str();
  sub->callback([&action, o] {
    action = [o](Session& s) {
      const FeedForwardModel base = model_from_container(s.read_container_input(o->model));
      const auto labels = parse_int_pairs(s.read_input(o->t.labels));
      const Dataset data = labelled_dataset(feature_map(s, input(s, o->t.features, "features.txt")), labels, *s.out);
      int classes = 0;
      for (const auto& d : data) {
        if (d.label < 0) throw DataError("negative label for '" + d.key + "'");
        classes = std::max(classes, d.label + 1);
      }
      FineTuneConfig ft{static_cast<std::size_t>(classes), Head::kSoftmax, o->t.lr, o->new_lr, o->t.epochs,
                        o->t.batch, s.seed, o->t.eval_every};
      train_and_report(s, data, o->t, Head::kSoftmax, &base, &ft);
    };
  });
}

void add_interpret(CLI::App& app, Action& action) {
  struct O {
    std::string features, regression, embeddings, disease, disease_labels, windows, ground_truth;
    std::string model[3], keywords[3];
    LexiconOptions lex;
  };
  auto o = std::make_shared<O>();
  auto* sub = app.add_subcommand("interpret", "generate keywords and disease labels for each image");
  sub->add_option("--features", o->features, "default <out>/features.txt");
  const char* levels[3] = {"doc", "sub", "sent"};
  for (int i = 0; i < 3; ++i) {
    sub->add_option(std::string("--") + levels[i] + "-model", o->model[i]);
    sub->add_option(std::string("--") + levels[i] + "-keywords", o->keywords[i]);
  }
  sub->add_option("--regression", o->regression, "image-to-word-vector model");
  sub->add_option("--embeddings", o->embeddings, "word vectors used by the regression");
  sub->add_option("--disease-model", o->disease);
  sub->add_option("--disease-labels", o->disease_labels, "label space of the disease model");
  sub->add_option("--windows", o->windows, "context windows; their lexicon terms form the ground truth");
  sub->add_option("--ground-truth", o->ground_truth, "image_key<TAB>word ... rows for R@1");
  o->lex.add(sub);
  sub->callback([&action, o] {
    action = [o](Session& s) {
      const TopicLevel tl[3] = {TopicLevel::kDocument, TopicLevel::kDocumentSub, TopicLevel::kSentence};
      std::vector<FeedForwardModel> classifiers;
      classifiers.reserve(3);
      std::vector<LevelModel> levels;
      for (int i = 0; i < 3; ++i) {
        if (o->model[i].empty()) continue;
        require_nonempty(o->keywords[i], "keywords for every level model");
        classifiers.push_back(model_from_container(s.read_container_input(o->model[i])));
        levels.push_back(LevelModel{tl[i], &classifiers.back(), parse_keyword_table(s.read_input(o->keywords[i]))});
      }
      std::optional<FeedForwardModel> regression, disease;
      std::optional<EmbeddingModel> emb;
      std::optional<LabelSpace> space;
      if (!o->regression.empty()) {
        require_nonempty(o->embeddings, "--embeddings");
        regression = model_from_container(s.read_container_input(o->regression));
        emb = embedding_from_container(s.read_container_input(o->embeddings));
      }
      if (!o->disease.empty()) {
        require_nonempty(o->disease_labels, "--disease-labels");
        disease = model_from_container(s.read_container_input(o->disease));
        space = parse_label_space(s.read_input(o->disease_labels));
      }
      std::map<std::string, std::set<std::string>> truth;
      if (!o->ground_truth.empty()) truth = parse_word_sets(s.read_input(o->ground_truth));
      if (!o->windows.empty()) {
        const auto config = o->lex.config(s);
        const auto lexicon = o->lex.lexicon(s, config);
        for (const auto& w : parse_windows(s.read_input(o->windows))) {
          auto words = ground_truth_words(w, lexicon);
          truth[w.image_key.str()].insert(words.begin(), words.end());
        }
      }
      std::string text = "# image_key\tlevel:keyword:cosine ...\tlabel:probability ...\n";
      std::vector<InterpretationOutput> outputs;
      std::size_t warnings = 0;
      for (const auto& r : parse_features(s.read_input(input(s, o->features, "features.txt")))) {
        auto out = interpret(r.image_key, r.feature, levels, regression ? &*regression : nullptr, emb ? &*emb : nullptr,
                             disease ? &*disease : nullptr, space ? &*space : nullptr);
        text += format_interpretation(out);
        warnings += out.warnings.size();
        outputs.push_back(std::move(out));
      }
      s.write_output("interpretation.tsv", text);
      if (!truth.empty() && regression) {
        const double r1 = recall_at_1(outputs, truth);
        std::size_t scored = 0;
        for (const auto& out : outputs) {
          auto it = truth.find(out.image_key);
          scored += it != truth.end() && !it->second.empty();
        }
        s.write_output("recall.csv", "metric,value\nr_at_1," + fmt(r1) + "\nimages," + std::to_string(scored) + "\n");
        *s.out << "R@1 = " << fmt(r1) << " over " << scored << " images\n";
      }
      *s.out << outputs.size() << " images interpreted, " << warnings << " warnings\n";
    };
  });
}

void add_eval(CLI::App& app, Action& action) {
  struct O {
    std::string model, features, labels, bigrams, embeddings, lda, docs, split = "test";
    double cv = 0.05, test = 0.10;
    bool grouped = false;
    int fold_in = 50;
    std::string name = "eval";
  };
  auto o = std::make_shared<O>();
  auto* sub = app.add_subcommand("eval", "score a classifier (top-k, confusion) or an LDA model (perplexity)");
  sub->add_option("--model", o->model, "classifier container");
  sub->add_option("--features", o->features, "default <out>/features.txt");
  sub->add_option("--labels", o->labels, "samples in the model's label space (from *_samples.tsv)");
  sub->add_option("--bigrams", o->bigrams, "bi-gram targets, for regression models");
  sub->add_option("--embeddings", o->embeddings, "word vectors, for regression models");
  sub->add_option("--split", o->split, "score the test split or all samples")
      ->check(CLI::IsMember({"test", "all"}))
      ->capture_default_str();
  sub->add_option("--cv", o->cv)->capture_default_str();
  sub->add_option("--test", o->test)->capture_default_str();
  sub->add_flag("--group-by-patient", o->grouped);
  sub->add_option("--lda", o->lda, "LDA model (default <out>/lda.rtx when no --model)");
  sub->add_option("--docs", o->docs, "held-out documents for perplexity (default <out>/docs.tsv)");
  sub->add_option("--fold-in", o->fold_in)->capture_default_str();
  sub->add_option("--name", o->name)->capture_default_str();
  sub->callback([&action, o] {
    action = [o](Session& s) {
      if (o->model.empty()) {
        const LdaModel m = lda_from_container(s.read_container_input(input(s, o->lda, "lda.rtx")));
        std::size_t v = 0;
        const auto docs = read_bow(s, input(s, o->docs, "docs.tsv"), &v);
        if (static_cast<int>(v) != m.vocab_size) throw DataError("documents and model disagree on vocabulary size");
        const auto r = evaluate_perplexity(m, docs, o->fold_in, s.seed);
        s.write_output(o->name + "_perplexity.csv", "documents,tokens,log_likelihood,perplexity\n" +
                                                         std::to_string(r.documents) + "," + std::to_string(r.tokens) +
                                                         "," + fmt(r.log_likelihood) + "," + fmt(r.perplexity) + "\n");
        *s.out << "perplexity " << fmt(r.perplexity) << " over " << r.tokens << " tokens\n";
        return;
      }
      const FeedForwardModel m = model_from_container(s.read_container_input(o->model));
      const auto features = feature_map(s, input(s, o->features, "features.txt"));
      Dataset data;
      if (m.head == Head::kSigmoidCrossEntropy) {
        const EmbeddingModel emb =
            embedding_from_container(s.read_container_input(input(s, o->embeddings, "embedding.rtx")));
        data = bigram_dataset(s, features, input(s, o->bigrams, "bigrams.tsv"), emb);
      } else {
        require_nonempty(o->labels, "--labels");
        data = labelled_dataset(features, parse_int_pairs(s.read_input(o->labels)), *s.out);
      }
      if (o->split == "test") {
        const Split sp = split_dataset(data, SplitSpec{1.0 - o->cv - o->test, o->cv, o->test, s.seed, o->grouped});
        data = select(data, sp.test);
      }
      if (data.empty()) throw DataError("nothing to evaluate");
      if (m.head == Head::kSigmoidCrossEntropy) {
        const double c = mean_half_cosine(m, data);
        s.write_output(o->name + ".csv",
                       "metric,value\nmean_half_cosine," + fmt(c) + "\nsamples," + std::to_string(data.size()) + "\n");
        *s.out << "mean half-vector cosine " << fmt(c) << '\n';
      } else {
        const EvalReport r = evaluate(m, data);
        s.write_output(o->name + ".csv", eval_csv(r, data.size()));
        s.write_output(o->name + "_confusion.csv", confusion_csv(r));
        *s.out << "top-1 " << fmt(r.top1) << ", top-5 " << fmt(r.top5) << " on " << data.size() << " samples\n";
      }
    };
  });
}

// ---------------------------------------------------------------------------

void add_synth_lda(CLI::App& app, Action& action) {
  auto o = std::make_shared<synth::PlantedLdaSpec>();
  auto overlap = std::make_shared<bool>(false);
  auto* sub = app.add_subcommand("synth-lda", "sample a corpus from a planted LDA model");
  sub->add_option("--topics", o->num_topics)->capture_default_str();
  sub->add_option("--vocab", o->vocab_size)->capture_default_str();
  sub->add_option("--docs", o->num_docs)->capture_default_str();
  sub->add_option("--length", o->doc_length)->capture_default_str();
  sub->add_option("--alpha", o->alpha)->capture_default_str();
  sub->add_flag("--overlap", *overlap, "Dirichlet topic-word rows instead of disjoint supports");
  sub->callback([&action, o, overlap] {
    action = [o, overlap](Session& s) {
      synth::PlantedLdaSpec spec = *o;
      spec.disjoint = !*overlap;
      spec.seed = s.seed;
      const auto c = synth::generate_lda_corpus(spec);
      const auto v = static_cast<std::size_t>(spec.vocab_size);
      s.write_output("docs.tsv", format_bow(c.docs, v));
      s.write_output("vocab.tsv", vocab_for_bow(c.docs, v, "w"));
      std::ostringstream phi;
      phi << "topic,word,probability\n";
      for (int k = 0; k < spec.num_topics; ++k)
        for (std::size_t w = 0; w < v; ++w) phi << k << ',' << w << ',' << fmt(c.phi[k * v + w]) << '\n';
      s.write_output("planted_phi.csv", phi.str());
    };
  });
}

void add_synth_features(CLI::App& app, Action& action) {
  auto o = std::make_shared<synth::FeatureDatasetSpec>();
  auto* sub = app.add_subcommand("synth-features", "sample class-conditional Gaussian feature vectors");
  sub->add_option("--classes", o->classes)->capture_default_str();
  sub->add_option("--per-class", o->per_class)->capture_default_str();
  sub->add_option("--dim", o->dim)->capture_default_str();
  sub->add_option("--separation", o->separation)->capture_default_str();
  sub->add_option("--noise", o->noise)->capture_default_str();
  sub->callback([&action, o] {
    action = [o](Session& s) {
      auto spec = *o;
      spec.seed = s.seed;
      const Dataset d = synth::generate_feature_dataset(spec);
      std::vector<FeatureRecord> recs;
      std::vector<std::pair<std::string, int>> labels;
      for (const auto& smp : d) {
        recs.push_back(FeatureRecord{smp.key, smp.x, {}});
        labels.emplace_back(smp.key, smp.label);
      }
      s.write_output("features.txt", format_features(recs));
      s.write_output("image_labels.tsv", format_int_pairs(labels, "image_key\tlabel"));
    };
  });
}

void add_synth_paired(CLI::App& app, Action& action) {
  auto o = std::make_shared<synth::PairedTaskSpec>();
  auto* sub = app.add_subcommand("synth-paired", "sample two related classification tasks on shared features");
  sub->add_option("--clusters", o->clusters)->capture_default_str();
  sub->add_option("--task-b-classes", o->task_b_classes)->capture_default_str();
  sub->add_option("--per-cluster", o->per_cluster)->capture_default_str();
  sub->add_option("--dim", o->dim)->capture_default_str();
  sub->add_option("--radius", o->radius)->capture_default_str();
  sub->add_option("--noise", o->noise)->capture_default_str();
  sub->callback([&action, o] {
    action = [o](Session& s) {
      auto spec = *o;
      spec.seed = s.seed;
      const auto p = synth::generate_paired_tasks(spec);
      std::vector<FeatureRecord> recs;
      std::vector<std::pair<std::string, int>> a, b;
      for (std::size_t i = 0; i < p.task_a.size(); ++i) {
        recs.push_back(FeatureRecord{p.task_a[i].key, p.task_a[i].x, {}});
        a.emplace_back(p.task_a[i].key, p.task_a[i].label);
        b.emplace_back(p.task_b[i].key, p.task_b[i].label);
      }
      s.write_output("features.txt", format_features(recs));
      s.write_output("task_a_labels.tsv", format_int_pairs(a, "image_key\tlabel"));
      s.write_output("task_b_labels.tsv", format_int_pairs(b, "image_key\tlabel"));
    };
  });
}

void add_synth_clones(CLI::App& app, Action& action) {
  auto o = std::make_shared<synth::CloneCorpusSpec>();
  auto* sub = app.add_subcommand("synth-clones", "sample token streams where word pairs share their contexts");
  sub->add_option("--vocab", o->vocab_size)->capture_default_str();
  sub->add_option("--pairs", o->clone_pairs)->capture_default_str();
  sub->add_option("--sentences", o->sentences)->capture_default_str();
  sub->add_option("--length", o->sentence_length)->capture_default_str();
  sub->callback([&action, o] {
    action = [o](Session& s) {
      auto spec = *o;
      spec.seed = s.seed;
      const auto c = synth::generate_context_clone_corpus(spec);
      std::string streams;
      for (const auto& st : c.streams) {
        for (std::size_t i = 0; i < st.size(); ++i) (streams += i ? " " : "") += st[i];
        streams += '\n';
      }
      std::string clones = "# word\tclone\n";
      for (const auto& [a, b] : c.clones) clones += a + "\t" + b + "\n";
      s.write_output("streams.txt", streams);
      s.write_output("clones.tsv", clones);
    };
  });
}

void add_synth_keywords(CLI::App& app, Action& action) {
  auto o = std::make_shared<synth::KeywordSuiteSpec>();
  auto* sub = app.add_subcommand("synth-keywords", "build a planted keyword-generation suite");
  sub->add_option("--images", o->images)->capture_default_str();
  sub->add_option("--topics", o->topics)->capture_default_str();
  sub->add_option("--keywords", o->keywords_per_topic)->capture_default_str();
  sub->add_option("--dim", o->dim)->capture_default_str();
  sub->callback([&action, o] {
    action = [o](Session& s) {
      auto spec = *o;
      spec.seed = s.seed;
      const auto k = synth::generate_keyword_suite(spec);
      std::vector<FeatureRecord> recs;
      std::string truth = "# image_key\tword\n";
      for (std::size_t i = 0; i < k.image_keys.size(); ++i) {
        recs.push_back(FeatureRecord{k.image_keys[i], k.features[i], {}});
        truth += k.image_keys[i] + "\t" + k.planted[i] + "\n";
      }
      s.write_container_output("embedding.rtx", embedding_to_container(k.embeddings));
      s.write_output("keywords.tsv", format_keyword_table(k.topic_keywords));
      s.write_container_output("topic_model.rtx", model_to_container(k.topic_classifier));
      s.write_container_output("regression.rtx", model_to_container(k.regression));
      s.write_output("features.txt", format_features(recs));
      s.write_output("ground_truth.tsv", truth);
    };
  });
}

void add_synth_reports(CLI::App& app, Action& action) {
  auto o = std::make_shared<synth::ReportCorpusSpec>();
  auto* sub = app.add_subcommand("synth-reports", "write synthetic radiology reports and image features");
  sub->add_option("--reports", o->reports)->capture_default_str();
  sub->add_option("--dim", o->feature_dim)->capture_default_str();
  sub->add_option("--noise", o->feature_noise)->capture_default_str();
  sub->callback([&action, o] {
    action = [o](Session& s) {
      auto spec = *o;
      spec.seed = s.seed;
      const auto c = synth::generate_report_corpus(spec);
      std::string jsonl;
      for (const auto& r : c.reports) {
        nlohmann::ordered_json j;
        j["report_id"] = r.report_id;
        j["accession"] = r.accession;
        j["text"] = r.text;
        jsonl += j.dump() + "\n";
      }
      s.write_output("reports.jsonl", jsonl);
      s.write_output("features.txt", format_features(c.features));
    };
  });
}

// ---------------------------------------------------------------------------

/// Drops --out from a recorded command line and pins --in to the directory the
/// original run read its default inputs from.
std::vector<std::string> retarget(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  std::string old_out = ".";
  bool has_in = false;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--out" && i + 1 < args.size()) {
      old_out = args[++i];
      continue;
    }
    if (args[i].starts_with("--out=")) {
      old_out = args[i].substr(6);
      continue;
    }
    has_in = has_in || args[i] == "--in" || args[i].starts_with("--in=");
    out.push_back(args[i]);
  }
  if (!has_in) {
    out.push_back("--in");
    out.push_back(old_out);
  }
  return out;
}

/// Re-runs the command recorded in a manifest into a fresh directory and
/// compares every artifact's checksum. Returns the exit status.
int replay(const std::string& manifest_path, const std::string& into, std::ostream& out, std::ostream& err) {
  const auto m = nlohmann::json::parse(detail::read_file(manifest_path));
  const fs::path cwd = m.at("cwd").get<std::string>();
  const fs::path previous = fs::current_path();
  const fs::path target = fs::absolute(into);
  struct Restore {
    fs::path p;
    ~Restore() { fs::current_path(p); }
  } restore{previous};
  fs::current_path(cwd);
  for (const auto& [path, sum] : m.at("inputs").items()) {
    const std::string now = checksum_hex(detail::read_file(path));
    if (now != sum.get<std::string>())
      throw DataError("input '" + path + "' changed since the manifest was written");
  }
  auto args = retarget(m.at("args").get<std::vector<std::string>>());
  args.push_back("--out");
  args.push_back(target.string());
  std::ostringstream quiet;
  const int status = run(args, quiet, err);
  if (status != 0) return status;
  std::size_t mismatches = 0;
  for (const auto& [name, sum] : m.at("outputs").items()) {
    const fs::path p = target / name;
    const std::string now = fs::exists(p) ? checksum_hex(detail::read_file(p.string())) : "missing";
    if (now != sum.get<std::string>()) {
      out << "differs: " << name << '\n';
      ++mismatches;
    }
  }
  out << "replay " << m.at("command").get<std::string>() << ": " << m.at("outputs").size() - mismatches << " of "
      << m.at("outputs").size() << " artifacts identical\n";
  return mismatches == 0 ? 0 : 1;
}

std::string error_record(const std::string& type, const std::string& command, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = type;
  j["command"] = command;
  j["message"] = message;
  return j.dump();
}

std::string error_type(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e)) return "parse_error";
  if (dynamic_cast<const RangeOrderError*>(&e)) return "range_order_error";
  if (dynamic_cast<const ConfigError*>(&e)) return "config_error";
  if (dynamic_cast<const DataError*>(&e)) return "data_error";
  if (dynamic_cast<const Error*>(&e)) return "error";
  if (dynamic_cast<const nlohmann::json::exception*>(&e)) return "parse_error";
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return "io_error";
  return "internal_error";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"radtext: key-image report mining pipeline", "radtext"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();
  auto* config_opt = app.set_config("--config", "", "TOML/INI file; [subcommand] sections set subcommand options");

  Session s;
  s.args = args;
  s.out = &out;
  std::string out_dir = ".", in_dir;
  app.add_option("--seed", s.seed, "random seed")->capture_default_str();
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--in", in_dir, "directory holding default inputs (default: --out)");
  app.add_option("--threads", s.threads, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();

  Action action;
  add_ingest(app, action);
  add_extract_refs(app, action);
  add_lda_select(app, action);
  add_lda_fit(app, action);
  add_lda_subtopics(app, action);
  add_w2v_train(app, action);
  add_mine_terms(app, action);
  add_build_labels(app, action);
  add_train_topic(app, action);
  add_train_disease(app, action);
  add_train_bigram(app, action);
  add_fine_tune(app, action);
  add_interpret(app, action);
  add_eval(app, action);
  add_synth_lda(app, action);
  add_synth_features(app, action);
  add_synth_paired(app, action);
  add_synth_clones(app, action);
  add_synth_keywords(app, action);
  add_synth_reports(app, action);

  std::string manifest, into;
  auto* rep = app.add_subcommand("replay", "re-run a manifest and check the artifacts are byte-identical");
  rep->add_option("--manifest", manifest)->required();
  rep->add_option("--into", into, "directory for the re-run (default <out>/replay)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << error_record("usage_error", "", e.what()) << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << error_record(error_type(e), "", e.what()) << '\n';
    return 1;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (command == "replay") return replay(manifest, into.empty() ? (fs::path(out_dir) / "replay").string() : into, out, err);
    s.command = command;
    s.out_dir = out_dir;
    s.in_dir = in_dir.empty() ? out_dir : in_dir;
    if (config_opt->count() > 0) s.read_input(config_opt->as<std::string>());
    action(s);
    s.write_manifest();
    return 0;
  } catch (const std::exception& e) {
    err << error_record(error_type(e), command, e.what()) << '\n';
    return 1;
  }
}

}  // namespace radtext::cli
