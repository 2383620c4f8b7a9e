#include "radtext/keywordgen.hpp"

#include <cstdio>

#include "radtext/error.hpp"

namespace radtext {
namespace {

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

KeywordTable keyword_table(const LdaModel& model, const Vocabulary& vocab, std::size_t n) {
  KeywordTable table;
  for (int k = 0; k < model.num_topics; ++k) {
    std::vector<std::string> words;
    for (const auto& [w, p] : top_keywords(model, k, n)) words.push_back(vocab.token(static_cast<std::size_t>(w)));
    table.push_back(std::move(words));
  }
  return table;
}

KeywordTable keyword_table(const SubtopicResult& subtopics, const Vocabulary& vocab, std::size_t n) {
  KeywordTable table;
  for (const auto& [parent, model] : subtopics.models) {
    auto part = keyword_table(model, vocab, n);
    table.insert(table.end(), part.begin(), part.end());
  }
  return table;
}

std::optional<LevelKeyword> match_keyword(std::span<const double> regression_output,
                                          const std::vector<std::string>& keywords,
                                          const EmbeddingModel& embeddings) {
  const std::size_t dim = embeddings.dim;
  if (regression_output.size() != 2 * dim)
    throw DataError("regression output has " + std::to_string(regression_output.size()) +
                    " values, expected twice the embedding dimension " + std::to_string(dim));
  const auto first = regression_output.first(dim);
  const auto second = regression_output.subspan(dim);
  std::optional<LevelKeyword> best;
  for (std::size_t r = 0; r < keywords.size(); ++r) {
    const int id = embeddings.id(keywords[r]);
    if (id < 0) continue;
    const auto v = embeddings.vector(static_cast<std::size_t>(id));
    const double score = std::max(cosine(v, first), cosine(v, second));
    if (!best || score > best->cosine) {
      best = LevelKeyword{};
      best->keyword = keywords[r];
      best->cosine = score;
      best->rank = r;
    }
  }
  return best;
}

std::vector<LevelKeyword> generate_keywords(std::span<const double> feature, const std::vector<LevelModel>& levels,
                                            const FeedForwardModel* regression, const EmbeddingModel* embeddings,
                                            std::vector<std::string>* warnings) {
  std::vector<double> out;
  if (regression && embeddings) out = regression->logits(feature);
  std::vector<LevelKeyword> result;
  for (const auto& lm : levels) {
    if (!lm.classifier) continue;
    const auto top = predict_topk(*lm.classifier, feature, 1);
    LevelKeyword lk;
    lk.level = lm.level;
    lk.topic = top.front().first;
    if (static_cast<std::size_t>(lk.topic) >= lm.keywords.size())
      throw DataError(std::string(to_string(lm.level)) + " classifier predicts topic " + std::to_string(lk.topic) +
                      " but only " + std::to_string(lm.keywords.size()) + " keyword lists exist");
    if (!out.empty()) {
      if (auto m = match_keyword(out, lm.keywords[static_cast<std::size_t>(lk.topic)], *embeddings)) {
        lk.keyword = m->keyword;
        lk.cosine = m->cosine;
        lk.rank = m->rank;
      } else if (warnings) {
        warnings->push_back(std::string(to_string(lm.level)) + " topic " + std::to_string(lk.topic) +
                            " has no keyword with a word vector");
      }
    }
    result.push_back(std::move(lk));
  }
  return result;
}

InterpretationOutput interpret(const std::string& image_key, std::span<const double> feature,
                               const std::vector<LevelModel>& levels, const FeedForwardModel* regression,
                               const EmbeddingModel* embeddings, const FeedForwardModel* disease_model,
                               const LabelSpace* labels) {
  InterpretationOutput out;
  out.image_key = image_key;
  out.levels = generate_keywords(feature, levels, regression, embeddings, &out.warnings);
  if (disease_model) {
    if (labels && labels->size() != disease_model->output_dim())
      throw DataError("disease model has " + std::to_string(disease_model->output_dim()) + " outputs, label space has " +
                      std::to_string(labels->size()));
    for (const auto& [id, p] : predict_topk(*disease_model, feature, 5))
      out.diseases.emplace_back(labels ? labels->labels[static_cast<std::size_t>(id)].name() : std::to_string(id), p);
  }
  return out;
}

std::set<std::string> ground_truth_words(const ContextWindow& window, const DiseaseLexicon& lexicon) {
  std::set<std::string> words;
  for (const auto& t : window.tokens)
    if (lexicon.is_term_token(t)) words.insert(t);
  return words;
}

double recall_at_1(const std::vector<InterpretationOutput>& outputs,
                   const std::map<std::string, std::set<std::string>>& ground_truth) {
  std::size_t scored = 0;
  std::size_t hits = 0;
  for (const auto& o : outputs) {
    auto it = ground_truth.find(o.image_key);
    if (it == ground_truth.end() || it->second.empty()) continue;
    ++scored;
    const LevelKeyword* best = nullptr;
    for (const auto& l : o.levels)
      if (l.keyword && (!best || l.cosine > best->cosine)) best = &l;
    hits += best && it->second.count(*best->keyword);
  }
  return scored == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(scored);
}

std::string format_interpretation(const InterpretationOutput& out) {
  std::string line = out.image_key;
  for (TopicLevel level : {TopicLevel::kDocument, TopicLevel::kDocumentSub, TopicLevel::kSentence}) {
    line += '\t';
    line += to_string(level);
    const LevelKeyword* found = nullptr;
    for (const auto& l : out.levels)
      if (l.level == level) found = &l;
    if (found && found->keyword)
      line += ':' + *found->keyword + ':' + fixed6(found->cosine);
    else
      line += ":-:-";
  }
  for (const auto& [label, p] : out.diseases) line += '\t' + label + ':' + fixed6(p);
  return line;
}

}  // namespace radtext
