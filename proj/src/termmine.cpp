#include "radtext/termmine.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

#include "radtext/default_data.hpp"
#include "radtext/error.hpp"
#include "text_util.hpp"

namespace radtext {
namespace {

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

struct LexiconRow {
  std::string term;
  std::string semantic_type;
};

std::vector<LexiconRow> parse_lexicon_rows(std::string_view tsv, std::string_view what) {
  std::vector<LexiconRow> rows;
  const auto lines = detail::split_lines(tsv);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = detail::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto cols = detail::split(line, '\t');
    if (cols.size() < 2 || cols.size() > 3 || detail::trim(cols[0]).empty())
      throw ParseError(std::string(what) + " line " + std::to_string(i + 1) +
                       ": expected term<TAB>semantic_type<TAB>source");
    rows.push_back({std::string(detail::trim(cols[0])), std::string(detail::trim(cols[1]))});
  }
  return rows;
}

TriggerCategory parse_category(std::string_view s, std::size_t line) {
  if (s == "pre_negation") return TriggerCategory::kPreNegation;
  if (s == "post_negation") return TriggerCategory::kPostNegation;
  if (s == "pre_possibility") return TriggerCategory::kPrePossibility;
  if (s == "post_possibility") return TriggerCategory::kPostPossibility;
  if (s == "pseudo") return TriggerCategory::kPseudo;
  if (s == "termination") return TriggerCategory::kTermination;
  throw ParseError("triggers line " + std::to_string(line) + ": unknown category '" + std::string(s) + "'");
}

bool is_pre(TriggerCategory c) { return c == TriggerCategory::kPreNegation || c == TriggerCategory::kPrePossibility; }
bool is_post(TriggerCategory c) { return c == TriggerCategory::kPostNegation || c == TriggerCategory::kPostPossibility; }
bool is_negation(TriggerCategory c) { return c == TriggerCategory::kPreNegation || c == TriggerCategory::kPostNegation; }

struct TriggerHit {
  std::size_t begin;
  std::size_t end;
  std::size_t trigger;
  std::pair<std::size_t, std::size_t> scope;
};

}  // namespace

DiseaseLexicon::DiseaseLexicon(std::vector<LexiconEntry> entries) {
  for (auto& e : entries) {
    if (e.tokens.empty()) continue;
    auto it = index_.find(e.term);
    if (it != index_.end()) {
      auto& kept = entries_[it->second];
      kept.semantic_types.insert(e.semantic_types.begin(), e.semantic_types.end());
      kept.in_ontology |= e.in_ontology;
      kept.in_radiology |= e.in_radiology;
      continue;
    }
    max_len_ = std::max(max_len_, e.tokens.size());
    index_.emplace(e.term, entries_.size());
    entries_.push_back(std::move(e));
  }
}

std::size_t DiseaseLexicon::longest_match(const std::vector<std::string>& tokens, std::size_t pos) const {
  for (std::size_t len = std::min(max_len_, tokens.size() - std::min(pos, tokens.size())); len > 0; --len) {
    std::string key = tokens[pos];
    for (std::size_t i = 1; i < len; ++i) key += ' ' + tokens[pos + i];
    if (index_.count(key)) return len;
  }
  return 0;
}

PreprocessConfig phrase_config(const PreprocessConfig& config) { return config.without_stopwords(); }

DiseaseLexicon parse_lexicon(std::string_view ontology_tsv, std::string_view radiology_tsv,
                             const std::set<std::string>& semantic_types, const PreprocessConfig& config) {
  const PreprocessConfig pc = phrase_config(config);
  std::map<std::string, LexiconEntry> ontology;
  std::size_t ontology_rows = 0;
  for (const auto& row : parse_lexicon_rows(ontology_tsv, "ontology lexicon")) {
    ++ontology_rows;
    if (!semantic_types.empty() && !semantic_types.count(row.semantic_type)) continue;
    auto tokens = normalize(row.term, pc);
    if (tokens.empty()) continue;
    auto& e = ontology[join(tokens)];
    e.term = join(tokens);
    e.tokens = std::move(tokens);
    e.semantic_types.insert(row.semantic_type);
    e.in_ontology = true;
  }
  std::set<std::string> radiology;
  for (const auto& row : parse_lexicon_rows(radiology_tsv, "radiology lexicon")) {
    const auto tokens = normalize(row.term, pc);
    if (!tokens.empty()) radiology.insert(join(tokens));
  }
  std::vector<LexiconEntry> kept;
  for (auto& [term, e] : ontology)
    if (radiology.count(term)) {
      e.in_radiology = true;
      kept.push_back(std::move(e));
    }
  if (kept.empty())
    throw DataError("lexicon intersection is empty: " + std::to_string(ontology.size()) + " of " +
                    std::to_string(ontology_rows) + " ontology terms pass the semantic-type filter, " +
                    std::to_string(radiology.size()) + " radiology terms");
  return DiseaseLexicon(std::move(kept));
}

DiseaseLexicon load_lexicon(const std::string& ontology_path, const std::string& radiology_path,
                            const std::set<std::string>& semantic_types, const PreprocessConfig& config) {
  return parse_lexicon(detail::read_file(ontology_path), detail::read_file(radiology_path), semantic_types, config);
}

DiseaseLexicon default_lexicon(const PreprocessConfig& config) {
  return parse_lexicon(data::k_lexicon_ontology, data::k_lexicon_radiology, {"T047"}, config);
}

const char* to_string(TriggerCategory c) {
  switch (c) {
    case TriggerCategory::kPreNegation: return "pre_negation";
    case TriggerCategory::kPostNegation: return "post_negation";
    case TriggerCategory::kPrePossibility: return "pre_possibility";
    case TriggerCategory::kPostPossibility: return "post_possibility";
    case TriggerCategory::kPseudo: return "pseudo";
    case TriggerCategory::kTermination: return "termination";
  }
  return "?";
}

TriggerSet::TriggerSet(std::vector<Trigger> triggers) {
  for (auto& t : triggers) {
    if (t.tokens.empty() || index_.count(t.tokens)) continue;
    max_len_ = std::max(max_len_, t.tokens.size());
    index_.emplace(t.tokens, triggers_.size());
    triggers_.push_back(std::move(t));
  }
}

TriggerSet TriggerSet::parse(std::string_view tsv, const PreprocessConfig& config) {
  const PreprocessConfig pc = phrase_config(config);
  std::vector<Trigger> out;
  const auto lines = detail::split_lines(tsv);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = detail::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto cols = detail::split(line, '\t');
    if (cols.size() != 2) throw ParseError("triggers line " + std::to_string(i + 1) + ": expected phrase<TAB>category");
    Trigger t;
    t.phrase = std::string(detail::trim(cols[0]));
    t.tokens = normalize(t.phrase, pc);
    t.category = parse_category(detail::trim(cols[1]), i + 1);
    if (t.tokens.empty()) throw ParseError("triggers line " + std::to_string(i + 1) + ": phrase normalizes to nothing");
    out.push_back(std::move(t));
  }
  return TriggerSet(std::move(out));
}

TriggerSet TriggerSet::from_file(const std::string& path, const PreprocessConfig& config) {
  return parse(detail::read_file(path), config);
}

TriggerSet TriggerSet::defaults(const PreprocessConfig& config) { return parse(data::k_negation_triggers, config); }

int TriggerSet::longest_match(const std::vector<std::string>& tokens, std::size_t pos) const {
  for (std::size_t len = std::min(max_len_, tokens.size() - std::min(pos, tokens.size())); len > 0; --len) {
    std::vector<std::string> key(tokens.begin() + static_cast<std::ptrdiff_t>(pos),
                                 tokens.begin() + static_cast<std::ptrdiff_t>(pos + len));
    auto it = index_.find(key);
    if (it != index_.end()) return static_cast<int>(it->second);
  }
  return -1;
}

const char* to_string(Polarity p) {
  switch (p) {
    case Polarity::kAsserted: return "asserted";
    case Polarity::kNegated: return "negated";
    case Polarity::kPossible: return "possible";
  }
  return "?";
}

std::vector<AssertionResult> detect_assertions(const std::vector<std::string>& tokens, const DiseaseLexicon& lexicon,
                                               const TriggerSet& triggers) {
  const std::size_t n = tokens.size();
  std::vector<TriggerHit> hits;
  std::vector<bool> in_trigger(n, false);
  for (std::size_t i = 0; i < n;) {
    const int t = triggers.longest_match(tokens, i);
    if (t < 0) {
      ++i;
      continue;
    }
    const std::size_t len = triggers.triggers()[static_cast<std::size_t>(t)].tokens.size();
    hits.push_back({i, i + len, static_cast<std::size_t>(t), {0, 0}});
    for (std::size_t j = i; j < i + len; ++j) in_trigger[j] = true;
    i += len;
  }

  for (auto& h : hits) {
    const TriggerCategory c = triggers.triggers()[h.trigger].category;
    if (is_pre(c)) {
      std::size_t end = std::min(n, h.end + kScopeLength);
      for (const auto& other : hits)
        if (other.begin >= h.end && other.begin < end &&
            triggers.triggers()[other.trigger].category == TriggerCategory::kTermination)
          end = other.begin;
      h.scope = {h.end, end};
    } else if (is_post(c)) {
      std::size_t begin = h.begin >= kScopeLength ? h.begin - kScopeLength : 0;
      for (const auto& other : hits)
        if (other.end <= h.begin && other.end > begin &&
            triggers.triggers()[other.trigger].category == TriggerCategory::kTermination)
          begin = other.end;
      h.scope = {begin, h.begin};
    } else {
      h.scope = {h.begin, h.begin};  // pseudo and termination triggers open no scope
    }
  }

  std::vector<AssertionResult> out;
  for (std::size_t i = 0; i < n;) {
    const std::size_t len = in_trigger[i] ? 0 : lexicon.longest_match(tokens, i);
    bool overlaps = false;
    for (std::size_t j = i; j < i + len; ++j) overlaps = overlaps || in_trigger[j];
    if (len == 0 || overlaps) {
      ++i;
      continue;
    }
    AssertionResult r;
    r.term = join(std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                           tokens.begin() + static_cast<std::ptrdiff_t>(i + len)));
    r.term_span = {i, i + len};
    r.scope = r.term_span;
    // Nearest covering trigger; negation outranks possibility.
    const TriggerHit* best = nullptr;
    std::size_t best_distance = 0;
    bool best_negation = false;
    for (const auto& h : hits) {
      if (i < h.scope.first || i >= h.scope.second) continue;
      const TriggerCategory c = triggers.triggers()[h.trigger].category;
      const std::size_t distance = i >= h.end ? i - h.end : h.begin - i;
      const bool neg = is_negation(c);
      if (!best || (neg && !best_negation) || (neg == best_negation && distance < best_distance)) {
        best = &h;
        best_distance = distance;
        best_negation = neg;
      }
    }
    if (best) {
      r.polarity = best_negation ? Polarity::kNegated : Polarity::kPossible;
      r.trigger = triggers.triggers()[best->trigger].phrase;
      r.scope = best->scope;
    }
    out.push_back(std::move(r));
    i += len;
  }
  return out;
}

std::vector<AssertionResult> detect_assertions(const Sentence& sentence, const DiseaseLexicon& lexicon,
                                               const TriggerSet& triggers, const PreprocessConfig& config) {
  auto out = detect_assertions(normalize(sentence.raw, phrase_config(config)), lexicon, triggers);
  for (auto& r : out) r.sentence_index = sentence.index;
  return out;
}

std::vector<AssertionResult> detect_corpus(const std::vector<Report>& reports, const DiseaseLexicon& lexicon,
                                           const TriggerSet& triggers, const PreprocessConfig& config,
                                           unsigned threads) {
  auto run = [&](std::size_t begin, std::size_t end) {
    std::vector<AssertionResult> part;
    for (std::size_t r = begin; r < end; ++r)
      for (const auto& s : reports[r].sentences)
        for (auto& a : detect_assertions(s, lexicon, triggers, config)) {
          a.report_id = reports[r].report_id;
          part.push_back(std::move(a));
        }
    return part;
  };
  threads = std::max(1u, threads);
  if (threads == 1 || reports.size() < 2) return run(0, reports.size());
  std::vector<std::future<std::vector<AssertionResult>>> parts;
  const std::size_t chunk = (reports.size() + threads - 1) / threads;
  for (std::size_t b = 0; b < reports.size(); b += chunk)
    parts.push_back(std::async(std::launch::async, run, b, std::min(reports.size(), b + chunk)));
  std::vector<AssertionResult> out;
  for (auto& p : parts) {
    auto part = p.get();
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

std::vector<BigramLabel> mine_disease_bigrams(const ContextWindow& window, const DiseaseLexicon& lexicon,
                                              const EmbeddingModel& embeddings, std::vector<std::string>* warnings) {
  std::vector<BigramLabel> out;
  const auto& t = window.tokens;
  const std::string key = window.image_key.str();
  for (std::size_t i = 0; i + 1 < t.size();) {
    if (!lexicon.is_term_token(t[i]) || !lexicon.is_term_token(t[i + 1])) {
      ++i;
      continue;
    }
    const int a = embeddings.id(t[i]);
    const int b = embeddings.id(t[i + 1]);
    if (a < 0 || b < 0) {
      if (warnings)
        warnings->push_back(key + ": bi-gram (" + t[i] + ", " + t[i + 1] + ") skipped, '" + (a < 0 ? t[i] : t[i + 1]) +
                            "' has no word vector");
    } else {
      BigramLabel l{key, t[i], t[i + 1], {}};
      const auto va = embeddings.vector(static_cast<std::size_t>(a));
      const auto vb = embeddings.vector(static_cast<std::size_t>(b));
      l.target.assign(va.begin(), va.end());
      l.target.insert(l.target.end(), vb.begin(), vb.end());
      out.push_back(std::move(l));
    }
    i += 2;
  }
  return out;
}

int LabelSpace::id(std::string_view term, bool present) const {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i].present == present && labels[i].term == term) return static_cast<int>(i);
  return -1;
}

std::size_t LabelSpace::present_count() const {
  return static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](const Label& l) { return l.present; }));
}

std::size_t LabelSpace::absent_count() const { return labels.size() - present_count(); }

LabelSpace build_label_space(const std::vector<AssertionResult>& results, std::size_t min_frequency) {
  std::map<std::string, std::size_t> present;
  std::map<std::string, std::size_t> absent;
  for (const auto& r : results) {
    if (r.polarity == Polarity::kAsserted) ++present[r.term];
    if (r.polarity == Polarity::kNegated) ++absent[r.term];
  }
  LabelSpace space;
  for (bool is_present : {true, false}) {
    std::vector<Label> group;
    for (const auto& [term, n] : is_present ? present : absent)
      if (n >= min_frequency) group.push_back({term, is_present, n});
    std::stable_sort(group.begin(), group.end(), [](const Label& a, const Label& b) { return a.frequency > b.frequency; });
    space.labels.insert(space.labels.end(), group.begin(), group.end());
  }
  if (space.labels.empty())
    throw DataError("label space is empty: no (term, polarity) pair occurs at least " + std::to_string(min_frequency) +
                    " times");
  return space;
}

std::string format_label_space(const LabelSpace& space) {
  std::string out = "# label_id\tname\tterm\tpolarity\tfrequency\n";
  for (std::size_t i = 0; i < space.labels.size(); ++i) {
    const Label& l = space.labels[i];
    out += std::to_string(i) + '\t' + l.name() + '\t' + l.term + '\t' + (l.present ? "present" : "absent") + '\t' +
           std::to_string(l.frequency) + '\n';
  }
  return out;
}

LabelSpace parse_label_space(std::string_view tsv) {
  LabelSpace space;
  const auto lines = detail::split_lines(tsv);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = detail::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto cols = detail::split(line, '\t');
    const std::string where = "labels line " + std::to_string(i + 1) + ": ";
    if (cols.size() != 5) throw ParseError(where + "expected 5 columns");
    if (std::stoul(std::string(cols[0])) != space.labels.size()) throw ParseError(where + "label ids must be dense");
    if (cols[3] != "present" && cols[3] != "absent") throw ParseError(where + "bad polarity");
    space.labels.push_back({std::string(cols[2]), cols[3] == "present", std::stoul(std::string(cols[4]))});
  }
  return space;
}

std::vector<std::pair<std::string, int>> assign_labels(const std::vector<ContextWindow>& windows,
                                                       const std::vector<AssertionResult>& results,
                                                       const LabelSpace& space) {
  std::map<std::pair<std::string, std::size_t>, std::vector<const AssertionResult*>> by_sentence;
  for (const auto& r : results) by_sentence[{r.report_id, r.sentence_index}].push_back(&r);
  std::vector<std::pair<std::string, int>> out;
  for (const auto& w : windows) {
    std::set<int> ids;
    for (std::size_t s : w.sentence_indices) {
      auto it = by_sentence.find({w.image_key.report_id, s});
      if (it == by_sentence.end()) continue;
      for (const auto* r : it->second) {
        if (r->polarity == Polarity::kPossible) continue;
        const int id = space.id(r->term, r->polarity == Polarity::kAsserted);
        if (id >= 0) ids.insert(id);
      }
    }
    for (int id : ids) out.emplace_back(w.image_key.str(), id);
  }
  return out;
}

std::vector<TermFrequency> polarity_frequency_table(const std::vector<AssertionResult>& results) {
  std::map<std::string, TermFrequency> table;
  for (const auto& r : results) {
    auto& row = table[r.term];
    row.term = r.term;
    switch (r.polarity) {
      case Polarity::kAsserted: ++row.asserted; break;
      case Polarity::kNegated: ++row.negated; break;
      case Polarity::kPossible: ++row.possible; break;
    }
  }
  std::vector<TermFrequency> out;
  for (auto& [term, row] : table) out.push_back(row);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.asserted > b.asserted; });
  return out;
}

std::string polarity_frequency_csv(const std::vector<TermFrequency>& table) {
  std::string out = "term,assert_count,negate_count,possible_count\n";
  for (const auto& r : table)
    out += r.term + ',' + std::to_string(r.asserted) + ',' + std::to_string(r.negated) + ',' +
           std::to_string(r.possible) + '\n';
  return out;
}

std::string format_assertions(const std::vector<AssertionResult>& results) {
  std::string out = "# report_id\tsentence_index\tterm\tpolarity\ttrigger\tscope_begin\tscope_end\n";
  for (const auto& r : results)
    out += r.report_id + '\t' + std::to_string(r.sentence_index) + '\t' + r.term + '\t' + to_string(r.polarity) + '\t' +
           r.trigger.value_or("-") + '\t' + std::to_string(r.scope.first) + '\t' + std::to_string(r.scope.second) + '\n';
  return out;
}

std::vector<AssertionResult> parse_assertions(std::string_view tsv) {
  std::vector<AssertionResult> out;
  const auto lines = detail::split_lines(tsv);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = lines[i];
    if (detail::trim(line).empty() || line.front() == '#') continue;
    const auto cols = detail::split(line, '\t');
    const std::string where = "assertions line " + std::to_string(i + 1) + ": ";
    if (cols.size() != 7) throw ParseError(where + "expected 7 columns");
    AssertionResult r;
    r.report_id = std::string(cols[0]);
    r.term = std::string(cols[2]);
    if (cols[3] == "asserted")
      r.polarity = Polarity::kAsserted;
    else if (cols[3] == "negated")
      r.polarity = Polarity::kNegated;
    else if (cols[3] == "possible")
      r.polarity = Polarity::kPossible;
    else
      throw ParseError(where + "unknown polarity '" + std::string(cols[3]) + "'");
    if (cols[4] != "-") r.trigger = std::string(cols[4]);
    try {
      r.sentence_index = std::stoul(std::string(cols[1]));
      r.scope = {std::stoul(std::string(cols[5])), std::stoul(std::string(cols[6]))};
    } catch (const std::exception&) {
      throw ParseError(where + "bad number");
    }
    out.push_back(std::move(r));
  }
  return out;
}

WindowTermStats lexicon_terms_per_window(const std::vector<ContextWindow>& windows, const DiseaseLexicon& lexicon) {
  WindowTermStats s;
  s.windows = windows.size();
  if (windows.empty()) return s;
  std::vector<double> counts;
  for (const auto& w : windows) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < w.tokens.size();) {
      const std::size_t len = lexicon.longest_match(w.tokens, i);
      n += len > 0;
      i += std::max<std::size_t>(len, 1);
    }
    counts.push_back(static_cast<double>(n));
  }
  for (double c : counts) s.mean += c;
  s.mean /= static_cast<double>(counts.size());
  for (double c : counts) s.stddev += (c - s.mean) * (c - s.mean);
  s.stddev = std::sqrt(s.stddev / static_cast<double>(counts.size()));
  return s;
}

}  // namespace radtext
