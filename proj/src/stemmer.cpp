#include "radtext/stemmer.hpp"

#include <fstream>
#include <sstream>

#include "radtext/default_data.hpp"
#include "radtext/error.hpp"
#include "text_util.hpp"

namespace radtext {
namespace {

bool is_consonant(std::string_view w, std::size_t i) {
  switch (w[i]) {
    case 'a': case 'e': case 'i': case 'o': case 'u': return false;
    case 'y': return i == 0 ? true : !is_consonant(w, i - 1);
    default: return true;
  }
}

// Number of VC sequences in w[0, len).
int measure(std::string_view w, std::size_t len) {
  int m = 0;
  std::size_t i = 0;
  while (i < len && is_consonant(w, i)) ++i;
  while (i < len) {
    while (i < len && !is_consonant(w, i)) ++i;
    if (i >= len) break;
    while (i < len && is_consonant(w, i)) ++i;
    ++m;
  }
  return m;
}

bool has_vowel(std::string_view w, std::size_t len) {
  for (std::size_t i = 0; i < len; ++i)
    if (!is_consonant(w, i)) return true;
  return false;
}

bool ends_double_consonant(std::string_view w) {
  const std::size_t n = w.size();
  return n >= 2 && w[n - 1] == w[n - 2] && is_consonant(w, n - 1);
}

// cvc where the final consonant is not w, x or y.
bool ends_cvc(std::string_view w) {
  const std::size_t n = w.size();
  if (n < 3) return false;
  if (!is_consonant(w, n - 3) || is_consonant(w, n - 2) || !is_consonant(w, n - 1)) return false;
  const char c = w[n - 1];
  return c != 'w' && c != 'x' && c != 'y';
}

bool ends_with(std::string_view w, std::string_view suffix) {
  return w.size() >= suffix.size() && w.substr(w.size() - suffix.size()) == suffix;
}

PorterStemmer::Condition parse_condition(std::string_view s) {
  if (s == "none" || s.empty()) return PorterStemmer::Condition::kNone;
  if (s == "m>0") return PorterStemmer::Condition::kMeasureAbove0;
  if (s == "m>1") return PorterStemmer::Condition::kMeasureAbove1;
  if (s == "m>1_st") return PorterStemmer::Condition::kMeasureAbove1EndsST;
  if (s == "v") return PorterStemmer::Condition::kHasVowel;
  throw ParseError("stem rules: unknown condition '" + std::string(s) + "'");
}

}  // namespace

PorterStemmer::PorterStemmer() : PorterStemmer(parse_rules(data::k_porter_rules)) {}

PorterStemmer::PorterStemmer(std::vector<Rule> rules) : rules_(std::move(rules)) {}

std::vector<PorterStemmer::Rule> PorterStemmer::parse_rules(std::string_view tsv) {
  std::vector<Rule> rules;
  std::size_t line_no = 0;
  for (std::string_view line : detail::split_lines(tsv)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto fields = detail::split(line, '\t');
    if (fields.size() != 4)
      throw ParseError("stem rules line " + std::to_string(line_no) + ": expected 4 fields");
    rules.push_back({std::string(fields[0]), std::string(fields[1]), std::string(fields[2]),
                     parse_condition(fields[3])});
  }
  return rules;
}

PorterStemmer PorterStemmer::from_file(const std::string& path) {
  return PorterStemmer(parse_rules(detail::read_file(path)));
}

bool PorterStemmer::apply_step(std::string& w, std::string_view step) const {
  const Rule* best = nullptr;
  for (const Rule& r : rules_) {
    if (r.step != step || !ends_with(w, r.suffix)) continue;
    if (best == nullptr || r.suffix.size() > best->suffix.size()) best = &r;
  }
  if (best == nullptr) return false;
  const std::size_t stem_len = w.size() - best->suffix.size();
  bool ok = false;
  switch (best->condition) {
    case Condition::kNone: ok = true; break;
    case Condition::kMeasureAbove0: ok = measure(w, stem_len) > 0; break;
    case Condition::kMeasureAbove1: ok = measure(w, stem_len) > 1; break;
    case Condition::kMeasureAbove1EndsST:
      ok = measure(w, stem_len) > 1 && stem_len > 0 && (w[stem_len - 1] == 's' || w[stem_len - 1] == 't');
      break;
    case Condition::kHasVowel: ok = has_vowel(w, stem_len); break;
  }
  if (!ok) return false;
  w.resize(stem_len);
  w += best->replacement;
  return true;
}

std::string PorterStemmer::stem(std::string_view word) const {
  std::string w(word);
  if (w.size() <= 2) return w;

  apply_step(w, "1a");

  // 1b: only the vowel-conditioned deletions trigger the clean-up.
  const bool ed_or_ing = (ends_with(w, "ed") && !ends_with(w, "eed")) || ends_with(w, "ing");
  if (apply_step(w, "1b") && ed_or_ing) {
    if (ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz")) {
      w += 'e';
    } else if (ends_double_consonant(w) && w.back() != 'l' && w.back() != 's' && w.back() != 'z') {
      w.pop_back();
    } else if (measure(w, w.size()) == 1 && ends_cvc(w)) {
      w += 'e';
    }
  }

  // 1c
  if (w.size() > 1 && w.back() == 'y' && has_vowel(w, w.size() - 1)) w.back() = 'i';

  apply_step(w, "2");
  apply_step(w, "3");
  apply_step(w, "4");

  // 5a
  if (w.back() == 'e') {
    const int m = measure(w, w.size() - 1);
    if (m > 1 || (m == 1 && !ends_cvc(std::string_view(w).substr(0, w.size() - 1)))) w.pop_back();
  }
  // 5b
  if (w.size() > 1 && measure(w, w.size()) > 1 && ends_double_consonant(w) && w.back() == 'l') w.pop_back();
  return w;
}

const PorterStemmer& default_stemmer() {
  static const PorterStemmer stemmer;
  return stemmer;
}

}  // namespace radtext
