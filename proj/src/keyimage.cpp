#include "radtext/keyimage.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

#include "radtext/default_data.hpp"
#include "radtext/error.hpp"
#include "text_util.hpp"

namespace radtext {
namespace {

// Ranges wider than this are treated as typos rather than expanded.
constexpr std::int64_t kMaxRangeSize = 10000;

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return c >= 'a' && c <= 'z'; }
bool is_alnum(char c) { return is_digit(c) || is_alpha(c); }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), is_digit);
}

std::int64_t parse_int(std::string_view s) {
  if (!all_digits(s) || s.size() > 18) throw ParseError("not a decimal integer: '" + std::string(s) + "'");
  std::int64_t v = 0;
  std::from_chars(s.data(), s.data() + s.size(), v);
  return v;
}

bool contains(const std::vector<std::string>& words, std::string_view w) {
  return std::find(words.begin(), words.end(), w) != words.end();
}

// Scanner over the lowercased sentence.
class Scanner {
 public:
  explicit Scanner(std::string_view lc) : s_(lc) {}

  std::size_t skip_space(std::size_t p) const {
    while (p < s_.size() && is_space(s_[p])) ++p;
    return p;
  }
  // Alphabetic word starting at p, only if p starts a word.
  std::string_view word_at(std::size_t p) const {
    if (p >= s_.size() || !is_alpha(s_[p]) || (p > 0 && is_alnum(s_[p - 1]))) return {};
    std::size_t e = p;
    while (e < s_.size() && is_alpha(s_[e])) ++e;
    if (e < s_.size() && is_digit(s_[e])) return {};
    return s_.substr(p, e - p);
  }
  std::string_view digits_at(std::size_t p) const {
    std::size_t e = p;
    while (e < s_.size() && is_digit(s_[e])) ++e;
    return s_.substr(p, e - p);
  }
  // Punctuation or word token from the given list at p; returns its length.
  std::size_t match_token(std::size_t p, const std::vector<std::string>& list) const {
    for (const auto& t : list) {
      if (t.empty()) continue;
      if (is_alpha(t.front())) {
        if (word_at(p) == t) return t.size();
      } else if (s_.substr(p, t.size()) == t) {
        return t.size();
      }
    }
    return 0;
  }
  std::size_t size() const { return s_.size(); }
  char at(std::size_t p) const { return p < s_.size() ? s_[p] : '\0'; }

 private:
  std::string_view s_;
};

struct NumberItem {
  std::string lo;
  std::string hi;  // empty for a single number
};

}  // namespace

const ReferenceGrammar& ReferenceGrammar::defaults() {
  static const ReferenceGrammar g = parse(data::k_image_ref_grammar);
  return g;
}

ReferenceGrammar ReferenceGrammar::parse(std::string_view tsv) {
  ReferenceGrammar g;
  std::size_t line_no = 0;
  for (std::string_view line : detail::split_lines(tsv)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto f = detail::split(line, '\t');
    if (f.size() != 2 || f[1].empty())
      throw ParseError("reference grammar line " + std::to_string(line_no) + ": expected kind<TAB>text");
    std::string text(f[1]);
    std::transform(text.begin(), text.end(), text.begin(), detail::ascii_lower);
    if (f[0] == "keyword") g.keywords.push_back(text);
    else if (f[0] == "series") g.series.push_back(text);
    else if (f[0] == "separator") g.separators.push_back(text);
    else if (f[0] == "range") g.ranges.push_back(text);
    else throw ParseError("reference grammar line " + std::to_string(line_no) + ": unknown kind");
  }
  if (g.keywords.empty()) throw ParseError("reference grammar: no keywords");
  return g;
}

std::string ImageKey::str() const {
  return report_id + ":" + (series ? std::to_string(*series) : std::string("-")) + ":" + std::to_string(image);
}

std::vector<std::int64_t> expand_image_range(std::string_view lo_text, std::string_view hi_text) {
  if (!all_digits(lo_text) || !all_digits(hi_text))
    throw ParseError("image range bounds must be decimal digits: '" + std::string(lo_text) + "', '" +
                     std::string(hi_text) + "'");
  std::string hi_full(hi_text);
  if (hi_text.size() < lo_text.size())
    hi_full = std::string(lo_text.substr(0, lo_text.size() - hi_text.size())) + hi_full;
  const std::int64_t lo = parse_int(lo_text);
  const std::int64_t hi = parse_int(hi_full);
  if (hi < lo)
    throw RangeOrderError("image range " + std::string(lo_text) + "-" + std::string(hi_text) + " expands to " +
                          std::to_string(lo) + ".." + std::to_string(hi));
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(hi - lo + 1));
  for (std::int64_t v = lo; v <= hi; ++v) out.push_back(v);
  return out;
}

std::vector<KeyImageRef> extract_image_references(const Report& report, std::vector<ExtractionWarning>* warnings,
                                                  const ReferenceGrammar& grammar) {
  std::vector<KeyImageRef> refs;
  for (const Sentence& sentence : report.sentences) {
    std::string lc(sentence.raw);
    std::transform(lc.begin(), lc.end(), lc.begin(), detail::ascii_lower);
    Scanner sc(lc);
    auto warn = [&](std::string msg) {
      if (warnings) warnings->push_back({report.report_id, sentence.index, std::move(msg)});
    };

    std::size_t pos = 0;
    while (pos < sc.size()) {
      const std::string_view word = sc.word_at(pos);
      if (word.empty()) {
        ++pos;
        continue;
      }
      const std::size_t ref_start = pos;
      std::optional<std::int64_t> series;
      std::size_t kw_pos = pos;

      if (contains(grammar.series, word)) {
        std::size_t p = sc.skip_space(pos + word.size());
        const std::string_view num = sc.digits_at(p);
        if (!num.empty() && !is_alpha(sc.at(p + num.size())) && num.size() <= 18) {
          p = sc.skip_space(p + num.size());
          if (sc.at(p) == ',') p = sc.skip_space(p + 1);
          if (contains(grammar.keywords, sc.word_at(p))) {
            series = parse_int(num);
            kw_pos = p;
          }
        }
        if (!series) {
          pos += word.size();
          continue;
        }
      } else if (!contains(grammar.keywords, word)) {
        pos += word.size();
        continue;
      }

      const std::string_view keyword = sc.word_at(kw_pos);
      std::size_t p = kw_pos + keyword.size();
      if (sc.at(p) == '.') ++p;
      p = sc.skip_space(p);
      if (sc.at(p) == '#') p = sc.skip_space(p + 1);

      std::vector<NumberItem> items;
      std::size_t end = p;
      for (;;) {
        const std::string_view lo = sc.digits_at(p);
        if (lo.empty()) break;
        std::size_t q = p + lo.size();
        if (is_alpha(sc.at(q))) {
          std::size_t e = q;
          while (is_alnum(sc.at(e))) ++e;
          warn("unparseable image number '" + std::string(sentence.raw.substr(p, e - p)) + "'");
          break;
        }
        NumberItem item{std::string(lo), {}};
        std::size_t item_end = q;
        const std::size_t r = sc.skip_space(q);
        if (const std::size_t rlen = sc.match_token(r, grammar.ranges); rlen > 0) {
          const std::size_t h = sc.skip_space(r + rlen);
          const std::string_view hi = sc.digits_at(h);
          if (!hi.empty() && !is_alpha(sc.at(h + hi.size()))) {
            item.hi = std::string(hi);
            item_end = h + hi.size();
          } else if (sc.at(r) == '-' && r == q) {
            // "32-" without an upper bound: keep the lower number alone.
            warn("incomplete image range after '" + std::string(lo) + "'");
          }
        }
        items.push_back(std::move(item));
        end = item_end;

        std::size_t s = sc.skip_space(item_end);
        bool separated = false;
        while (const std::size_t slen = sc.match_token(s, grammar.separators)) {
          s = sc.skip_space(s + slen);
          separated = true;
        }
        if (!separated || sc.digits_at(s).empty()) break;
        p = s;
      }

      if (items.empty()) {
        pos = kw_pos + keyword.size();
        continue;
      }

      std::vector<std::int64_t> numbers;
      for (const NumberItem& item : items) {
        try {
          if (item.hi.empty()) {
            numbers.push_back(parse_int(item.lo));
            continue;
          }
          std::string hi_full = item.hi;
          if (hi_full.size() < item.lo.size())
            hi_full = item.lo.substr(0, item.lo.size() - hi_full.size()) + hi_full;
          if (hi_full.size() <= 18 && item.lo.size() <= 18 && parse_int(hi_full) - parse_int(item.lo) >= kMaxRangeSize) {
            warn("image range " + item.lo + "-" + item.hi + " is too wide; skipped");
            continue;
          }
          const auto expanded = expand_image_range(item.lo, item.hi);
          numbers.insert(numbers.end(), expanded.begin(), expanded.end());
        } catch (const Error& e) {
          warn(e.what());
        }
      }
      std::sort(numbers.begin(), numbers.end());
      numbers.erase(std::unique(numbers.begin(), numbers.end()), numbers.end());
      if (!numbers.empty()) {
        refs.push_back({report.report_id, sentence.index, series, std::move(numbers),
                        sentence.raw.substr(ref_start, end - ref_start)});
      }
      pos = end;
    }
  }
  return refs;
}

std::vector<ContextWindow> context_window(const Report& report, const KeyImageRef& ref) {
  const std::size_t n = report.sentences.size();
  if (ref.sentence_index >= n) throw DataError("context_window: sentence index out of range");
  std::vector<std::size_t> indices;
  if (ref.sentence_index > 0) indices.push_back(ref.sentence_index - 1);
  indices.push_back(ref.sentence_index);
  if (ref.sentence_index + 1 < n) indices.push_back(ref.sentence_index + 1);

  std::vector<std::string> tokens;
  for (std::size_t i : indices) {
    const auto& t = report.sentences[i].tokens;
    tokens.insert(tokens.end(), t.begin(), t.end());
  }
  std::vector<ContextWindow> windows;
  for (std::int64_t image : ref.image_numbers) {
    windows.push_back({ImageKey{report.report_id, ref.series, image}, ref.sentence_index, indices, tokens, false});
  }
  return windows;
}

ContextWindow whole_report_window(const Report& report, std::optional<std::int64_t> series, std::int64_t image) {
  ContextWindow w;
  w.image_key = ImageKey{report.report_id, series, image};
  w.whole_report = true;
  for (const auto& s : report.sentences) {
    w.sentence_indices.push_back(s.index);
    w.tokens.insert(w.tokens.end(), s.tokens.begin(), s.tokens.end());
  }
  return w;
}

std::string format_extraction_report(const std::vector<KeyImageRef>& refs,
                                     const std::vector<ExtractionWarning>& warnings) {
  std::ostringstream out;
  out << "# report_id\tsentence_index\tseries\timage_number\n";
  for (const auto& r : refs) {
    for (std::int64_t image : r.image_numbers) {
      out << r.report_id << '\t' << r.sentence_index << '\t' << (r.series ? std::to_string(*r.series) : "-") << '\t'
          << image << '\n';
    }
  }
  for (const auto& w : warnings) {
    out << "#warning\t" << w.report_id << '\t' << w.sentence_index << '\t' << w.message << '\n';
  }
  return out.str();
}

}  // namespace radtext
