#include "formats.hpp"

#include <charconv>
#include <json.hpp>
#include <sstream>

#include "radtext/error.hpp"
#include "text_util.hpp"

namespace radtext::cli {

namespace {

std::string where(std::size_t line_no) { return "line " + std::to_string(line_no) + ": "; }

template <typename T>
T to_number(std::string_view s, std::size_t line_no) {
  T v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ParseError(where(line_no) + "bad number '" + std::string(s) + "'");
  return v;
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  for (auto w : detail::split(s, ' '))
    if (!w.empty()) out.emplace_back(w);
  return out;
}

bool skip(std::string_view line) { return detail::trim(line).empty() || line.front() == '#'; }

}  // namespace

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string format_corpus(const std::vector<Report>& reports) {
  std::string out;
  for (const auto& r : reports) {
    nlohmann::ordered_json j;
    j["report_id"] = r.report_id;
    j["accession"] = r.accession ? nlohmann::ordered_json(*r.accession) : nlohmann::ordered_json(nullptr);
    j["text"] = r.text;
    auto sentences = nlohmann::ordered_json::array();
    for (const auto& s : r.sentences) {
      nlohmann::ordered_json js;
      js["index"] = s.index;
      js["raw"] = s.raw;
      js["tokens"] = s.tokens;
      js["span"] = {s.char_span.first, s.char_span.second};
      sentences.push_back(std::move(js));
    }
    j["sentences"] = std::move(sentences);
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<Report> parse_corpus(std::string_view jsonl) {
  std::vector<Report> reports;
  std::size_t line_no = 0;
  for (auto line : detail::split_lines(jsonl)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Report r;
      r.report_id = j.at("report_id").get<std::string>();
      if (j.contains("accession") && !j["accession"].is_null()) r.accession = j["accession"].get<std::string>();
      r.text = j.at("text").get<std::string>();
      for (const auto& js : j.at("sentences")) {
        Sentence s;
        s.index = js.at("index").get<std::size_t>();
        s.raw = js.at("raw").get<std::string>();
        s.tokens = js.at("tokens").get<std::vector<std::string>>();
        s.char_span = {js.at("span").at(0).get<std::size_t>(), js.at("span").at(1).get<std::size_t>()};
        r.sentences.push_back(std::move(s));
      }
      reports.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where(line_no) + "bad corpus record: " + e.what());
    }
  }
  return reports;
}

std::string format_bow(const std::vector<BowDocument>& docs, std::size_t vocab_size) {
  std::ostringstream out;
  out << "# bow V=" << vocab_size << '\n';
  for (const auto& d : docs) {
    out << d.doc_id << '\t';
    for (std::size_t i = 0; i < d.terms.size(); ++i)
      out << (i ? " " : "") << d.terms[i].first << ':' << d.terms[i].second;
    out << '\n';
  }
  return out.str();
}

std::vector<BowDocument> parse_bow(std::string_view tsv, std::size_t* vocab_size) {
  std::vector<BowDocument> docs;
  std::size_t v = 0;
  bool header = false;
  std::size_t line_no = 0;
  for (auto line : detail::split_lines(tsv)) {
    ++line_no;
    if (line.starts_with("# bow V=")) {
      v = to_number<std::size_t>(line.substr(8), line_no);
      header = true;
      continue;
    }
    if (skip(line)) continue;
    const auto cols = detail::split(line, '\t');
    if (cols.size() != 2) throw ParseError(where(line_no) + "expected doc_id<TAB>terms");
    BowDocument d;
    d.doc_id = std::string(cols[0]);
    for (const auto& w : words(cols[1])) {
      const auto colon = w.find(':');
      if (colon == std::string::npos) throw ParseError(where(line_no) + "expected id:count, got '" + w + "'");
      const int id = to_number<int>(std::string_view(w).substr(0, colon), line_no);
      const int count = to_number<int>(std::string_view(w).substr(colon + 1), line_no);
      if (id < 0 || count < 1) throw ParseError(where(line_no) + "bad term entry '" + w + "'");
      if (!d.terms.empty() && d.terms.back().first >= id)
        throw ParseError(where(line_no) + "term ids must be strictly increasing");
      d.terms.emplace_back(id, count);
      d.length += count;
    }
    docs.push_back(std::move(d));
  }
  if (!header) throw ParseError("bag-of-words file lacks its '# bow V=' header");
  for (const auto& d : docs)
    if (!d.terms.empty() && static_cast<std::size_t>(d.terms.back().first) >= v)
      throw ParseError("document '" + d.doc_id + "' has a term id outside the vocabulary");
  if (vocab_size) *vocab_size = v;
  return docs;
}

std::string format_windows(const std::vector<ContextWindow>& windows) {
  std::ostringstream out;
  out << "# image_key\treport_id\tseries\timage\tref_sentence\tsentences\twhole_report\ttokens\n";
  for (const auto& w : windows) {
    out << w.image_key.str() << '\t' << w.image_key.report_id << '\t'
        << (w.image_key.series ? std::to_string(*w.image_key.series) : "-") << '\t' << w.image_key.image << '\t'
        << w.referencing_sentence << '\t';
    for (std::size_t i = 0; i < w.sentence_indices.size(); ++i) out << (i ? "," : "") << w.sentence_indices[i];
    out << '\t' << (w.whole_report ? 1 : 0) << '\t';
    for (std::size_t i = 0; i < w.tokens.size(); ++i) out << (i ? " " : "") << w.tokens[i];
    out << '\n';
  }
  return out.str();
}

std::vector<ContextWindow> parse_windows(std::string_view tsv) {
  std::vector<ContextWindow> out;
  std::size_t line_no = 0;
  for (auto line : detail::split_lines(tsv)) {
    ++line_no;
    if (skip(line)) continue;
    const auto c = detail::split(line, '\t');
    if (c.size() != 8) throw ParseError(where(line_no) + "expected 8 window columns");
    ContextWindow w;
    w.image_key.report_id = std::string(c[1]);
    if (c[2] != "-") w.image_key.series = to_number<std::int64_t>(c[2], line_no);
    w.image_key.image = to_number<std::int64_t>(c[3], line_no);
    if (w.image_key.str() != c[0]) throw ParseError(where(line_no) + "image key does not match its columns");
    w.referencing_sentence = to_number<std::size_t>(c[4], line_no);
    for (auto s : detail::split(c[5], ','))
      if (!s.empty()) w.sentence_indices.push_back(to_number<std::size_t>(s, line_no));
    w.whole_report = c[6] == "1";
    w.tokens = words(c[7]);
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> parse_pairs(std::string_view tsv) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t line_no = 0;
  for (auto line : detail::split_lines(tsv)) {
    ++line_no;
    if (skip(line)) continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw ParseError(where(line_no) + "expected key<TAB>value");
    out.emplace_back(std::string(line.substr(0, tab)), std::string(line.substr(tab + 1)));
  }
  return out;
}

std::vector<std::pair<std::string, int>> parse_int_pairs(std::string_view tsv) {
  std::vector<std::pair<std::string, int>> out;
  std::size_t line_no = 0;
  for (auto& [k, v] : parse_pairs(tsv)) out.emplace_back(k, to_number<int>(v, ++line_no));
  return out;
}

std::string format_int_pairs(const std::vector<std::pair<std::string, int>>& rows, std::string_view header) {
  std::ostringstream out;
  out << "# " << header << '\n';
  for (const auto& [k, v] : rows) out << k << '\t' << v << '\n';
  return out.str();
}

std::string format_keyword_table(const KeywordTable& table) {
  std::ostringstream out;
  for (std::size_t t = 0; t < table.size(); ++t) {
    out << t << '\t';
    for (std::size_t i = 0; i < table[t].size(); ++i) out << (i ? " " : "") << table[t][i];
    out << '\n';
  }
  return out.str();
}

KeywordTable parse_keyword_table(std::string_view tsv) {
  KeywordTable table;
  std::size_t line_no = 0;
  for (auto& [k, v] : parse_pairs(tsv)) {
    const auto t = to_number<std::size_t>(k, ++line_no);
    if (t != table.size()) throw ParseError(where(line_no) + "topic ids must run 0, 1, 2, ...");
    table.push_back(words(v));
  }
  return table;
}

std::map<std::string, std::set<std::string>> parse_word_sets(std::string_view tsv) {
  std::map<std::string, std::set<std::string>> out;
  for (auto& [k, v] : parse_pairs(tsv))
    for (auto& w : words(v)) out[k].insert(w);
  return out;
}

std::vector<int> parse_int_list(std::string_view csv) {
  std::vector<int> out;
  for (auto s : detail::split(csv, ','))
    if (!detail::trim(s).empty()) out.push_back(to_number<int>(detail::trim(s), 0));
  return out;
}

std::vector<std::size_t> parse_size_list(std::string_view csv) {
  std::vector<std::size_t> out;
  for (auto s : detail::split(csv, ','))
    if (!detail::trim(s).empty()) out.push_back(to_number<std::size_t>(detail::trim(s), 0));
  return out;
}

}  // namespace radtext::cli
