#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "radtext/corpus.hpp"
#include "radtext/keyimage.hpp"
#include "radtext/keywordgen.hpp"

namespace radtext::cli {

std::string fmt(double v);

/// corpus.jsonl: one preprocessed report per line, sentences included.
std::string format_corpus(const std::vector<Report>& reports);
std::vector<Report> parse_corpus(std::string_view jsonl);

/// bow.tsv: "# bow V=<V>" header, then doc_id<TAB>id:count ...
std::string format_bow(const std::vector<BowDocument>& docs, std::size_t vocab_size);
std::vector<BowDocument> parse_bow(std::string_view tsv, std::size_t* vocab_size);

std::string format_windows(const std::vector<ContextWindow>& windows);
std::vector<ContextWindow> parse_windows(std::string_view tsv);

/// key<TAB>value rows; '#' lines are comments. Values may repeat per key.
std::vector<std::pair<std::string, std::string>> parse_pairs(std::string_view tsv);
std::vector<std::pair<std::string, int>> parse_int_pairs(std::string_view tsv);
std::string format_int_pairs(const std::vector<std::pair<std::string, int>>& rows, std::string_view header);

/// topic<TAB>word word ... in topic order.
std::string format_keyword_table(const KeywordTable& table);
KeywordTable parse_keyword_table(std::string_view tsv);

/// image_key<TAB>word word ...
std::map<std::string, std::set<std::string>> parse_word_sets(std::string_view tsv);

std::vector<int> parse_int_list(std::string_view csv);
std::vector<std::size_t> parse_size_list(std::string_view csv);

}  // namespace radtext::cli
