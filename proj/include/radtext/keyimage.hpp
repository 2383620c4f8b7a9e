#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "radtext/corpus.hpp"

namespace radtext {

/// Word lists that make up the key-image reference grammar.
struct ReferenceGrammar {
  std::vector<std::string> keywords;    // image, images, im, img
  std::vector<std::string> series;      // series
  std::vector<std::string> separators;  // ",", and
  std::vector<std::string> ranges;      // "-", through

  /// Grammar from data/image_ref_grammar.tsv.
  static const ReferenceGrammar& defaults();
  static ReferenceGrammar parse(std::string_view tsv);
};

struct KeyImageRef {
  std::string report_id;
  std::size_t sentence_index = 0;
  std::optional<std::int64_t> series;
  std::vector<std::int64_t> image_numbers;  // strictly increasing, nonempty
  std::string raw_match;
};

struct ExtractionWarning {
  std::string report_id;
  std::size_t sentence_index = 0;
  std::string message;
};

struct ImageKey {
  std::string report_id;
  std::optional<std::int64_t> series;
  std::int64_t image = 0;

  /// `report_id:series:image`, with `-` for a missing series.
  std::string str() const;
  friend bool operator==(const ImageKey&, const ImageKey&) = default;
};

struct ContextWindow {
  ImageKey image_key;
  std::size_t referencing_sentence = 0;
  std::vector<std::size_t> sentence_indices;
  std::vector<std::string> tokens;
  bool whole_report = false;
};

/// Expands "1013","78" to 1013..1078: a shorter upper end borrows the
/// leading digits of the lower end. Throws ParseError on non-digit input
/// and RangeOrderError when the expanded upper end is below the lower end.
std::vector<std::int64_t> expand_image_range(std::string_view lo_text, std::string_view hi_text);

std::vector<KeyImageRef> extract_image_references(const Report& report,
                                                  std::vector<ExtractionWarning>* warnings = nullptr,
                                                  const ReferenceGrammar& grammar = ReferenceGrammar::defaults());

/// One window per image number: the referencing sentence and its immediate
/// neighbours, clipped to the report.
std::vector<ContextWindow> context_window(const Report& report, const KeyImageRef& ref);

/// Window for an image matched by accession only: every sentence of the report.
ContextWindow whole_report_window(const Report& report, std::optional<std::int64_t> series, std::int64_t image);

/// Tab-separated `report_id sentence_index series image_number` rows followed
/// by `#warning` rows.
std::string format_extraction_report(const std::vector<KeyImageRef>& refs,
                                     const std::vector<ExtractionWarning>& warnings);

}  // namespace radtext
