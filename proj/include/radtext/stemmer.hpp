#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace radtext {

/// Porter-style suffix stripper driven by a rule table.
///
/// The table (see data/porter_rules.tsv) supplies the suffix rules for steps
/// 1a, 1b, 2, 3 and 4. The step 1b clean-up, 1c and the final-e / double-l
/// steps have fixed logic.
class PorterStemmer {
 public:
  enum class Condition { kNone, kMeasureAbove0, kMeasureAbove1, kMeasureAbove1EndsST, kHasVowel };

  struct Rule {
    std::string step;
    std::string suffix;
    std::string replacement;
    Condition condition = Condition::kNone;
  };

  /// Stemmer using the shipped rule table.
  PorterStemmer();
  explicit PorterStemmer(std::vector<Rule> rules);

  static std::vector<Rule> parse_rules(std::string_view tsv);
  static PorterStemmer from_file(const std::string& path);

  std::string stem(std::string_view word) const;

  const std::vector<Rule>& rules() const { return rules_; }

 private:
  // Applies the longest matching rule of `step`; returns true if one fired.
  bool apply_step(std::string& w, std::string_view step) const;

  std::vector<Rule> rules_;
};

/// Process-wide stemmer built from the shipped table.
const PorterStemmer& default_stemmer();

}  // namespace radtext
