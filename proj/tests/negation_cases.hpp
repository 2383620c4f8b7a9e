#pragma once

#include <string>
#include <utility>
#include <vector>

#include "radtext/termmine.hpp"

namespace radtext::testing {

struct Expect {
  std::string term;
  Polarity polarity;
  std::string trigger;  // empty = none
};

using NegationCase = std::pair<std::string, std::vector<Expect>>;

/// Sentences traced by hand against the default triggers and scope rules.
inline const std::vector<NegationCase>& negation_cases() {
  using P = Polarity;
  static const std::vector<NegationCase> cases = {
      {"No evidence of pneumothorax.", {{"pneumothorax", P::kNegated, "no evidence of"}}},
      {"Pneumothorax is present.", {{"pneumothorax", P::kAsserted, ""}}},
      {"Cannot rule out cyst.", {{"cyst", P::kPossible, "cannot rule out"}}},
      {"There is a cyst in the liver.", {{"cyst", P::kAsserted, ""}}},
      {"No cyst or tumor.", {{"cyst", P::kNegated, "no"}, {"tumor", P::kNegated, "no"}}},
      {"The pneumothorax has resolved.", {{"pneumothorax", P::kNegated, "has resolved"}}},
      {"Possible abscess.", {{"abscess", P::kPossible, "possible"}}},
      {"Abscess cannot be excluded.", {{"abscess", P::kPossible, "cannot be excluded"}}},
      {"No change in the cyst.", {{"cyst", P::kAsserted, ""}}},
      {"No effusion but there is a fracture.", {{"effusion", P::kNegated, "no"}, {"fracture", P::kAsserted, ""}}},
      {"Without hernia.", {{"hernia", P::kNegated, "without"}}},
      {"Fracture is absent.", {{"fracture", P::kNegated, "is absent"}}},
      {"No interval change of the hemangioma.", {{"hemangioma", P::kAsserted, ""}}},
      {"No large dense well defined smooth rounded cyst.", {{"cyst", P::kAsserted, ""}}},
      {"No large dense well defined smooth cyst.", {{"cyst", P::kNegated, "no"}}},
      {"Suspicious for metastasis.", {{"metastasis", P::kPossible, "suspicious for"}}},
      {"Negative for pneumonia.", {{"pneumonia", P::kNegated, "negative for"}}},
      {"Free of thrombosis.", {{"thrombosis", P::kNegated, "free of"}}},
      {"Gram negative pneumonia.", {{"pneumonia", P::kAsserted, ""}}},
      {"No pneumothorax, however effusion is seen.",
       {{"pneumothorax", P::kNegated, "no"}, {"effusion", P::kAsserted, ""}}},
      {"Edema, which has resolved.", {{"edema", P::kAsserted, ""}}},
      {"The cyst has resolved.", {{"cyst", P::kNegated, "has resolved"}}},
      {"Atelectasis versus pneumonia.", {{"atelectasis", P::kAsserted, ""}, {"pneumonia", P::kPossible, "versus"}}},
      {"Probable adenoma.", {{"adenoma", P::kPossible, "probable"}}},
      {"Not only cyst but also tumor.", {{"cyst", P::kAsserted, ""}, {"tumor", P::kAsserted, ""}}},
      {"Absence of stenosis.", {{"stenosis", P::kNegated, "absence of"}}},
      {"Denies fracture.", {{"fracture", P::kNegated, "denies"}}},
      {"No possible cyst.", {{"cyst", P::kNegated, "no"}}},
      {"Aneurysm is not excluded.", {{"aneurysm", P::kPossible, "is not excluded"}}},
      {"Pleural effusion is seen.", {{"pleural effusion", P::kAsserted, ""}}},
      {"Cirrhosis ruled out.", {{"cirrhosis", P::kNegated, "ruled out"}}},
      {"No increase in hydronephrosis.", {{"hydronephrosis", P::kAsserted, ""}}},
      {"A mass and a nodule.", {}},
  };
  return cases;
}

}  // namespace radtext::testing
