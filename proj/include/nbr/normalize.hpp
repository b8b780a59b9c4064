#pragma once

#include <string_view>

#include "nbr/types.hpp"

namespace nbr {

struct NormConfig {
  bool lowercase = true;
  // Characters removed anywhere in the text before tokenization.
  std::string strip_chars = ".,?!;:\"";
};

// Lowercases (when configured), strips the removal set, and tokenizes on
// whitespace. Idempotent: normalize(join(normalize(x))) == normalize(x).
// Empty input yields an empty sequence.
Words normalize(std::string_view raw, const NormConfig& cfg = {});

}  // namespace nbr
