#pragma once

#include "nbr/types.hpp"

namespace nbr {

// Minimum-cost alignment under unit substitution/insertion/deletion costs.
// Backtrace ties are resolved substitution > insertion > deletion so the
// error decomposition is stable across platforms.
AlignmentResult align(const Words& reference, const Words& hypothesis);

}  // namespace nbr
