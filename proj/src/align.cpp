#include "nbr/align.hpp"

#include <cstdint>
#include <vector>

namespace nbr {

namespace {

enum Move : uint8_t { kNone, kMatch, kSub, kIns, kDel };

AlignmentResult align_impl(const Words& reference, const Words& hypothesis) {
  const std::size_t n = reference.size();
  const std::size_t m = hypothesis.size();

  std::vector<int> dist((n + 1) * (m + 1));
  std::vector<uint8_t> move((n + 1) * (m + 1), kNone);
  auto at = [m](std::size_t i, std::size_t j) { return i * (m + 1) + j; };

  for (std::size_t i = 1; i <= n; ++i) {
    dist[at(i, 0)] = static_cast<int>(i);
    move[at(i, 0)] = kDel;
  }
  for (std::size_t j = 1; j <= m; ++j) {
    dist[at(0, j)] = static_cast<int>(j);
    move[at(0, j)] = kIns;
  }
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const bool eq = reference[i - 1] == hypothesis[j - 1];
      const int diag = dist[at(i - 1, j - 1)] + (eq ? 0 : 1);
      const int ins = dist[at(i, j - 1)] + 1;
      const int del = dist[at(i - 1, j)] + 1;
      // Tie order sub > ins > del keeps the decomposition stable.
      int best = diag;
      uint8_t mv = eq ? kMatch : kSub;
      if (ins < best) {
        best = ins;
        mv = kIns;
      }
      if (del < best) {
        best = del;
        mv = kDel;
      }
      dist[at(i, j)] = best;
      move[at(i, j)] = mv;
    }
  }

  AlignmentResult result;
  result.ref_len = static_cast<int>(n);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    switch (move[at(i, j)]) {
      case kMatch:
        --i;
        --j;
        break;
      case kSub:
        ++result.substitutions;
        --i;
        --j;
        break;
      case kIns:
        ++result.insertions;
        --j;
        break;
      case kDel:
        ++result.deletions;
        --i;
        break;
      default:
        return result;  // unreachable: (0,0) has kNone
    }
  }
  return result;
}

}  // namespace

AlignmentResult align(const Words& reference, const Words& hypothesis) {
  // Canonical orientation: the DP runs with the lexicographically smaller
  // sequence as its reference and the counts mirror back. This makes the
  // decomposition dual — align(a,b) insertions equal align(b,a) deletions —
  // which no fixed tie order alone provides.
  if (hypothesis < reference) {
    AlignmentResult mirrored = align_impl(hypothesis, reference);
    std::swap(mirrored.insertions, mirrored.deletions);
    mirrored.ref_len = static_cast<int>(reference.size());
    return mirrored;
  }
  return align_impl(reference, hypothesis);
}

}  // namespace nbr
