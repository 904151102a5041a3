#include "compiler/coverage.hpp"

#include <bit>
#include <map>

namespace iaes::detail {

namespace {

std::uint32_t lowest_level(LevelMask m) { return static_cast<std::uint32_t>(std::countr_zero(m)); }

std::optional<std::vector<std::uint32_t>> uncovered(const std::vector<const Box*>& candidates, const Box& box) {
  std::vector<const Box*> live;
  live.reserve(candidates.size());
  for (const Box* row : candidates) {
    bool intersects = true;
    bool covers = true;
    for (std::size_t p = 0; p < box.size(); ++p) {
      const LevelMask common = (*row)[p] & box[p];
      if (common == 0) {
        intersects = false;
        break;
      }
      if (common != box[p]) covers = false;
    }
    if (!intersects) continue;
    if (covers) return std::nullopt;
    live.push_back(row);
  }
  if (live.empty()) {
    std::vector<std::uint32_t> witness;
    for (LevelMask m : box) witness.push_back(lowest_level(m));
    return witness;
  }

  // Split on the first position some live row only partially covers. Levels
  // that every live row treats alike go into one sub-box.
  std::size_t split = 0;
  for (; split < box.size(); ++split) {
    bool partial = false;
    for (const Box* row : live) {
      if (((*row)[split] & box[split]) != box[split]) {
        partial = true;
        break;
      }
    }
    if (partial) break;
  }

  std::map<std::vector<bool>, LevelMask> groups;
  for (LevelMask rest = box[split]; rest != 0; rest &= rest - 1) {
    const LevelMask bit = rest & (~rest + 1);
    std::vector<bool> signature;
    signature.reserve(live.size());
    for (const Box* row : live) signature.push_back(((*row)[split] & bit) != 0);
    groups[signature] |= bit;
  }
  for (const auto& [signature, levels] : groups) {
    Box sub = box;
    sub[split] = levels;
    if (auto gap = uncovered(live, sub)) return gap;
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::vector<std::uint32_t>> find_uncovered(const std::vector<Box>& rows, std::size_t count,
                                                         const Box& box) {
  std::vector<const Box*> candidates;
  candidates.reserve(count);
  for (std::size_t i = 0; i < count && i < rows.size(); ++i) candidates.push_back(&rows[i]);
  return uncovered(candidates, box);
}

}  // namespace iaes::detail
