// Box coverage over level-mask patterns, used for exhaustiveness and
// shadowed-row detection.
#pragma once

#include <optional>
#include <vector>

#include "iaes/compiler.hpp"

namespace iaes::detail {

/// One mask per position; a tuple is in the box when every level is in its mask.
using Box = std::vector<LevelMask>;

inline LevelMask full_mask(std::size_t levels) {
  return levels >= 64 ? ~LevelMask{0} : (LevelMask{1} << levels) - 1;
}

/// Returns a tuple inside `box` that none of rows[0, count) contains, or
/// nullopt when those rows cover the whole box.
std::optional<std::vector<std::uint32_t>> find_uncovered(const std::vector<Box>& rows, std::size_t count,
                                                         const Box& box);

}  // namespace iaes::detail
