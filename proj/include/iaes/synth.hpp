// Generators for random and large-scale knowledge bases. Used by the property
// tests, the acceptance suite and `iaes synth`.
#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "iaes/kbdl.hpp"

namespace iaes::synth {

struct RandomKbOptions {
  std::size_t max_inputs = 6;
  std::size_t max_levels = 4;
  std::size_t max_depth = 3;
  std::size_t max_derived = 4;
  std::size_t max_children = 3;
  std::size_t max_rows = 6;
};

/// A valid, compilable knowledge base. Blocks mix wildcards, level sets and
/// full tables; a default is added only where rows are not exhaustive.
KnowledgeBase random_kb(std::mt19937_64& rng, const RandomKbOptions& options = {});

struct BundleOptions {
  std::size_t kb_count = 5;
  std::size_t inputs_per_kb = 40;
  std::size_t group_size = 4;  // children per derived attribute
  std::size_t red_flags = 60;
  std::size_t valuation_categories = 25;
};

struct Bundle {
  std::vector<KnowledgeBase> kbs;
  OverlaySpec overlay;
};

/// Deterministic multi-KB bundle with full rule tables over 4-level scales.
/// The defaults give 200 inputs and ~15,700 hierarchical rows.
Bundle scale_bundle(std::uint64_t seed, const BundleOptions& options = {});

}  // namespace iaes::synth
