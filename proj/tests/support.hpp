// Shared fixtures and test-only oracles.
#pragma once

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "iaes/kbdl.hpp"

#ifndef IAES_SOURCE_DIR
#error "IAES_SOURCE_DIR must point at the repository root"
#endif

namespace iaes::test {

inline std::string source_path(const std::string& relative) { return std::string(IAES_SOURCE_DIR) + "/" + relative; }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline std::string demo_source() { return read_file(source_path("bundles/demo/demo.kb")); }
inline std::string demo_overlay_source() { return read_file(source_path("bundles/demo/demo.overlay")); }

inline KnowledgeBase demo_kb() {
  auto parsed = parse_kb(demo_source());
  if (!parsed.ok()) throw std::runtime_error("demo KB does not parse: " + to_string(parsed.errors.front()));
  return *parsed.value;
}

/// Goal value for a complete assignment, computed straight from the parsed
/// model by name with first-match rows. Shares no code with the compiler or
/// the engine.
inline std::string reference_value(const KnowledgeBase& kb, const std::map<std::string, std::string>& inputs,
                                   const std::string& attribute) {
  std::map<std::string, std::string> memo = inputs;
  std::function<std::string(const std::string&)> value = [&](const std::string& name) -> std::string {
    if (auto it = memo.find(name); it != memo.end()) return it->second;
    const Attribute* attr = kb.find_attribute(name);
    if (attr == nullptr || !attr->rules) throw std::logic_error("reference: no value for " + name);
    const RuleBlock& block = *attr->rules;
    for (const auto& row : block.rows) {
      bool match = true;
      for (std::size_t c = 0; c < block.children.size() && match; ++c) {
        if (row.patterns[c].is_wildcard()) continue;
        const std::string v = value(block.children[c]);
        bool hit = false;
        for (const auto& level : row.patterns[c].levels) hit = hit || level == v;
        match = hit;
      }
      if (match) return memo[name] = row.output;
    }
    if (!block.default_output) throw std::logic_error("reference: no row matched for " + name);
    return memo[name] = *block.default_output;
  };
  return value(attribute);
}

}  // namespace iaes::test
