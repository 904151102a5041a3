#include "iaes/synth.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "iaes/compiler.hpp"

namespace iaes::synth {

namespace {

std::size_t uniform(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

bool chance(std::mt19937_64& rng, double p) { return std::bernoulli_distribution(p)(rng); }

Scale named_scale(std::size_t size) {
  switch (size) {
    case 2: return {"yn", {"no", "yes"}};
    case 3: return {"l3", {"low", "medium", "high"}};
    case 4: return {"l4", {"none", "weak", "fair", "strong"}};
    default: break;
  }
  Scale s{"l" + std::to_string(size), {}};
  for (std::size_t i = 0; i < size; ++i) s.levels.push_back("v" + std::to_string(i));
  return s;
}

const std::string& pick_scale(KnowledgeBase& kb, std::mt19937_64& rng, std::size_t max_levels) {
  const std::size_t size = uniform(rng, 2, std::max<std::size_t>(2, max_levels));
  Scale s;
  if (chance(rng, 0.25)) {
    // A fresh scale with its own level names.
    s.name = "s" + std::to_string(kb.scales.size());
    for (std::size_t i = 0; i < size; ++i) s.levels.push_back(s.name + "_" + std::to_string(i));
  } else {
    s = named_scale(size);
  }
  if (const Scale* existing = kb.find_scale(s.name)) return existing->name;
  kb.scales.push_back(std::move(s));
  return kb.scales.back().name;
}

std::string random_text(std::mt19937_64& rng, std::string_view stem) {
  static constexpr std::string_view kDecorations[] = {"", " (see \"policy\")", " path C:\\docs", " # not a comment"};
  return std::string(stem) + std::string(kDecorations[uniform(rng, 0, std::size(kDecorations) - 1)]);
}

Pattern random_pattern(std::mt19937_64& rng, const Scale& scale) {
  if (chance(rng, 0.35)) return Pattern::wildcard();
  std::vector<std::string> levels;
  for (const auto& level : scale.levels) {
    if (chance(rng, 0.4)) levels.push_back(level);
  }
  if (levels.empty()) levels.push_back(scale.levels[uniform(rng, 0, scale.size() - 1)]);
  std::shuffle(levels.begin(), levels.end(), rng);
  return Pattern{std::move(levels)};
}

void full_table(std::vector<RuleRow>& rows, const std::vector<const Scale*>& child_scales,
                const std::function<std::string(const std::vector<std::size_t>&)>& output) {
  std::vector<std::size_t> tuple(child_scales.size(), 0);
  for (;;) {
    RuleRow row;
    for (std::size_t c = 0; c < tuple.size(); ++c) row.patterns.push_back(Pattern{{child_scales[c]->levels[tuple[c]]}});
    row.output = output(tuple);
    rows.push_back(std::move(row));
    std::size_t k = tuple.size();
    while (k-- > 0) {
      if (++tuple[k] < child_scales[k]->size()) break;
      tuple[k] = 0;
    }
    if (k == static_cast<std::size_t>(-1)) break;
  }
}

}  // namespace

KnowledgeBase random_kb(std::mt19937_64& rng, const RandomKbOptions& options) {
  KnowledgeBase kb;
  kb.id = "rnd" + std::to_string(uniform(rng, 0, 9999));
  kb.version = static_cast<std::int64_t>(uniform(rng, 1, 9));

  const std::size_t n_inputs = uniform(rng, 1, options.max_inputs);
  const std::size_t n_derived = uniform(rng, 1, options.max_derived);
  std::vector<Attribute> attrs;
  std::vector<std::size_t> depth;

  for (std::size_t i = 0; i < n_inputs; ++i) {
    Attribute a;
    a.name = "in" + std::to_string(i);
    a.scale = pick_scale(kb, rng, options.max_levels);
    a.kind = AttributeKind::input;
    a.question = random_text(rng, "Question " + std::to_string(i) + "?");
    const std::size_t help_depth = uniform(rng, 0, 3);
    for (std::size_t h = 0; h < help_depth; ++h) a.help.push_back(random_text(rng, "help level " + std::to_string(h)));
    attrs.push_back(std::move(a));
    depth.push_back(0);
  }

  std::vector<std::size_t> uses(n_inputs + n_derived, 0);
  for (std::size_t j = 0; j < n_derived; ++j) {
    Attribute a;
    a.name = j + 1 == n_derived ? "goal" : "d" + std::to_string(j);
    a.scale = pick_scale(kb, rng, options.max_levels);
    a.kind = AttributeKind::derived;

    std::vector<std::size_t> candidates;
    for (std::size_t c = 0; c < attrs.size(); ++c) {
      if (depth[c] < options.max_depth) candidates.push_back(c);
    }
    std::shuffle(candidates.begin(), candidates.end(), rng);
    // Unused attributes first so the goal tends to see most of the KB.
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](std::size_t x, std::size_t y) { return uses[x] < uses[y]; });
    const std::size_t n_children = std::min(candidates.size(), uniform(rng, 1, options.max_children));
    candidates.resize(n_children);

    RuleBlock block;
    std::vector<const Scale*> child_scales;
    std::size_t d = 0;
    for (auto c : candidates) {
      ++uses[c];
      block.children.push_back(attrs[c].name);
      d = std::max(d, depth[c] + 1);
    }
    // Resolve scales after all push_backs on kb.scales for this attribute.
    for (auto c : candidates) child_scales.push_back(kb.find_scale(attrs[c].scale));
    const Scale& own = *kb.find_scale(a.scale);
    auto random_output = [&](const std::vector<std::size_t>&) { return own.levels[uniform(rng, 0, own.size() - 1)]; };

    std::size_t product = 1;
    for (const Scale* s : child_scales) product *= s->size();
    if (product <= 36 && chance(rng, 0.3)) {
      const std::size_t prefix = uniform(rng, 0, 2);
      for (std::size_t r = 0; r < prefix; ++r) {
        RuleRow row;
        for (const Scale* s : child_scales) row.patterns.push_back(random_pattern(rng, *s));
        row.output = random_output({});
        block.rows.push_back(std::move(row));
      }
      full_table(block.rows, child_scales, random_output);
    } else {
      const std::size_t n_rows = uniform(rng, 1, options.max_rows);
      for (std::size_t r = 0; r < n_rows; ++r) {
        RuleRow row;
        for (const Scale* s : child_scales) row.patterns.push_back(random_pattern(rng, *s));
        row.output = random_output({});
        block.rows.push_back(std::move(row));
      }
    }
    a.rules = std::move(block);
    attrs.push_back(std::move(a));
    depth.push_back(d);
  }
  kb.goal = attrs.back().name;

  // Declaration order is independent of dependency order.
  std::shuffle(attrs.begin(), attrs.end(), rng);
  kb.attributes = std::move(attrs);

  for (const auto& diag : validate(kb)) {
    if (diag.code != diag::kNotExhaustive) continue;
    for (auto& attr : kb.attributes) {
      if (attr.name == diag.attribute) {
        const Scale& own = *kb.find_scale(attr.scale);
        attr.rules->default_output = own.levels[uniform(rng, 0, own.size() - 1)];
      }
    }
  }
  return kb;
}

Bundle scale_bundle(std::uint64_t seed, const BundleOptions& options) {
  std::mt19937_64 rng(seed);
  Bundle bundle;
  const Scale l4 = named_scale(4);
  const std::size_t top = l4.size() - 1;

  std::vector<std::vector<std::string>> derived_names(options.kb_count);
  std::vector<std::vector<std::string>> input_names(options.kb_count);
  for (std::size_t k = 0; k < options.kb_count; ++k) {
    KnowledgeBase kb;
    kb.id = "syn" + std::to_string(k + 1);
    kb.version = 1;
    kb.scales.push_back(l4);

    std::vector<std::string> layer;
    for (std::size_t i = 0; i < options.inputs_per_kb; ++i) {
      Attribute a;
      a.name = "q" + std::to_string(i);
      a.scale = l4.name;
      a.question = "Synthetic question " + std::to_string(i) + " of " + kb.id + "?";
      if (i % 7 == 0) a.help = {"Short help for " + a.name, "Longer explanation for " + a.name};
      layer.push_back(a.name);
      input_names[k].push_back(a.name);
      kb.attributes.push_back(std::move(a));
    }

    std::size_t level = 1;
    while (layer.size() > 1) {
      std::vector<std::string> next;
      for (std::size_t start = 0; start < layer.size(); start += options.group_size) {
        const std::size_t end = std::min(layer.size(), start + options.group_size);
        if (end - start == 1) {
          next.push_back(layer[start]);
          continue;
        }
        Attribute a;
        a.name = "n" + std::to_string(level) + "_" + std::to_string(next.size());
        a.scale = l4.name;
        a.kind = AttributeKind::derived;
        RuleBlock block;
        std::vector<const Scale*> scales;
        for (std::size_t c = start; c < end; ++c) {
          block.children.push_back(layer[c]);
          scales.push_back(&l4);
        }
        // Output tracks the rounded mean of the children, with some noise.
        full_table(block.rows, scales, [&](const std::vector<std::size_t>& tuple) {
          const double mean = std::accumulate(tuple.begin(), tuple.end(), 0.0) / static_cast<double>(tuple.size());
          long v = std::lround(mean);
          const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
          if (u < 0.1) --v;
          if (u > 0.9) ++v;
          return l4.levels[static_cast<std::size_t>(std::clamp<long>(v, 0, static_cast<long>(top)))];
        });
        a.rules = std::move(block);
        next.push_back(a.name);
        derived_names[k].push_back(a.name);
        kb.attributes.push_back(std::move(a));
      }
      layer = std::move(next);
      ++level;
    }
    kb.goal = layer.front();
    bundle.kbs.push_back(std::move(kb));
  }

  OverlaySpec& ov = bundle.overlay;
  ov.name = "synthetic";
  auto random_ref = [&](bool derived_only) {
    const std::size_t k = uniform(rng, 0, options.kb_count - 1);
    const auto& pool = derived_only || chance(rng, 0.5) ? derived_names[k] : input_names[k];
    return QualifiedRef{bundle.kbs[k].id, pool[uniform(rng, 0, pool.size() - 1)], 0, 0};
  };
  for (std::size_t f = 0; f < options.red_flags; ++f) {
    RedFlagDef flag;
    flag.id = "flag_" + std::to_string(f);
    flag.severity = static_cast<Severity>(uniform(rng, 0, 2));
    const std::size_t terms = uniform(rng, 1, 3);
    for (std::size_t t = 0; t < terms; ++t) {
      flag.terms.push_back(
          FlagTerm{random_ref(false), static_cast<Comparator>(uniform(rng, 0, 2)), l4.levels[uniform(rng, 0, top)]});
    }
    flag.message = "Synthetic constellation " + std::to_string(f);
    ov.red_flags.push_back(std::move(flag));
  }
  for (std::size_t k = 0; k < options.kb_count; ++k) {
    for (const auto& name : derived_names[k]) {
      RiskEntryDef entry;
      entry.ref = QualifiedRef{bundle.kbs[k].id, name, 0, 0};
      entry.weight = 0.5 + static_cast<double>(uniform(rng, 0, 10)) / 4.0;
      for (std::size_t i = 0; i <= top; ++i) {
        entry.severities.emplace_back(l4.levels[i], static_cast<double>(top - i) / static_cast<double>(top));
      }
      ov.risk_entries.push_back(std::move(entry));
    }
  }
  for (std::size_t c = 0; c < options.valuation_categories; ++c) {
    ValuationCategoryDef cat;
    cat.name = "category " + std::to_string(c + 1);
    cat.base = 0.5 + static_cast<double>(uniform(rng, 0, 18)) / 4.0;
    const std::size_t drivers = uniform(rng, 0, 3);
    for (std::size_t d = 0; d < drivers; ++d) {
      ValuationDriverDef driver;
      driver.ref = random_ref(true);
      for (std::size_t i = 0; i <= top; ++i) driver.multipliers.emplace_back(l4.levels[i], 0.5 + 0.5 * static_cast<double>(i));
      cat.drivers.push_back(std::move(driver));
    }
    ov.valuation_categories.push_back(std::move(cat));
  }
  return bundle;
}

}  // namespace iaes::synth
