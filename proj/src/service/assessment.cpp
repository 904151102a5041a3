#include <algorithm>

#include "iaes/service.hpp"

namespace iaes {

std::vector<QuestionRef> merged_questions(const Platform& platform, const Session& session,
                                          const ResultSet& results, std::size_t k) {
  std::vector<QuestionRef> all;
  for (const auto& kb : session.kb_ids) {
    const CompiledGraph* g = platform.graph(kb);
    const auto it = results.find(kb);
    if (g == nullptr || it == results.end()) continue;
    for (const auto& q : rank_questions(*g, it->second)) {
      const auto& attr = g->attribute(q.input);
      all.push_back({kb, attr.name, attr.question, q.score});
    }
  }
  std::stable_sort(all.begin(), all.end(), [](const QuestionRef& a, const QuestionRef& b) { return a.score > b.score; });
  if (all.size() > k) all.resize(k);
  return all;
}

Assessment assess(const Platform& platform, const Session& session, std::size_t k) {
  Assessment a;
  a.session = session;
  for (const auto& kb : session.kb_ids) {
    const CompiledGraph* g = platform.graph(kb);
    if (g == nullptr) throw ApiError(422, "unknown knowledge base '" + kb + "'");
    const auto answers = session.answers.find(kb);
    const auto inputs = answers == session.answers.end() ? std::vector<Status>(g->size())
                                                         : bind_answers(*g, answers->second);
    a.results.emplace(kb, evaluate_bound(*g, inputs));
  }
  if (platform.overlay) {
    a.red_flags = detect_red_flags(*platform.overlay, a.results);
    a.risk = risk_score(*platform.overlay, a.results);
    a.valuation = compute_valuation(*platform.overlay, a.results);
  }
  a.next_questions = merged_questions(platform, session, a.results, k);
  return a;
}

ordered_json assessment_to_json(const Platform& platform, const Assessment& a) {
  ordered_json out;
  out["session_id"] = a.session.id;
  out["updated_at"] = format_rfc3339(a.session.updated_at);
  out["answers"] = session_to_json(a.session)["answers"];

  ordered_json values = ordered_json::object();
  ordered_json unknowns = ordered_json::object();
  for (const auto& kb : a.session.kb_ids) {
    const CompiledGraph& g = *platform.graph(kb);
    const auto& result = a.results.at(kb);
    ordered_json v = ordered_json::object();
    ordered_json u = ordered_json::array();
    for (std::uint32_t i = 0; i < g.size(); ++i) {
      const auto& attr = g.attribute(i);
      if (result.values[i]) {
        v[attr.name] = attr.scale.levels[*result.values[i]];
      } else {
        u.push_back(attr.name);
      }
    }
    values[kb] = std::move(v);
    unknowns[kb] = std::move(u);
  }
  out["values"] = std::move(values);
  out["unknowns"] = std::move(unknowns);

  ordered_json flags = ordered_json::array();
  for (std::size_t f = 0; f < a.red_flags.size(); ++f) {
    const auto& s = a.red_flags[f];
    ordered_json terms = ordered_json::array();
    const auto& def = platform.overlay->flags[f];
    for (std::size_t t = 0; t < s.terms.size(); ++t) {
      const auto& term = def.terms[t];
      terms.push_back({{"attribute", term.ref.str()},
                       {"op", to_string(term.op)},
                       {"level", term.ref.levels[term.level]},
                       {"truth", to_string(s.terms[t])}});
    }
    flags.push_back({{"id", s.id},
                     {"state", to_string(s.state)},
                     {"severity", to_string(s.severity)},
                     {"message", s.message},
                     {"terms", std::move(terms)}});
  }
  out["red_flags"] = std::move(flags);

  ordered_json risk;
  risk["score"] = a.risk.score ? ordered_json(*a.risk.score) : ordered_json(nullptr);
  risk["coverage"] = a.risk.coverage;
  risk["contributions"] = ordered_json::array();
  for (const auto& c : a.risk.contributions) {
    risk["contributions"].push_back(
        {{"attribute", c.ref}, {"level", c.level}, {"weight", c.weight}, {"severity", c.severity}});
  }
  out["risk"] = std::move(risk);

  ordered_json categories = ordered_json::array();
  for (const auto& c : a.valuation.categories) {
    categories.push_back({{"name", c.name}, {"raw", c.raw}, {"share", c.share}, {"confidence", c.confidence}});
  }
  out["valuation"] = {{"categories", std::move(categories)}};

  ordered_json questions = ordered_json::array();
  for (const auto& q : a.next_questions) {
    questions.push_back({{"kb_id", q.kb_id}, {"attr", q.attribute}, {"question", q.question}, {"score", q.score}});
  }
  out["next_questions"] = std::move(questions);
  return out;
}

ordered_json stats_to_json(const KbStats& s) {
  return {{"attributes", s.attribute_count},
          {"inputs", s.input_count},
          {"derived", s.derived_count},
          {"hierarchical_rules", s.hierarchical_rule_count},
          {"flat_tuples", s.flat_tuple_count},
          {"flat_tuples_log10", s.flat_tuple_log10},
          {"max_depth", s.max_depth}};
}

ordered_json schema_to_json(const CompiledGraph& g) {
  ordered_json inputs = ordered_json::array();
  for (auto i : g.inputs()) {
    const auto& attr = g.attribute(i);
    inputs.push_back(
        {{"name", attr.name}, {"scale", attr.scale.levels}, {"question", attr.question}, {"help", attr.help}});
  }
  ordered_json out;
  out["kb_id"] = g.kb_id();
  out["version"] = g.version();
  out["goal"] = g.attribute(g.goal()).name;
  out["inputs"] = std::move(inputs);
  return out;
}

ordered_json explanation_to_json(const ExplanationNode& node) {
  ordered_json out;
  out["attribute"] = node.attribute;
  out["level"] = node.level ? ordered_json(*node.level) : ordered_json(nullptr);
  out["derived"] = node.derived;
  out["fired_row"] = node.fired_row ? ordered_json(node.fired_row) : ordered_json(nullptr);
  out["fired_rule"] = node.fired_row ? ordered_json(node.fired_rule) : ordered_json(nullptr);
  out["children"] = ordered_json::array();
  for (const auto& c : node.children) out["children"].push_back(explanation_to_json(c));
  return out;
}

ordered_json evaluation_to_json(const CompiledGraph& g, const EvaluationResult& result) {
  ordered_json values = ordered_json::object();
  ordered_json fired = ordered_json::object();
  for (std::uint32_t i = 0; i < g.size(); ++i) {
    const auto& attr = g.attribute(i);
    values[attr.name] = result.values[i] ? ordered_json(attr.scale.levels[*result.values[i]]) : ordered_json(nullptr);
    if (const auto& t = result.trace[i]) {
      fired[attr.name] = {{"row", t->row + 1}, {"rule", attr.rows[t->row].text}};
    }
  }
  ordered_json out;
  out["kb_id"] = g.kb_id();
  out["goal"] = g.attribute(g.goal()).name;
  out["values"] = std::move(values);
  out["fired"] = std::move(fired);
  return out;
}

}  // namespace iaes
