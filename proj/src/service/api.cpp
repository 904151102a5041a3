#include <algorithm>
#include <charconv>

#include "iaes/service.hpp"

namespace iaes {

using nlohmann::json;

namespace {

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= path.size()) {
    const auto slash = path.find('/', start);
    const auto end = slash == std::string_view::npos ? path.size() : slash;
    if (end > start) out.emplace_back(path.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

json parse_body(std::string_view body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw ApiError(400, std::string("invalid JSON body: ") + e.what());
  }
}

std::size_t parse_count(const std::map<std::string, std::string>& query, const std::string& key,
                        std::size_t fallback) {
  const auto it = query.find(key);
  if (it == query.end()) return fallback;
  std::size_t v = 0;
  const auto& s = it->second;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || end != s.data() + s.size() || v > 10000) {
    throw ApiError(400, "query parameter " + key + " must be an integer between 0 and 10000");
  }
  return v;
}

const std::string& required(const std::map<std::string, std::string>& query, const std::string& key) {
  const auto it = query.find(key);
  if (it == query.end() || it->second.empty()) throw ApiError(400, "missing query parameter " + key);
  return it->second;
}

struct MethodNotAllowed {};

}  // namespace

ApiResponse Api::handle(std::string_view method, std::string_view path,
                        const std::map<std::string, std::string>& query, std::string_view body) const {
  ApiResponse response;
  try {
    int status = 200;
    const auto segments = split_path(path);
    const ordered_json out = route(method, segments, query, body, status);
    response.status = status;
    response.body = out.dump();
  } catch (const ApiError& e) {
    response.status = e.status;
    response.body = ordered_json{{"error", e.what()}}.dump();
  } catch (const MethodNotAllowed&) {
    response.status = 405;
    response.body = ordered_json{{"error", std::string(method) + " is not allowed on " + std::string(path)}}.dump();
  } catch (const std::exception& e) {
    response.status = 500;
    response.body = ordered_json{{"error", e.what()}}.dump();
  }
  return response;
}

ordered_json Api::route(std::string_view method, const std::vector<std::string>& seg,
                        const std::map<std::string, std::string>& query, std::string_view body, int& status) const {
  const Platform& platform = store_.platform();
  const auto n = seg.size();
  auto expect = [&](std::string_view m) {
    if (method != m) throw MethodNotAllowed{};
  };
  const auto not_found = [&] {
    std::string p;
    for (const auto& s : seg) p += "/" + s;
    return ApiError(404, "no route for " + std::string(method) + " " + (p.empty() ? "/" : p));
  };

  if (n < 2 || seg[0] != "api") throw not_found();

  if (seg[1] == "kbs") {
    if (n == 2) {
      expect("GET");
      ordered_json list = ordered_json::array();
      for (std::size_t i = 0; i < platform.graphs.size(); ++i) {
        const auto& g = platform.graphs[i];
        list.push_back({{"id", g.kb_id()}, {"version", g.version()}, {"stats", stats_to_json(platform.stats[i])}});
      }
      return list;
    }
    if (n == 4 && seg[3] == "schema") {
      expect("GET");
      const CompiledGraph* g = platform.graph(seg[2]);
      if (g == nullptr) throw ApiError(404, "unknown knowledge base '" + seg[2] + "'");
      return schema_to_json(*g);
    }
    throw not_found();
  }

  if (seg[1] != "sessions") throw not_found();

  if (n == 2) {
    expect("POST");
    const json req = parse_body(body);
    if (!req.is_object() || !req.contains("kb_ids") || !req["kb_ids"].is_array()) {
      throw ApiError(400, "expected {\"kb_ids\": [...]}");
    }
    std::vector<std::string> kb_ids;
    for (const auto& kb : req["kb_ids"]) {
      if (!kb.is_string()) throw ApiError(400, "kb_ids must contain strings");
      kb_ids.push_back(kb.get<std::string>());
    }
    status = 201;
    return session_to_json(store_.create(kb_ids));
  }
  if (n == 3 && seg[2] == "import") {
    expect("POST");
    status = 201;
    return session_to_json(store_.import(parse_body(body)));
  }

  const std::string& id = seg[2];
  if (n == 3) {
    expect("GET");
    return session_to_json(store_.snapshot(id));
  }
  if (n != 4) throw not_found();
  const std::string& action = seg[3];

  if (action == "answers") {
    expect("PATCH");
    const AnswerPatch patch = answer_patch_from_json(parse_body(body));
    return session_to_json(store_.submit(id, patch));
  }
  if (action == "assessment") {
    expect("GET");
    const std::size_t k = parse_count(query, "k", kDefaultQuestionCount);
    return assessment_to_json(platform, assess(platform, store_.snapshot(id), k));
  }
  if (action == "questions") {
    expect("GET");
    const std::size_t k = parse_count(query, "k", kDefaultQuestionCount);
    const Assessment a = assess(platform, store_.snapshot(id), k);
    ordered_json list = ordered_json::array();
    for (const auto& q : a.next_questions) {
      const CompiledGraph& g = *platform.graph(q.kb_id);
      const auto& attr = g.attribute(*g.find(q.attribute));
      list.push_back({{"kb_id", q.kb_id},
                      {"attr", q.attribute},
                      {"question", q.question},
                      {"scale", attr.scale.levels},
                      {"help", attr.help}});
    }
    return list;
  }
  if (action == "explain") {
    expect("GET");
    const std::string& kb = required(query, "kb");
    const std::string& attr = required(query, "attr");
    const Session s = store_.snapshot(id);
    if (std::find(s.kb_ids.begin(), s.kb_ids.end(), kb) == s.kb_ids.end()) {
      throw ApiError(404, "knowledge base '" + kb + "' is not part of session '" + id + "'");
    }
    const CompiledGraph& g = *platform.graph(kb);
    if (!g.find(attr)) throw ApiError(404, "unknown attribute '" + attr + "' in knowledge base '" + kb + "'");
    const Assessment a = assess(platform, s, 0);
    return explanation_to_json(explain(a.results.at(kb), g, attr));
  }
  if (action == "export") {
    expect("GET");
    return session_to_json(store_.snapshot(id));
  }
  if (action == "prefill") {
    // Extension point for externally suggested answers; none are produced.
    expect("GET");
    store_.snapshot(id);
    return {{"suggestions", ordered_json::array()}};
  }
  throw not_found();
}

}  // namespace iaes
