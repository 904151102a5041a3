#include <doctest.h>

#include <httplib.h>

#include <filesystem>
#include <fstream>

#include "iaes/service.hpp"
#include "storm.hpp"
#include "support.hpp"
#include "tempdir.hpp"

using namespace iaes;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::shared_ptr<const Platform> demo_platform() {
  static const auto p = std::make_shared<const Platform>(load_bundle_dir(test::source_path("bundles/demo")));
  return p;
}

using test::TempDir;

json call(const Api& api, std::string_view method, std::string_view path, int expected_status,
          std::string_view body = "", const std::map<std::string, std::string>& query = {}) {
  const ApiResponse r = api.handle(method, path, query, body);
  INFO(method << " " << path << " -> " << r.body);
  CHECK(r.status == expected_status);
  return json::parse(r.body);
}

}  // namespace

TEST_CASE("load_bundle") {
  SUBCASE("demo bundle") {
    const auto& p = *demo_platform();
    REQUIRE(p.graphs.size() == 1);
    CHECK(p.graphs[0].kb_id() == "demo");
    REQUIRE(p.overlay);
    CHECK(p.overlay->flags.size() == 2);
    CHECK(p.stats[0].hierarchical_rule_count == 4);
    CHECK(p.warnings.empty());
  }
  SUBCASE("startup is deterministic") {
    const Platform a = load_bundle_dir(test::source_path("bundles/demo"));
    const Platform b = load_bundle_dir(test::source_path("bundles/demo"));
    CHECK(a.kbs == b.kbs);
    CHECK(a.graphs == b.graphs);
    CHECK(a.overlay == b.overlay);
  }
  SUBCASE("empty bundle") {
    CHECK_THROWS_WITH_AS(load_bundle({}), "no knowledge bases loaded", BundleError);
    TempDir dir;
    CHECK_THROWS_WITH_AS(load_bundle_dir(dir.path), "no knowledge bases loaded", BundleError);
  }
  SUBCASE("a cyclic KB aborts startup with the cycle diagnostic") {
    TempDir dir;
    const auto path = dir.write("cyc.kb", R"(kb "cyc" version 1
scale s = x | y
attribute a : s derived
  rules (b) { default -> x }
attribute b : s derived
  rules (a) { default -> y }
goal a
)");
    try {
      load_bundle({path});
      FAIL("expected BundleError");
    } catch (const BundleError& e) {
      REQUIRE(e.diagnostics.size() == 1);
      CHECK(e.diagnostics[0].find("cyc.kb") != std::string::npos);
      CHECK(e.diagnostics[0].find("dependency cycle: a -> b -> a") != std::string::npos);
    }
  }
  SUBCASE("every problem is listed") {
    TempDir dir;
    const auto bad_kb = dir.write("bad.kb", "kb \"bad\" version 1\nscale s = x\n");
    const auto bad_ext = dir.write("notes.txt", "");
    const auto missing = dir.path / "missing.kb";
    try {
      load_bundle({bad_kb, bad_ext, missing});
      FAIL("expected BundleError");
    } catch (const BundleError& e) {
      CHECK(e.diagnostics.size() >= 3);
      CHECK(e.diagnostics.front().rfind(bad_kb.string() + ":2:", 0) == 0);
      CHECK(std::string(e.what()).find("cannot read file") != std::string::npos);
      CHECK(std::string(e.what()).find("unrecognized file type") != std::string::npos);
    }
  }
  SUBCASE("overlay binding errors and clashes between overlay files") {
    TempDir dir;
    const auto kb = dir.write("demo.kb", test::demo_source());
    const auto o1 = dir.write("a.overlay", "overlay \"a\"\nredflag \"x\" severity info when demo.policy = low message \"m\"\n");
    const auto o2 = dir.write("b.overlay", "overlay \"b\"\nredflag \"x\" severity info when demo.policy = high message \"m\"\n");
    const auto o3 = dir.write("c.overlay", "overlay \"c\"\nrisk demo.nope weight 1.0 { low -> 1.0 }\n");
    CHECK_THROWS_WITH_AS(load_bundle({kb, o1, o2}), doctest::Contains("duplicate red flag id \"x\""), BundleError);
    CHECK_THROWS_WITH_AS(load_bundle({kb, o3}), doctest::Contains("unknown attribute demo.nope"), BundleError);
    CHECK(load_bundle({kb, o1}).overlay->flags.size() == 1);
  }
  SUBCASE("duplicate KB ids") {
    TempDir dir;
    const auto a = dir.write("a.kb", test::demo_source());
    const auto b = dir.write("b.kb", test::demo_source());
    CHECK_THROWS_WITH_AS(load_bundle({a, b}), doctest::Contains("duplicate knowledge base id 'demo'"), BundleError);
  }
}

TEST_CASE("RFC 3339 timestamps") {
  using namespace std::chrono;
  const Timestamp t = Timestamp{sys_days{year{2026} / 10 / 15}.time_since_epoch() + hours{9} + minutes{5} +
                                seconds{7} + milliseconds{42}};
  CHECK(format_rfc3339(t) == "2026-10-15T09:05:07.042Z");
  CHECK(parse_rfc3339("2026-10-15T09:05:07.042Z") == t);
  CHECK(parse_rfc3339("2026-10-15T11:05:07.042+02:00") == t);
  CHECK(parse_rfc3339("2026-10-15T09:05:07.0421999Z") == t);
  CHECK(parse_rfc3339("2026-10-15T09:05:07Z") == t - milliseconds{42});
  for (const char* bad : {"", "2026-10-15", "2026-13-01T00:00:00Z", "2026-02-30T00:00:00Z", "2026-10-15T09:05:07",
                          "2026-10-15T09:05:07.Z", "2026-10-15T24:00:00Z", "2026-10-15T09:05:07Zjunk"}) {
    CHECK_MESSAGE(!parse_rfc3339(bad), bad);
  }
}

TEST_CASE("sessions") {
  SessionStore store(demo_platform());

  SUBCASE("create gives empty answers") {
    const Session s = store.create({"demo"});
    CHECK(s.kb_ids == std::vector<std::string>{"demo"});
    CHECK(s.answers.at("demo").empty());
    CHECK(s.updated_at == s.created_at);
    CHECK(s.id.size() == 32);
    CHECK(store.create({"demo"}).id != s.id);
  }
  SUBCASE("create rejects unknown or repeated KBs") {
    CHECK_THROWS_AS(store.create({}), ApiError);
    CHECK_THROWS_AS(store.create({"nope"}), ApiError);
    CHECK_THROWS_AS(store.create({"demo", "demo"}), ApiError);
  }
  SUBCASE("submit then assess") {
    const Session s = store.create({"demo"});
    const Session after = store.submit(s.id, {{"demo", {{"policy", "low"}}}});
    CHECK(after.revision == 1);
    CHECK(after.updated_at >= after.created_at);
    const Assessment a = assess(*demo_platform(), store.snapshot(s.id));
    const json payload = json::parse(assessment_to_json(*demo_platform(), a).dump());
    CHECK(payload["values"]["demo"]["protection"] == "low");
    CHECK(payload["unknowns"]["demo"] == json::array({"coverage"}));
    CHECK(payload["next_questions"] == json::array());
    // protection low (weight 2, severity 1) and policy low (weight 1, severity 1)
    CHECK(payload["risk"]["score"] == 100.0);
    CHECK(payload["risk"]["coverage"] == 1.0);
    CHECK(payload["red_flags"][0]["id"] == "exposed");
    CHECK(payload["red_flags"][0]["state"] == "triggered");
    CHECK(payload["red_flags"][1]["state"] == "potential");
    CHECK(payload["red_flags"][1]["terms"][1]["truth"] == "unknown");
    // trade secrets: 1.0 * 0.5 (protection low); data: 1.0
    CHECK(payload["valuation"]["categories"][0]["raw"] == 0.5);
    CHECK(payload["valuation"]["categories"][0]["share"].get<double>() == doctest::Approx(1.0 / 3.0));
    CHECK(payload["valuation"]["categories"][1]["share"].get<double>() == doctest::Approx(2.0 / 3.0));
  }
  SUBCASE("an illegal level leaves the session untouched") {
    const Session s = store.create({"demo"});
    store.submit(s.id, {{"demo", {{"coverage", "high"}}}});
    const Session before = store.snapshot(s.id);
    try {
      store.submit(s.id, {{"demo", {{"policy", "low"}, {"coverage", "purple"}}}});
      FAIL("expected ApiError");
    } catch (const ApiError& e) {
      CHECK(e.status == 422);
      CHECK(std::string(e.what()).find("purple not in scale l3") != std::string::npos);
      CHECK(std::string(e.what()).find("coverage") != std::string::npos);
    }
    CHECK(store.snapshot(s.id) == before);
  }
  SUBCASE("other submit errors") {
    const Session s = store.create({"demo"});
    auto status_of = [&](const std::function<void()>& f) {
      try {
        f();
      } catch (const ApiError& e) {
        return e.status;
      }
      return 0;
    };
    CHECK(status_of([&] { store.submit("missing", {}); }) == 404);
    CHECK(status_of([&] { store.submit(s.id, {{"other", {{"a", "b"}}}}); }) == 422);
    CHECK(status_of([&] { store.submit(s.id, {{"demo", {{"protection", "low"}}}}); }) == 422);
    CHECK(status_of([&] { store.submit(s.id, {{"demo", {{"budget", "low"}}}}); }) == 422);
  }
  SUBCASE("export shape") {
    const Session s = store.create({"demo"});
    store.submit(s.id, {{"demo", {{"policy", "high"}, {"coverage", "low"}}}});
    const Session now = store.snapshot(s.id);
    const std::string text = session_to_json(now).dump();
    CHECK(text == "{\"schema_version\":1,\"id\":\"" + s.id +
                      "\",\"kb_ids\":[\"demo\"],\"answers\":{\"demo\":{\"coverage\":\"low\",\"policy\":\"high\"}},"
                      "\"created_at\":\"" + format_rfc3339(now.created_at) + "\",\"updated_at\":\"" +
                      format_rfc3339(now.updated_at) + "\"}");
  }
  SUBCASE("export then import reproduces the assessment") {
    const Session s = store.create({"demo"});
    store.submit(s.id, {{"demo", {{"policy", "medium"}}}});
    const auto exported = json::parse(session_to_json(store.snapshot(s.id)).dump());
    SessionStore other(demo_platform());
    const Session imported = other.import(exported);
    CHECK(json::parse(session_to_json(imported).dump()) == exported);
    CHECK(assessment_to_json(*demo_platform(), assess(*demo_platform(), imported)) ==
          assessment_to_json(*demo_platform(), assess(*demo_platform(), store.snapshot(s.id))));
    CHECK_THROWS_AS(other.import(exported), ApiError);
  }
  SUBCASE("import validation") {
    const auto good = json::parse(session_to_json(store.create({"demo"})).dump());
    auto rejects = [&](const std::function<void(json&)>& mutate) {
      json doc = good;
      mutate(doc);
      SessionStore fresh(demo_platform());
      CHECK_THROWS_AS(fresh.import(doc), ApiError);
    };
    rejects([](json& d) { d["schema_version"] = 2; });
    rejects([](json& d) { d["id"] = "../etc/passwd"; });
    rejects([](json& d) { d["kb_ids"] = json::array({"nope"}); });
    rejects([](json& d) { d["answers"]["demo"]["policy"] = "purple"; });
    rejects([](json& d) { d["answers"]["other"] = json::object(); });
    rejects([](json& d) { d["created_at"] = "yesterday"; });
    rejects([](json& d) { d["created_at"] = "2999-01-01T00:00:00Z"; });
    rejects([](json& d) { d["extra"] = 1; });
    rejects([](json& d) { d.erase("updated_at"); });
  }
}

TEST_CASE("session persistence") {
  TempDir dir;
  std::string id;
  json exported;
  {
    SessionStore store(demo_platform(), dir.path);
    id = store.create({"demo"}).id;
    store.submit(id, {{"demo", {{"policy", "high"}}}});
    exported = json::parse(session_to_json(store.snapshot(id)).dump());
  }
  CHECK(fs::exists(dir.path / (id + ".json")));
  CHECK_FALSE(fs::exists(dir.path / (id + ".json.tmp")));
  dir.write("broken.json", "{not json");

  SessionStore reloaded(demo_platform(), dir.path);
  const auto problems = reloaded.load_persisted();
  REQUIRE(problems.size() == 1);
  CHECK(problems[0].find("broken.json") != std::string::npos);
  CHECK(reloaded.ids() == std::vector<std::string>{id});
  CHECK(json::parse(session_to_json(reloaded.snapshot(id)).dump()) == exported);
}

TEST_CASE("API routes") {
  SessionStore store(demo_platform());
  const Api api(store);

  const json kbs = call(api, "GET", "/api/kbs", 200);
  REQUIRE(kbs.size() == 1);
  CHECK(kbs[0]["id"] == "demo");
  CHECK(kbs[0]["version"] == 1);
  CHECK(kbs[0]["stats"]["hierarchical_rules"] == 4);
  CHECK(kbs[0]["stats"]["flat_tuples"] == 9);

  const json schema = call(api, "GET", "/api/kbs/demo/schema", 200);
  REQUIRE(schema["inputs"].size() == 2);
  CHECK(schema["inputs"][0]["name"] == "policy");
  CHECK(schema["inputs"][0]["scale"] == json::array({"low", "medium", "high"}));
  CHECK(schema["inputs"][0]["question"] == "How strong is the documented IP policy?");
  CHECK(schema["inputs"][0]["help"].size() == 2);
  call(api, "GET", "/api/kbs/nope/schema", 404);

  const json created = call(api, "POST", "/api/sessions", 201, R"({"kb_ids":["demo"]})");
  const std::string base = "/api/sessions/" + created["id"].get<std::string>();
  CHECK(created["answers"] == json{{"demo", json::object()}});

  const json questions = call(api, "GET", base + "/questions", 200, "", {{"k", "1"}});
  REQUIRE(questions.size() == 1);
  CHECK(questions[0] == json{{"kb_id", "demo"},
                             {"attr", "policy"},
                             {"question", "How strong is the documented IP policy?"},
                             {"scale", {"low", "medium", "high"}},
                             {"help", schema["inputs"][0]["help"]}});
  CHECK(call(api, "GET", base + "/questions", 200).size() == 2);

  const json patched = call(api, "PATCH", base + "/answers", 200, R"({"demo":{"policy":"high"}})");
  CHECK(patched["answers"]["demo"]["policy"] == "high");
  const json rejected = call(api, "PATCH", base + "/answers", 422, R"({"demo":{"policy":"purple"}})");
  CHECK(rejected["error"].get<std::string>().find("purple not in scale l3") != std::string::npos);

  const json assessment = call(api, "GET", base + "/assessment", 200);
  for (const char* key : {"values", "unknowns", "red_flags", "risk", "valuation", "next_questions"}) {
    CHECK_MESSAGE(assessment.contains(key), key);
  }
  CHECK(assessment["next_questions"][0]["attr"] == "coverage");

  const json tree = call(api, "GET", base + "/explain", 200, "", {{"kb", "demo"}, {"attr", "protection"}});
  CHECK(tree["attribute"] == "protection");
  CHECK(tree["level"].is_null());
  CHECK(tree["fired_row"].is_null());
  CHECK(tree["children"][0]["level"] == "high");
  call(api, "GET", base + "/explain", 400, "", {{"kb", "demo"}});
  call(api, "GET", base + "/explain", 404, "", {{"kb", "other"}, {"attr", "x"}});
  call(api, "GET", base + "/explain", 404, "", {{"kb", "demo"}, {"attr", "x"}});

  call(api, "PATCH", base + "/answers", 200, R"({"demo":{"coverage":"high"}})");
  const json fired = call(api, "GET", base + "/explain", 200, "", {{"kb", "demo"}, {"attr", "protection"}});
  CHECK(fired["level"] == "high");
  CHECK(fired["fired_row"] == 3);
  CHECK(fired["fired_rule"] == "(high, high) -> high");

  const json exported = call(api, "GET", base + "/export", 200);
  CHECK(exported.begin().key() == "answers");  // json sorts keys; order is checked on the raw text below
  const ApiResponse raw = api.handle("GET", base + "/export", {}, "");
  CHECK(raw.body.rfind("{\"schema_version\":1,\"id\":", 0) == 0);
  CHECK(call(api, "GET", base, 200) == exported);
  CHECK(call(api, "GET", base + "/prefill", 200) == json{{"suggestions", json::array()}});

  SUBCASE("import over HTTP") {
    SessionStore other_store(demo_platform());
    const Api other(other_store);
    call(other, "POST", "/api/sessions/import", 201, raw.body);
    CHECK(call(other, "GET", base + "/assessment", 200)["values"] == call(api, "GET", base + "/assessment", 200)["values"]);
    call(other, "POST", "/api/sessions/import", 409, raw.body);
  }
  SUBCASE("errors") {
    call(api, "GET", "/api/sessions/missing/assessment", 404);
    call(api, "GET", "/api/nothing", 404);
    call(api, "GET", "/", 404);
    call(api, "DELETE", "/api/kbs", 405);
    call(api, "GET", "/api/sessions", 405);
    call(api, "POST", "/api/sessions", 400, "{oops");
    call(api, "POST", "/api/sessions", 400, R"({"kbs":["demo"]})");
    call(api, "POST", "/api/sessions", 422, R"({"kb_ids":["nope"]})");
    call(api, "PATCH", base + "/answers", 400, R"({"demo":["policy"]})");
    call(api, "PATCH", base + "/answers", 400, R"({"demo":{"policy":3}})");
    call(api, "GET", base + "/questions", 400, "", {{"k", "-1"}});
    call(api, "GET", base + "/questions", 400, "", {{"k", "two"}});
  }
}

TEST_CASE("HTTP server") {
  SessionStore store(demo_platform());
  const Api api(store);
  HttpServer server(api);
  const int port = server.start("127.0.0.1", 0);
  REQUIRE(port > 0);

  httplib::Client client("127.0.0.1", port);
  auto kbs = client.Get("/api/kbs");
  REQUIRE(kbs);
  CHECK(kbs->status == 200);
  CHECK(kbs->get_header_value("Content-Type") == "application/json");

  auto created = client.Post("/api/sessions", R"({"kb_ids":["demo"]})", "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const std::string base = "/api/sessions/" + json::parse(created->body)["id"].get<std::string>();

  auto patched = client.Patch(base + "/answers", R"({"demo":{"policy":"low"}})", "application/json");
  REQUIRE(patched);
  CHECK(patched->status == 200);

  auto questions = client.Get(base + "/questions?k=3");
  REQUIRE(questions);
  CHECK(json::parse(questions->body) == json::array());

  auto tree = client.Get(base + "/explain?kb=demo&attr=protection");
  REQUIRE(tree);
  CHECK(json::parse(tree->body)["fired_rule"] == "(low, *) -> low");

  auto missing = client.Get("/api/sessions/none/export");
  REQUIRE(missing);
  CHECK(missing->status == 404);

  server.stop();
}

TEST_CASE("concurrent submit/assessment storm") {
  const test::StormReport r = test::run_storm(demo_platform(), 8, 8, 1000, 7);
  CHECK(r.errors == 0);
  CHECK(r.submits == 500);
  CHECK(r.reads == 500);
  CHECK(r.inconsistent_payloads == 0);
  CHECK(r.unknown_snapshots == 0);
  CHECK(r.revisions_contiguous);
  CHECK(r.final_state_serial);
}
