// Platform state, persistent assessment sessions, assessment payloads and the
// JSON API routed by method and path.
#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "iaes/compiler.hpp"
#include "iaes/engine.hpp"
#include "iaes/kbdl.hpp"
#include "iaes/metalayer.hpp"

namespace iaes {

using ordered_json = nlohmann::ordered_json;

inline constexpr int kSessionSchemaVersion = 1;

/// Everything a bundle becomes once loaded. Immutable after construction and
/// shared by all sessions and requests.
struct Platform {
  std::vector<KnowledgeBase> kbs;
  std::vector<CompiledGraph> graphs;  // same order as kbs
  std::vector<KbStats> stats;
  std::optional<BoundOverlay> overlay;
  std::vector<std::string> warnings;  // non-fatal diagnostics, formatted

  [[nodiscard]] const CompiledGraph* graph(std::string_view kb_id) const;
};

/// Startup failure; `diagnostics` lists every problem found.
class BundleError : public std::runtime_error {
 public:
  explicit BundleError(std::vector<std::string> diagnostics);
  std::vector<std::string> diagnostics;
};

/// Validates, compiles and binds. Overlays are bound together as one.
Platform make_platform(std::vector<KnowledgeBase> kbs, const std::vector<OverlaySpec>& overlays);

/// `.kb` files are knowledge bases and `.overlay` files are overlays; other
/// extensions are rejected.
Platform load_bundle(const std::vector<std::filesystem::path>& files);

/// Every `.kb` and `.overlay` file directly inside `dir`, in name order.
Platform load_bundle_dir(const std::filesystem::path& dir);

/// Failure carrying an HTTP status: 400 bad request, 404 not found,
/// 409 conflict, 422 unprocessable.
class ApiError : public std::runtime_error {
 public:
  ApiError(int status, const std::string& message) : std::runtime_error(message), status(status) {}
  int status;
};

using Clock = std::chrono::system_clock;
using Timestamp = std::chrono::time_point<Clock, std::chrono::milliseconds>;

std::string format_rfc3339(Timestamp t);
/// Accepts `YYYY-MM-DDTHH:MM:SS[.fff...](Z|±HH:MM)`.
std::optional<Timestamp> parse_rfc3339(std::string_view text);

struct Session {
  std::string id;
  std::vector<std::string> kb_ids;
  std::map<std::string, Assignment, std::less<>> answers;  // kb id -> answers
  Timestamp created_at;
  Timestamp updated_at;
  std::uint64_t revision = 0;  // committed submits; not part of the export

  bool operator==(const Session&) const = default;
};

/// Export document with keys in the documented order.
ordered_json session_to_json(const Session& session);

/// Parses and validates an export document against `platform`.
/// Throws ApiError(422) on any problem.
Session session_from_json(const nlohmann::json& doc, const Platform& platform);

/// kb id -> (attribute -> level), as sent to PATCH .../answers.
using AnswerPatch = std::map<std::string, Assignment, std::less<>>;

AnswerPatch answer_patch_from_json(const nlohmann::json& body);

/// Sessions in memory, optionally mirrored to one JSON file per session.
/// Each session has its own lock; distinct sessions never contend.
class SessionStore {
 public:
  SessionStore(std::shared_ptr<const Platform> platform, std::optional<std::filesystem::path> data_dir = {});

  /// Reads every session file in the data directory. Files that no longer
  /// validate are skipped and reported.
  std::vector<std::string> load_persisted();

  Session create(const std::vector<std::string>& kb_ids);
  /// All-or-nothing merge; returns the committed session.
  Session submit(std::string_view id, const AnswerPatch& patch);
  /// A consistent copy of the latest committed state.
  Session snapshot(std::string_view id) const;
  /// Adds an exported session. Throws ApiError(409) if the id exists.
  Session import(const nlohmann::json& doc);

  [[nodiscard]] std::vector<std::string> ids() const;
  [[nodiscard]] const Platform& platform() const { return *platform_; }

 private:
  struct Entry {
    mutable std::mutex mutex;
    Session session;
  };

  std::shared_ptr<Entry> find(std::string_view id) const;
  void persist(const Session& session) const;
  void validate_kbs(const std::vector<std::string>& kb_ids) const;
  std::string fresh_id();

  std::shared_ptr<const Platform> platform_;
  std::optional<std::filesystem::path> data_dir_;
  mutable std::shared_mutex map_mutex_;
  std::map<std::string, std::shared_ptr<Entry>, std::less<>> sessions_;
  std::mutex rng_mutex_;
  std::mt19937_64 rng_;
};

struct QuestionRef {
  std::string kb_id;
  std::string attribute;
  std::string question;
  std::size_t score = 0;
};

/// Questions across the session's KBs, highest score first; ties keep the
/// session's KB order, then declaration order.
std::vector<QuestionRef> merged_questions(const Platform& platform, const Session& session,
                                          const ResultSet& results, std::size_t k);

inline constexpr std::size_t kDefaultQuestionCount = 5;

/// Everything derived from one snapshot of a session's answers.
struct Assessment {
  Session session;
  ResultSet results;
  std::vector<RedFlagStatus> red_flags;
  RiskReport risk;
  ValuationReport valuation;
  std::vector<QuestionRef> next_questions;
};

Assessment assess(const Platform& platform, const Session& session, std::size_t k = kDefaultQuestionCount);

ordered_json assessment_to_json(const Platform& platform, const Assessment& assessment);

ordered_json stats_to_json(const KbStats& stats);
ordered_json schema_to_json(const CompiledGraph& graph);
ordered_json explanation_to_json(const ExplanationNode& node);
ordered_json evaluation_to_json(const CompiledGraph& graph, const EvaluationResult& result);

struct ApiResponse {
  int status = 200;
  std::string body;  // JSON text
};

/// Routes `/api/...` requests. Thread-safe; holds no per-request state.
class Api {
 public:
  explicit Api(SessionStore& store) : store_(store) {}

  ApiResponse handle(std::string_view method, std::string_view path,
                     const std::map<std::string, std::string>& query, std::string_view body) const;

 private:
  ordered_json route(std::string_view method, const std::vector<std::string>& segments,
                     const std::map<std::string, std::string>& query, std::string_view body, int& status) const;

  SessionStore& store_;
};

/// HTTP front end for an Api, served from a background thread.
class HttpServer {
 public:
  explicit HttpServer(const Api& api);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds and starts listening; port 0 picks a free port. Returns the bound
  /// port, or -1 when the address cannot be bound.
  int start(const std::string& host, int port);
  /// Blocks until stop() is called from another thread.
  void wait();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace iaes
