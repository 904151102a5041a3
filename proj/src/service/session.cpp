#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "iaes/service.hpp"

namespace iaes {

using nlohmann::json;

std::string format_rfc3339(Timestamp t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss hms{t - day};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()), static_cast<int>(hms.subseconds().count()));
  return buf;
}

std::optional<Timestamp> parse_rfc3339(std::string_view s) {
  using namespace std::chrono;
  std::size_t pos = 0;
  auto digits = [&](std::size_t n) -> std::optional<int> {
    if (pos + n > s.size()) return std::nullopt;
    int v = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const char c = s[pos + i];
      if (c < '0' || c > '9') return std::nullopt;
      v = v * 10 + (c - '0');
    }
    pos += n;
    return v;
  };
  auto literal = [&](char c) {
    if (pos < s.size() && (s[pos] == c || (c == 'T' && s[pos] == 't'))) {
      ++pos;
      return true;
    }
    return false;
  };

  const auto y = digits(4);
  if (!y || !literal('-')) return std::nullopt;
  const auto mo = digits(2);
  if (!mo || !literal('-')) return std::nullopt;
  const auto d = digits(2);
  if (!d || !literal('T')) return std::nullopt;
  const auto h = digits(2);
  if (!h || !literal(':')) return std::nullopt;
  const auto mi = digits(2);
  if (!mi || !literal(':')) return std::nullopt;
  const auto sec = digits(2);
  if (!sec) return std::nullopt;

  int millis = 0;
  if (literal('.')) {
    int n = 0;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      if (n < 3) millis = millis * 10 + (s[pos] - '0');
      ++n;
      ++pos;
    }
    if (n == 0) return std::nullopt;
    for (; n < 3; ++n) millis *= 10;
  }

  minutes offset{0};
  if (pos < s.size() && (s[pos] == 'Z' || s[pos] == 'z')) {
    ++pos;
  } else if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
    const int sign = s[pos] == '-' ? -1 : 1;
    ++pos;
    const auto oh = digits(2);
    if (!oh || !literal(':')) return std::nullopt;
    const auto om = digits(2);
    if (!om || *oh > 23 || *om > 59) return std::nullopt;
    offset = minutes{sign * (*oh * 60 + *om)};
  } else {
    return std::nullopt;
  }
  if (pos != s.size()) return std::nullopt;

  const year_month_day ymd{year{*y}, month{static_cast<unsigned>(*mo)}, day{static_cast<unsigned>(*d)}};
  if (!ymd.ok() || *h > 23 || *mi > 59 || *sec > 60) return std::nullopt;
  return Timestamp{sys_days{ymd}.time_since_epoch() + hours{*h} + minutes{*mi} + seconds{*sec} +
                   milliseconds{millis} - offset};
}

namespace {

Timestamp now_ms() { return std::chrono::floor<std::chrono::milliseconds>(Clock::now()); }

bool valid_session_id(std::string_view id) {
  if (id.empty() || id.size() > 128) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
  });
}

void check_answers(const Platform& platform, std::string_view kb, const Assignment& answers) {
  const CompiledGraph* g = platform.graph(kb);
  if (g == nullptr) throw ApiError(422, "unknown knowledge base '" + std::string(kb) + "'");
  try {
    bind_answers(*g, answers);
  } catch (const EvaluationError& e) {
    throw ApiError(422, e.what());
  }
}

}  // namespace

ordered_json session_to_json(const Session& session) {
  ordered_json doc;
  doc["schema_version"] = kSessionSchemaVersion;
  doc["id"] = session.id;
  doc["kb_ids"] = session.kb_ids;
  ordered_json answers = ordered_json::object();
  for (const auto& kb : session.kb_ids) {
    ordered_json a = ordered_json::object();
    if (auto it = session.answers.find(kb); it != session.answers.end()) {
      for (const auto& [attr, level] : it->second) a[attr] = level;
    }
    answers[kb] = std::move(a);
  }
  doc["answers"] = std::move(answers);
  doc["created_at"] = format_rfc3339(session.created_at);
  doc["updated_at"] = format_rfc3339(session.updated_at);
  return doc;
}

Session session_from_json(const json& doc, const Platform& platform) {
  auto bad = [](const std::string& message) { return ApiError(422, "invalid session document: " + message); };
  if (!doc.is_object()) throw bad("expected an object");
  static const std::set<std::string> known{"schema_version", "id", "kb_ids", "answers", "created_at", "updated_at"};
  for (const auto& [key, value] : doc.items()) {
    if (!known.count(key)) throw bad("unexpected key '" + key + "'");
  }
  for (const auto& key : known) {
    if (!doc.contains(key)) throw bad("missing key '" + key + "'");
  }
  if (!doc["schema_version"].is_number_integer()) throw bad("schema_version must be an integer");
  if (doc["schema_version"].get<long long>() != kSessionSchemaVersion) {
    throw bad("unsupported schema_version " + doc["schema_version"].dump());
  }

  Session s;
  if (!doc["id"].is_string() || !valid_session_id(doc["id"].get<std::string>())) {
    throw bad("id must be 1-128 characters from [A-Za-z0-9_-]");
  }
  s.id = doc["id"].get<std::string>();

  if (!doc["kb_ids"].is_array() || doc["kb_ids"].empty()) throw bad("kb_ids must be a non-empty array");
  for (const auto& kb : doc["kb_ids"]) {
    if (!kb.is_string()) throw bad("kb_ids must contain strings");
    s.kb_ids.push_back(kb.get<std::string>());
  }
  std::set<std::string> unique(s.kb_ids.begin(), s.kb_ids.end());
  if (unique.size() != s.kb_ids.size()) throw bad("kb_ids contains duplicates");
  for (const auto& kb : s.kb_ids) {
    if (platform.graph(kb) == nullptr) throw ApiError(422, "unknown knowledge base '" + kb + "'");
    s.answers[kb];
  }

  if (!doc["answers"].is_object()) throw bad("answers must be an object");
  for (const auto& [kb, attrs] : doc["answers"].items()) {
    if (!unique.count(kb)) throw bad("answers for '" + kb + "', which is not in kb_ids");
    if (!attrs.is_object()) throw bad("answers of '" + kb + "' must be an object");
    Assignment a;
    for (const auto& [attr, level] : attrs.items()) {
      if (!level.is_string()) throw bad("answer " + kb + "." + attr + " must be a level name");
      a[attr] = level.get<std::string>();
    }
    check_answers(platform, kb, a);
    s.answers[kb] = std::move(a);
  }

  for (const char* key : {"created_at", "updated_at"}) {
    const auto& v = doc[key];
    const auto t = v.is_string() ? parse_rfc3339(v.get<std::string>()) : std::nullopt;
    if (!t) throw bad(std::string(key) + " must be an RFC 3339 timestamp");
    (std::string_view(key) == "created_at" ? s.created_at : s.updated_at) = *t;
  }
  if (s.updated_at < s.created_at) throw bad("updated_at precedes created_at");
  return s;
}

AnswerPatch answer_patch_from_json(const json& body) {
  const std::string shape = "answers must look like {\"<kb_id>\": {\"<attribute>\": \"<level>\"}}";
  if (!body.is_object()) throw ApiError(400, shape);
  AnswerPatch patch;
  for (const auto& [kb, attrs] : body.items()) {
    if (!attrs.is_object()) throw ApiError(400, shape);
    auto& a = patch[kb];
    for (const auto& [attr, level] : attrs.items()) {
      if (!level.is_string()) throw ApiError(400, shape);
      a[attr] = level.get<std::string>();
    }
  }
  return patch;
}

SessionStore::SessionStore(std::shared_ptr<const Platform> platform, std::optional<std::filesystem::path> data_dir)
    : platform_(std::move(platform)), data_dir_(std::move(data_dir)), rng_(std::random_device{}()) {
  if (data_dir_) std::filesystem::create_directories(*data_dir_);
}

std::vector<std::string> SessionStore::load_persisted() {
  std::vector<std::string> problems;
  if (!data_dir_) return problems;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(*data_dir_)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::unique_lock lock(map_mutex_);
  for (const auto& path : files) {
    try {
      std::ifstream in(path, std::ios::binary);
      Session s = session_from_json(json::parse(in), *platform_);
      if (path.stem().string() != s.id) throw std::runtime_error("file name does not match id '" + s.id + "'");
      auto entry = std::make_shared<Entry>();
      entry->session = std::move(s);
      sessions_[entry->session.id] = std::move(entry);
    } catch (const std::exception& e) {
      problems.push_back(path.string() + ": " + e.what());
    }
  }
  return problems;
}

void SessionStore::validate_kbs(const std::vector<std::string>& kb_ids) const {
  if (kb_ids.empty()) throw ApiError(422, "a session needs at least one knowledge base");
  std::set<std::string> seen;
  for (const auto& kb : kb_ids) {
    if (platform_->graph(kb) == nullptr) throw ApiError(422, "unknown knowledge base '" + kb + "'");
    if (!seen.insert(kb).second) throw ApiError(422, "knowledge base '" + kb + "' listed twice");
  }
}

std::string SessionStore::fresh_id() {
  std::lock_guard lock(rng_mutex_);
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng_()),
                static_cast<unsigned long long>(rng_()));
  return buf;
}

Session SessionStore::create(const std::vector<std::string>& kb_ids) {
  validate_kbs(kb_ids);
  auto entry = std::make_shared<Entry>();
  Session& s = entry->session;
  s.kb_ids = kb_ids;
  for (const auto& kb : kb_ids) s.answers[kb];
  s.created_at = s.updated_at = now_ms();
  std::unique_lock lock(map_mutex_);
  do {
    s.id = fresh_id();
  } while (sessions_.count(s.id));
  persist(s);
  sessions_[s.id] = entry;
  return s;
}

std::shared_ptr<SessionStore::Entry> SessionStore::find(std::string_view id) const {
  std::shared_lock lock(map_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ApiError(404, "unknown session '" + std::string(id) + "'");
  return it->second;
}

Session SessionStore::submit(std::string_view id, const AnswerPatch& patch) {
  const auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  Session next = entry->session;
  for (const auto& [kb, answers] : patch) {
    if (std::find(next.kb_ids.begin(), next.kb_ids.end(), kb) == next.kb_ids.end()) {
      if (platform_->graph(kb) == nullptr) throw ApiError(422, "unknown knowledge base '" + kb + "'");
      throw ApiError(422, "knowledge base '" + kb + "' is not part of session '" + next.id + "'");
    }
    auto& merged = next.answers[kb];
    for (const auto& [attr, level] : answers) merged[attr] = level;
    check_answers(*platform_, kb, merged);
  }
  next.updated_at = std::max(now_ms(), next.updated_at);
  ++next.revision;
  persist(next);
  entry->session = next;
  return next;
}

Session SessionStore::snapshot(std::string_view id) const {
  const auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  return entry->session;
}

Session SessionStore::import(const json& doc) {
  Session s = session_from_json(doc, *platform_);
  auto entry = std::make_shared<Entry>();
  entry->session = s;
  std::unique_lock lock(map_mutex_);
  if (sessions_.count(s.id)) throw ApiError(409, "session '" + s.id + "' already exists");
  persist(s);
  sessions_[s.id] = std::move(entry);
  return s;
}

std::vector<std::string> SessionStore::ids() const {
  std::shared_lock lock(map_mutex_);
  std::vector<std::string> out;
  for (const auto& [id, entry] : sessions_) out.push_back(id);
  return out;
}

void SessionStore::persist(const Session& session) const {
  if (!data_dir_) return;
  const auto target = *data_dir_ / (session.id + ".json");
  auto tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << session_to_json(session).dump(2) << '\n';
    out.flush();
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace iaes
