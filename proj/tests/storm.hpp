// Concurrent submit/assessment storm against one session.
#pragma once

#include <algorithm>
#include <atomic>
#include <mutex>
#include <random>
#include <set>
#include <thread>
#include <vector>

#include "iaes/service.hpp"

namespace iaes::test {

struct StormReport {
  std::size_t submits = 0;
  std::size_t reads = 0;
  std::size_t inconsistent_payloads = 0;  // payload differs from a recomputation of its own answers
  std::size_t unknown_snapshots = 0;      // payload answers match no prefix of the serial order
  std::size_t errors = 0;
  bool revisions_contiguous = false;
  bool final_state_serial = false;
};

/// Drops the fields that identify the snapshot rather than derive from it.
inline nlohmann::json derived_part(nlohmann::json payload) {
  payload.erase("session_id");
  payload.erase("updated_at");
  return payload;
}

inline StormReport run_storm(const std::shared_ptr<const Platform>& platform, std::size_t writers,
                             std::size_t readers, std::size_t total_ops, std::uint64_t seed) {
  SessionStore store(platform);
  const Api api(store);
  std::vector<std::string> kb_ids;
  for (const auto& g : platform->graphs) kb_ids.push_back(g.kb_id());
  const Session initial = store.create(kb_ids);
  const std::string path = "/api/sessions/" + initial.id + "/assessment";

  struct Commit {
    std::uint64_t revision;
    AnswerPatch patch;
  };
  std::mutex log_mutex;
  std::vector<Commit> commits;
  std::vector<nlohmann::json> observed;  // answers seen by readers
  StormReport report;
  std::atomic<std::size_t> errors{0};
  std::atomic<std::size_t> inconsistent{0};

  const std::size_t write_ops = total_ops / 2;
  const std::size_t read_ops = total_ops - write_ops;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < writers; ++w) {
    const std::size_t ops = write_ops / writers + (w < write_ops % writers ? 1 : 0);
    threads.emplace_back([&, w, ops] {
      std::mt19937_64 rng(seed * 131 + w);
      for (std::size_t op = 0; op < ops; ++op) {
        AnswerPatch patch;
        const std::size_t count = 1 + rng() % 3;
        for (std::size_t c = 0; c < count; ++c) {
          const auto& g = platform->graphs[rng() % platform->graphs.size()];
          const auto& in = g.attribute(g.inputs()[rng() % g.inputs().size()]);
          patch[g.kb_id()][in.name] = in.scale.levels[rng() % in.scale.size()];
        }
        try {
          const Session s = store.submit(initial.id, patch);
          std::lock_guard lock(log_mutex);
          commits.push_back({s.revision, patch});
        } catch (const std::exception&) {
          ++errors;
        }
      }
    });
  }
  for (std::size_t r = 0; r < readers; ++r) {
    const std::size_t ops = read_ops / readers + (r < read_ops % readers ? 1 : 0);
    threads.emplace_back([&, ops] {
      for (std::size_t op = 0; op < ops; ++op) {
        const ApiResponse res = api.handle("GET", path, {}, "");
        if (res.status != 200) {
          ++errors;
          continue;
        }
        const auto payload = nlohmann::json::parse(res.body);
        // Recompute from the answers the payload claims to describe.
        Session replay = initial;
        for (const auto& [kb, attrs] : payload["answers"].items()) {
          for (const auto& [attr, level] : attrs.items()) replay.answers[kb][attr] = level.get<std::string>();
        }
        const auto expected = nlohmann::json::parse(assessment_to_json(*platform, assess(*platform, replay)).dump());
        if (derived_part(expected) != derived_part(payload)) ++inconsistent;
        std::lock_guard lock(log_mutex);
        observed.push_back(payload["answers"]);
      }
    });
  }
  for (auto& t : threads) t.join();

  report.submits = commits.size();
  report.reads = observed.size();
  report.errors = errors;
  report.inconsistent_payloads = inconsistent;

  std::sort(commits.begin(), commits.end(), [](const Commit& a, const Commit& b) { return a.revision < b.revision; });
  report.revisions_contiguous = true;
  for (std::size_t i = 0; i < commits.size(); ++i) {
    if (commits[i].revision != i + 1) report.revisions_contiguous = false;
  }

  // Every prefix of the serial order, as exported answers.
  Session state = initial;
  std::set<std::string> prefixes{nlohmann::json::parse(session_to_json(state)["answers"].dump()).dump()};
  for (const auto& c : commits) {
    for (const auto& [kb, attrs] : c.patch) {
      for (const auto& [attr, level] : attrs) state.answers[kb][attr] = level;
    }
    prefixes.insert(nlohmann::json::parse(session_to_json(state)["answers"].dump()).dump());
  }
  for (const auto& o : observed) {
    if (!prefixes.count(o.dump())) ++report.unknown_snapshots;
  }
  report.final_state_serial = store.snapshot(initial.id).answers == state.answers;
  return report;
}

}  // namespace iaes::test
