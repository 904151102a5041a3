// Acceptance gate. One PASS/FAIL line per criterion; exit status 1 if any fail.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "iaes/cli.hpp"
#include "iaes/induction.hpp"
#include "iaes/service.hpp"
#include "iaes/synth.hpp"
#include "induction_oracle.hpp"
#include "metalayer_oracle.hpp"
#include "storm.hpp"
#include "support.hpp"

using namespace iaes;
using Stopwatch = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(bool pass, const std::string& name, const std::string& detail) {
  std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
  if (!pass) ++failures;
}

double seconds_since(Stopwatch::time_point start) {
  return std::chrono::duration<double>(Stopwatch::now() - start).count();
}

std::string fmt(double v, int precision = 3) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(precision);
  os << v;
  return os.str();
}

void oracle_equivalence() {
  const auto start = Stopwatch::now();
  std::mt19937_64 rng(1001);
  std::size_t agreeing_kbs = 0;
  std::size_t tuples = 0;
  for (int k = 0; k < 100; ++k) {
    const KnowledgeBase kb = synth::random_kb(rng);
    const CompiledGraph g = compile(kb);
    const FlatRuleList flat = flatten(g);
    std::vector<std::uint32_t> slots;
    for (const auto& name : flat.inputs) slots.push_back(*g.find(name));

    // Inputs outside the goal's ancestry get arbitrary values; the goal must not notice.
    std::vector<Status> inputs(g.size());
    for (auto i : g.inputs()) inputs[i] = static_cast<std::uint32_t>(rng() % g.attribute(i).scale.size());

    bool ok = true;
    std::vector<std::uint32_t> tuple(slots.size(), 0);
    for (std::size_t row = 0; row < flat.size(); ++row) {
      std::map<std::string, std::string> named;
      for (std::size_t i = 0; i < tuple.size(); ++i) {
        inputs[slots[i]] = tuple[i];
        named[flat.inputs[i]] = flat.input_scales[i].levels[tuple[i]];
      }
      const auto goal = evaluate_bound(g, inputs).values[g.goal()];
      const std::uint32_t table = flat.outputs[flat.row_of(tuple)];
      ok = ok && row == flat.row_of(tuple) && goal && *goal == table &&
           flat.goal_scale.levels[table] == test::reference_value(kb, named, kb.goal);
      ++tuples;
      for (std::size_t i = tuple.size(); i-- > 0;) {
        if (++tuple[i] < flat.input_scales[i].size()) break;
        tuple[i] = 0;
      }
    }
    if (ok) ++agreeing_kbs;
  }
  const double elapsed = seconds_since(start);
  report(agreeing_kbs == 100 && elapsed < 60.0, "oracle-equivalence",
         std::to_string(agreeing_kbs) + "/100 KBs agree on " + std::to_string(tuples) + " full assignments in " +
             fmt(elapsed) + " s (limit 60 s)");
}

void monotonicity() {
  std::mt19937_64 rng(2002);
  std::size_t violations = 0;
  std::size_t steps = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const CompiledGraph g = compile(synth::random_kb(rng));
    std::vector<std::uint32_t> order = g.inputs();
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Status> inputs(g.size());
    EvaluationResult previous = evaluate_bound(g, inputs);
    for (auto i : order) {
      inputs[i] = static_cast<std::uint32_t>(rng() % g.attribute(i).scale.size());
      EvaluationResult current = evaluate_bound(g, inputs);
      for (std::size_t a = 0; a < g.size(); ++a) {
        if (previous.values[a] && previous.values[a] != current.values[a]) ++violations;
      }
      previous = std::move(current);
      ++steps;
    }
  }
  report(violations == 0, "monotonicity",
         std::to_string(violations) + " violations over 1000 trials (" + std::to_string(steps) + " answer steps)");
}

void scale() {
  const synth::Bundle bundle = synth::scale_bundle(42);
  std::size_t inputs = 0;
  std::size_t rows = 0;
  for (const auto& kb : bundle.kbs) {
    const KbStats s = kb_stats(kb);
    inputs += s.input_count;
    rows += s.hierarchical_rule_count;
  }

  const auto compile_start = Stopwatch::now();
  std::vector<CompiledGraph> graphs;
  bool valid = true;
  for (const auto& kb : bundle.kbs) {
    valid = valid && !has_errors(validate(kb));
    graphs.push_back(compile(kb));
  }
  const auto bound = bind_overlay(bundle.overlay, graphs);
  const double compile_s = seconds_since(compile_start);
  valid = valid && bound.ok();

  std::mt19937_64 rng(7);
  double worst_ms = 0.0;
  bool complete = true;
  for (int run = 0; run < 20 && valid; ++run) {
    std::vector<std::vector<Status>> answers;
    for (const auto& g : graphs) {
      std::vector<Status> in(g.size());
      for (auto i : g.inputs()) in[i] = static_cast<std::uint32_t>(rng() % g.attribute(i).scale.size());
      answers.push_back(std::move(in));
    }
    const auto start = Stopwatch::now();
    ResultSet results;
    for (std::size_t k = 0; k < graphs.size(); ++k) results.emplace(graphs[k].kb_id(), evaluate_bound(graphs[k], answers[k]));
    const auto flags = detect_red_flags(*bound.value, results);
    const auto risk = risk_score(*bound.value, results);
    const auto valuation = compute_valuation(*bound.value, results);
    worst_ms = std::max(worst_ms, seconds_since(start) * 1000.0);
    complete = complete && risk.score.has_value() && !flags.empty() && !valuation.categories.empty();
  }

  const bool sized = bundle.kbs.size() == 5 && inputs >= 200 && rows >= 12000;
  report(sized && valid, "scale-bundle",
         std::to_string(bundle.kbs.size()) + " KBs, " + std::to_string(inputs) + " inputs, " + std::to_string(rows) +
             " hierarchical rows, " + std::to_string(bundle.overlay.red_flags.size()) + " red flags");
  report(valid && compile_s < 2.0, "scale-compile",
         "validate+compile+bind " + fmt(compile_s * 1000.0, 1) + " ms (limit 2000 ms)");
  report(valid && complete && worst_ms < 50.0, "scale-evaluate",
         "worst of 20 full evaluations of 5 graphs + overlay " + fmt(worst_ms, 2) + " ms (limit 50 ms)");
}

void id3() {
  auto parsed = parse_cases("a,b,outcome\nlow,low,bad\nlow,high,bad\nhigh,low,good\nhigh,high,good\n");
  const CaseSet& s = *parsed.value;
  const std::vector<std::size_t> all{0, 1, 2, 3};
  const double ga = information_gain(s, all, 0);
  const double gb = information_gain(s, all, 1);
  const DecisionTree t = induce_tree(s);
  const bool example = std::abs(entropy(outcome_counts(s, all)) - 1.0) < 1e-9 && std::abs(ga - 1.0) < 1e-9 &&
                       std::abs(gb) < 1e-9 && t.root.split == 0u && t.depth() == 1;
  report(example, "id3-example", "G(A)=" + fmt(ga, 12) + " G(B)=" + fmt(gb, 12) + ", root splits on a, depth " +
                                     std::to_string(t.depth()));

  std::mt19937_64 rng(3003);
  test::InductionTally tally;
  for (int i = 0; i < 50; ++i) test::run_induction_instance(rng, tally);
  const bool ok = tally.sets == 50 && tally.training_misses == 0 && tally.structure_violations == 0 &&
                  tally.gain_mismatches == 0 && tally.tuple_disagreements == 0 && tally.tuples_checked > 0;
  report(ok, "id3-random",
         std::to_string(tally.sets) + " case sets, " + std::to_string(tally.training_misses) + " training misses, " +
             std::to_string(tally.tuple_disagreements) + " rule-block disagreements over " +
             std::to_string(tally.tuples_checked) + " tuples");
}

void metalayer() {
  std::mt19937_64 rng(4004);
  test::MetalayerTally tally;
  for (int i = 0; i < 500; ++i) test::run_metalayer_instance(rng, tally);
  std::string detail = std::to_string(tally.violations) + " violations across " + std::to_string(tally.instances) +
                       " instances";
  if (!tally.first_failures.empty()) detail += " (first: " + tally.first_failures.front() + ")";
  report(tally.instances == 500 && tally.violations == 0, "metalayer-properties", detail);
}

void round_trip() {
  const KnowledgeBase demo = test::demo_kb();
  bool ok = serialize_kb(demo) == test::demo_source();
  std::mt19937_64 rng(5005);
  std::size_t identical = 0;
  for (int i = 0; i < 100; ++i) {
    const KnowledgeBase kb = synth::random_kb(rng);
    const std::string text = serialize_kb(kb);
    auto parsed = parse_kb(text);
    if (parsed.ok() && *parsed.value == kb && serialize_kb(*parsed.value) == text) ++identical;
  }
  ok = ok && identical == 100;
  report(ok, "kbdl-round-trip", "demo byte-identical, " + std::to_string(identical) + "/100 random KBs identical");
}

std::size_t session_round_trips(const std::shared_ptr<const Platform>& platform, std::mt19937_64& rng,
                                std::size_t sessions, std::size_t& mismatches) {
  SessionStore source(platform);
  SessionStore target(platform);
  std::vector<std::string> kb_ids;
  for (const auto& g : platform->graphs) kb_ids.push_back(g.kb_id());
  for (std::size_t n = 0; n < sessions; ++n) {
    const Session s = source.create(kb_ids);
    AnswerPatch patch;
    for (const auto& g : platform->graphs) {
      for (auto i : g.inputs()) {
        if (rng() % 3 == 0) continue;
        const auto& a = g.attribute(i);
        patch[g.kb_id()][a.name] = a.scale.levels[rng() % a.scale.size()];
      }
    }
    source.submit(s.id, patch);
    const std::string exported = session_to_json(source.snapshot(s.id)).dump();
    const Session imported = target.import(nlohmann::json::parse(exported));
    const std::string before = assessment_to_json(*platform, assess(*platform, source.snapshot(s.id))).dump();
    const std::string after = assessment_to_json(*platform, assess(*platform, imported)).dump();
    if (before != after || session_to_json(imported).dump() != exported) ++mismatches;
  }
  return sessions;
}

void session_round_trip(const std::shared_ptr<const Platform>& demo, const std::shared_ptr<const Platform>& ia) {
  std::mt19937_64 rng(6006);
  std::size_t mismatches = 0;
  std::size_t total = session_round_trips(demo, rng, 50, mismatches);
  total += session_round_trips(ia, rng, 50, mismatches);
  report(mismatches == 0, "session-round-trip",
         std::to_string(total - mismatches) + "/" + std::to_string(total) +
             " exported sessions re-import with identical payloads");
}

void ia_bundle(const std::shared_ptr<const Platform>& ia) {
  const std::filesystem::path dir = test::source_path("bundles/ia");
  std::vector<std::string> args{"iaes", "check"};
  for (const auto& entry : std::filesystem::directory_iterator(dir)) args.push_back(entry.path().string());
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  report(code == 0 && out.str().empty() && ia->warnings.empty(), "ia-bundle-check",
         "check exit " + std::to_string(code) + ", " + std::to_string(ia->graphs.size()) + " KBs, " +
             std::to_string(ia->warnings.size()) + " warnings");

  // A second, independent load must give the same states.
  const auto again = std::make_shared<const Platform>(load_bundle_dir(dir));
  std::mt19937_64 rng(7007);
  std::size_t runs = 0;
  std::size_t bad = 0;
  std::size_t categories = 0;
  double worst_sum_error = 0.0;
  std::vector<std::string> kb_ids;
  for (const auto& g : ia->graphs) kb_ids.push_back(g.kb_id());
  for (; runs < 50; ++runs) {
    Session s;
    s.kb_ids = kb_ids;
    for (const auto& g : ia->graphs) {
      for (auto i : g.inputs()) {
        const auto& a = g.attribute(i);
        s.answers[g.kb_id()][a.name] = a.scale.levels[rng() % a.scale.size()];
      }
    }
    const Assessment a = assess(*ia, s);
    const Assessment b = assess(*again, s);
    double sum = 0.0;
    for (const auto& c : a.valuation.categories) sum += c.share;
    worst_sum_error = std::max(worst_sum_error, std::abs(sum - 1.0));
    categories = a.valuation.categories.size();
    bool flags_ok = a.red_flags.size() == b.red_flags.size();
    for (std::size_t f = 0; flags_ok && f < a.red_flags.size(); ++f) {
      flags_ok = a.red_flags[f].state == b.red_flags[f].state && a.red_flags[f].state != FlagState::potential;
    }
    const bool risk_ok = a.risk.score && *a.risk.score >= 0.0 && *a.risk.score <= 100.0 && a.risk.score == b.risk.score;
    if (!flags_ok || !risk_ok || categories != 25 || std::abs(sum - 1.0) > 1e-9) ++bad;
  }
  report(bad == 0, "ia-bundle-assessment",
         std::to_string(runs - bad) + "/" + std::to_string(runs) + " complete questionnaires give a risk score, " +
             std::to_string(categories) + " categories (share sum error " + fmt(worst_sum_error, 15) +
             ") and reproducible, fully decided red flags");
}

void storm(const std::shared_ptr<const Platform>& ia) {
  const auto start = Stopwatch::now();
  const test::StormReport r = test::run_storm(ia, 8, 8, 1000, 8008);
  const bool ok = r.errors == 0 && r.submits + r.reads == 1000 && r.inconsistent_payloads == 0 &&
                  r.unknown_snapshots == 0 && r.revisions_contiguous && r.final_state_serial;
  report(ok, "service-storm",
         std::to_string(r.submits) + " submits, " + std::to_string(r.reads) + " reads, " +
             std::to_string(r.inconsistent_payloads) + " inconsistent, " + std::to_string(r.unknown_snapshots) +
             " unserializable snapshots, final state " + (r.final_state_serial ? "serial" : "NOT serial") + " (" +
             fmt(seconds_since(start), 2) + " s)");
}

template <typename F>
void guarded(const char* name, F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    report(false, name, std::string("threw: ") + e.what());
  }
}

}  // namespace

int main() {
  std::shared_ptr<const Platform> demo;
  std::shared_ptr<const Platform> ia;
  try {
    demo = std::make_shared<const Platform>(load_bundle_dir(test::source_path("bundles/demo")));
    ia = std::make_shared<const Platform>(load_bundle_dir(test::source_path("bundles/ia")));
  } catch (const std::exception& e) {
    report(false, "bundles-load", e.what());
    return 1;
  }

  guarded("oracle-equivalence", oracle_equivalence);
  guarded("monotonicity", monotonicity);
  guarded("scale", scale);
  guarded("id3", id3);
  guarded("metalayer-properties", metalayer);
  guarded("kbdl-round-trip", round_trip);
  guarded("session-round-trip", [&] { session_round_trip(demo, ia); });
  guarded("ia-bundle", [&] { ia_bundle(ia); });
  guarded("service-storm", [&] { storm(ia); });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
