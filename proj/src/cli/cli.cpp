#include "iaes/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <ostream>
#include <sstream>

#include "iaes/induction.hpp"
#include "iaes/service.hpp"
#include "iaes/synth.hpp"

namespace iaes {

namespace {

namespace fs = std::filesystem;

// Carries the lines to print on stderr before exiting with 1.
struct Failure {
  std::vector<std::string> lines;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{{path + ": cannot read file"}};
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!(out << text)) throw Failure{{path.string() + ": cannot write file"}};
}

Platform load(const std::vector<fs::path>& files) {
  try {
    return load_bundle(files);
  } catch (const BundleError& e) {
    throw Failure{e.diagnostics};
  }
}

const CompiledGraph& single_graph(const Platform& p) { return p.graphs.front(); }

int run_check(const std::vector<std::string>& files, std::ostream& out) {
  try {
    const Platform p = load({files.begin(), files.end()});
    for (const auto& w : p.warnings) out << w << '\n';
    return 0;
  } catch (const Failure& f) {
    for (const auto& l : f.lines) out << l << '\n';
    return 1;
  }
}

int run_eval(const std::string& kb_path, const std::string& answers_path, std::ostream& out) {
  const Platform p = load({kb_path});
  const std::string text = read_file(answers_path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Failure{{answers_path + ": " + e.what()}};
  }
  if (!doc.is_object()) throw Failure{{answers_path + ": expected an object of attribute -> level"}};
  Assignment answers;
  for (const auto& [attr, level] : doc.items()) {
    if (!level.is_string()) throw Failure{{answers_path + ": level of '" + attr + "' must be a string"}};
    answers.emplace(attr, level.get<std::string>());
  }
  const CompiledGraph& g = single_graph(p);
  try {
    out << evaluation_to_json(g, evaluate(g, answers)).dump(2) << '\n';
  } catch (const EvaluationError& e) {
    throw Failure{{answers_path + ": " + e.what()}};
  }
  return 0;
}

int run_flatten(const std::string& kb_path, std::ostream& out) {
  const Platform p = load({kb_path});
  try {
    out << flatten(single_graph(p)).to_csv();
  } catch (const FlattenTooLarge& e) {
    throw Failure{{kb_path + ": " + e.what()}};
  }
  return 0;
}

int run_stats(const std::string& kb_path, std::ostream& out) {
  const Platform p = load({kb_path});
  out << stats_to_json(p.stats.front()).dump(2) << '\n';
  return 0;
}

int run_induce(const std::string& cases_path, const std::string& kb_path, std::ostream& out) {
  std::optional<Platform> p;
  if (!kb_path.empty()) p = load({kb_path});
  const std::string text = read_file(cases_path);
  auto parsed = parse_cases(text, p ? &p->kbs.front() : nullptr);
  if (!parsed.ok()) {
    std::vector<std::string> lines;
    for (const auto& e : parsed.errors) lines.push_back(cases_path + ":" + to_string(e));
    throw Failure{lines};
  }
  try {
    const DecisionTree tree = induce_tree(*parsed.value);
    out << serialize_rule_block(tree_to_ruleblock(tree, *parsed.value));
  } catch (const InductionError& e) {
    throw Failure{{cases_path + ": " + e.what()}};
  }
  return 0;
}

int run_serve(const std::string& bundle, const std::string& data, const std::string& host, int port,
              std::ostream& err) {
  std::shared_ptr<const Platform> platform;
  try {
    platform = std::make_shared<const Platform>(load_bundle_dir(bundle));
  } catch (const BundleError& e) {
    throw Failure{e.diagnostics};
  }
  for (const auto& w : platform->warnings) err << w << '\n';

  std::optional<fs::path> data_dir;
  if (!data.empty()) {
    std::error_code ec;
    fs::create_directories(data, ec);
    if (ec) throw Failure{{data + ": " + ec.message()}};
    data_dir = data;
  }
  SessionStore store(platform, data_dir);
  for (const auto& problem : store.load_persisted()) err << "skipped " << problem << '\n';

  const Api api(store);
  HttpServer server(api);
  const int bound = server.start(host, port);
  if (bound < 0) throw Failure{{"cannot listen on " + host + ":" + std::to_string(port)}};
  err << "listening on http://" << host << ':' << bound << " (" << platform->graphs.size()
      << " knowledge bases, " << store.ids().size() << " sessions)" << std::endl;
  server.wait();
  return 0;
}

int run_synth(const std::string& out_dir, std::uint64_t seed, const synth::BundleOptions& options, std::ostream& out) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Failure{{out_dir + ": " + ec.message()}};
  const synth::Bundle bundle = synth::scale_bundle(seed, options);
  std::size_t rows = 0;
  std::size_t inputs = 0;
  for (const auto& kb : bundle.kbs) {
    write_file(fs::path(out_dir) / (kb.id + ".kb"), serialize_kb(kb));
    const KbStats s = kb_stats(kb);
    rows += s.hierarchical_rule_count;
    inputs += s.input_count;
  }
  write_file(fs::path(out_dir) / (bundle.overlay.name + ".overlay"), serialize_overlay(bundle.overlay));
  out << "wrote " << bundle.kbs.size() << " knowledge bases (" << inputs << " inputs, " << rows
      << " rule rows) and 1 overlay to " << out_dir << '\n';
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Expert-system shell for intangible-asset assessment", "iaes"};
  app.require_subcommand(1);

  std::vector<std::string> check_files;
  auto* check = app.add_subcommand("check", "Validate knowledge bases and overlays; print diagnostics");
  check->add_option("files", check_files, ".kb and .overlay files")->required()->check(CLI::ExistingFile);

  std::string kb_path;
  std::string answers_path;
  auto* eval = app.add_subcommand("eval", "Evaluate a knowledge base on a JSON object of answers");
  eval->add_option("kb", kb_path, "knowledge base file")->required();
  eval->add_option("--answers", answers_path, "JSON file mapping input attributes to levels")->required();

  auto* flat = app.add_subcommand("flatten", "Print the goal as a flat decision table (CSV)");
  flat->add_option("kb", kb_path, "knowledge base file")->required();

  auto* stats = app.add_subcommand("stats", "Print knowledge base statistics as JSON");
  stats->add_option("kb", kb_path, "knowledge base file")->required();

  std::string cases_path;
  std::string induce_kb;
  auto* induce = app.add_subcommand("induce", "Induce a rule block from a CSV of cases");
  induce->add_option("--cases", cases_path, "CSV file: attribute columns, then outcome")->required();
  induce->add_option("--kb", induce_kb, "take scales from this knowledge base");

  std::string bundle_dir;
  std::string data_dir;
  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--bundle", bundle_dir, "directory of .kb and .overlay files")->required();
  serve->add_option("--data", data_dir, "directory for persisted sessions");
  serve->add_option("--host", host, "address to bind")->capture_default_str();
  serve->add_option("--port", port, "port to bind, 0 for any free port")
      ->check(CLI::Range(0, 65535))
      ->capture_default_str();

  std::string synth_out;
  std::uint64_t seed = 1;
  synth::BundleOptions synth_options;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic multi-KB bundle");
  synth_cmd->add_option("--out", synth_out, "output directory")->required();
  synth_cmd->add_option("--seed", seed, "generator seed")->capture_default_str();
  synth_cmd->add_option("--kbs", synth_options.kb_count, "knowledge bases")->check(CLI::Range(1, 100))
      ->capture_default_str();
  synth_cmd->add_option("--inputs", synth_options.inputs_per_kb, "inputs per knowledge base")
      ->check(CLI::Range(2, 10000))
      ->capture_default_str();
  synth_cmd->add_option("--group", synth_options.group_size, "children per derived attribute")
      ->check(CLI::Range(2, 6))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*check) return run_check(check_files, out);
    if (*eval) return run_eval(kb_path, answers_path, out);
    if (*flat) return run_flatten(kb_path, out);
    if (*stats) return run_stats(kb_path, out);
    if (*induce) return run_induce(cases_path, induce_kb, out);
    if (*serve) return run_serve(bundle_dir, data_dir, host, port, err);
    if (*synth_cmd) return run_synth(synth_out, seed, synth_options, out);
  } catch (const Failure& f) {
    for (const auto& l : f.lines) err << l << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace iaes
