#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "iaes/service.hpp"

namespace iaes {

namespace {

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += (out.empty() ? "" : "\n") + l;
  return out;
}

std::string located(const std::string& source, const std::string& text) {
  // Diagnostics without a location start with "error"/"warning".
  return source + (text.empty() || std::isdigit(static_cast<unsigned char>(text.front())) ? ":" : ": ") + text;
}

Platform build(std::vector<KnowledgeBase> kbs, const std::vector<std::string>& kb_sources,
               const std::vector<OverlaySpec>& overlays, const std::vector<std::string>& overlay_sources) {
  std::vector<std::string> errors;
  Platform p;
  if (kbs.empty()) errors.push_back("no knowledge bases loaded");

  std::set<std::string> ids;
  for (std::size_t i = 0; i < kbs.size(); ++i) {
    if (!ids.insert(kbs[i].id).second) {
      errors.push_back(kb_sources[i] + ": duplicate knowledge base id '" + kbs[i].id + "'");
    }
    for (const auto& d : validate(kbs[i])) {
      (d.is_error() ? errors : p.warnings).push_back(located(kb_sources[i], to_string(d)));
    }
  }
  if (!errors.empty()) throw BundleError(std::move(errors));

  for (const auto& kb : kbs) {
    p.graphs.push_back(compile(kb));
    p.stats.push_back(kb_stats(p.graphs.back()));
  }

  if (!overlays.empty()) {
    OverlaySpec merged;
    for (std::size_t i = 0; i < overlays.size(); ++i) {
      for (const auto& d : bind_overlay(overlays[i], p.graphs).diagnostics) {
        (d.is_error() ? errors : p.warnings).push_back(located(overlay_sources[i], to_string(d)));
      }
      merged.name += (merged.name.empty() ? "" : "+") + overlays[i].name;
      merged.red_flags.insert(merged.red_flags.end(), overlays[i].red_flags.begin(), overlays[i].red_flags.end());
      merged.risk_entries.insert(merged.risk_entries.end(), overlays[i].risk_entries.begin(),
                                 overlays[i].risk_entries.end());
      merged.valuation_categories.insert(merged.valuation_categories.end(), overlays[i].valuation_categories.begin(),
                                         overlays[i].valuation_categories.end());
    }
    if (!errors.empty()) throw BundleError(std::move(errors));
    // Each file binds on its own; only clashes between files remain.
    auto bound = bind_overlay(merged, p.graphs);
    for (const auto& d : bound.diagnostics) {
      if (d.is_error()) errors.push_back("overlays: " + to_string(d));
    }
    if (!errors.empty()) throw BundleError(std::move(errors));
    p.overlay = std::move(bound.value);
  }
  p.kbs = std::move(kbs);
  return p;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

const CompiledGraph* Platform::graph(std::string_view kb_id) const {
  for (const auto& g : graphs) {
    if (g.kb_id() == kb_id) return &g;
  }
  return nullptr;
}

BundleError::BundleError(std::vector<std::string> diags)
    : std::runtime_error(join_lines(diags)), diagnostics(std::move(diags)) {}

Platform make_platform(std::vector<KnowledgeBase> kbs, const std::vector<OverlaySpec>& overlays) {
  std::vector<std::string> kb_sources;
  for (const auto& kb : kbs) kb_sources.push_back(kb.id);
  std::vector<std::string> overlay_sources;
  for (const auto& o : overlays) overlay_sources.push_back("overlay '" + o.name + "'");
  return build(std::move(kbs), kb_sources, overlays, overlay_sources);
}

Platform load_bundle(const std::vector<std::filesystem::path>& files) {
  std::vector<std::string> errors;
  std::vector<KnowledgeBase> kbs;
  std::vector<std::string> kb_sources;
  std::vector<OverlaySpec> overlays;
  std::vector<std::string> overlay_sources;

  for (const auto& path : files) {
    const std::string source = path.string();
    const auto ext = path.extension().string();
    if (ext != ".kb" && ext != ".overlay") {
      errors.push_back(source + ": unrecognized file type (expected .kb or .overlay)");
      continue;
    }
    std::string text;
    try {
      text = read_text(path);
    } catch (const std::exception&) {
      errors.push_back(source + ": cannot read file");
      continue;
    }
    if (ext == ".kb") {
      auto parsed = parse_kb(text);
      for (const auto& e : parsed.errors) errors.push_back(source + ":" + to_string(e));
      if (parsed.ok()) {
        kbs.push_back(std::move(*parsed.value));
        kb_sources.push_back(source);
      }
    } else {
      auto parsed = parse_overlay(text);
      for (const auto& e : parsed.errors) errors.push_back(source + ":" + to_string(e));
      if (parsed.ok()) {
        overlays.push_back(std::move(*parsed.value));
        overlay_sources.push_back(source);
      }
    }
  }
  if (!errors.empty()) throw BundleError(std::move(errors));
  return build(std::move(kbs), kb_sources, overlays, overlay_sources);
}

Platform load_bundle_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw BundleError({dir.string() + ": not a directory"});
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".kb" || ext == ".overlay")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return load_bundle(files);
}

}  // namespace iaes
