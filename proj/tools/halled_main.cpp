#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "halled/cache.hpp"
#include "halled/config.hpp"
#include "halled/errors.hpp"
#include "halled/harness.hpp"
#include "halled/version.hpp"

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw halled::ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

halled::BuildResult load(const std::string& path,
                         const std::vector<std::string>& overrides) {
  const std::string text = read_file(path);
  halled::ConfigNode root = halled::parse_config_text(text, path);
  for (const std::string& o : overrides) halled::apply_override(root, o);
  halled::BuildResult br = halled::build_config(root);
  br.config.content_hash = halled::config_hash(text, overrides);
  return br;
}

int report_diagnostics(const std::string& path,
                       const std::vector<halled::Diagnostic>& diags) {
  std::cerr << path << ": " << diags.size() << " problem"
            << (diags.size() == 1 ? "" : "s") << "\n";
  for (const halled::Diagnostic& d : diags)
    std::cerr << "  [" << d.where << "] " << d.message << "\n";
  return 2;
}

int do_validate(const std::string& path,
                const std::vector<std::string>& overrides) {
  const halled::BuildResult br = load(path, overrides);
  if (!br.diagnostics.empty()) return report_diagnostics(path, br.diagnostics);
  char hash[24];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(br.config.content_hash));
  std::cout << "ok: " << halled::to_string(br.config.kind) << " on "
            << br.config.model.name << " -> " << br.config.output_dir
            << " (config " << hash << ")\n";
  return 0;
}

int do_run(const std::string& path, const std::vector<std::string>& overrides,
           std::string& outdir_seen) {
  const halled::BuildResult br = load(path, overrides);
  if (!br.diagnostics.empty()) return report_diagnostics(path, br.diagnostics);
  outdir_seen = br.config.output_dir;
  halled::run_experiment(br.config, std::cout);
  return 0;
}

int do_cache_inspect(const std::string& dir) {
  halled::EigenCache cache(dir);
  if (!cache.enabled()) {
    std::cerr << "cache disabled: pass --dir or set HALLED_CACHE_DIR\n";
    return 2;
  }
  const auto entries = cache.inspect();
  std::size_t bytes = 0;
  for (const auto& e : entries) {
    std::printf("  %-24s dim %-8d levels %-4d %s %zu bytes\n", e.file.c_str(),
                e.dim, e.count, e.full ? "full" : "partial", e.bytes);
    bytes += e.bytes;
  }
  std::printf("%zu entr%s, %zu bytes in %s\n", entries.size(),
              entries.size() == 1 ? "y" : "ies", bytes, cache.root().c_str());
  return 0;
}

int do_cache_clear(const std::string& dir) {
  halled::EigenCache cache(dir);
  if (!cache.enabled()) {
    std::cerr << "cache disabled: pass --dir or set HALLED_CACHE_DIR\n";
    return 2;
  }
  const int removed = cache.clear();
  std::cout << "removed " << removed << " cached solve"
            << (removed == 1 ? "" : "s") << " from " << cache.root() << "\n";
  return 0;
}

void print_value(const std::string& key, const json& v, int indent) {
  const std::string pad(indent, ' ');
  if (v.is_object()) {
    std::cout << pad << key << ":\n";
    for (const auto& [k, sub] : v.items()) print_value(k, sub, indent + 2);
  } else if (v.is_array()) {
    std::cout << pad << key << ": [" << v.size() << " entries]\n";
  } else {
    std::cout << pad << key << ": " << v.dump() << "\n";
  }
}

int do_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw halled::ConfigError("cannot open report: " + path);
  json rep = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (rep.is_discarded())
    throw halled::ConfigError("not a JSON report: " + path);
  for (const auto& [k, v] : rep.items()) print_value(k, v, 0);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact-diagonalization workbench for lattice Hall response"};
  app.set_version_flag("--version", halled::kVersionString);
  app.require_subcommand(1);

  std::string config_path, cache_dir, report_path;
  std::vector<std::string> overrides;

  CLI::App* run = app.add_subcommand("run", "execute an experiment config");
  run->add_option("config", config_path, "config file")->required();
  run->add_option("overrides", overrides, "key=value settings, e.g. "
                                          "experiment.grid=16");

  CLI::App* validate =
      app.add_subcommand("validate", "check a config without running it");
  validate->add_option("config", config_path, "config file")->required();
  validate->add_option("overrides", overrides, "key=value settings");

  CLI::App* cache =
      app.add_subcommand("cache", "inspect or clear the eigensolve cache");
  cache->require_subcommand(1);
  CLI::App* cinspect = cache->add_subcommand("inspect", "list cached solves");
  CLI::App* cclear = cache->add_subcommand("clear", "delete cached solves");
  cinspect->add_option("--dir", cache_dir, "cache directory");
  cclear->add_option("--dir", cache_dir, "cache directory");

  CLI::App* report = app.add_subcommand("report", "summarize a report.json");
  report->add_option("report", report_path, "report file")->required();

  CLI11_PARSE(app, argc, argv);

  std::string outdir_seen;
  try {
    if (run->parsed()) return do_run(config_path, overrides, outdir_seen);
    if (validate->parsed()) return do_validate(config_path, overrides);
    if (cinspect->parsed()) return do_cache_inspect(cache_dir);
    if (cclear->parsed()) return do_cache_clear(cache_dir);
    if (report->parsed()) return do_report(report_path);
  } catch (const std::exception& e) {
    const int code = halled::exit_code_for(e);
    std::cerr << "error (" << halled::error_kind(e) << "): " << e.what()
              << "\n";
    if (!outdir_seen.empty()) {
      // Best effort: leave a machine-readable marker next to the results.
      json err = {{"error", halled::error_kind(e)},
                  {"message", e.what()},
                  {"exit_code", code}};
      std::ofstream out(outdir_seen + "/error.json");
      if (out) out << err.dump(2) << "\n";
    }
    return code;
  }
  return 0;
}
