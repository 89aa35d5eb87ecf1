#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "halled/hall.hpp"

namespace halled {

// One block of the config grammar:
//   key value...          entry (values split on whitespace)
//   name {                child block, closed by } on its own line
//   # comment             stripped, also mid-line
// Repeated keys are kept in order (used for hop/interaction/twist lists).
struct ConfigNode {
  std::string name;
  std::vector<std::pair<std::string, std::vector<std::string>>> entries;
  std::vector<ConfigNode> children;

  const ConfigNode* child(const std::string& child_name) const;
  const std::vector<std::string>* find(const std::string& key) const;
  bool has(const std::string& key) const { return find(key) != nullptr; }
};

ConfigNode parse_config_text(const std::string& text,
                             const std::string& origin = "<string>");
ConfigNode load_config_file(const std::string& path);

// Applies "a.b.key=v1,v2" (path into nested blocks, comma-separated values).
// Creates missing blocks; replaces an existing entry or appends a new one.
void apply_override(ConfigNode& root, const std::string& assignment);

enum class ExperimentKind {
  Spectrum,
  Chern,
  Routes,
  GapScan,
  Locality,
  CorrDecay
};
std::string to_string(ExperimentKind kind);

struct TwistPoint {
  double phi1 = 0;
  double phi2 = 0;
};

struct ExperimentConfig {
  std::uint64_t content_hash = 0;
  ExperimentKind kind = ExperimentKind::Spectrum;
  HamiltonianSpec model;
  bool model_valid = false;
  std::string output_dir = "runs/out";
  bool cache_enabled = false;
  std::string cache_dir;  // empty: HALLED_CACHE_DIR
  int workers = 1;
  EigensolveOptions eig;

  // chern / gap_scan
  int grid = 12;
  std::optional<int> q_hint;
  int k1 = 0, k2 = 0;
  bool allow_refine = true;
  bool kubo_average = false;
  std::vector<double> alphas;          // onsite deformation strengths
  int deform_site = 0;
  bool deformed_cut = false;
  Site cut_anchor{0, 1};
  int cut_r0 = 3;
  double cut_amplitude = 0.4;
  std::uint64_t deform_seed = 11;

  // routes
  std::vector<TwistPoint> twists;
  int random_twists = 0;
  std::uint64_t twist_seed = 1234;
  std::vector<double> etas{0.1, 0.05};
  std::vector<double> switch_times{50.0, 100.0};
  int window_halfwidth = -1;  // negative: whole torus
  int region_halfwidth = 1;
  int anchor_row = 0;
  double fd_step = 1e-4;
  double route_tol = 1e-6;

  // spectrum
  int levels = 10;
  TwistPoint at;

  // locality
  int omega_count = 4;
  int probe_site = 2;  // chain position of the observable
  double t_max = 2.0;
  int t_samples = 21;
  std::vector<int> lr_distances{2, 3, 4, 5};

  // corr_decay
  Site corr_source{0, 0};
  std::vector<Site> corr_targets;  // empty: default distance-1..5 ring
};

struct Diagnostic {
  std::string where;
  std::string message;
};

struct BuildResult {
  ExperimentConfig config;
  std::vector<Diagnostic> diagnostics;  // empty means runnable
};

// Builds the typed config, aggregating every problem instead of failing
// fast. Static validation only: model construction, Hermiticity, flux
// commensurability, cut bounds, dense-threshold feasibility for experiment
// kinds that need full spectra. Never solves anything.
BuildResult build_config(const ConfigNode& root);

// Content hash of the raw config text plus overrides, for the manifest.
std::uint64_t config_hash(const std::string& text,
                          const std::vector<std::string>& overrides);

}  // namespace halled
