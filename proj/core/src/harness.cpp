#include "halled/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_map>
#include <utility>

#include <nlohmann/json.hpp>

#include "halled/cache.hpp"
#include "halled/errors.hpp"
#include "halled/hall.hpp"
#include "halled/observables.hpp"
#include "halled/parallel.hpp"
#include "halled/version.hpp"

namespace halled {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string fmt17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hex16(std::uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ResourceError("cannot open for writing: " + path);
  out << content;
  out.flush();
  if (!out) throw ResourceError("short write: " + path);
}

// Uniform [0,1) from the top 53 bits, so streams do not depend on the
// standard library's distribution implementation.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1p-53;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i)
    out[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return out;
}

struct LineFit {
  double slope = 0, intercept = 0, r2 = 1;
};

LineFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  LineFit f;
  const int n = static_cast<int>(x.size());
  if (n < 2) return f;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double det = n * sxx - sx * sx;
  if (det == 0) return f;
  f.slope = (n * sxy - sx * sy) / det;
  f.intercept = (sy - f.slope * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double mean = sy / n;
  for (int i = 0; i < n; ++i) {
    const double fit = f.intercept + f.slope * x[i];
    ss_res += (y[i] - fit) * (y[i] - fit);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

// Seeded cut deformation: site -> amplitude * uniform(-1, 1) on every site
// strictly inside the taxicab ball of radius r0 around the anchor, in site
// order.
std::unordered_map<int, double> seeded_cut_values(const LatticeSpec& lat,
                                                  Site anchor, int r0,
                                                  double amplitude,
                                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::unordered_map<int, double> values;
  for (int s = 0; s < lat.n_sites(); ++s)
    if (lat.periodic_distance(lat.site(s), anchor) < r0)
      values[s] = amplitude * (2.0 * uniform01(rng) - 1.0);
  return values;
}

// Runs fn() and accumulates its wall time under `name`, for the manifest.
template <class F>
decltype(auto) run_stage(std::map<std::string, double>& acc,
                         const std::string& name, F&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  struct Guard {
    std::map<std::string, double>& acc;
    std::string name;
    std::chrono::steady_clock::time_point t0;
    ~Guard() {
      acc[name] += std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
    }
  } guard{acc, name, t0};
  return fn();
}

json check_json(const BoundCheck& c) {
  return {{"name", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"pass", c.pass}};
}

json model_json(const HamiltonianSpec& spec, const FockBasis& basis) {
  return {{"name", spec.name},
          {"L1", spec.lattice.L1},
          {"L2", spec.lattice.L2},
          {"N", spec.N},
          {"dimension", basis.dim()}};
}

struct RunState {
  const ExperimentConfig& cfg;
  const FockBasis& basis;
  std::map<std::string, double>& stage_secs;
  std::vector<std::string>& csvs;
  fs::path dir;
  std::ostream& log;
  json cache_ledger;
};

void emit_csv(RunState& st, const std::string& name,
              const std::string& content) {
  const std::string path = (st.dir / name).string();
  write_text(path, content);
  st.csvs.push_back(path);
}

json run_spectrum(RunState& st) {
  const ExperimentConfig& cfg = st.cfg;
  const TwistConfig tc =
      TwistConfig::plain(0, cfg.at.phi1, 0, cfg.at.phi2);
  const SparseOperator h = cfg.model.build(st.basis, tc);
  const int want = std::min<int>(cfg.levels, st.basis.dim());
  const EigenDecomposition eig =
      st.basis.dim() <= cfg.eig.dense_threshold
          ? eigensolve_full(h, cfg.eig)
          : eigensolve_lowest(h, want, cfg.eig);

  json out;
  std::vector<double> levels;
  for (int i = 0; i < std::min<int>(want, eig.count()); ++i)
    levels.push_back(eig.eigenvalues[i]);
  out["eigenvalues"] = levels;
  out["full_spectrum"] = eig.full;
  out["max_residual"] = eig.max_residual(h);
  out["orthonormality_defect"] = eig.max_orthonormality_defect();
  try {
    const GroundMultiplet m = detect_multiplet(eig, cfg.q_hint);
    out["multiplet"] = {{"q", m.q}, {"gap", m.gap}, {"spread", m.spread}};
  } catch (const MultipletError& e) {
    out["multiplet"] = nullptr;
    out["multiplet_note"] = e.what();
  }

  std::ostringstream csv;
  csv << "index,energy\n";
  for (std::size_t i = 0; i < levels.size(); ++i)
    csv << i << "," << fmt17(levels[i]) << "\n";
  emit_csv(st, "levels.csv", csv.str());
  return out;
}

void emit_grid_csvs(RunState& st, const FluxAverage& av) {
  const int n = av.n_phi;
  std::ostringstream gaps;
  gaps << "i,j,phi1,phi2,gap,spread\n";
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double phi1 = 2.0 * M_PI * i / n, phi2 = 2.0 * M_PI * j / n;
      gaps << i << "," << j << "," << fmt17(phi1) << "," << fmt17(phi2) << ","
           << fmt17(av.node_gaps[i * n + j]) << ","
           << fmt17(av.node_spreads[i * n + j]) << "\n";
    }
  emit_csv(st, "gap_vs_flux.csv", gaps.str());

  if (!av.curvature.empty()) {
    std::ostringstream curv;
    curv << "i,j,phi1,phi2,field\n";
    for (const PlaquetteField& f : av.curvature)
      curv << f.i << "," << f.j << "," << fmt17(f.phi1) << "," << fmt17(f.phi2)
           << "," << fmt17(f.f) << "\n";
    emit_csv(st, "curvature.csv", curv.str());
  }
}

json flux_average_json(const FluxAverage& av) {
  return {{"p", av.p},
          {"q", av.q},
          {"residual", av.residual},
          {"sigma_averaged", av.sigma_averaged},
          {"n_phi", av.n_phi},
          {"refined", av.refined},
          {"min_gap", av.min_gap},
          {"max_spread", av.max_spread},
          {"min_link", av.min_link},
          {"q_constant", av.q_constant}};
}

json run_chern(RunState& st) {
  const ExperimentConfig& cfg = st.cfg;
  const GroundMultiplet m0 = run_stage(st.stage_secs, "detect", [&] {
    return detect_at(cfg.model, st.basis,
                     TwistConfig::plain(cfg.k1, 0.0, cfg.k2, 0.0), cfg.q_hint,
                     cfg.eig);
  });
  st.log << "  multiplet q = " << m0.q << ", gap " << m0.gap << "\n";

  std::optional<EigenCache> cache;
  if (cfg.cache_enabled) cache.emplace(cfg.cache_dir);

  ProviderOptions po;
  po.q = m0.q;
  po.k1 = cfg.k1;
  po.k2 = cfg.k2;
  po.eig = cfg.eig;
  po.cache = cache && cache->enabled() ? &*cache : nullptr;

  const FrameProvider provider = make_flux_provider(cfg.model, st.basis, po);
  FluxGridOptions go;
  go.n_phi = cfg.grid;
  go.allow_refine = cfg.allow_refine;
  go.keep_frames = !cfg.alphas.empty();
  go.workers = cfg.workers;
  const FluxAverage av = run_stage(st.stage_secs, "flux_grid",
                                   [&] { return average_over_flux(provider, go); });
  st.log << "  p = " << av.p << " (q = " << av.q << "), residual "
         << av.residual << "\n";

  std::vector<DeformationCheck> checks;
  run_stage(st.stage_secs, "deformations", [&] {
    if (!cfg.alphas.empty())
      checks = deformation_invariance(av, st.basis, cfg.deform_site,
                                      cfg.alphas, go.link_floor);
    if (cfg.deformed_cut) {
      const auto values =
          seeded_cut_values(cfg.model.lattice, cfg.cut_anchor, cfg.cut_r0,
                            cfg.cut_amplitude, cfg.deform_seed);
      const CutFunction cut = CutFunction::deformed(
          1, cfg.k1, cfg.cut_anchor, cfg.cut_r0, values, cfg.model.lattice);
      checks.push_back(
          deformed_cut_invariance(cfg.model, st.basis, av, cut, po, go));
    }
    return 0;
  });

  json out = flux_average_json(av);
  json defs = json::array();
  for (const DeformationCheck& c : checks)
    defs.push_back({{"label", c.label},
                    {"p", c.p},
                    {"residual", c.residual},
                    {"pass", c.pass}});
  out["deformations"] = defs;
  if (cfg.kubo_average) {
    // 4x4 quadrature grid: enough to expose the flux average at desk scale.
    const double kavg = run_stage(st.stage_secs, "kubo_average", [&] {
      return kubo_average(cfg.model, st.basis, cfg.k1, cfg.k2, 4, av.q,
                          cfg.eig);
    });
    out["kubo_average"] = kavg;
    out["kubo_average_gap"] = std::abs(kavg - av.sigma_averaged);
  }

  st.cache_ledger = {{"enabled", po.cache != nullptr},
                     {"hits", av.cache_hits},
                     {"misses", av.cache_misses},
                     {"verified", av.cache_verified}};
  emit_grid_csvs(st, av);
  return out;
}

json run_gap_scan(RunState& st) {
  const ExperimentConfig& cfg = st.cfg;
  const GroundMultiplet m0 = run_stage(st.stage_secs, "detect", [&] {
    return detect_at(cfg.model, st.basis,
                     TwistConfig::plain(cfg.k1, 0.0, cfg.k2, 0.0), cfg.q_hint,
                     cfg.eig);
  });

  std::optional<EigenCache> cache;
  if (cfg.cache_enabled) cache.emplace(cfg.cache_dir);
  ProviderOptions po;
  po.q = m0.q;
  po.k1 = cfg.k1;
  po.k2 = cfg.k2;
  po.eig = cfg.eig;
  po.cache = cache && cache->enabled() ? &*cache : nullptr;
  const FrameProvider provider = make_flux_provider(cfg.model, st.basis, po);

  const int n = cfg.grid;
  std::vector<NodeData> nodes(n * n);
  run_stage(st.stage_secs, "flux_grid", [&] {
    parallel_for(n * n, cfg.workers, [&](int idx) {
      const int i = idx / n, j = idx % n;
      nodes[idx] = provider.node(i, j, 2.0 * M_PI * i / n, 2.0 * M_PI * j / n);
    });
    return 0;
  });

  double min_gap = nodes[0].gap, max_spread = 0;
  bool q_constant = true;
  int hits = 0, misses = 0, verified = 0;
  for (const NodeData& nd : nodes) {
    min_gap = std::min(min_gap, nd.gap);
    max_spread = std::max(max_spread, nd.spread);
    q_constant = q_constant && nd.persists;
    hits += nd.from_cache ? 1 : 0;
    misses += nd.from_cache ? 0 : 1;
    verified += nd.verified ? 1 : 0;
  }

  std::ostringstream csv;
  csv << "i,j,phi1,phi2,gap,spread\n";
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      csv << i << "," << j << "," << fmt17(2.0 * M_PI * i / n) << ","
          << fmt17(2.0 * M_PI * j / n) << "," << fmt17(nodes[i * n + j].gap)
          << "," << fmt17(nodes[i * n + j].spread) << "\n";
  emit_csv(st, "gap_vs_flux.csv", csv.str());

  st.cache_ledger = {{"enabled", po.cache != nullptr},
                     {"hits", hits},
                     {"misses", misses},
                     {"verified", verified}};
  return {{"q", m0.q},
          {"grid", n},
          {"min_gap", min_gap},
          {"max_spread", max_spread},
          {"q_constant", q_constant}};
}

json run_routes(RunState& st) {
  const ExperimentConfig& cfg = st.cfg;
  const LatticeSpec& lat = cfg.model.lattice;

  std::vector<TwistPoint> pts = cfg.twists;
  if (cfg.random_twists > 0) {
    std::mt19937_64 rng(cfg.twist_seed);
    for (int i = 0; i < cfg.random_twists; ++i) {
      TwistPoint p;
      p.phi1 = 2.0 * M_PI * uniform01(rng);
      p.phi2 = 2.0 * M_PI * uniform01(rng);
      pts.push_back(p);
    }
  }

  json twists = json::array();
  std::ostringstream sweep;
  sweep << "phi1,phi2,eta,T,sigma,sigma_limit,correction,adiabatic_lhs,"
           "adiabatic_rhs\n";
  bool all_pass = true;

  for (const TwistPoint& pt : pts) {
    const TwistConfig tc =
        TwistConfig::plain(cfg.k1, pt.phi1, cfg.k2, pt.phi2);
    const SparseOperator h = cfg.model.build(st.basis, tc);
    const EigenDecomposition eig = run_stage(st.stage_secs, "solve", [&] {
      return eigensolve_full(h, cfg.eig);
    });
    const GroundMultiplet m = detect_multiplet(eig, cfg.q_hint);

    const HoppingSet tw = apply_twist(lat, cfg.model.hoppings, tc);
    CurrentSpec c1, c2;
    c1.dir = 1;
    c1.k = cfg.k1;
    c2.dir = 2;
    c2.k = cfg.k2;
    const SparseOperator j1 = local_current(lat, tw, c1, st.basis);
    const SparseOperator j2 = local_current(lat, tw, c2, st.basis);
    const double sigma_kubo = kubo_sum(j1, j2, m, eig);

    const auto build_at = [&](double a, double b) {
      return cfg.model.build(st.basis,
                             TwistConfig::plain(cfg.k1, a, cfg.k2, b));
    };
    const double sigma_trace = run_stage(st.stage_secs, "trace", [&] {
      return projector_trace(build_at, pt.phi1, pt.phi2, m.q, cfg.fd_step,
                             cfg.eig);
    });

    TimeDomainParams base;
    base.eta = 0.0;
    base.T = std::nullopt;
    base.window_halfwidth = cfg.window_halfwidth;
    base.region_halfwidth = cfg.region_halfwidth;
    base.k = cfg.k1;
    base.l = cfg.anchor_row;
    const TimeDomainReport td0 = run_stage(st.stage_secs, "time_domain", [&] {
      return time_domain_conductance(cfg.model, st.basis, tc, base, m, eig);
    });

    std::vector<BoundCheck> route_checks;
    {
      BoundCheck c;
      c.name = "kubo_vs_trace";
      c.lhs = std::abs(sigma_kubo - sigma_trace);
      c.rhs = cfg.route_tol;
      c.pass = c.lhs <= c.rhs;
      route_checks.push_back(c);
      c.name = "time_vs_kubo";
      c.lhs = std::abs(td0.sigma - sigma_kubo);
      c.pass = c.lhs <= c.rhs;
      route_checks.push_back(c);
    }

    json sweeps = json::array();
    for (double eta : cfg.etas)
      for (double T : cfg.switch_times) {
        TimeDomainParams p2 = base;
        p2.eta = eta;
        p2.T = T;
        const TimeDomainReport td =
            run_stage(st.stage_secs, "time_domain", [&] {
              return time_domain_conductance(cfg.model, st.basis, tc, p2, m,
                                             eig);
            });
        json entry = {{"eta", eta},
                      {"T", T},
                      {"sigma", td.sigma},
                      {"sigma_limit", td.sigma_limit},
                      {"correction", td.correction},
                      {"warnings", td.warnings}};
        json cj = json::array();
        double alhs = 0, arhs = 0;
        for (const BoundCheck& c : td.checks) {
          cj.push_back(check_json(c));
          all_pass = all_pass && c.pass;
          if (c.name == "adiabatic_deviation") {
            alhs = c.lhs;
            arhs = c.rhs;
          }
        }
        entry["checks"] = cj;
        sweeps.push_back(entry);
        sweep << fmt17(pt.phi1) << "," << fmt17(pt.phi2) << "," << fmt17(eta)
              << "," << fmt17(T) << "," << fmt17(td.sigma) << ","
              << fmt17(td.sigma_limit) << "," << fmt17(td.correction) << ","
              << fmt17(alhs) << "," << fmt17(arhs) << "\n";
      }

    json jt = {{"phi1", pt.phi1},
               {"phi2", pt.phi2},
               {"q", m.q},
               {"gap", m.gap},
               {"spread", m.spread},
               {"sigma_kubo", sigma_kubo},
               {"sigma_trace", sigma_trace},
               {"sigma_time", td0.sigma},
               {"persistent_current", td0.persistent_current},
               {"switch_on", sweeps}};
    json cj = json::array();
    for (const BoundCheck& c : route_checks) {
      cj.push_back(check_json(c));
      all_pass = all_pass && c.pass;
    }
    for (const BoundCheck& c : td0.checks) all_pass = all_pass && c.pass;
    jt["checks"] = cj;
    twists.push_back(jt);
    st.log << "  twist (" << pt.phi1 << ", " << pt.phi2
           << "): kubo " << sigma_kubo << ", trace " << sigma_trace
           << ", time " << td0.sigma << "\n";
  }

  emit_csv(st, "sigma_eta_T.csv", sweep.str());
  return {{"twists", twists},
          {"route_tol", cfg.route_tol},
          {"all_pass", all_pass}};
}

json run_locality(RunState& st) {
  const ExperimentConfig& cfg = st.cfg;
  const LatticeSpec& lat = cfg.model.lattice;

  std::vector<int> omega;
  for (int x = 0; x < cfg.omega_count; ++x) omega.push_back(lat.index({x, 0}));

  const SparseOperator h_full = cfg.model.build(st.basis);
  const SparseOperator h_omega =
      build_hamiltonian(lat, restrict_hops(cfg.model.hoppings, omega),
                        restrict_ints(cfg.model.interactions, omega),
                        st.basis);

  std::vector<double> w(lat.n_sites(), 0.0);
  w[lat.index({cfg.probe_site, 0})] = 1.0;
  const SparseOperator a = diagonal_from_weights(w, st.basis);

  const std::vector<double> t_grid = linspace(0.0, cfg.t_max, cfg.t_samples);
  const EvolutionGapReport rep = run_stage(st.stage_secs, "evolution", [&] {
    return restricted_evolution_gap(a, h_full, h_omega, st.basis, omega,
                                    t_grid);
  });

  const EigenDecomposition eig = run_stage(st.stage_secs, "solve", [&] {
    return eigensolve_full(h_full, cfg.eig);
  });
  std::vector<LRProbe> probes;
  {
    std::vector<double> w0(lat.n_sites(), 0.0);
    w0[lat.index({0, 0})] = 1.0;
    const SparseOperator src = diagonal_from_weights(w0, st.basis);
    for (int d : cfg.lr_distances) {
      std::vector<double> wd(lat.n_sites(), 0.0);
      wd[lat.index({d, 0})] = 1.0;
      probes.push_back({src, diagonal_from_weights(wd, st.basis),
                        static_cast<double>(d)});
    }
  }
  const LREnvelope env = run_stage(st.stage_secs, "commutators", [&] {
    return commutator_growth(probes, eig, t_grid);
  });

  double t0_max = 0;
  bool saturation_ok = true;
  for (const LRSample& s : env.samples) {
    if (s.t == 0) t0_max = std::max(t0_max, s.norm);
    saturation_ok = saturation_ok && s.norm <= s.saturation + 1e-12;
  }

  std::ostringstream ev;
  ev << "t,lhs,rhs\n";
  for (std::size_t i = 0; i < rep.t.size(); ++i)
    ev << fmt17(rep.t[i]) << "," << fmt17(rep.lhs[i]) << ","
       << fmt17(rep.rhs[i]) << "\n";
  emit_csv(st, "evolution_gap.csv", ev.str());

  std::ostringstream cg;
  cg << "distance,t,norm,saturation\n";
  for (const LRSample& s : env.samples)
    cg << fmt17(s.distance) << "," << fmt17(s.t) << "," << fmt17(s.norm) << ","
       << fmt17(s.saturation) << "\n";
  emit_csv(st, "commutator_growth.csv", cg.str());

  return {{"evolution",
           {{"pass", rep.pass},
            {"slack", rep.slack},
            {"max_lhs", *std::max_element(rep.lhs.begin(), rep.lhs.end())}}},
          {"lightcone",
           {{"C", env.C},
            {"mu", env.mu},
            {"v", env.v},
            {"r2", env.r2},
            {"t0_max", t0_max},
            {"saturation_ok", saturation_ok}}}};
}

json run_corr_decay(RunState& st) {
  const ExperimentConfig& cfg = st.cfg;
  const LatticeSpec& lat = cfg.model.lattice;

  const SparseOperator h = cfg.model.build(st.basis);
  const EigenDecomposition eig = run_stage(st.stage_secs, "solve", [&] {
    return eigensolve_full(h, cfg.eig);
  });
  const GroundMultiplet m = detect_multiplet(eig, cfg.q_hint);

  std::vector<Site> targets = cfg.corr_targets;
  if (targets.empty())
    targets = {{1, 0}, {2, 0}, {3, 0}, {3, 1}, {3, 2}};

  std::vector<double> ws(lat.n_sites(), 0.0);
  ws[lat.index(cfg.corr_source)] = 1.0;
  const SparseOperator a = diagonal_from_weights(ws, st.basis);

  json samples = json::array();
  std::vector<double> dist, logv;
  std::ostringstream csv;
  csv << "x1,x2,distance,value,log_value\n";
  bool monotone = true;
  double prev = -1;
  for (const Site& t : targets) {
    std::vector<double> wt(lat.n_sites(), 0.0);
    wt[lat.index(t)] = 1.0;
    const SparseOperator b = diagonal_from_weights(wt, st.basis);
    const double value = std::abs(corr(a, b, m, eig));
    const double d = lat.periodic_distance(cfg.corr_source, t);
    samples.push_back(
        {{"x1", t.x1}, {"x2", t.x2}, {"distance", d}, {"value", value}});
    if (value > 0) {
      dist.push_back(d);
      logv.push_back(std::log(value));
    }
    if (prev >= 0 && value >= prev) monotone = false;
    prev = value;
    csv << t.x1 << "," << t.x2 << "," << fmt17(d) << "," << fmt17(value) << ","
        << fmt17(value > 0 ? std::log(value) : 0.0) << "\n";
  }
  emit_csv(st, "corr_vs_distance.csv", csv.str());

  const LineFit fit = linear_fit(dist, logv);
  return {{"q", m.q},
          {"gap", m.gap},
          {"kappa", -fit.slope},
          {"r2", fit.r2},
          {"monotone", monotone},
          {"samples", samples}};
}

}  // namespace

RunArtifacts run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  if (!cfg.model_valid)
    throw ConfigError("configuration has unresolved diagnostics; not running");

  fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw ResourceError("cannot create output directory " + dir.string() +
                        ": " + ec.message());

  RunArtifacts art;
  art.output_dir = dir.string();
  art.manifest_path = (dir / "manifest.json").string();
  art.report_path = (dir / "report.json").string();

  const std::uint64_t dim_est =
      binomial(cfg.model.lattice.n_sites(), cfg.model.N);
  if (dim_est > 50'000'000ull)
    throw ResourceError("Fock dimension " + std::to_string(dim_est) +
                        " exceeds the desk-scale budget");

  json manifest = {
      {"config_hash", hex16(cfg.content_hash)},
      {"tool_version", kVersionString},
      {"schema_version", 1},
      {"kind", to_string(cfg.kind)},
      {"model", cfg.model.name},
      {"status", "running"},
      {"tolerances",
       {{"eig_tol", cfg.eig.tol},
        {"route_tol", cfg.route_tol},
        {"fd_step", cfg.fd_step},
        {"integrality_tol", 1e-9},
        {"link_floor", 1e-8},
        {"kubo_imag_tol", 1e-10},
        {"multiplet_gap_floor", 1e-10},
        {"cache_verify_tol", 1e-12}}}};
  write_text(art.manifest_path, manifest.dump(2) + "\n");

  std::map<std::string, double> stage_secs;
  const FockBasis basis = run_stage(stage_secs, "basis", [&] {
    return build_basis(cfg.model.lattice, cfg.model.N);
  });
  log << "halled " << kVersionString << ": " << to_string(cfg.kind) << " on "
      << cfg.model.name << " (dimension " << basis.dim() << ")\n";

  RunState st{cfg,           basis, stage_secs, art.csv_paths,
              dir,           log,
              json{{"enabled", false}, {"hits", 0}, {"misses", 0},
                   {"verified", 0}}};

  json payload;
  switch (cfg.kind) {
    case ExperimentKind::Spectrum:
      payload = run_spectrum(st);
      break;
    case ExperimentKind::Chern:
      payload = run_chern(st);
      break;
    case ExperimentKind::Routes:
      payload = run_routes(st);
      break;
    case ExperimentKind::GapScan:
      payload = run_gap_scan(st);
      break;
    case ExperimentKind::Locality:
      payload = run_locality(st);
      break;
    case ExperimentKind::CorrDecay:
      payload = run_corr_decay(st);
      break;
  }

  run_stage(stage_secs, "emit", [&] {
    json report = {{"schema_version", 1},
                   {"config_hash", hex16(cfg.content_hash)},
                   {"kind", to_string(cfg.kind)},
                   {"model", model_json(cfg.model, basis)},
                   {"result", payload}};
    write_text(art.report_path, report.dump(2) + "\n");
    return 0;
  });

  json stages;
  for (const auto& [name, secs] : stage_secs) stages[name] = secs;
  manifest["status"] = "complete";
  manifest["stages"] = stages;
  manifest["cache"] = st.cache_ledger;
  write_text(art.manifest_path, manifest.dump(2) + "\n");

  log << "wrote " << art.report_path << "\n";
  return art;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const MultipletError*>(&e)) return 3;
  if (dynamic_cast<const ToleranceError*>(&e)) return 4;
  if (dynamic_cast<const ResourceError*>(&e)) return 5;
  return 1;
}

std::string error_kind(const std::exception& e) {
  switch (exit_code_for(e)) {
    case 2:
      return "config";
    case 3:
      return "no_multiplet";
    case 4:
      return "tolerance";
    case 5:
      return "resource";
    default:
      return "internal";
  }
}

}  // namespace halled
