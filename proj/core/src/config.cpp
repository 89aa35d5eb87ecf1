#include "halled/config.hpp"

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "halled/cache.hpp"
#include "halled/errors.hpp"
#include "halled/models.hpp"

namespace halled {

namespace {

std::vector<std::string> split_tokens(const std::string& line) {
  std::vector<std::string> toks;
  std::string cur;
  for (char ch : line) {
    if (ch == '#') break;
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) {
        toks.push_back(cur);
        cur.clear();
      }
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) toks.push_back(cur);
  return toks;
}

bool parse_long(const std::string& s, long& out) {
  errno = 0;
  char* end = nullptr;
  long v = std::strtol(s.c_str(), &end, 0);
  if (errno != 0 || end == s.c_str() || *end != '\0') return false;
  out = v;
  return true;
}

bool parse_double(const std::string& s, double& out) {
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE) return false;
  out = v;
  return true;
}

bool parse_onoff(const std::string& s, bool& out) {
  if (s == "on" || s == "true" || s == "1") {
    out = true;
    return true;
  }
  if (s == "off" || s == "false" || s == "0") {
    out = false;
    return true;
  }
  return false;
}

// Typed access to one block. Getters fall back to the supplied default on a
// missing key and record a diagnostic on a malformed one; finish() flags
// every key that was never requested, so typos surface during validate.
class Reader {
 public:
  Reader(const ConfigNode* node, std::string where,
         std::vector<Diagnostic>* diags)
      : node_(node), where_(std::move(where)), diags_(diags) {}

  bool present() const { return node_ != nullptr; }

  bool has(const std::string& key) {
    if (node_ && node_->has(key)) {
      used_.insert(key);
      return true;
    }
    return false;
  }

  long integer(const std::string& key, long fallback) {
    const auto* v = get(key);
    if (!v) return fallback;
    long out;
    if (v->size() != 1 || !parse_long((*v)[0], out)) {
      fail(key, "expects one integer");
      return fallback;
    }
    return out;
  }

  double real(const std::string& key, double fallback) {
    const auto* v = get(key);
    if (!v) return fallback;
    double out;
    if (v->size() != 1 || !parse_double((*v)[0], out)) {
      fail(key, "expects one number");
      return fallback;
    }
    return out;
  }

  bool flag(const std::string& key, bool fallback) {
    const auto* v = get(key);
    if (!v) return fallback;
    bool out;
    if (v->size() != 1 || !parse_onoff((*v)[0], out)) {
      fail(key, "expects on or off");
      return fallback;
    }
    return out;
  }

  std::string word(const std::string& key, const std::string& fallback) {
    const auto* v = get(key);
    if (!v) return fallback;
    if (v->size() != 1) {
      fail(key, "expects one word");
      return fallback;
    }
    return (*v)[0];
  }

  void int_pair(const std::string& key, long& a, long& b) {
    const auto* v = get(key);
    if (!v) return;
    long x, y;
    if (v->size() != 2 || !parse_long((*v)[0], x) || !parse_long((*v)[1], y)) {
      fail(key, "expects two integers");
      return;
    }
    a = x;
    b = y;
  }

  void real_pair(const std::string& key, double& a, double& b) {
    const auto* v = get(key);
    if (!v) return;
    double x, y;
    if (v->size() != 2 || !parse_double((*v)[0], x) ||
        !parse_double((*v)[1], y)) {
      fail(key, "expects two numbers");
      return;
    }
    a = x;
    b = y;
  }

  std::vector<double> reals(const std::string& key,
                            std::vector<double> fallback) {
    const auto* v = get(key);
    if (!v) return fallback;
    std::vector<double> out;
    for (const std::string& s : *v) {
      double d;
      if (!parse_double(s, d)) {
        fail(key, "expects numbers, got '" + s + "'");
        return fallback;
      }
      out.push_back(d);
    }
    return out;
  }

  std::vector<int> integers(const std::string& key, std::vector<int> fallback) {
    const auto* v = get(key);
    if (!v) return fallback;
    std::vector<int> out;
    for (const std::string& s : *v) {
      long d;
      if (!parse_long(s, d)) {
        fail(key, "expects integers, got '" + s + "'");
        return fallback;
      }
      out.push_back(static_cast<int>(d));
    }
    return out;
  }

  // All entries under a repeated key, in file order.
  std::vector<const std::vector<std::string>*> rows(const std::string& key) {
    used_.insert(key);
    std::vector<const std::vector<std::string>*> out;
    if (!node_) return out;
    for (const auto& [k, v] : node_->entries)
      if (k == key) out.push_back(&v);
    return out;
  }

  void fail(const std::string& key, const std::string& msg) {
    diags_->push_back({where_ + "." + key, msg});
  }

  void finish(const std::set<std::string>& allowed_children = {}) {
    if (!node_) return;
    std::set<std::string> reported;
    for (const auto& [k, v] : node_->entries) {
      (void)v;
      if (!used_.count(k) && reported.insert(k).second)
        diags_->push_back({where_ + "." + k, "unknown key"});
    }
    for (const ConfigNode& c : node_->children)
      if (!allowed_children.count(c.name))
        diags_->push_back({where_ + "." + c.name, "unexpected block"});
  }

 private:
  const std::vector<std::string>* get(const std::string& key) {
    if (!node_) return nullptr;
    const auto* v = node_->find(key);
    if (v) used_.insert(key);
    return v;
  }

  const ConfigNode* node_;
  std::string where_;
  std::vector<Diagnostic>* diags_;
  std::set<std::string> used_;
};

HamiltonianSpec read_model(const ConfigNode* mnode,
                           std::vector<Diagnostic>& diags, bool& ok) {
  ok = false;
  HamiltonianSpec spec;
  if (!mnode) {
    diags.push_back({"model", "missing model block"});
    return spec;
  }
  Reader r(mnode, "model", &diags);
  const std::string preset = r.word("preset", "");
  if (preset.empty()) {
    diags.push_back({"model.preset", "missing preset name"});
    return spec;
  }
  const std::size_t before = diags.size();
  try {
    if (preset == "hofstadter") {
      long L1 = 4, L2 = 4, fn = 1, fd = 4;
      r.int_pair("size", L1, L2);
      r.int_pair("flux", fn, fd);
      const double t = r.real("t", 1.0);
      const long N = r.integer("N", 2);
      spec = hofstadter(static_cast<int>(L1), static_cast<int>(L2),
                        static_cast<int>(fn), static_cast<int>(fd), t);
      spec.N = static_cast<int>(N);
    } else if (preset == "hofstadter_hubbard") {
      long L1 = 4, L2 = 4, fn = 1, fd = 4;
      r.int_pair("size", L1, L2);
      r.int_pair("flux", fn, fd);
      const double t = r.real("t", 1.0);
      const double v = r.real("v", 0.0);
      const long N = r.integer("N", 2);
      std::map<int, double> onsite;
      for (const auto* row : r.rows("onsite")) {
        long s;
        double u;
        if (row->size() != 2 || !parse_long((*row)[0], s) ||
            !parse_double((*row)[1], u)) {
          r.fail("onsite", "expects 'onsite <site> <energy>'");
          continue;
        }
        onsite[static_cast<int>(s)] += u;
      }
      spec = hofstadter_hubbard(static_cast<int>(L1), static_cast<int>(L2),
                                static_cast<int>(fn), static_cast<int>(fd), t,
                                v, static_cast<int>(N), onsite);
    } else if (preset == "atomic_insulator") {
      long L1 = 4, L2 = 2;
      r.int_pair("size", L1, L2);
      const long N = r.integer("N", 1);
      const std::vector<double> pots = r.reals("potentials", {});
      spec = atomic_insulator(static_cast<int>(L1), static_cast<int>(L2), pots,
                              static_cast<int>(N));
    } else if (preset == "open_chain") {
      const long n = r.integer("n", 6);
      const double t = r.real("t", 1.0);
      const double tilt = r.real("tilt", 0.05);
      const long N = r.integer("N", 2);
      spec = open_chain(static_cast<int>(n), t, tilt, static_cast<int>(N));
    } else if (preset == "two_well_insulator") {
      const double t = r.real("t", 0.03);
      const double v = r.real("v", 0.5);
      spec = two_well_insulator(t, v);
    } else if (preset == "correlation_probe_model") {
      const double t = r.real("t", 0.45);
      const double depth = r.real("depth", 2.2);
      spec = correlation_probe_model(t, depth);
    } else if (preset == "explicit") {
      spec.name = r.word("name", "explicit");
      long L1 = 4, L2 = 2;
      r.int_pair("size", L1, L2);
      spec.lattice = {static_cast<int>(L1), static_cast<int>(L2)};
      spec.lattice.validate();
      spec.N = static_cast<int>(r.integer("N", 1));
      const int range = static_cast<int>(r.integer("range", 1));
      spec.hoppings.range = range;
      spec.interactions.range = range;
      for (const auto* row : r.rows("hop")) {
        long a, b;
        double re, im = 0;
        const bool shape =
            (row->size() == 3 || row->size() == 4) &&
            parse_long((*row)[0], a) && parse_long((*row)[1], b) &&
            parse_double((*row)[2], re) &&
            (row->size() == 3 || parse_double((*row)[3], im));
        if (!shape) {
          r.fail("hop", "expects 'hop <site> <site> <re> [im]'");
          continue;
        }
        spec.hoppings.add(static_cast<int>(a), static_cast<int>(b),
                          cplx(re, im));
      }
      for (const auto* row : r.rows("onsite")) {
        long s;
        double u;
        if (row->size() != 2 || !parse_long((*row)[0], s) ||
            !parse_double((*row)[1], u)) {
          r.fail("onsite", "expects 'onsite <site> <energy>'");
          continue;
        }
        spec.interactions.add_onsite(static_cast<int>(s), u);
      }
      for (const auto* row : r.rows("interaction")) {
        double u;
        std::vector<int> sites;
        bool shape = row->size() >= 2 && parse_double(row->back(), u);
        for (std::size_t i = 0; shape && i + 1 < row->size(); ++i) {
          long s;
          shape = parse_long((*row)[i], s);
          if (shape) sites.push_back(static_cast<int>(s));
        }
        if (!shape) {
          r.fail("interaction", "expects 'interaction <site>... <strength>'");
          continue;
        }
        spec.interactions.add(std::move(sites), u);
      }
      spec.hoppings.validate(spec.lattice);
      spec.interactions.validate(spec.lattice);
    } else {
      diags.push_back({"model.preset", "unknown preset '" + preset + "'"});
      return spec;
    }
  } catch (const ConfigError& e) {
    diags.push_back({"model", e.what()});
    return spec;
  }
  r.finish();
  ok = diags.size() == before;
  return spec;
}

}  // namespace

const ConfigNode* ConfigNode::child(const std::string& child_name) const {
  for (const ConfigNode& c : children)
    if (c.name == child_name) return &c;
  return nullptr;
}

const std::vector<std::string>* ConfigNode::find(const std::string& key) const {
  for (const auto& [k, v] : entries)
    if (k == key) return &v;
  return nullptr;
}

ConfigNode parse_config_text(const std::string& text,
                             const std::string& origin) {
  ConfigNode root;
  root.name = "<root>";
  std::vector<ConfigNode*> stack{&root};
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::vector<std::string> toks = split_tokens(line);
    if (toks.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (toks.back() == "}") {
      if (toks.size() != 1) throw ConfigError(where + ": '}' must stand alone");
      if (stack.size() == 1) throw ConfigError(where + ": unmatched '}'");
      stack.pop_back();
      continue;
    }
    if (toks.back() == "{") {
      if (toks.size() != 2)
        throw ConfigError(where + ": block header must read 'name {'");
      // Opening a block appends only to the children of the innermost open
      // node, so the addresses held for the outer nodes stay valid.
      stack.back()->children.push_back(ConfigNode{toks[0], {}, {}});
      stack.push_back(&stack.back()->children.back());
      continue;
    }
    stack.back()->entries.emplace_back(
        toks[0], std::vector<std::string>(toks.begin() + 1, toks.end()));
  }
  if (stack.size() != 1)
    throw ConfigError(origin + ": unclosed block '" + stack.back()->name + "'");
  return root;
}

ConfigNode load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

void apply_override(ConfigNode& root, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override must read path.key=value, got: " + assignment);
  const std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);

  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    if (dot == std::string::npos) {
      parts.push_back(path.substr(start));
      break;
    }
    parts.push_back(path.substr(start, dot - start));
    start = dot + 1;
  }
  for (const std::string& p : parts)
    if (p.empty())
      throw ConfigError("override has an empty path segment: " + assignment);

  ConfigNode* node = &root;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    ConfigNode* next = nullptr;
    for (ConfigNode& c : node->children)
      if (c.name == parts[i]) {
        next = &c;
        break;
      }
    if (!next) {
      node->children.push_back(ConfigNode{parts[i], {}, {}});
      next = &node->children.back();
    }
    node = next;
  }

  std::vector<std::string> values;
  std::string cur;
  for (char ch : value) {
    if (ch == ',') {
      values.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  values.push_back(cur);
  if (values.size() == 1 && values[0].empty()) values.clear();

  for (auto& [k, v] : node->entries)
    if (k == parts.back()) {
      v = values;
      return;
    }
  node->entries.emplace_back(parts.back(), values);
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Spectrum:
      return "spectrum";
    case ExperimentKind::Chern:
      return "chern";
    case ExperimentKind::Routes:
      return "routes";
    case ExperimentKind::GapScan:
      return "gap_scan";
    case ExperimentKind::Locality:
      return "locality";
    case ExperimentKind::CorrDecay:
      return "corr_decay";
  }
  return "unknown";
}

BuildResult build_config(const ConfigNode& root) {
  BuildResult out;
  ExperimentConfig& cfg = out.config;
  std::vector<Diagnostic>& diags = out.diagnostics;

  Reader top(&root, "top", &diags);
  cfg.output_dir = top.word("output", cfg.output_dir);
  cfg.workers = static_cast<int>(top.integer("workers", cfg.workers));
  if (cfg.workers < 1) diags.push_back({"top.workers", "must be >= 1"});
  if (top.has("cache")) {
    const auto* v = root.find("cache");
    bool on = false;
    if (v->empty() || v->size() > 2 || !parse_onoff((*v)[0], on)) {
      diags.push_back({"top.cache", "expects 'cache on|off [dir]'"});
    } else {
      cfg.cache_enabled = on;
      if (v->size() == 2) cfg.cache_dir = (*v)[1];
    }
  }

  Reader er(root.child("eig"), "eig", &diags);
  if (er.present()) {
    cfg.eig.tol = er.real("tol", cfg.eig.tol);
    cfg.eig.max_basis =
        static_cast<int>(er.integer("max_basis", cfg.eig.max_basis));
    cfg.eig.max_restarts =
        static_cast<int>(er.integer("max_restarts", cfg.eig.max_restarts));
    cfg.eig.dense_threshold =
        static_cast<int>(er.integer("dense_threshold", cfg.eig.dense_threshold));
    cfg.eig.dense_fallback =
        static_cast<int>(er.integer("dense_fallback", cfg.eig.dense_fallback));
    cfg.eig.seed = static_cast<std::uint64_t>(
        er.integer("seed", static_cast<long>(cfg.eig.seed)));
    if (cfg.eig.tol <= 0) diags.push_back({"eig.tol", "must be positive"});
    if (cfg.eig.max_basis < 4)
      diags.push_back({"eig.max_basis", "must be at least 4"});
    er.finish();
  }

  bool model_ok = false;
  cfg.model = read_model(root.child("model"), diags, model_ok);
  cfg.model_valid = model_ok;

  int n_exp = 0;
  for (const ConfigNode& c : root.children)
    if (c.name == "experiment") ++n_exp;
  if (n_exp == 0) diags.push_back({"experiment", "missing experiment block"});
  if (n_exp > 1)
    diags.push_back({"experiment", "exactly one experiment block allowed, " +
                                       std::to_string(n_exp) + " given"});

  const ConfigNode* enode = root.child("experiment");
  Reader ex(enode, "experiment", &diags);
  bool kind_known = false;
  const std::string kind_word = ex.word("kind", "");
  if (enode) {
    static const std::map<std::string, ExperimentKind> kinds = {
        {"spectrum", ExperimentKind::Spectrum},
        {"chern", ExperimentKind::Chern},
        {"routes", ExperimentKind::Routes},
        {"gap_scan", ExperimentKind::GapScan},
        {"locality", ExperimentKind::Locality},
        {"corr_decay", ExperimentKind::CorrDecay}};
    auto it = kinds.find(kind_word);
    if (it == kinds.end()) {
      diags.push_back({"experiment.kind",
                       kind_word.empty()
                           ? std::string("missing experiment kind")
                           : "unknown kind '" + kind_word + "'"});
    } else {
      cfg.kind = it->second;
      kind_known = true;
    }
  }

  if (kind_known) {
    if (ex.has("q")) cfg.q_hint = static_cast<int>(ex.integer("q", 1));
    switch (cfg.kind) {
      case ExperimentKind::Spectrum: {
        cfg.levels = static_cast<int>(ex.integer("levels", cfg.levels));
        ex.real_pair("at", cfg.at.phi1, cfg.at.phi2);
        if (cfg.levels < 1)
          diags.push_back({"experiment.levels", "must be >= 1"});
        break;
      }
      case ExperimentKind::Chern:
      case ExperimentKind::GapScan: {
        cfg.grid = static_cast<int>(ex.integer("grid", cfg.grid));
        cfg.k1 = static_cast<int>(ex.integer("k1", cfg.k1));
        cfg.k2 = static_cast<int>(ex.integer("k2", cfg.k2));
        cfg.allow_refine = ex.flag("refine", cfg.allow_refine);
        if (cfg.grid < 2) diags.push_back({"experiment.grid", "must be >= 2"});
        if (cfg.kind == ExperimentKind::Chern) {
          cfg.kubo_average = ex.flag("kubo_average", cfg.kubo_average);
          cfg.alphas = ex.reals("alphas", cfg.alphas);
          cfg.deform_site =
              static_cast<int>(ex.integer("deform_site", cfg.deform_site));
          cfg.deformed_cut = ex.flag("deformed_cut", cfg.deformed_cut);
          long a1 = cfg.cut_anchor.x1, a2 = cfg.cut_anchor.x2;
          ex.int_pair("cut_anchor", a1, a2);
          cfg.cut_anchor = {static_cast<int>(a1), static_cast<int>(a2)};
          cfg.cut_r0 = static_cast<int>(ex.integer("cut_r0", cfg.cut_r0));
          cfg.cut_amplitude = ex.real("cut_amplitude", cfg.cut_amplitude);
          cfg.deform_seed = static_cast<std::uint64_t>(
              ex.integer("deform_seed", static_cast<long>(cfg.deform_seed)));
          if (cfg.cut_r0 < 1)
            diags.push_back({"experiment.cut_r0", "must be >= 1"});
        }
        break;
      }
      case ExperimentKind::Routes: {
        for (const auto* row : ex.rows("twist")) {
          TwistPoint p;
          if (row->size() != 2 || !parse_double((*row)[0], p.phi1) ||
              !parse_double((*row)[1], p.phi2)) {
            ex.fail("twist", "expects 'twist <phi1> <phi2>'");
            continue;
          }
          cfg.twists.push_back(p);
        }
        cfg.random_twists =
            static_cast<int>(ex.integer("random_twists", cfg.random_twists));
        cfg.twist_seed = static_cast<std::uint64_t>(
            ex.integer("twist_seed", static_cast<long>(cfg.twist_seed)));
        cfg.etas = ex.reals("etas", cfg.etas);
        cfg.switch_times = ex.reals("switch_times", cfg.switch_times);
        cfg.window_halfwidth = static_cast<int>(
            ex.integer("window_halfwidth", cfg.window_halfwidth));
        cfg.region_halfwidth = static_cast<int>(
            ex.integer("region_halfwidth", cfg.region_halfwidth));
        cfg.anchor_row =
            static_cast<int>(ex.integer("anchor_row", cfg.anchor_row));
        cfg.k1 = static_cast<int>(ex.integer("k1", cfg.k1));
        cfg.k2 = static_cast<int>(ex.integer("k2", cfg.k2));
        cfg.fd_step = ex.real("fd_step", cfg.fd_step);
        cfg.route_tol = ex.real("route_tol", cfg.route_tol);
        if (cfg.random_twists < 0)
          diags.push_back({"experiment.random_twists", "must be >= 0"});
        if (cfg.twists.empty() && cfg.random_twists == 0)
          diags.push_back(
              {"experiment", "needs at least one twist or random_twists > 0"});
        if (cfg.fd_step <= 0)
          diags.push_back({"experiment.fd_step", "must be positive"});
        if (cfg.route_tol <= 0)
          diags.push_back({"experiment.route_tol", "must be positive"});
        for (double eta : cfg.etas)
          if (eta <= 0)
            diags.push_back({"experiment.etas", "entries must be positive"});
        for (double T : cfg.switch_times)
          if (T <= 0)
            diags.push_back(
                {"experiment.switch_times", "entries must be positive"});
        break;
      }
      case ExperimentKind::Locality: {
        cfg.omega_count =
            static_cast<int>(ex.integer("omega_count", cfg.omega_count));
        cfg.probe_site =
            static_cast<int>(ex.integer("probe_site", cfg.probe_site));
        cfg.t_max = ex.real("t_max", cfg.t_max);
        cfg.t_samples = static_cast<int>(ex.integer("t_samples", cfg.t_samples));
        cfg.lr_distances = ex.integers("lr_distances", cfg.lr_distances);
        if (cfg.omega_count < 1)
          diags.push_back({"experiment.omega_count", "must be >= 1"});
        if (cfg.probe_site < 0 || cfg.probe_site >= cfg.omega_count)
          diags.push_back({"experiment.probe_site",
                           "must lie inside the restricted set (0 <= site < "
                           "omega_count)"});
        if (cfg.t_samples < 2)
          diags.push_back({"experiment.t_samples", "must be >= 2"});
        if (cfg.t_max <= 0)
          diags.push_back({"experiment.t_max", "must be positive"});
        break;
      }
      case ExperimentKind::CorrDecay: {
        long s1 = cfg.corr_source.x1, s2 = cfg.corr_source.x2;
        ex.int_pair("source", s1, s2);
        cfg.corr_source = {static_cast<int>(s1), static_cast<int>(s2)};
        for (const auto* row : ex.rows("target")) {
          long x1, x2;
          if (row->size() != 2 || !parse_long((*row)[0], x1) ||
              !parse_long((*row)[1], x2)) {
            ex.fail("target", "expects 'target <x1> <x2>'");
            continue;
          }
          cfg.corr_targets.push_back({static_cast<int>(x1),
                                      static_cast<int>(x2)});
        }
        break;
      }
    }
    ex.finish();
  }
  top.finish({"model", "experiment", "eig"});

  // Cross-field checks that need the lattice.
  if (model_ok) {
    const LatticeSpec& lat = cfg.model.lattice;
    const bool uses_cuts = cfg.kind == ExperimentKind::Chern ||
                           cfg.kind == ExperimentKind::GapScan ||
                           cfg.kind == ExperimentKind::Routes;
    if (kind_known && uses_cuts) {
      if (cfg.k1 < 0 || cfg.k1 >= lat.L1)
        diags.push_back({"experiment.k1", "cut position outside [0, L1)"});
      if (cfg.k2 < 0 || cfg.k2 >= lat.L2)
        diags.push_back({"experiment.k2", "cut position outside [0, L2)"});
    }
    if (kind_known && cfg.kind == ExperimentKind::Chern) {
      if (cfg.deform_site < 0 || cfg.deform_site >= lat.n_sites())
        diags.push_back({"experiment.deform_site", "site index out of range"});
    }
    if (kind_known && cfg.kind == ExperimentKind::Routes) {
      if (2 * cfg.region_halfwidth + 1 > std::min(lat.L1, lat.L2))
        diags.push_back({"experiment.region_halfwidth",
                         "charge region does not fit the torus"});
      if (cfg.anchor_row < 0 || cfg.anchor_row >= lat.L2)
        diags.push_back({"experiment.anchor_row", "row outside [0, L2)"});
    }
    if (kind_known && cfg.kind == ExperimentKind::Locality) {
      if (cfg.omega_count > lat.L1)
        diags.push_back(
            {"experiment.omega_count", "exceeds the chain length"});
      for (int d : cfg.lr_distances)
        if (d < 1 || d >= lat.L1)
          diags.push_back(
              {"experiment.lr_distances", "distance outside [1, chain)"});
    }
    if (kind_known && cfg.kind == ExperimentKind::CorrDecay) {
      auto in_bounds = [&](Site s) {
        return s.x1 >= 0 && s.x1 < lat.L1 && s.x2 >= 0 && s.x2 < lat.L2;
      };
      if (!in_bounds(cfg.corr_source))
        diags.push_back({"experiment.source", "site outside the lattice"});
      for (Site s : cfg.corr_targets)
        if (!in_bounds(s))
          diags.push_back({"experiment.target", "site outside the lattice"});
    }
    if (cfg.model.N < 1 || cfg.model.N > lat.n_sites())
      diags.push_back(
          {"model.N", "particle number outside [1, n_sites]"});
    else if (kind_known) {
      // Kinds that diagonalize the full spectrum need the dense solver.
      const bool needs_full =
          cfg.kind == ExperimentKind::Routes ||
          cfg.kind == ExperimentKind::CorrDecay ||
          cfg.kind == ExperimentKind::Locality ||
          (cfg.kind == ExperimentKind::Chern && cfg.kubo_average);
      const std::uint64_t dim = binomial(lat.n_sites(), cfg.model.N);
      if (needs_full &&
          dim > static_cast<std::uint64_t>(cfg.eig.dense_threshold))
        diags.push_back(
            {"experiment",
             to_string(cfg.kind) + " needs full spectra: dimension " +
                 std::to_string(dim) + " exceeds the dense threshold " +
                 std::to_string(cfg.eig.dense_threshold)});
    }
  }

  return out;
}

std::uint64_t config_hash(const std::string& text,
                          const std::vector<std::string>& overrides) {
  KeyHasher h;
  h.add_str("halled.config.v1");
  h.add_str(text);
  for (const std::string& o : overrides) h.add_str(o);
  return h.value();
}

}  // namespace halled
