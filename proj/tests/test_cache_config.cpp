#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "halled/cache.hpp"
#include "halled/config.hpp"
#include "halled/errors.hpp"
#include "halled/models.hpp"
#include "halled/spectra.hpp"

using namespace halled;
namespace fs = std::filesystem;

namespace {

EigenDecomposition small_solve() {
  std::vector<double> diag;
  for (int i = 0; i < 8; ++i) diag.push_back(0.25 * i * i - 1.0);
  return eigensolve_full(SparseOperator::diagonal(diag));
}

fs::path fresh_dir(const std::string& leaf) {
  fs::path p = fs::temp_directory_path() / leaf;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

BuildResult build_from(const std::string& text) {
  return build_config(parse_config_text(text));
}

bool has_diag(const BuildResult& r, const std::string& needle) {
  for (const Diagnostic& d : r.diagnostics)
    if (d.message.find(needle) != std::string::npos ||
        d.where.find(needle) != std::string::npos)
      return true;
  return false;
}

}  // namespace

TEST_CASE("key hasher uses length-prefixed fields") {
  KeyHasher a;
  a.add_str("ab");
  a.add_str("c");
  KeyHasher b;
  b.add_str("a");
  b.add_str("bc");
  CHECK(a.value() != b.value());

  KeyHasher again;
  again.add_str("ab");
  again.add_str("c");
  CHECK(again.value() == a.value());

  KeyHasher z1, z2;
  z1.add_f64(0.0);
  z2.add_f64(-0.0);
  CHECK(z1.value() != z2.value());  // exact bit pattern, not numeric value

  KeyHasher m1, m2;
  m1.add_u64(7);
  m2.add_u64(8);
  CHECK(m1.value() != m2.value());
}

TEST_CASE("problem keys separate every solve-relevant input") {
  HamiltonianSpec spec = two_well_insulator();
  TwistConfig tc = TwistConfig::plain(0, 0.5, 0, 1.0);
  EigensolveOptions opts;
  const std::uint64_t base = problem_key(spec, tc, 4, false, opts);
  CHECK(base == problem_key(spec, tc, 4, false, opts));
  CHECK(base != problem_key(spec, TwistConfig::plain(0, 0.51, 0, 1.0), 4,
                            false, opts));
  CHECK(base != problem_key(spec, TwistConfig::plain(1, 0.5, 0, 1.0), 4,
                            false, opts));
  CHECK(base != problem_key(spec, tc, 5, false, opts));
  CHECK(base != problem_key(spec, tc, 4, true, opts));
  EigensolveOptions other = opts;
  other.seed ^= 1;
  CHECK(base != problem_key(spec, tc, 4, false, other));
  CHECK(base != problem_key(two_well_insulator(0.031), tc, 4, false, opts));
}

TEST_CASE("cache stores and reloads decompositions bitwise") {
  fs::path dir = fresh_dir("halled_cache_test");
  EigenCache cache(dir.string());
  REQUIRE(cache.enabled());
  CHECK(cache.root() == dir.string());

  EigenDecomposition eig = small_solve();
  cache.store(42, eig);
  auto back = cache.load(42);
  REQUIRE(back.has_value());
  CHECK(back->eigenvalues == eig.eigenvalues);
  CHECK(back->eigenvectors == eig.eigenvectors);
  CHECK(back->full == eig.full);
  CHECK(!cache.load(43).has_value());

  auto entries = cache.inspect();
  REQUIRE(entries.size() == 1);
  CHECK(entries[0].dim == 8);
  CHECK(entries[0].count == 8);
  CHECK(entries[0].full);
  CHECK(entries[0].bytes > 0);

  SUBCASE("a truncated file reads as a miss") {
    fs::path f = dir / entries[0].file;
    REQUIRE(fs::exists(f));
    fs::resize_file(f, fs::file_size(f) / 2);
    CHECK(!cache.load(42).has_value());
  }
  SUBCASE("garbage content reads as a miss") {
    fs::path f = dir / entries[0].file;
    std::ofstream(f, std::ios::trunc) << "not an eigendecomposition";
    CHECK(!cache.load(42).has_value());
  }
  SUBCASE("clear removes everything") {
    CHECK(cache.clear() == 1);
    CHECK(cache.inspect().empty());
    CHECK(!cache.load(42).has_value());
  }
  fs::remove_all(dir);
}

TEST_CASE("cache without a root is disabled") {
  unsetenv("HALLED_CACHE_DIR");
  EigenCache off("");
  CHECK(!off.enabled());
  EigenDecomposition eig = small_solve();
  off.store(9, eig);  // silently dropped
  CHECK(!off.load(9).has_value());
  CHECK(off.inspect().empty());
  CHECK(off.clear() == 0);

  SUBCASE("the environment variable supplies the root") {
    fs::path dir = fresh_dir("halled_cache_env");
    setenv("HALLED_CACHE_DIR", dir.string().c_str(), 1);
    EigenCache env("");
    CHECK(env.enabled());
    CHECK(env.root() == dir.string());
    unsetenv("HALLED_CACHE_DIR");
    fs::remove_all(dir);
  }
}

TEST_CASE("config text parses into nested blocks") {
  const std::string text =
      "a 1 2\n"
      "blk {\n"
      "  inner {\n"
      "    x 5\n"
      "  }\n"
      "  y 7 # trailing comment\n"
      "}\n"
      "# whole-line comment\n"
      "a 3\n";
  ConfigNode root = parse_config_text(text);
  REQUIRE(root.entries.size() == 2);
  CHECK(root.entries[0].first == "a");
  CHECK(root.entries[0].second == std::vector<std::string>{"1", "2"});
  CHECK(root.entries[1].second == std::vector<std::string>{"3"});
  const ConfigNode* blk = root.child("blk");
  REQUIRE(blk != nullptr);
  REQUIRE(blk->child("inner") != nullptr);
  REQUIRE(blk->child("inner")->find("x") != nullptr);
  CHECK(blk->child("inner")->find("x")->at(0) == "5");
  REQUIRE(blk->find("y") != nullptr);
  CHECK(blk->find("y")->size() == 1);  // comment stripped
  CHECK(root.child("missing") == nullptr);
  CHECK(!root.has("zzz"));
}

TEST_CASE("config parse errors carry the line") {
  CHECK_THROWS_AS(parse_config_text("blk {\n x 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("}\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("a b {\n}\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("a b }\n"), ConfigError);
  try {
    parse_config_text("x 1\n}\n", "bad.cfg");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("bad.cfg:2") != std::string::npos);
  }
}

TEST_CASE("overrides patch the parsed tree") {
  ConfigNode root = parse_config_text(
      "output runs/a\n"
      "model {\n"
      "  preset open_chain\n"
      "  n 6\n"
      "}\n");
  apply_override(root, "output=runs/b");
  CHECK(root.find("output")->at(0) == "runs/b");
  apply_override(root, "model.n=8");
  CHECK(root.child("model")->find("n")->at(0) == "8");
  apply_override(root, "model.t=0.5");
  CHECK(root.child("model")->find("t")->at(0) == "0.5");
  apply_override(root, "experiment.kind=spectrum");
  REQUIRE(root.child("experiment") != nullptr);
  CHECK(root.child("experiment")->find("kind")->at(0) == "spectrum");
  apply_override(root, "experiment.etas=0.1,0.05,0.02");
  CHECK(root.child("experiment")->find("etas")->size() == 3);
  apply_override(root, "experiment.etas=");
  CHECK(root.child("experiment")->find("etas")->empty());
  CHECK_THROWS_AS(apply_override(root, "no_equals_sign"), ConfigError);
}

TEST_CASE("a complete config builds without diagnostics") {
  BuildResult r = build_from(
      "output runs/demo\n"
      "workers 1\n"
      "eig {\n"
      "  tol 1e-9\n"
      "  dense_threshold 5000\n"
      "}\n"
      "model {\n"
      "  preset open_chain\n"
      "  n 6\n"
      "  t 1.0\n"
      "  tilt 0.07\n"
      "  N 2\n"
      "}\n"
      "experiment {\n"
      "  kind spectrum\n"
      "  levels 6\n"
      "  at 0.3 0.9\n"
      "}\n");
  CHECK(r.diagnostics.empty());
  CHECK(r.config.model_valid);
  CHECK(r.config.kind == ExperimentKind::Spectrum);
  CHECK(r.config.output_dir == "runs/demo");
  CHECK(r.config.model.name == "open_chain");
  CHECK(r.config.levels == 6);
  CHECK(r.config.at.phi1 == doctest::Approx(0.3));
  CHECK(r.config.at.phi2 == doctest::Approx(0.9));
  CHECK(r.config.eig.tol == doctest::Approx(1e-9));
  CHECK(r.config.eig.dense_threshold == 5000);
}

TEST_CASE("config diagnostics aggregate instead of failing fast") {
  SUBCASE("unknown preset") {
    BuildResult r = build_from(
        "model {\n  preset banana\n}\n"
        "experiment {\n  kind spectrum\n}\n");
    CHECK(!r.diagnostics.empty());
    CHECK(!r.config.model_valid);
    CHECK(has_diag(r, "preset"));
  }
  SUBCASE("incommensurate flux") {
    BuildResult r = build_from(
        "model {\n  preset hofstadter\n  size 6 3\n  flux 1 4\n  t 1.0\n"
        "  N 2\n}\n"
        "experiment {\n  kind spectrum\n}\n");
    CHECK(!r.config.model_valid);
    CHECK(has_diag(r, "incommensurate"));
  }
  SUBCASE("missing model block") {
    BuildResult r = build_from("experiment {\n  kind spectrum\n}\n");
    CHECK(has_diag(r, "model"));
  }
  SUBCASE("missing experiment block") {
    BuildResult r = build_from(
        "model {\n  preset two_well_insulator\n}\n");
    CHECK(has_diag(r, "experiment"));
  }
  SUBCASE("duplicate experiment blocks") {
    BuildResult r = build_from(
        "model {\n  preset two_well_insulator\n}\n"
        "experiment {\n  kind spectrum\n}\n"
        "experiment {\n  kind chern\n}\n");
    CHECK(has_diag(r, "experiment"));
  }
  SUBCASE("unknown keys are reported, not ignored") {
    BuildResult r = build_from(
        "model {\n  preset two_well_insulator\n}\n"
        "experiment {\n  kind spectrum\n  levles 5\n}\n");
    CHECK(has_diag(r, "levles"));
  }
  SUBCASE("full-spectrum kinds respect the dense threshold") {
    BuildResult r = build_from(
        "model {\n  preset hofstadter\n  size 6 3\n  flux 1 3\n  t 1.0\n"
        "  N 6\n}\n"
        "experiment {\n  kind routes\n  twist 0.1 0.2\n}\n");
    CHECK(has_diag(r, "dense threshold"));
    CHECK(has_diag(r, "18564"));
  }
  SUBCASE("chern without kubo averaging has no dense requirement") {
    BuildResult r = build_from(
        "model {\n  preset hofstadter\n  size 6 3\n  flux 1 3\n  t 1.0\n"
        "  N 6\n}\n"
        "experiment {\n  kind chern\n  grid 4\n  q 1\n}\n");
    CHECK(r.diagnostics.empty());
    CHECK(r.config.q_hint == 1);
  }
  SUBCASE("locality probe must sit inside the restricted set") {
    BuildResult r = build_from(
        "model {\n  preset open_chain\n  n 6\n  t 1.0\n  tilt 0.07\n"
        "  N 2\n}\n"
        "experiment {\n  kind locality\n  omega_count 4\n  probe_site 4\n}\n");
    CHECK(has_diag(r, "probe"));
  }
  SUBCASE("routes need at least one twist point") {
    BuildResult r = build_from(
        "model {\n  preset two_well_insulator\n}\n"
        "experiment {\n  kind routes\n  random_twists 0\n}\n");
    CHECK(!r.diagnostics.empty());
  }
}

TEST_CASE("explicit models come in through the grammar") {
  BuildResult r = build_from(
      "model {\n"
      "  preset explicit\n"
      "  name handmade\n"
      "  size 4 2\n"
      "  N 2\n"
      "  range 2\n"
      "  hop 0 1 -1.0\n"
      "  hop 1 2 -0.5 0.25\n"
      "  onsite 3 0.7\n"
      "  interaction 0 1 0.4\n"
      "}\n"
      "experiment {\n  kind spectrum\n}\n");
  CHECK(r.diagnostics.empty());
  REQUIRE(r.config.model_valid);
  const HamiltonianSpec& m = r.config.model;
  CHECK(m.name == "handmade");
  CHECK(m.lattice.L1 == 4);
  CHECK(m.N == 2);
  CHECK(m.hoppings.at(0, 1) == cplx(-1.0, 0.0));
  CHECK(m.hoppings.at(1, 2) == cplx(-0.5, 0.25));
  CHECK(m.hoppings.at(2, 1) == cplx(-0.5, -0.25));
  // onsite rows become single-site interaction terms, in grammar order.
  REQUIRE(m.interactions.terms.size() == 2);
  CHECK(m.interactions.terms[0].sites == std::vector<int>{3});
  CHECK(m.interactions.terms[0].u == doctest::Approx(0.7));
  CHECK(m.interactions.terms[1].u == doctest::Approx(0.4));
}

TEST_CASE("cache settings flow into the config") {
  BuildResult r = build_from(
      "cache on /tmp/somewhere\n"
      "model {\n  preset two_well_insulator\n}\n"
      "experiment {\n  kind chern\n  grid 4\n}\n");
  CHECK(r.config.cache_enabled);
  CHECK(r.config.cache_dir == "/tmp/somewhere");
  BuildResult off = build_from(
      "cache off\n"
      "model {\n  preset two_well_insulator\n}\n"
      "experiment {\n  kind chern\n  grid 4\n}\n");
  CHECK(!off.config.cache_enabled);
}

TEST_CASE("content hashes track text and overrides") {
  const std::uint64_t h = config_hash("model {}\n", {});
  CHECK(h == config_hash("model {}\n", {}));
  CHECK(h != config_hash("model { }\n", {}));
  CHECK(h != config_hash("model {}\n", {"a.b=1"}));
  CHECK(config_hash("x 1\n", {"a=1", "b=2"}) !=
        config_hash("x 1\n", {"b=2", "a=1"}));
}
