#include "halled/cache.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <utility>
#include <vector>

#include "halled/errors.hpp"

namespace fs = std::filesystem;

namespace halled {

namespace {

constexpr char kMagic[8] = {'H', 'A', 'L', 'E', 'D', 'E', 'I', 'G'};
constexpr std::uint32_t kVersion = 1;

struct Header {
  char magic[8];
  std::uint32_t version;
  std::uint64_t key;
  std::int32_t dim;
  std::int32_t count;
  std::uint8_t full;
};

bool read_header(std::ifstream& in, Header& h) {
  in.read(h.magic, 8);
  in.read(reinterpret_cast<char*>(&h.version), sizeof h.version);
  in.read(reinterpret_cast<char*>(&h.key), sizeof h.key);
  in.read(reinterpret_cast<char*>(&h.dim), sizeof h.dim);
  in.read(reinterpret_cast<char*>(&h.count), sizeof h.count);
  in.read(reinterpret_cast<char*>(&h.full), sizeof h.full);
  return static_cast<bool>(in) && std::memcmp(h.magic, kMagic, 8) == 0 &&
         h.version == kVersion && h.dim > 0 && h.count > 0 &&
         h.count <= h.dim;
}

}  // namespace

void KeyHasher::add_bytes(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h_ ^= p[i];
    h_ *= 0x100000001b3ull;
  }
}

void KeyHasher::add_u64(std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  add_bytes(b, 8);
}

void KeyHasher::add_i64(std::int64_t v) {
  add_u64(static_cast<std::uint64_t>(v));
}

void KeyHasher::add_f64(double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  add_u64(bits);
}

void KeyHasher::add_str(std::string_view s) {
  add_u64(s.size());
  add_bytes(s.data(), s.size());
}

std::uint64_t problem_key(const HamiltonianSpec& spec, const TwistConfig& tc,
                          int count, bool full,
                          const EigensolveOptions& opts) {
  KeyHasher h;
  h.add_str("halled.eig.v1");
  h.add_str(spec.name);
  h.add_i64(spec.lattice.L1);
  h.add_i64(spec.lattice.L2);
  h.add_i64(spec.N);
  h.add_u64(spec.hoppings.entries.size());
  for (const auto& [key, t] : spec.hoppings.entries) {  // std::map: sorted
    h.add_i64(key.first);
    h.add_i64(key.second);
    h.add_f64(t.real());
    h.add_f64(t.imag());
  }
  h.add_u64(spec.interactions.terms.size());
  for (const auto& term : spec.interactions.terms) {
    h.add_u64(term.sites.size());
    for (int s : term.sites) h.add_i64(s);
    h.add_f64(term.u);
  }
  h.add_u64(tc.twists.size());
  for (const auto& tw : tc.twists) {
    h.add_i64(tw.dir);
    h.add_f64(tw.phi);
    h.add_i64(tw.cut.dir);
    h.add_i64(tw.cut.k);
    if (tw.cut.anchor) {
      h.add_i64(tw.cut.anchor->x1);
      h.add_i64(tw.cut.anchor->x2);
      h.add_i64(tw.cut.R0);
      std::vector<std::pair<int, double>> values(tw.cut.values.begin(),
                                                 tw.cut.values.end());
      std::sort(values.begin(), values.end());
      h.add_u64(values.size());
      for (const auto& [site, v] : values) {
        h.add_i64(site);
        h.add_f64(v);
      }
    } else {
      h.add_i64(-1);
    }
  }
  h.add_i64(count);
  h.add_i64(full ? 1 : 0);
  h.add_f64(opts.tol);
  h.add_i64(opts.max_basis);
  h.add_i64(opts.max_restarts);
  h.add_i64(opts.dense_threshold);
  h.add_i64(opts.dense_fallback);
  h.add_u64(opts.seed);
  return h.value();
}

EigenCache::EigenCache(std::string root) : root_(std::move(root)) {
  if (root_.empty()) {
    if (const char* env = std::getenv("HALLED_CACHE_DIR")) root_ = env;
  }
}

std::string EigenCache::path_for(std::uint64_t key) const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(key));
  return (fs::path(root_) / (std::string(buf) + ".eig")).string();
}

std::optional<EigenDecomposition> EigenCache::load(std::uint64_t key) const {
  if (!enabled()) return std::nullopt;
  std::ifstream in(path_for(key), std::ios::binary);
  if (!in) return std::nullopt;
  Header h{};
  if (!read_header(in, h) || h.key != key) return std::nullopt;
  EigenDecomposition eig;
  eig.full = h.full != 0;
  eig.eigenvalues.resize(h.count);
  in.read(reinterpret_cast<char*>(eig.eigenvalues.data()),
          static_cast<std::streamsize>(sizeof(double)) * h.count);
  eig.eigenvectors.resize(h.dim, h.count);
  std::vector<double> col(2 * static_cast<std::size_t>(h.dim));
  for (int c = 0; c < h.count; ++c) {
    in.read(reinterpret_cast<char*>(col.data()),
            static_cast<std::streamsize>(col.size() * sizeof(double)));
    if (!in) return std::nullopt;
    for (int r = 0; r < h.dim; ++r)
      eig.eigenvectors(r, c) =
          cplx(col[2 * static_cast<std::size_t>(r)],
               col[2 * static_cast<std::size_t>(r) + 1]);
  }
  if (!in) return std::nullopt;
  return eig;
}

void EigenCache::store(std::uint64_t key, const EigenDecomposition& eig) const {
  if (!enabled()) return;
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) return;  // cache is best-effort; never fail the run
  const std::string final_path = path_for(key);
  const std::string tmp_path = final_path + ".tmp";
  {
    std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
    if (!out) return;
    Header h{};
    std::memcpy(h.magic, kMagic, 8);
    h.version = kVersion;
    h.key = key;
    h.dim = eig.dim();
    h.count = eig.count();
    h.full = eig.full ? 1 : 0;
    out.write(h.magic, 8);
    out.write(reinterpret_cast<const char*>(&h.version), sizeof h.version);
    out.write(reinterpret_cast<const char*>(&h.key), sizeof h.key);
    out.write(reinterpret_cast<const char*>(&h.dim), sizeof h.dim);
    out.write(reinterpret_cast<const char*>(&h.count), sizeof h.count);
    out.write(reinterpret_cast<const char*>(&h.full), sizeof h.full);
    out.write(reinterpret_cast<const char*>(eig.eigenvalues.data()),
              static_cast<std::streamsize>(sizeof(double)) * eig.count());
    std::vector<double> col(2 * static_cast<std::size_t>(eig.dim()));
    for (int c = 0; c < eig.count(); ++c) {
      for (int r = 0; r < eig.dim(); ++r) {
        col[2 * static_cast<std::size_t>(r)] = eig.eigenvectors(r, c).real();
        col[2 * static_cast<std::size_t>(r) + 1] =
            eig.eigenvectors(r, c).imag();
      }
      out.write(reinterpret_cast<const char*>(col.data()),
                static_cast<std::streamsize>(col.size() * sizeof(double)));
    }
    if (!out) {
      out.close();
      fs::remove(tmp_path, ec);
      return;
    }
  }
  fs::rename(tmp_path, final_path, ec);
  if (ec) fs::remove(tmp_path, ec);
}

std::vector<EigenCache::Entry> EigenCache::inspect() const {
  std::vector<Entry> out;
  if (!enabled()) return out;
  std::error_code ec;
  fs::directory_iterator it(root_, ec);
  if (ec) return out;
  for (const auto& de : it) {
    if (!de.is_regular_file() || de.path().extension() != ".eig") continue;
    std::ifstream in(de.path(), std::ios::binary);
    Header h{};
    if (!in || !read_header(in, h)) continue;
    Entry e;
    e.file = de.path().filename().string();
    e.key = h.key;
    e.dim = h.dim;
    e.count = h.count;
    e.full = h.full != 0;
    e.bytes = de.file_size(ec);
    out.push_back(std::move(e));
  }
  std::sort(out.begin(), out.end(),
            [](const Entry& a, const Entry& b) { return a.file < b.file; });
  return out;
}

int EigenCache::clear() const {
  if (!enabled()) return 0;
  std::error_code ec;
  fs::directory_iterator it(root_, ec);
  if (ec) return 0;
  int removed = 0;
  std::vector<fs::path> victims;
  for (const auto& de : it)
    if (de.is_regular_file() && (de.path().extension() == ".eig" ||
                                 de.path().extension() == ".tmp"))
      victims.push_back(de.path());
  for (const auto& p : victims)
    if (fs::remove(p, ec)) ++removed;
  return removed;
}

}  // namespace halled
