#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "halled/models.hpp"
#include "halled/spectra.hpp"

namespace halled {

// FNV-1a 64-bit over a canonical little-endian byte stream. Used for cache
// keys and config content hashes; not cryptographic.
class KeyHasher {
 public:
  void add_bytes(const void* data, std::size_t n);
  void add_u64(std::uint64_t v);
  void add_i64(std::int64_t v);
  void add_f64(double v);  // exact bit pattern
  void add_str(std::string_view s);
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ull;
};

// Key covering everything that determines an eigensolve result: model
// content, twist configuration (including deformed-cut values), requested
// count, full-vs-lowest, and the solver options that affect the output.
std::uint64_t problem_key(const HamiltonianSpec& spec, const TwistConfig& tc,
                          int count, bool full,
                          const EigensolveOptions& opts);

// On-disk store of eigendecompositions, one file per problem key. A missing,
// truncated, or mismatched file reads as a miss, never an error. Disabled
// (all misses, stores dropped) when no root directory is configured.
class EigenCache {
 public:
  // Empty root falls back to the HALLED_CACHE_DIR environment variable; if
  // that is unset too, the cache is disabled.
  explicit EigenCache(std::string root = "");

  bool enabled() const { return !root_.empty(); }
  const std::string& root() const { return root_; }

  std::optional<EigenDecomposition> load(std::uint64_t key) const;
  void store(std::uint64_t key, const EigenDecomposition& eig) const;

  struct Entry {
    std::string file;
    std::uint64_t key = 0;
    int dim = 0;
    int count = 0;
    bool full = false;
    std::uintmax_t bytes = 0;
  };
  std::vector<Entry> inspect() const;
  int clear() const;  // removes cache files, returns how many

 private:
  std::string path_for(std::uint64_t key) const;
  std::string root_;
};

}  // namespace halled
