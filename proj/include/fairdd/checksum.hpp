#pragma once

#include <cstdint>
#include <cstring>

namespace fairdd {

// FNV-1a over raw bytes; used for parameter/buffer state fingerprints in the
// protocol invariants (teacher frozen within a stage, buffer frozen in the
// final stage, run-to-run determinism).
inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a_doubles(const double* values, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
  return fnv1a(values, n * sizeof(double), h);
}

}  // namespace fairdd
