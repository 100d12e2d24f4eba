#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "qdpref/grid.hpp"

namespace qdpref {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

// FNV-1a, 64 bit. Stable across platforms, used for run and replay digests.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t state = kFnvOffset);
std::string hex64(std::uint64_t value);
std::uint64_t parse_hex64(std::string_view text);

/// Canonical text of a snapshot; scores printed as hex floats so equal digests mean equal bits.
std::string canonical_text(const EliteSnapshot& snapshot);
std::uint64_t snapshot_digest(const EliteSnapshot& snapshot);

}  // namespace qdpref
