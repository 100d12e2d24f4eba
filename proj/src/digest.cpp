#include "qdpref/digest.hpp"

#include <cstdio>

#include "qdpref/error.hpp"

namespace qdpref {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t state) {
  for (unsigned char c : bytes) {
    state ^= c;
    state *= 0x100000001b3ULL;
  }
  return state;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::uint64_t parse_hex64(std::string_view text) {
  if (text.empty() || text.size() > 16) throw Error(ErrorCode::MalformedInput, "bad digest '" + std::string(text) + "'");
  std::uint64_t v = 0;
  for (char c : text) {
    int d = -1;
    if (c >= '0' && c <= '9') d = c - '0';
    else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
    if (d < 0) throw Error(ErrorCode::MalformedInput, "bad digest '" + std::string(text) + "'");
    v = v << 4 | static_cast<std::uint64_t>(d);
  }
  return v;
}

std::string canonical_text(const EliteSnapshot& snapshot) {
  std::string out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "g%llu %d %d %d %d\n", static_cast<unsigned long long>(snapshot.generation),
                snapshot.shape.rows, snapshot.shape.cols, static_cast<int>(snapshot.dims[0]), static_cast<int>(snapshot.dims[1]));
  out += buf;
  for (const auto& cell : snapshot.cells) {
    if (!cell) {
      out += "-\n";
      continue;
    }
    out += tiles_to_string(cell->room.tiles());
    std::snprintf(buf, sizeof buf, " %a %a", cell->objective, cell->combined);
    out += buf;
    std::snprintf(buf, sizeof buf, " %a %a\n", cell->descriptor.values[0], cell->descriptor.values[1]);
    out += buf;
  }
  return out;
}

std::uint64_t snapshot_digest(const EliteSnapshot& snapshot) { return fnv1a(canonical_text(snapshot)); }

}  // namespace qdpref
