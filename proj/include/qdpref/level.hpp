#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace qdpref {

enum class TileKind : std::uint8_t { Floor = 0, Wall = 1, Treasure = 2, Enemy = 3 };
inline constexpr int kTileKindCount = 4;

char tile_char(TileKind kind);
std::optional<TileKind> tile_from_char(char c);

enum class Side : std::uint8_t { North, South, East, West };

char side_char(Side side);
std::optional<Side> side_from_char(char c);

struct Position {
  int x = 0;
  int y = 0;
  friend bool operator==(const Position&, const Position&) = default;
};

struct Door {
  Side side = Side::North;
  int offset = 0;
  friend bool operator==(const Door&, const Door&) = default;
};

// Row-major tile array, index = y * width + x.
using TileGrid = std::vector<TileKind>;
using LockMask = std::vector<std::uint8_t>;

class Room {
 public:
  static constexpr int kDefaultWidth = 13;
  static constexpr int kDefaultHeight = 7;

  /// All-FLOOR room with no locks. Throws InvalidDimensions / InvalidDoor.
  static Room create(int width, int height, std::vector<Door> doors);

  /// Full constructor used by deserialization and evolution; validates every invariant.
  static Room from_parts(int width, int height, TileGrid tiles, LockMask locks, std::vector<Door> doors);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t area() const noexcept { return tiles_.size(); }

  const TileGrid& tiles() const noexcept { return tiles_; }
  const LockMask& locks() const noexcept { return locks_; }
  const std::vector<Door>& doors() const noexcept { return doors_; }

  bool in_bounds(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  std::size_t index(int x, int y) const noexcept { return static_cast<std::size_t>(y) * width_ + x; }
  TileKind at(int x, int y) const { return tiles_[index(x, y)]; }
  bool locked(int x, int y) const { return locks_[index(x, y)] != 0; }

  Position door_position(const Door& door) const;
  std::vector<Position> door_positions() const;
  bool is_door_tile(int x, int y) const;
  /// Per-tile flag, 1 where a door sits.
  const std::vector<std::uint8_t>& door_mask() const noexcept { return door_mask_; }

  /// Same doors and locks, different tiles. Throws ShapeMismatch / DoorTileNotFloor.
  Room with_tiles(TileGrid tiles) const;
  Room with_locks(LockMask locks) const;

  friend bool operator==(const Room& a, const Room& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.tiles_ == b.tiles_ && a.locks_ == b.locks_ &&
           a.doors_ == b.doors_;
  }

 private:
  Room() = default;
  void build_door_mask();

  int width_ = 0;
  int height_ = 0;
  TileGrid tiles_;
  LockMask locks_;
  std::vector<Door> doors_;
  std::vector<std::uint8_t> door_mask_;
};

/// Door position for an arbitrary room shape; InvalidDoor if the door does not fit.
Position door_position(int width, int height, const Door& door);

struct LockToggle {};

struct RoomEdit {
  Position position;
  std::variant<TileKind, LockToggle> action;
};

/// Returns the room with exactly one grid cell or one lock bit changed.
Room apply_edit(const Room& room, const RoomEdit& edit);

struct Connection {
  std::string room_a;
  int door_a = 0;  // index into room_a's door list
  std::string room_b;
  int door_b = 0;
  friend bool operator==(const Connection&, const Connection&) = default;
};

struct Dungeon {
  std::map<std::string, Room> rooms;
  std::vector<Connection> connections;

  /// Throws UnknownRoom / InvalidConnection.
  void validate() const;
  friend bool operator==(const Dungeon&, const Dungeon&) = default;
};

inline constexpr int kDungeonFormatVersion = 1;

std::string serialize_dungeon(const Dungeon& dungeon);
/// Throws MalformedInput with a byte offset or JSON path in the message.
Dungeon deserialize_dungeon(std::string_view text);

std::string tiles_to_string(const TileGrid& tiles);
TileGrid tiles_from_string(std::string_view text);

}  // namespace qdpref
