#include "qdpref/level.hpp"

#include <algorithm>
#include <set>
#include <utility>

#include "qdpref/error.hpp"
#include "qdpref/json_io.hpp"

namespace qdpref {

using nlohmann::json;

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidDimensions: return "InvalidDimensions";
    case ErrorCode::InvalidDoor: return "InvalidDoor";
    case ErrorCode::InvalidConnection: return "InvalidConnection";
    case ErrorCode::UnknownRoom: return "UnknownRoom";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::LockedTile: return "LockedTile";
    case ErrorCode::DoorTileNotFloor: return "DoorTileNotFloor";
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::InfeasibleInput: return "InfeasibleInput";
    case ErrorCode::MissingTarget: return "MissingTarget";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NoPopulation: return "NoPopulation";
    case ErrorCode::DuplicateDimension: return "DuplicateDimension";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::EmptyCell: return "EmptyCell";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::EmptySnapshot: return "EmptySnapshot";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
  }
  return "Unknown";
}

char tile_char(TileKind kind) {
  switch (kind) {
    case TileKind::Floor: return 'F';
    case TileKind::Wall: return 'W';
    case TileKind::Treasure: return 'T';
    case TileKind::Enemy: return 'E';
  }
  return '?';
}

std::optional<TileKind> tile_from_char(char c) {
  switch (c) {
    case 'F': return TileKind::Floor;
    case 'W': return TileKind::Wall;
    case 'T': return TileKind::Treasure;
    case 'E': return TileKind::Enemy;
    default: return std::nullopt;
  }
}

char side_char(Side side) {
  switch (side) {
    case Side::North: return 'N';
    case Side::South: return 'S';
    case Side::East: return 'E';
    case Side::West: return 'W';
  }
  return '?';
}

std::optional<Side> side_from_char(char c) {
  switch (c) {
    case 'N': return Side::North;
    case 'S': return Side::South;
    case 'E': return Side::East;
    case 'W': return Side::West;
    default: return std::nullopt;
  }
}

Position door_position(int width, int height, const Door& door) {
  const int side_length = (door.side == Side::North || door.side == Side::South) ? width : height;
  if (door.offset < 0 || door.offset >= side_length) {
    throw Error(ErrorCode::InvalidDoor, "door offset " + std::to_string(door.offset) + " outside side of length " +
                                            std::to_string(side_length));
  }
  switch (door.side) {
    case Side::North: return {door.offset, 0};
    case Side::South: return {door.offset, height - 1};
    case Side::West: return {0, door.offset};
    case Side::East: return {width - 1, door.offset};
  }
  return {};
}

Room Room::create(int width, int height, std::vector<Door> doors) {
  if (width < 3 || height < 3) {
    throw Error(ErrorCode::InvalidDimensions,
                "room must be at least 3x3, got " + std::to_string(width) + "x" + std::to_string(height));
  }
  const auto area = static_cast<std::size_t>(width) * height;
  return from_parts(width, height, TileGrid(area, TileKind::Floor), LockMask(area, 0), std::move(doors));
}

Room Room::from_parts(int width, int height, TileGrid tiles, LockMask locks, std::vector<Door> doors) {
  if (width < 3 || height < 3) {
    throw Error(ErrorCode::InvalidDimensions,
                "room must be at least 3x3, got " + std::to_string(width) + "x" + std::to_string(height));
  }
  const auto area = static_cast<std::size_t>(width) * height;
  if (tiles.size() != area || locks.size() != area) {
    throw Error(ErrorCode::ShapeMismatch, "tile/lock arrays do not match " + std::to_string(width) + "x" +
                                              std::to_string(height));
  }
  if (doors.empty()) throw Error(ErrorCode::InvalidDoor, "a room needs at least one door");

  Room room;
  room.width_ = width;
  room.height_ = height;
  room.tiles_ = std::move(tiles);
  room.locks_ = std::move(locks);
  room.doors_ = std::move(doors);

  std::set<std::pair<int, int>> seen;
  for (const auto& door : room.doors_) {
    const auto p = qdpref::door_position(width, height, door);
    if (!seen.emplace(p.x, p.y).second) {
      throw Error(ErrorCode::InvalidDoor,
                  "two doors share border position (" + std::to_string(p.x) + "," + std::to_string(p.y) + ")");
    }
    if (room.at(p.x, p.y) != TileKind::Floor) {
      throw Error(ErrorCode::DoorTileNotFloor,
                  "tile under door at (" + std::to_string(p.x) + "," + std::to_string(p.y) + ") is not FLOOR");
    }
  }
  room.build_door_mask();
  return room;
}

void Room::build_door_mask() {
  door_mask_.assign(tiles_.size(), 0);
  for (const auto& door : doors_) {
    const auto p = door_position(door);
    door_mask_[index(p.x, p.y)] = 1;
  }
}

Position Room::door_position(const Door& door) const { return qdpref::door_position(width_, height_, door); }

std::vector<Position> Room::door_positions() const {
  std::vector<Position> out;
  out.reserve(doors_.size());
  for (const auto& d : doors_) out.push_back(door_position(d));
  return out;
}

bool Room::is_door_tile(int x, int y) const { return in_bounds(x, y) && door_mask_[index(x, y)] != 0; }

Room Room::with_tiles(TileGrid tiles) const {
  if (tiles.size() != tiles_.size()) {
    throw Error(ErrorCode::ShapeMismatch,
                "expected " + std::to_string(tiles_.size()) + " tiles, got " + std::to_string(tiles.size()));
  }
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    if (door_mask_[i] && tiles[i] != TileKind::Floor) {
      throw Error(ErrorCode::DoorTileNotFloor, "tile under a door must stay FLOOR");
    }
  }
  Room copy = *this;
  copy.tiles_ = std::move(tiles);
  return copy;
}

Room Room::with_locks(LockMask locks) const {
  if (locks.size() != locks_.size()) throw Error(ErrorCode::ShapeMismatch, "lock mask does not match room shape");
  Room copy = *this;
  copy.locks_ = std::move(locks);
  for (auto& bit : copy.locks_) bit = bit ? 1 : 0;
  return copy;
}

Room apply_edit(const Room& room, const RoomEdit& edit) {
  const auto [x, y] = edit.position;
  if (!room.in_bounds(x, y)) {
    throw Error(ErrorCode::OutOfBounds, "(" + std::to_string(x) + "," + std::to_string(y) + ") outside " +
                                            std::to_string(room.width()) + "x" + std::to_string(room.height()));
  }
  const auto idx = room.index(x, y);
  if (std::holds_alternative<LockToggle>(edit.action)) {
    auto locks = room.locks();
    locks[idx] = locks[idx] ? 0 : 1;
    return room.with_locks(std::move(locks));
  }
  const auto kind = std::get<TileKind>(edit.action);
  if (room.locked(x, y)) {
    throw Error(ErrorCode::LockedTile, "tile (" + std::to_string(x) + "," + std::to_string(y) + ") is locked");
  }
  if (room.is_door_tile(x, y) && kind != TileKind::Floor) {
    throw Error(ErrorCode::DoorTileNotFloor, "tile under a door must stay FLOOR");
  }
  auto tiles = room.tiles();
  tiles[idx] = kind;
  return room.with_tiles(std::move(tiles));
}

void Dungeon::validate() const {
  std::set<std::pair<std::string, int>> used;
  for (std::size_t c = 0; c < connections.size(); ++c) {
    const auto& conn = connections[c];
    const auto check_end = [&](const std::string& id, int door) {
      const auto it = rooms.find(id);
      if (it == rooms.end()) throw Error(ErrorCode::UnknownRoom, "connection " + std::to_string(c) + " references '" + id + "'");
      if (door < 0 || door >= static_cast<int>(it->second.doors().size())) {
        throw Error(ErrorCode::InvalidConnection,
                    "connection " + std::to_string(c) + " references missing door " + std::to_string(door) + " of '" + id + "'");
      }
      if (!used.emplace(id, door).second) {
        throw Error(ErrorCode::InvalidConnection,
                    "door " + std::to_string(door) + " of '" + id + "' participates in more than one connection");
      }
    };
    check_end(conn.room_a, conn.door_a);
    check_end(conn.room_b, conn.door_b);
  }
}

std::string tiles_to_string(const TileGrid& tiles) {
  std::string out;
  out.reserve(tiles.size());
  for (auto t : tiles) out.push_back(tile_char(t));
  return out;
}

TileGrid tiles_from_string(std::string_view text) {
  TileGrid tiles;
  tiles.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto kind = tile_from_char(text[i]);
    if (!kind) {
      throw Error(ErrorCode::MalformedInput, "bad tile character '" + std::string(1, text[i]) + "' at index " + std::to_string(i));
    }
    tiles.push_back(*kind);
  }
  return tiles;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

[[noreturn]] void malformed(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::MalformedInput, (path.empty() ? std::string("/") : path) + ": " + what);
}

const json& require(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) malformed(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) malformed(path, std::string("missing key '") + key + "'");
  return *it;
}

int require_int(const json& obj, const char* key, const std::string& path) {
  const auto& v = require(obj, key, path);
  if (!v.is_number_integer()) malformed(path + "/" + key, "expected an integer");
  return v.get<int>();
}

const std::string& require_string(const json& obj, const char* key, const std::string& path) {
  const auto& v = require(obj, key, path);
  if (!v.is_string()) malformed(path + "/" + key, "expected a string");
  return v.get_ref<const std::string&>();
}

}  // namespace

json room_to_json(const Room& room) {
  std::string locks;
  locks.reserve(room.area());
  for (auto bit : room.locks()) locks.push_back(bit ? '1' : '0');
  json doors = json::array();
  for (const auto& d : room.doors()) doors.push_back({{"side", std::string(1, side_char(d.side))}, {"offset", d.offset}});
  return {{"w", room.width()},
          {"h", room.height()},
          {"tiles", tiles_to_string(room.tiles())},
          {"locks", std::move(locks)},
          {"doors", std::move(doors)}};
}

Room room_from_json(const json& j, const std::string& path) {
  const int w = require_int(j, "w", path);
  const int h = require_int(j, "h", path);
  const auto& tile_text = require_string(j, "tiles", path);
  const auto& lock_text = require_string(j, "locks", path);
  if (w < 3 || h < 3) malformed(path, "room must be at least 3x3");
  const auto area = static_cast<std::size_t>(w) * h;
  if (tile_text.size() != area) {
    malformed(path + "/tiles", "length " + std::to_string(tile_text.size()) + " != w*h = " + std::to_string(area));
  }
  if (lock_text.size() != area) {
    malformed(path + "/locks", "length " + std::to_string(lock_text.size()) + " != w*h = " + std::to_string(area));
  }
  TileGrid tiles;
  try {
    tiles = tiles_from_string(tile_text);
  } catch (const Error& e) {
    malformed(path + "/tiles", e.what());
  }
  LockMask locks(area);
  for (std::size_t i = 0; i < area; ++i) {
    if (lock_text[i] != '0' && lock_text[i] != '1') malformed(path + "/locks", "bad lock character at index " + std::to_string(i));
    locks[i] = lock_text[i] == '1';
  }
  const auto& doors_json = require(j, "doors", path);
  if (!doors_json.is_array()) malformed(path + "/doors", "expected an array");
  std::vector<Door> doors;
  for (std::size_t k = 0; k < doors_json.size(); ++k) {
    const auto dpath = path + "/doors/" + std::to_string(k);
    const auto& side_text = require_string(doors_json[k], "side", dpath);
    const auto side = side_text.size() == 1 ? side_from_char(side_text[0]) : std::nullopt;
    if (!side) malformed(dpath + "/side", "expected one of N/S/E/W");
    doors.push_back({*side, require_int(doors_json[k], "offset", dpath)});
  }
  try {
    return Room::from_parts(w, h, std::move(tiles), std::move(locks), std::move(doors));
  } catch (const Error& e) {
    malformed(path, e.what());
  }
}

json dungeon_to_json(const Dungeon& dungeon) {
  json rooms = json::object();
  for (const auto& [id, room] : dungeon.rooms) rooms[id] = room_to_json(room);
  json conns = json::array();
  for (const auto& c : dungeon.connections) {
    conns.push_back({{"a", c.room_a}, {"doorA", c.door_a}, {"b", c.room_b}, {"doorB", c.door_b}});
  }
  return {{"version", kDungeonFormatVersion}, {"rooms", std::move(rooms)}, {"connections", std::move(conns)}};
}

Dungeon dungeon_from_json(const json& j) {
  const int version = require_int(j, "version", "");
  if (version != kDungeonFormatVersion) malformed("/version", "unsupported version " + std::to_string(version));
  const auto& rooms = require(j, "rooms", "");
  if (!rooms.is_object()) malformed("/rooms", "expected an object");
  Dungeon d;
  for (auto it = rooms.begin(); it != rooms.end(); ++it) {
    d.rooms.emplace(it.key(), room_from_json(it.value(), "/rooms/" + it.key()));
  }
  const auto& conns = require(j, "connections", "");
  if (!conns.is_array()) malformed("/connections", "expected an array");
  for (std::size_t k = 0; k < conns.size(); ++k) {
    const auto cpath = "/connections/" + std::to_string(k);
    d.connections.push_back({require_string(conns[k], "a", cpath), require_int(conns[k], "doorA", cpath),
                             require_string(conns[k], "b", cpath), require_int(conns[k], "doorB", cpath)});
  }
  try {
    d.validate();
  } catch (const Error& e) {
    malformed("/connections", e.what());
  }
  return d;
}

std::string serialize_dungeon(const Dungeon& dungeon) {
  dungeon.validate();
  return dungeon_to_json(dungeon).dump(2) + "\n";
}

Dungeon deserialize_dungeon(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedInput, "parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  return dungeon_from_json(j);
}

}  // namespace qdpref
