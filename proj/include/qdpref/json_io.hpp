#pragma once

#include <json.hpp>

#include "qdpref/level.hpp"

namespace qdpref {

nlohmann::json room_to_json(const Room& room);
/// `path` is the JSON pointer prefix used in MalformedInput diagnostics.
Room room_from_json(const nlohmann::json& j, const std::string& path = "");

nlohmann::json dungeon_to_json(const Dungeon& dungeon);
Dungeon dungeon_from_json(const nlohmann::json& j);

}  // namespace qdpref
