#include <doctest.h>

#include "qdpref/config.hpp"
#include "qdpref/digest.hpp"
#include "support.hpp"

using namespace qdpref;

TEST_CASE("config round trip and overrides") {
  const SessionConfig defaults;
  const auto j = config_to_json(defaults);
  CHECK(config_to_json(config_from_json(j)) == j);
  CHECK(j["grid"]["rows"] == 5);
  CHECK(j["caps"]["feasible"] == 25);
  CHECK(j["training"]["hidden"] == nlohmann::json::array({100, 50}));

  const auto c = config_from_json({{"grid", {{"rows", 4}}}, {"dims", {"leniency", "patterns"}}, {"weightedSum", "literal"}});
  CHECK(c.engine.grid.rows == 4);
  CHECK(c.engine.grid.cols == 5);
  CHECK(c.engine.dims[0] == DimensionKind::Leniency);
  CHECK(c.engine.weighted_sum == WeightedSumForm::Literal);

  CHECK_CODE(config_from_json({{"bogus", 1}}), ConfigError);
  CHECK_CODE(config_from_json({{"grid", {{"rows", 0}}}}), ConfigError);
  CHECK_CODE(config_from_json({{"mutationRate", 2.0}}), ConfigError);
  CHECK_CODE(config_from_json({{"dims", {"symmetry", "symmetry"}}}), ConfigError);
  CHECK_CODE(config_from_json({{"room", {{"width", 2}}}}), ConfigError);
  CHECK_CODE(load_config_file("/nonexistent/qdpref.json"), IoError);
}

TEST_CASE("fnv1a reference vectors") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
  CHECK(parse_hex64("0000000000000abc") == 0xabcULL);
  CHECK_CODE(parse_hex64("xyz"), MalformedInput);
}
