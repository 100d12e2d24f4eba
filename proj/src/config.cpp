#include "qdpref/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <set>

#include "qdpref/error.hpp"

namespace qdpref {

using nlohmann::json;

json config_to_json(const SessionConfig& c) {
  const auto& e = c.engine;
  const auto& p = e.patterns;
  return {
      {"room", {{"width", c.room_width}, {"height", c.room_height}}},
      {"grid", {{"rows", e.grid.rows}, {"cols", e.grid.cols}}},
      {"caps", {{"feasible", e.caps.feasible}, {"infeasible", e.caps.infeasible}}},
      {"dims", {to_string(e.dims[0]), to_string(e.dims[1])}},
      {"offspringPerGeneration", e.offspring_per_generation},
      {"crossoverRate", e.crossover_rate},
      {"mutationRate", e.mutation_rate},
      {"seedCount", e.seed_count},
      {"seedMutationRate", e.seed_mutation_rate},
      {"weightedSum", e.weighted_sum == WeightedSumForm::Convex ? "convex" : "literal"},
      {"patterns",
       {{"chamberTarget", p.chamber_target},
        {"mesoNorm", p.meso_norm},
        {"deadEndPenalty", p.dead_end_penalty},
        {"patternsCap", p.patterns_cap},
        {"leniencyEnemyShare", p.leniency_enemy_share},
        {"chamberSide", p.chamber_side}}},
      {"training",
       {{"epochs", c.training.epochs},
        {"batchSize", c.training.batch_size},
        {"learningRate", c.training.learning_rate},
        {"hidden", c.training.hidden},
        {"testFraction", c.test_fraction}}},
      {"adhocMetric", c.adhoc_metric == StepMetric::Chebyshev ? "chebyshev" : "manhattan"},
      {"publishEveryGenerations", c.publish_every_generations},
      {"publishIntervalMs", c.publish_interval_ms},
      {"publishMinIntervalMs", c.publish_min_interval_ms},
      {"swapDelayGenerations", c.swap_delay_generations},
      {"topK", c.top_k},
  };
}

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::ConfigError, key + ": " + what);
}

template <class T>
T get(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    bad(key, "wrong type");
  }
}

int get_positive(const json& v, const std::string& key) {
  const int n = get<int>(v, key);
  if (n < 1) bad(key, "must be positive");
  return n;
}

double get_unit(const json& v, const std::string& key) {
  const double x = get<double>(v, key);
  if (!(x >= 0.0 && x <= 1.0)) bad(key, "must lie in [0,1]");
  return x;
}

using Handlers = std::map<std::string, std::function<void(const json&)>>;

void apply(const json& j, const Handlers& handlers, const std::string& prefix) {
  if (!j.is_object()) bad(prefix.empty() ? "/" : prefix, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto h = handlers.find(it.key());
    if (h == handlers.end()) bad(prefix + "/" + it.key(), "unknown key");
    h->second(it.value());
  }
}

DimensionKind get_dim(const json& v, const std::string& key) {
  const auto name = get<std::string>(v, key);
  const auto kind = dimension_from_string(name);
  if (!kind) bad(key, "unknown dimension '" + name + "'");
  return *kind;
}

}  // namespace

SessionConfig config_from_json(const json& j) {
  SessionConfig c;
  auto& e = c.engine;
  auto& p = e.patterns;
  apply(j,
        {
            {"room",
             [&](const json& v) {
               apply(v,
                     {{"width", [&](const json& x) { c.room_width = get_positive(x, "/room/width"); }},
                      {"height", [&](const json& x) { c.room_height = get_positive(x, "/room/height"); }}},
                     "/room");
             }},
            {"grid",
             [&](const json& v) {
               apply(v,
                     {{"rows", [&](const json& x) { e.grid.rows = get_positive(x, "/grid/rows"); }},
                      {"cols", [&](const json& x) { e.grid.cols = get_positive(x, "/grid/cols"); }}},
                     "/grid");
             }},
            {"caps",
             [&](const json& v) {
               apply(v,
                     {{"feasible", [&](const json& x) { e.caps.feasible = get_positive(x, "/caps/feasible"); }},
                      {"infeasible", [&](const json& x) { e.caps.infeasible = get_positive(x, "/caps/infeasible"); }}},
                     "/caps");
             }},
            {"dims",
             [&](const json& v) {
               if (!v.is_array() || v.size() != 2) bad("/dims", "expected two dimension names");
               e.dims = {get_dim(v[0], "/dims/0"), get_dim(v[1], "/dims/1")};
               if (e.dims[0] == e.dims[1]) bad("/dims", "dimensions must differ");
             }},
            {"offspringPerGeneration", [&](const json& v) { e.offspring_per_generation = get_positive(v, "/offspringPerGeneration"); }},
            {"crossoverRate", [&](const json& v) { e.crossover_rate = get_unit(v, "/crossoverRate"); }},
            {"mutationRate", [&](const json& v) { e.mutation_rate = get_unit(v, "/mutationRate"); }},
            {"seedCount", [&](const json& v) { e.seed_count = get_positive(v, "/seedCount"); }},
            {"seedMutationRate", [&](const json& v) { e.seed_mutation_rate = get_unit(v, "/seedMutationRate"); }},
            {"weightedSum",
             [&](const json& v) {
               const auto s = get<std::string>(v, "/weightedSum");
               if (s == "convex") e.weighted_sum = WeightedSumForm::Convex;
               else if (s == "literal") e.weighted_sum = WeightedSumForm::Literal;
               else bad("/weightedSum", "expected 'convex' or 'literal'");
             }},
            {"patterns",
             [&](const json& v) {
               apply(v,
                     {{"chamberTarget", [&](const json& x) { p.chamber_target = get_unit(x, "/patterns/chamberTarget"); }},
                      {"mesoNorm",
                       [&](const json& x) {
                         p.meso_norm = get<double>(x, "/patterns/mesoNorm");
                         if (p.meso_norm <= 0) bad("/patterns/mesoNorm", "must be positive");
                       }},
                      {"deadEndPenalty", [&](const json& x) { p.dead_end_penalty = get<double>(x, "/patterns/deadEndPenalty"); }},
                      {"patternsCap", [&](const json& x) { p.patterns_cap = get_positive(x, "/patterns/patternsCap"); }},
                      {"leniencyEnemyShare", [&](const json& x) { p.leniency_enemy_share = get_unit(x, "/patterns/leniencyEnemyShare"); }},
                      {"chamberSide", [&](const json& x) { p.chamber_side = get_positive(x, "/patterns/chamberSide"); }}},
                     "/patterns");
             }},
            {"training",
             [&](const json& v) {
               apply(v,
                     {{"epochs", [&](const json& x) { c.training.epochs = get_positive(x, "/training/epochs"); }},
                      {"batchSize", [&](const json& x) { c.training.batch_size = get_positive(x, "/training/batchSize"); }},
                      {"learningRate",
                       [&](const json& x) {
                         c.training.learning_rate = get<double>(x, "/training/learningRate");
                         if (c.training.learning_rate <= 0) bad("/training/learningRate", "must be positive");
                       }},
                      {"hidden",
                       [&](const json& x) {
                         if (!x.is_array()) bad("/training/hidden", "expected an array of layer sizes");
                         c.training.hidden.clear();
                         for (const auto& s : x) c.training.hidden.push_back(get_positive(s, "/training/hidden"));
                       }},
                      {"testFraction", [&](const json& x) { c.test_fraction = get_unit(x, "/training/testFraction"); }}},
                     "/training");
             }},
            {"adhocMetric",
             [&](const json& v) {
               const auto s = get<std::string>(v, "/adhocMetric");
               if (s == "chebyshev") c.adhoc_metric = StepMetric::Chebyshev;
               else if (s == "manhattan") c.adhoc_metric = StepMetric::Manhattan;
               else bad("/adhocMetric", "expected 'chebyshev' or 'manhattan'");
             }},
            {"publishEveryGenerations", [&](const json& v) { c.publish_every_generations = get_positive(v, "/publishEveryGenerations"); }},
            {"publishIntervalMs", [&](const json& v) { c.publish_interval_ms = get_positive(v, "/publishIntervalMs"); }},
            {"publishMinIntervalMs", [&](const json& v) { c.publish_min_interval_ms = get<int>(v, "/publishMinIntervalMs"); }},
            {"swapDelayGenerations", [&](const json& v) { c.swap_delay_generations = get<int>(v, "/swapDelayGenerations"); }},
            {"topK", [&](const json& v) { c.top_k = get_positive(v, "/topK"); }},
        },
        "");
  if (c.room_width < 3 || c.room_height < 3) bad("/room", "rooms must be at least 3x3");
  return c;
}

SessionConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, path + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace qdpref
