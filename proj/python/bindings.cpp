#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qdpref/config.hpp"
#include "qdpref/digest.hpp"
#include "qdpref/error.hpp"
#include "qdpref/harness.hpp"
#include "qdpref/json_io.hpp"
#include "qdpref/patterns.hpp"
#include "qdpref/preference.hpp"
#include "qdpref/session.hpp"

namespace py = pybind11;
using namespace qdpref;

namespace {

Room room_from(int w, int h, const std::string& tiles, const std::vector<std::pair<std::string, int>>& doors) {
  std::vector<Door> ds;
  for (const auto& [side, off] : doors) {
    const auto s = side.size() == 1 ? side_from_char(side[0]) : std::nullopt;
    if (!s) throw Error(ErrorCode::InvalidDoor, "door side must be one of N/S/E/W");
    ds.push_back({*s, off});
  }
  const auto room = Room::create(w, h, ds);
  return tiles.empty() ? room : room.with_tiles(tiles_from_string(tiles));
}

DimensionKind dim_from(const std::string& name) {
  const auto d = dimension_from_string(name);
  if (!d) throw Error(ErrorCode::MalformedInput, "unknown dimension '" + name + "'");
  return *d;
}

SessionConfig config_from(const std::string& text) {
  return text.empty() ? SessionConfig{} : config_from_json(Json::parse(text));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Preference-guided MAP-Elites dungeon design core";

  static py::exception<Error> error(m, "QdprefError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (std::string(to_string(e.code())) + "|" + e.what()).c_str());
    }
  });

  m.def("compute_weights", [](double conf, double acc) {
    const auto w = compute_weights(conf, acc);
    return std::make_pair(w.w0, w.w1);
  }, py::arg("conf"), py::arg("test_accuracy"));
  m.def("combined_fitness", [](double obj, double pref, double w0, double w1, bool literal) {
    return combined_fitness(obj, pref, {w0, w1}, literal ? WeightedSumForm::Literal : WeightedSumForm::Convex);
  }, py::arg("objective"), py::arg("predicted_pref"), py::arg("w0"), py::arg("w1"), py::arg("literal") = false);

  m.def("adhoc_matrix", [](int i, int j, int rows, int cols, bool manhattan) {
    const auto mat = build_adhoc_matrix({i, j}, {rows, cols}, manhattan ? StepMetric::Manhattan : StepMetric::Chebyshev);
    std::vector<std::vector<double>> out(rows, std::vector<double>(cols));
    for (int a = 0; a < rows; ++a)
      for (int b = 0; b < cols; ++b) out[a][b] = mat.value({a, b});
    return out;
  }, py::arg("i"), py::arg("j"), py::arg("rows") = 5, py::arg("cols") = 5, py::arg("manhattan") = false);

  m.def("analyze_room", [](int w, int h, const std::string& tiles, const std::vector<std::pair<std::string, int>>& doors) {
    const auto room = room_from(w, h, tiles, doors);
    const auto a = analyze_room(room);
    py::dict d;
    d["feasible"] = a.feasible;
    d["infeasibility"] = a.infeasibility;
    d["objective"] = a.feasible ? objective_fitness(room) : a.infeasibility;
    for (const char* name : {"symmetry", "patterns", "linearity", "leniency"}) {
      d[name] = dimension_value(room, dim_from(name), nullptr);
    }
    return d;
  }, py::arg("width"), py::arg("height"), py::arg("tiles"), py::arg("doors"));

  m.def("default_config", [] { return config_to_json(SessionConfig{}).dump(); });

  py::class_<Session>(m, "Session")
      .def(py::init([](std::uint64_t seed, const std::string& config, const std::string& id) {
             const auto cfg = config_from(config);
             return std::make_unique<Session>(id, Session::default_dungeon(cfg), "room-1", cfg, seed, SwapPolicy::AfterDelay);
           }),
           py::arg("seed") = 0, py::arg("config") = "", py::arg("id") = "py")
      .def("handle_message", [](Session& s, const std::string& msg) {
             std::vector<std::string> out;
             for (const auto& r : s.handle_message(Json::parse(msg))) out.push_back(r.dump());
             return out;
           })
      .def("advance", [](Session& s, std::uint64_t n) {
             std::vector<std::string> out;
             py::gil_scoped_release release;
             for (const auto& r : s.advance(n)) out.push_back(r.dump());
             return out;
           })
      .def("finish_all_training", [](Session& s) {
             std::vector<std::string> out;
             py::gil_scoped_release release;
             for (const auto& r : s.finish_all_training()) out.push_back(r.dump());
             return out;
           })
      .def("publish", [](Session& s) { return s.suggestions_payload(s.evolver().publish()).dump(); })
      .def("save", &Session::save)
      .def("to_json", [](const Session& s) { return s.to_json().dump(); })
      .def_static("load", [](const std::string& path) { return Session::load(path); })
      .def_property_readonly("generation", &Session::generation)
      .def_property_readonly("active_room_tiles", [](const Session& s) { return tiles_to_string(s.active_room().tiles()); })
      .def_property_readonly("stream_digest", [](const Session& s) { return hex64(s.stream_digest()); })
      .def_property_readonly("status", [](const Session& s) {
        const auto st = s.status();
        py::dict d;
        d["testAcc"] = st.test_accuracy;
        d["episodes"] = st.episodes;
        d["meanW1"] = st.mean_w1;
        return d;
      });

  m.def("run_experiment", [](const std::string& scenario, int episodes, std::uint64_t seed, const std::string& out_dir,
                             const std::string& config, int burst) {
    ExperimentConfig cfg;
    cfg.scenario = scenario;
    cfg.episodes = episodes;
    cfg.seed = seed;
    cfg.out_dir = out_dir;
    cfg.session = config_from(config);
    cfg.burst_generations = burst;
    ExperimentReport report;
    {
      py::gil_scoped_release release;
      report = run_experiment(cfg);
    }
    return std::make_pair(report_csv(report.rows), hex64(report.stream_digest));
  }, py::arg("scenario"), py::arg("episodes"), py::arg("seed"), py::arg("out_dir") = "", py::arg("config") = "",
     py::arg("burst") = 500);

  m.def("replay_log", [](const std::string& path) { return hex64(replay_log(path)); });
}
