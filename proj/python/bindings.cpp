// Python bindings: step conversion, AORI, stuck metrics, scenes and
// episode runs. Configs cross the boundary as JSON text.

#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "doraemon/errors.hpp"
#include "doraemon/metrics.hpp"
#include "doraemon/nav_ensurance.hpp"
#include "doraemon/runner.hpp"
#include "doraemon/scene_gen.hpp"
#include "doraemon/sim_env.hpp"

namespace py = pybind11;
using namespace doraemon;

namespace {

py::dict episode_dict(const EpisodeResult& r) {
    py::dict d;
    d["scene"] = r.scene_name;
    d["executed"] = r.executed;
    d["error"] = r.error;
    d["success"] = r.outcome.success;
    d["shortest_path"] = r.outcome.shortest_path;
    d["agent_path"] = r.outcome.agent_path;
    d["steps"] = r.outcome.step_count;
    d["aori"] = r.outcome.aori;
    d["actions"] = r.actions;
    d["escapes"] = r.escapes;
    d["fallbacks"] = r.fallbacks;
    d["map_nodes"] = r.map_nodes;
    return d;
}

RunConfig config_from(const std::string& json_text) {
    if (json_text.empty()) {
        return RunConfig{};
    }
    return run_config_from_json(nlohmann::json::parse(json_text));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Object-goal navigation agent with hierarchical memory";

    py::register_exception<Error>(m, "Error", PyExc_ValueError);

    py::class_<PolarAction>(m, "PolarAction")
        .def_static("move", &PolarAction::move, py::arg("r"), py::arg("theta"))
        .def_static("rotate", &PolarAction::rotate, py::arg("theta"))
        .def_static("stop", &PolarAction::stop)
        .def_static("parse", &PolarAction::parse)
        .def_readonly("r", &PolarAction::r)
        .def_readonly("theta", &PolarAction::theta)
        .def_property_readonly("is_stop", &PolarAction::is_stop)
        .def("__eq__", [](const PolarAction& a, const PolarAction& b) { return a == b; })
        .def("__repr__", &PolarAction::to_string);

    m.def("discrete_steps", &discrete_steps, py::arg("action"));
    m.def("aori_value", [](double r, double d) { return aori_value(r, d); }, py::arg("r_overlap"), py::arg("d_norm"));

    m.def(
        "stuck_metrics",
        [](const std::vector<std::tuple<double, double, double>>& poses) {
            std::vector<Pose> p;
            for (const auto& [x, y, yaw] : poses) {
                p.push_back(Pose::planar(x, y, yaw));
            }
            auto s = stuck_metrics(p);
            py::dict d;
            d["eta"] = s.eta;
            d["rho"] = s.rho;
            d["path_length"] = s.path_length;
            return d;
        },
        py::arg("poses"), "poses as (x, y, yaw) tuples");

    m.def(
        "generate_scene",
        [](const std::string& kind, std::uint64_t seed) {
            std::ostringstream out;
            write_scene(generate_scene(parse_scene_kind(kind), seed), out);
            return out.str();
        },
        py::arg("kind"), py::arg("seed"), "scene text for corridor, rooms or blobs");

    m.def(
        "run_episode",
        [](const std::filesystem::path& scene, const std::string& config, std::uint64_t seed) {
            auto cfg = config_from(config);
            auto s = load_scene(scene);
            EpisodeResult r;
            {
                py::gil_scoped_release release;
                r = run_episode(s, cfg, seed);
            }
            return episode_dict(r);
        },
        py::arg("scene"), py::arg("config") = "", py::arg("seed") = 0);

    m.def(
        "run_batch",
        [](const std::string& config) {
            auto cfg = config_from(config);
            std::vector<EpisodeResult> results;
            {
                py::gil_scoped_release release;
                results = run_batch(cfg);
            }
            py::list episodes;
            for (const auto& r : results) {
                episodes.append(episode_dict(r));
            }
            auto s = summarize(results);
            py::dict summary;
            summary["episodes"] = s.episodes;
            summary["failed_to_run"] = s.failed_to_run;
            summary["success_rate"] = s.success_rate;
            summary["spl"] = s.spl;
            summary["mean_aori"] = s.mean_aori;
            summary["mean_steps"] = s.mean_steps;
            py::dict out;
            out["episodes"] = episodes;
            out["summary"] = summary;
            return out;
        },
        py::arg("config"), "config as JSON text, the same schema the CLI reads");

    m.def("default_config", [] { return to_json(RunConfig{}).dump(2); });
}
