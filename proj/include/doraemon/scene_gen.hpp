#pragma once

// Seeded generators for small test scenes, plus the grid shortest-path
// oracle that fills Scene::shortest_path.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "doraemon/sim_env.hpp"

namespace doraemon {

enum class SceneKind { Corridor, Rooms, Blobs };

const char* scene_kind_name(SceneKind kind);
// Throws InvalidInput for an unknown name.
SceneKind parse_scene_kind(std::string_view name);

// Geodesic length from the start to any free cell within success_distance
// of a target surface, over an 8-connected grid of free cells (clearance
// >= agent_radius). nullopt when unreachable.
std::optional<double> grid_shortest_path(const Scene& scene, double agent_radius = 0.17,
                                         double resolution = 0.1, double success_distance = 0.3);

Scene generate_scene(SceneKind kind, std::uint64_t seed, const SimConfig& cfg = {});
// Scenes named "<kind>_<index>", each from its own derived seed.
std::vector<Scene> generate_scenes(SceneKind kind, std::size_t count, std::uint64_t seed,
                                   const SimConfig& cfg = {});

}  // namespace doraemon
