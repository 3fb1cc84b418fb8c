#pragma once

// Deterministic 2D stand-in for the embodied simulator: polygon walls,
// labelled solid circular objects, swept-circle motion, ray casting and the
// stop-twice success rule.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "doraemon/core.hpp"
#include "doraemon/metrics.hpp"
#include "doraemon/nav_ensurance.hpp"

namespace doraemon {

struct Bounds {
    double xmin = 0.0;
    double ymin = 0.0;
    double xmax = 0.0;
    double ymax = 0.0;

    bool contains(Vec2 p) const { return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax; }
    friend bool operator==(const Bounds&, const Bounds&) = default;
};

using Polygon = std::vector<Vec2>;

struct SceneObject {
    std::string label;
    Vec2 position;
    double radius = 0.0;

    friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

struct Scene {
    std::string name = "scene";
    Bounds bounds;
    std::vector<Polygon> obstacles;
    std::vector<SceneObject> objects;
    Vec2 start_position;
    double start_yaw = 0.0;
    std::string target_label;
    double shortest_path = 0.0;  // l_i, meters

    Pose start_pose() const { return Pose::planar(start_position.x, start_position.y, start_yaw); }
    friend bool operator==(const Scene&, const Scene&) = default;
};

struct Segment {
    Vec2 a;
    Vec2 b;
};

// Polygon edges plus the four sides of the bounds.
std::vector<Segment> wall_segments(const Scene& scene);
double point_segment_distance(Vec2 p, const Segment& s);
bool point_in_polygon(Vec2 p, const Polygon& poly);

// Distance along the ray to the first wall, or max_range.
double ray_to_walls(const std::vector<Segment>& walls, Vec2 origin, double heading, double max_range);
// Travel before a disc of `radius` moving from `origin` touches a wall,
// capped at max_range. Motions leading away from a touching wall are free.
double swept_clearance(const std::vector<Segment>& walls, Vec2 origin, double heading, double radius,
                       double max_range);
// Same, with objects as solid discs as well.
double swept_clearance(const std::vector<Segment>& walls, const std::vector<SceneObject>& objects, Vec2 origin,
                       double heading, double radius, double max_range);

struct SimConfig {
    double agent_radius = 0.17;
    double fov = deg_to_rad(131.0);
    double success_distance = 0.3;
    std::int64_t max_actions = 40;
    double r_max = 1.7;
    double sensing_range = 5.0;   // cap of the navigability profile
    int profile_rays = 64;        // across the FOV
    int visibility_bins = 720;    // angular bins of the visible-cell disk
    double near_range = 1.5;      // description buckets
    double mid_range = 4.0;
    double side_angle = deg_to_rad(15.0);
    AoriConfig aori;

    // Objects are seen up to the AORI disk radius.
    double view_range() const { return aori.visible_radius(); }
    void validate() const;
};

// Throws InvalidInput describing the first violated scene invariant.
void validate_scene(const Scene& scene, const SimConfig& cfg = {});

struct VisibleObject {
    std::size_t index = 0;  // into Scene::objects
    std::string label;
    double range = 0.0;     // to the surface, 0 when overlapping
    double bearing = 0.0;   // relative to heading

    friend bool operator==(const VisibleObject&, const VisibleObject&) = default;
};

struct Observation {
    Pose pose;
    std::vector<HeadingSample> profile;   // bearings relative to heading
    std::vector<VisibleObject> objects;   // by range, then label
    std::string description;
    std::vector<GridCell> visible_cells;
};

// "you see: <label> at <near|mid|far> <left|ahead|right>, ..." or
// "you see: nothing".
std::string describe(const std::vector<VisibleObject>& objects, const SimConfig& cfg);

struct AgentState {
    Pose pose;
    std::int64_t steps_taken = 0;
    std::int64_t stop_trigger_streak = 0;
    double path_length = 0.0;
    bool terminated = false;
    bool success = false;
};

struct SuccessCheck {
    bool trigger = false;
    bool done_success = false;
};

class Simulator {
public:
    explicit Simulator(Scene scene, SimConfig cfg = {});

    // Resets to the start pose and returns the first observation.
    Observation reset();
    // Throws EpisodeOver after termination and InvalidInput for an invalid
    // action. A stop ends the episode; so does the max_actions cap.
    Observation step(const PolarAction& action);

    const AgentState& state() const { return state_; }
    const Scene& scene() const { return scene_; }
    const SimConfig& config() const { return cfg_; }
    const Observation& last_observation() const { return last_; }

    Observation observe() const;
    SuccessCheck check_success(const Observation& obs) const;

    // Depth-like free range: travel before the agent disc touches a wall or
    // object, plus the agent radius, capped at sensing_range. Head-on this is
    // the ray depth; obstacles grazing the disc shorten it too.
    double free_range(double bearing) const;
    double free_range_from(const Pose& pose, double bearing) const;
    // Evenly spaced full-circle samples, relative to the heading.
    std::vector<HeadingSample> heading_samples(int n) const;
    // Distance from p to the nearest wall or object surface.
    double clearance(Vec2 p) const;
    // Surface distance to the nearest object carrying the target label.
    double target_distance() const;
    double target_distance_from(Vec2 p) const;

private:
    bool line_of_sight(Vec2 from, Vec2 to) const;

    Scene scene_;
    SimConfig cfg_;
    std::vector<Segment> walls_;
    AgentState state_;
    Observation last_;
};

SuccessCheck check_success(const Simulator& sim, const Observation& obs);

// Versioned line-based text format. Parse errors carry the line number,
// unknown records are rejected by name.
inline constexpr int kSceneVersion = 1;

Scene parse_scene(std::istream& in);
void write_scene(const Scene& scene, std::ostream& out);
Scene load_scene(const std::filesystem::path& path);
void save_scene(const Scene& scene, const std::filesystem::path& path);

}  // namespace doraemon
