#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "doraemon/core.hpp"

namespace doraemon {

struct ProposerConfig {
    double theta_max = deg_to_rad(131.0) / 2.0;  // FOV half-angle
    double delta_theta = deg_to_rad(6.0);        // 360 deg / 60 bins
    double r_max = 1.7;
    double r_min = 0.5;
    double eta_safe = 0.8;
    double tau_prop = 0.0;
    double theta_delta = deg_to_rad(6.0);        // minimum angular separation
    std::int64_t rotation_cooldown = 3;          // steps

    // Exploration bookkeeping used by the filter.
    double visit_cell_size = 0.5;                // meters
    std::size_t history_window = 20;             // recent positions counted by alpha()

    void validate() const;
};

// Maximum free travel distance along a bearing relative to the agent heading.
using NavigabilityFn = std::function<double(double bearing)>;

// Candidate k*delta_theta for k in [-K, K], K = floor(theta_max / delta_theta),
// with r = min(eta_safe * free_range, r_max); r < r_min is dropped.
std::vector<PolarAction> generate_initial(const NavigabilityFn& free_range, const ProposerConfig& cfg);

// Where an action leaves the agent, ignoring collisions.
Vec3 action_destination(const Pose& pose, const PolarAction& action);

// Coarse record of where the agent has been: lifetime visited cells plus the
// most recent positions.
class ExplorationMemory {
public:
    explicit ExplorationMemory(double cell_size = 0.5, std::size_t history_window = 20);

    void record(const Vec3& position);
    // Like record(to), and also marks the cells crossed on the way from
    // `from` as visited. Only `to` enters the recent history.
    void record_path(const Vec3& from, const Vec3& to);

    // alpha: 1 / (1 + visits of the cell among the recent history).
    int recent_visits(const Vec3& position) const;
    // s: 1 - visited fraction of the 3x3 cell neighbourhood.
    double unvisited_fraction(const Vec3& position) const;
    double potential(const Vec3& position) const;

    bool visited(const Vec3& position) const;
    std::size_t visited_cell_count() const { return visits_.size(); }

private:
    using Cell = std::pair<std::int64_t, std::int64_t>;
    Cell cell_of(const Vec3& p) const;

    double cell_size_;
    std::size_t window_;
    std::map<Cell, int> visits_;
    std::deque<Cell> recent_;
};

// Which parts of the mapped area the field of view has already swept.
// Cells become known from the wall-clipped visible region and seen when
// they were also inside the FOV.
class ViewCoverage {
public:
    explicit ViewCoverage(double cell_size = 0.3, double fov = deg_to_rad(131.0), double probe_radius = 4.0);

    // `visible` are world positions of the visible region around `pose`.
    void observe(const Pose& pose, std::span<const Vec2> visible);
    // Known-but-unseen cells inside the FOV sector from `position` facing
    // `heading`, within probe_radius, as a fraction of the sector's cells.
    double novelty(const Vec3& position, double heading) const;

    // Marks the cells crossed moving from `from` to `to`.
    void traverse(const Vec3& from, const Vec3& to);

    // Geodesic distance over known cells (8-connected) to the nearest known
    // cell lying more than `reach` from every traversed cell. Empty when no
    // such cell exists.
    std::unordered_map<std::int64_t, double> frontier_field(double reach) const;
    // Field value at `position`, infinity when its cell is not in `field`.
    double frontier_cost(const std::unordered_map<std::int64_t, double>& field, const Vec3& position) const;

    std::size_t known_cells() const { return known_.size(); }
    std::size_t seen_cells() const { return seen_.size(); }
    std::size_t traversed_cells() const { return traversed_.size(); }

private:
    std::int64_t key(std::int64_t i, std::int64_t j) const;
    std::int64_t key_of(const Vec3& p) const;
    std::unordered_map<std::int64_t, double> spread(const std::vector<std::int64_t>& sources) const;

    double cell_;
    double fov_;
    double probe_;
    std::unordered_set<std::int64_t> known_;
    std::unordered_set<std::int64_t> seen_;
    std::unordered_set<std::int64_t> traversed_;
};

// Keeps candidates with alpha * s > tau_prop, then greedily (best score
// first) those at least theta_delta from every kept candidate. Output is
// sorted by ascending theta.
std::vector<PolarAction> filter_candidates(const std::vector<PolarAction>& initial, const Pose& agent,
                                           const ExplorationMemory& exploration, const ProposerConfig& cfg);

struct AnnotatedCandidate {
    int code = 0;
    PolarAction action;

    friend bool operator==(const AnnotatedCandidate&, const AnnotatedCandidate&) = default;
};

struct AnnotatedCandidates {
    std::vector<AnnotatedCandidate> entries;

    std::vector<int> codes() const;
    bool contains(int code) const;
    const PolarAction& action(int code) const;
    bool empty() const { return entries.empty(); }
    std::size_t size() const { return entries.size(); }
    // One line per candidate: "<code>: turn around" or "<code>: <deg> deg, <m> m".
    std::string render() const;
};

inline constexpr int kTurnAroundCode = 0;

// Never returns an empty set:
//  - nothing filtered and the cooldown elapsed: only (code 0, rotate pi);
//  - nothing filtered within the cooldown: `initial` re-emitted with halved r
//    (or the turn-around when `initial` is empty as well);
//  - otherwise codes 1..n by ascending theta, with code 0 prepended when the
//    turn instruction is active.
AnnotatedCandidates apply_safety_recovery(const std::vector<PolarAction>& filtered,
                                          const std::vector<PolarAction>& initial,
                                          std::int64_t steps_since_rotation, bool turn_active,
                                          const ProposerConfig& cfg);

}  // namespace doraemon
