#pragma once

// Episode evaluation: SR, SPL, the area overlap redundancy index and the
// discrete step conversion of polar actions.

#include <compare>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "doraemon/core.hpp"

namespace doraemon {

enum class OverlapRule {
    // Step t overlaps when its visible set hits >= explore_threshold cells
    // already seen on earlier steps. Events accumulate over the episode.
    RevisitedCells,
    // Literal pairwise form: the latest step against every prior step,
    // |V_t n V_i| >= explore_threshold.
    Pairwise,
};

struct AoriConfig {
    int map_size = 5000;        // cells per side
    int voxel_ray_size = 60;
    int explore_threshold = 3;  // observations per cell
    double e_i_scaling = 0.8;
    double w_c = 0.8;
    double w_d = 0.2;
    double grid_resolution = 0.1;  // m per cell
    OverlapRule overlap_rule = OverlapRule::RevisitedCells;

    // Radius of the visible disk in meters.
    double visible_radius() const {
        return static_cast<double>(map_size) / voxel_ray_size * grid_resolution;
    }
    void validate() const;
};

struct GridCell {
    std::int32_t i = 0;
    std::int32_t j = 0;

    friend auto operator<=>(const GridCell&, const GridCell&) = default;
};

// The grid is centered on the world origin. Throws BoundsError outside it.
GridCell world_to_cell(Vec2 p, const AoriConfig& cfg);
Vec2 cell_center(GridCell c, const AoriConfig& cfg);

double aori_value(double r_overlap, double d_norm, const AoriConfig& cfg = {});

class AoriAccumulator {
public:
    explicit AoriAccumulator(AoriConfig cfg = {});

    // Cells are deduplicated. Throws BoundsError for cells off the grid
    // (the accumulator is left unchanged).
    void observe_step(std::span<const GridCell> visible);

    std::int64_t steps() const { return steps_; }
    std::int64_t overlap_events() const { return overlap_events_; }
    std::size_t observed_cells() const { return counts_.size(); }
    std::size_t active_cells() const { return active_; }
    int count(GridCell c) const;

    double r_overlap() const;
    double d_norm() const;
    // Throws InvalidInput before the first step.
    double aori() const;

    const AoriConfig& config() const { return cfg_; }

private:
    static std::uint64_t key(GridCell c);

    AoriConfig cfg_;
    std::unordered_map<std::uint64_t, int> counts_;
    std::vector<std::vector<std::uint64_t>> history_;  // pairwise rule only
    std::int64_t steps_ = 0;
    std::int64_t overlap_events_ = 0;
    double pairwise_ratio_ = 0.0;
    std::size_t active_ = 0;
};

struct EpisodeOutcome {
    bool success = false;
    double shortest_path = 0.0;  // l_i
    double agent_path = 0.0;     // p_i
    std::int64_t step_count = 0;
    double aori = 0.0;
};

// Throws EmptyInput on an empty list and InvalidEpisode when l_i <= 0.
double spl(std::span<const EpisodeOutcome> outcomes);
double success_rate(std::span<const EpisodeOutcome> outcomes);

inline constexpr double kStepLength = 0.25;  // m per discrete forward step
inline constexpr double kStepAngle = 30.0;   // deg per discrete turn
inline constexpr std::int64_t kStepBudget = 500;

// stop -> 1, else max(ceil(r / 0.25) + ceil(|theta| deg / 30), 1).
std::int64_t discrete_steps(const PolarAction& action);

struct StepBudget {
    std::int64_t total = 0;
    std::int64_t budget = kStepBudget;
    bool exceeded() const { return total > budget; }
};

StepBudget episode_step_budget(std::span<const PolarAction> actions, std::int64_t budget = kStepBudget);

}  // namespace doraemon
