#include "doraemon/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace doraemon {

void AoriConfig::validate() const {
    if (map_size <= 0 || voxel_ray_size <= 0 || explore_threshold <= 0 || !(grid_resolution > 0) ||
        !(e_i_scaling > 0)) {
        throw InvalidInput("AORI sizes must be positive");
    }
    if (w_c < 0 || w_d < 0 || std::abs(w_c + w_d - 1.0) > 1e-12) {
        throw InvalidInput("AORI weights must be non-negative and sum to 1");
    }
}

GridCell world_to_cell(Vec2 p, const AoriConfig& cfg) {
    double half = cfg.map_size / 2;
    double fi = std::floor(p.x / cfg.grid_resolution) + half;
    double fj = std::floor(p.y / cfg.grid_resolution) + half;
    if (!(fi >= 0 && fi < cfg.map_size && fj >= 0 && fj < cfg.map_size)) {
        throw BoundsError("position outside the AORI grid");
    }
    return {static_cast<std::int32_t>(fi), static_cast<std::int32_t>(fj)};
}

Vec2 cell_center(GridCell c, const AoriConfig& cfg) {
    int half = cfg.map_size / 2;
    return {(c.i - half + 0.5) * cfg.grid_resolution, (c.j - half + 0.5) * cfg.grid_resolution};
}

double aori_value(double r_overlap, double d_norm, const AoriConfig& cfg) {
    double v = 1.0 - (cfg.w_c * (1.0 - r_overlap) * (1.0 - r_overlap) + cfg.w_d * (1.0 - d_norm));
    return std::clamp(v, 0.0, 1.0);
}

AoriAccumulator::AoriAccumulator(AoriConfig cfg) : cfg_(cfg) { cfg_.validate(); }

std::uint64_t AoriAccumulator::key(GridCell c) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.i)) << 32) | static_cast<std::uint32_t>(c.j);
}

int AoriAccumulator::count(GridCell c) const {
    auto it = counts_.find(key(c));
    return it == counts_.end() ? 0 : it->second;
}

void AoriAccumulator::observe_step(std::span<const GridCell> visible) {
    std::vector<std::uint64_t> keys;
    keys.reserve(visible.size());
    for (const auto& c : visible) {
        if (c.i < 0 || c.j < 0 || c.i >= cfg_.map_size || c.j >= cfg_.map_size) {
            throw BoundsError("visible cell outside the AORI grid");
        }
        keys.push_back(key(c));
    }
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

    ++steps_;
    if (cfg_.overlap_rule == OverlapRule::RevisitedCells) {
        std::int64_t revisited = 0;
        for (auto k : keys) {
            revisited += counts_.count(k) ? 1 : 0;
        }
        if (steps_ > 1 && revisited >= cfg_.explore_threshold) {
            ++overlap_events_;
        }
    } else {
        std::int64_t hits = 0;
        for (const auto& prior : history_) {
            std::int64_t common = 0;
            auto a = keys.begin();
            auto b = prior.begin();
            while (a != keys.end() && b != prior.end() && common < cfg_.explore_threshold) {
                if (*a < *b) {
                    ++a;
                } else if (*b < *a) {
                    ++b;
                } else {
                    ++common;
                    ++a;
                    ++b;
                }
            }
            hits += common >= cfg_.explore_threshold ? 1 : 0;
        }
        overlap_events_ = hits;
        pairwise_ratio_ = history_.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(history_.size());
        history_.push_back(keys);
    }

    for (auto k : keys) {
        int& n = counts_[k];
        ++n;
        if (n == cfg_.explore_threshold) {
            ++active_;
        }
    }
}

double AoriAccumulator::r_overlap() const {
    if (cfg_.overlap_rule == OverlapRule::Pairwise) {
        return pairwise_ratio_;
    }
    return static_cast<double>(overlap_events_) / static_cast<double>(std::max<std::int64_t>(steps_ - 1, 1));
}

double AoriAccumulator::d_norm() const {
    if (steps_ == 0 || counts_.empty()) {
        return 0.0;
    }
    double map_cells = static_cast<double>(cfg_.map_size) * static_cast<double>(cfg_.map_size);
    double lambda = cfg_.e_i_scaling * (static_cast<double>(counts_.size()) / map_cells) * static_cast<double>(steps_);
    return std::min(1.0, static_cast<double>(active_) / lambda);
}

double AoriAccumulator::aori() const {
    if (steps_ == 0) {
        throw InvalidInput("AORI needs at least one observed step");
    }
    return aori_value(r_overlap(), d_norm(), cfg_);
}

double spl(std::span<const EpisodeOutcome> outcomes) {
    if (outcomes.empty()) {
        throw EmptyInput("SPL of an empty episode list");
    }
    double sum = 0.0;
    for (const auto& o : outcomes) {
        if (!(o.shortest_path > 0.0)) {
            throw InvalidEpisode("shortest path length must be positive");
        }
        if (o.success) {
            sum += o.shortest_path / std::max(o.agent_path, o.shortest_path);
        }
    }
    return sum / static_cast<double>(outcomes.size());
}

double success_rate(std::span<const EpisodeOutcome> outcomes) {
    if (outcomes.empty()) {
        throw EmptyInput("success rate of an empty episode list");
    }
    auto n = std::count_if(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.success; });
    return static_cast<double>(n) / static_cast<double>(outcomes.size());
}

std::int64_t discrete_steps(const PolarAction& action) {
    if (action.is_stop()) {
        return 1;
    }
    // The tolerance keeps exact multiples (90 deg passed as radians) from
    // rounding up a whole step.
    auto ceil_tol = [](double x) { return static_cast<std::int64_t>(std::ceil(x - 1e-9)); };
    std::int64_t n = ceil_tol(action.r / kStepLength) + ceil_tol(rad_to_deg(std::abs(action.theta)) / kStepAngle);
    return std::max<std::int64_t>(n, 1);
}

StepBudget episode_step_budget(std::span<const PolarAction> actions, std::int64_t budget) {
    StepBudget out;
    out.budget = budget;
    for (const auto& a : actions) {
        out.total += discrete_steps(a);
    }
    return out;
}

}  // namespace doraemon
