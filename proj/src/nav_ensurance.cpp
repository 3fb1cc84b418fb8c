#include "doraemon/nav_ensurance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace doraemon {

namespace {

std::int64_t cell_key(std::int64_t i, std::int64_t j) {
    return ((i + (1LL << 31)) << 32) | ((j + (1LL << 31)) & 0xffffffffLL);
}

}  // namespace

void StuckConfig::validate() const {
    if (window == 0 || k_consecutive == 0) {
        throw InvalidInput("stuck window and k must be positive");
    }
    if (std::abs(w_eta + w_rho - 1.0) > 1e-12) {
        throw InvalidInput("stuck weights must sum to 1");
    }
    if (!(tau_eta > 0) || !(tau_rho > 0) || !(short_path_len > 0) || !(area_gain_floor > 0) ||
        !(s_threshold > 0) || !(footprint_resolution > 0) || !(agent_radius > 0)) {
        throw InvalidInput("stuck thresholds must be positive");
    }
}

StuckMetrics stuck_metrics(std::span<const Pose> poses) {
    if (poses.size() < 2) {
        throw InvalidInput("stuck window needs at least two poses");
    }
    StuckMetrics m;
    double rotation = 0.0;
    for (std::size_t t = 1; t < poses.size(); ++t) {
        m.path_length += distance(poses[t].position, poses[t - 1].position);
        rotation += std::abs(wrap_angle(poses[t].yaw() - poses[t - 1].yaw()));
    }
    if (m.path_length < 1e-6) {
        m.eta = 0.0;
        m.rho = kRhoSentinel;
        return m;
    }
    m.eta = distance(poses.back().position, poses.front().position) / m.path_length;
    m.rho = rotation / m.path_length;
    return m;
}

StuckScore stuck_score(double eta, double rho, double path_len, double area_gain, const StuckConfig& cfg) {
    StuckScore s;
    if (eta < cfg.tau_eta) {
        s.score += cfg.w_eta;
    }
    if (path_len < cfg.short_path_len && rho > cfg.tau_rho) {
        s.score += cfg.w_rho;
    }
    s.stuck_now = s.score >= cfg.s_threshold || area_gain < cfg.area_gain_floor;
    return s;
}

bool confirm_stuck(const std::vector<bool>& history, const StuckConfig& cfg) {
    if (history.size() < cfg.k_consecutive) {
        return false;
    }
    return std::all_of(history.end() - static_cast<std::ptrdiff_t>(cfg.k_consecutive), history.end(),
                       [](bool b) { return b; });
}

StuckDetector::StuckDetector(StuckConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void StuckDetector::reset() {
    poses_.clear();
    step_of_pose_.clear();
    flags_.clear();
}

std::optional<WindowEvaluation> StuckDetector::observe(const Pose& pose) {
    ++step_;
    const double res = cfg_.footprint_resolution;
    const double rad = cfg_.agent_radius;
    auto lo_i = static_cast<std::int64_t>(std::floor((pose.position.x - rad) / res));
    auto hi_i = static_cast<std::int64_t>(std::floor((pose.position.x + rad) / res));
    auto lo_j = static_cast<std::int64_t>(std::floor((pose.position.y - rad) / res));
    auto hi_j = static_cast<std::int64_t>(std::floor((pose.position.y + rad) / res));
    for (auto i = lo_i; i <= hi_i; ++i) {
        for (auto j = lo_j; j <= hi_j; ++j) {
            double cx = (static_cast<double>(i) + 0.5) * res - pose.position.x;
            double cy = (static_cast<double>(j) + 0.5) * res - pose.position.y;
            if (cx * cx + cy * cy <= rad * rad) {
                first_covered_.emplace(cell_key(i, j), step_);
            }
        }
    }

    poses_.push_back(pose);
    step_of_pose_.push_back(step_);
    if (poses_.size() > cfg_.window + 1) {
        poses_.pop_front();
        step_of_pose_.pop_front();
    }
    if (poses_.size() < cfg_.window + 1) {
        return std::nullopt;
    }

    std::vector<Pose> window(poses_.begin(), poses_.end());
    WindowEvaluation ev;
    ev.metrics = stuck_metrics(window);
    std::int64_t start = step_of_pose_.front();
    std::size_t fresh = 0;
    for (const auto& [_, first] : first_covered_) {
        fresh += first > start ? 1 : 0;
    }
    ev.area_gain = static_cast<double>(fresh) * res * res;
    ev.score = stuck_score(ev.metrics.eta, ev.metrics.rho, ev.metrics.path_length, ev.area_gain, cfg_);
    flags_.push_back(ev.score.stuck_now);
    ev.confirmed = confirm_stuck(flags_, cfg_);
    return ev;
}

const char* escape_kind_name(EscapeKind kind) {
    switch (kind) {
        case EscapeKind::CornerTrap: return "corner_trap";
        case EscapeKind::NarrowPassage: return "narrow_passage";
        case EscapeKind::Ambiguous: return "ambiguous";
    }
    return "?";
}

EscapeContext classify_context(std::span<const HeadingSample> samples, std::span<const Pose> history,
                               const EscapeConfig& cfg) {
    const std::size_t n = samples.size();
    if (n < 8) {
        throw InvalidInput("context classification needs at least 8 headings");
    }
    std::vector<bool> free(n);
    std::size_t free_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        free[i] = samples[i].free_range >= cfg.free_threshold;
        free_count += free[i] ? 1 : 0;
    }

    EscapeContext ctx;
    if (static_cast<double>(free_count) <= cfg.corner_free_fraction * static_cast<double>(n)) {
        ctx.kind = EscapeKind::CornerTrap;
        return ctx;
    }

    const double spacing = 2.0 * kPi / static_cast<double>(n);
    if (free_count < n) {
        // Walk the circle starting just after a blocked heading to collect arcs.
        std::size_t start = 0;
        while (free[start]) {
            ++start;
        }
        struct Arc {
            double center;
            double width;
        };
        std::vector<Arc> arcs;
        std::size_t run = 0;
        std::size_t run_start = 0;
        for (std::size_t k = 1; k <= n; ++k) {
            std::size_t i = (start + k) % n;
            if (free[i]) {
                if (run == 0) {
                    run_start = i;
                }
                ++run;
            }
            if ((!free[i] || k == n) && run > 0) {
                double first = samples[run_start].heading;
                arcs.push_back({wrap_angle(first + 0.5 * static_cast<double>(run - 1) * spacing),
                                static_cast<double>(run) * spacing});
                run = 0;
            }
        }
        if (arcs.size() == 2 && arcs[0].width <= cfg.narrow_max_arc + 1e-9 &&
            arcs[1].width <= cfg.narrow_max_arc + 1e-9 &&
            std::abs(std::abs(wrap_angle(arcs[0].center - arcs[1].center)) - kPi) <= cfg.antipodal_tolerance) {
            ctx.kind = EscapeKind::NarrowPassage;
            return ctx;
        }
    }

    ctx.kind = EscapeKind::Ambiguous;
    for (std::size_t i = history.size(); i-- > 1;) {
        Vec3 d = history[i].position - history[i - 1].position;
        if (d.norm() >= cfg.success_displacement) {
            ctx.recent_success_heading = std::atan2(d.y, d.x);
            break;
        }
    }
    return ctx;
}

EscapePlanner::EscapePlanner(std::uint64_t seed, EscapeConfig cfg) : cfg_(cfg), rng_(seed) {}

double EscapePlanner::uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

PolarAction EscapePlanner::begin(const EscapeContext& ctx, double current_yaw, const NavigabilityFn& free_range,
                                 double r_min) {
    pending_.reset();
    switch (ctx.kind) {
        case EscapeKind::CornerTrap:
            return PolarAction::rotate(kPi);
        case EscapeKind::NarrowPassage: {
            double sign = (rng_() & 1ULL) ? 1.0 : -1.0;
            double turn = cfg_.turn_min + (cfg_.turn_max - cfg_.turn_min) * uniform();
            pending_ = PolarAction::rotate(sign * turn);
            return PolarAction::move(cfg_.backoff, kPi);
        }
        case EscapeKind::Ambiguous: {
            double reference = ctx.recent_success_heading.value_or(current_yaw);
            double left = wrap_angle(reference + kPi / 2.0 - current_yaw);
            double right = wrap_angle(reference - kPi / 2.0 - current_yaw);
            double bearing = left;
            if (free_range && free_range(right) > free_range(left)) {
                bearing = right;
            }
            return PolarAction::move(r_min, bearing);
        }
    }
    return PolarAction::rotate(kPi);
}

std::optional<PolarAction> EscapePlanner::take_pending() {
    auto p = pending_;
    pending_.reset();
    return p;
}

PolarAction escape_action(const EscapeContext& ctx, std::uint64_t seed, double current_yaw,
                          const NavigabilityFn& free_range, double r_min) {
    EscapePlanner planner(seed);
    return planner.begin(ctx, current_yaw, free_range, r_min);
}

bool precision_mode_active(double target_likelihood, std::optional<double> target_range,
                           const PrecisionConfig& cfg) {
    return target_likelihood >= cfg.likelihood_threshold && target_range &&
           *target_range <= cfg.activation_range;
}

AnnotatedCandidates precision_scale(const AnnotatedCandidates& actions, double gamma_step) {
    AnnotatedCandidates out = actions;
    for (auto& e : out.entries) {
        if (!e.action.is_stop()) {
            e.action.r *= gamma_step;
        }
    }
    return out;
}

}  // namespace doraemon
