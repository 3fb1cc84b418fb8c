#include "doraemon/action_proposer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <queue>

namespace doraemon {

namespace {

constexpr double kAngleEps = 1e-9;

}  // namespace

void ProposerConfig::validate() const {
    if (!(delta_theta > 0.0) || delta_theta > theta_max + kAngleEps) {
        throw InvalidInput("require 0 < delta_theta <= theta_max");
    }
    if (!(r_min > 0.0) || r_min > r_max) {
        throw InvalidInput("require 0 < r_min <= r_max");
    }
    if (!(eta_safe > 0.0) || eta_safe > 1.0) {
        throw InvalidInput("safety margin must lie in (0, 1]");
    }
    if (theta_delta < 0.0 || rotation_cooldown < 0 || !(visit_cell_size > 0.0) || history_window == 0) {
        throw InvalidInput("invalid proposer filter settings");
    }
}

std::vector<PolarAction> generate_initial(const NavigabilityFn& free_range, const ProposerConfig& cfg) {
    cfg.validate();
    auto k_max = static_cast<int>(std::floor(cfg.theta_max / cfg.delta_theta + kAngleEps));
    std::vector<PolarAction> out;
    for (int k = -k_max; k <= k_max; ++k) {
        double theta = k * cfg.delta_theta;
        double r = std::min(cfg.eta_safe * std::max(free_range(theta), 0.0), cfg.r_max);
        if (r >= cfg.r_min) {
            out.push_back(PolarAction::move(r, theta));
        }
    }
    return out;
}

Vec3 action_destination(const Pose& pose, const PolarAction& action) {
    if (action.is_stop()) {
        return pose.position;
    }
    double heading = pose.yaw() + action.theta;
    return pose.position + Vec3{action.r * std::cos(heading), action.r * std::sin(heading), 0.0};
}

ExplorationMemory::ExplorationMemory(double cell_size, std::size_t history_window)
    : cell_size_(cell_size), window_(history_window) {
    if (!(cell_size > 0.0) || history_window == 0) {
        throw InvalidInput("invalid exploration memory settings");
    }
}

ExplorationMemory::Cell ExplorationMemory::cell_of(const Vec3& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x / cell_size_)),
            static_cast<std::int64_t>(std::floor(p.y / cell_size_))};
}

void ExplorationMemory::record(const Vec3& position) {
    Cell c = cell_of(position);
    ++visits_[c];
    recent_.push_back(c);
    if (recent_.size() > window_) {
        recent_.pop_front();
    }
}

void ExplorationMemory::record_path(const Vec3& from, const Vec3& to) {
    double len = distance(from, to);
    auto n = static_cast<int>(std::ceil(len / (0.5 * cell_size_)));
    for (int k = 0; k < n; ++k) {
        Cell c = cell_of(from + (to - from) * (static_cast<double>(k) / n));
        visits_.try_emplace(c, 0);
    }
    record(to);
}

int ExplorationMemory::recent_visits(const Vec3& position) const {
    Cell c = cell_of(position);
    return static_cast<int>(std::count(recent_.begin(), recent_.end(), c));
}

double ExplorationMemory::unvisited_fraction(const Vec3& position) const {
    Cell c = cell_of(position);
    int visited = 0;
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
        for (std::int64_t dy = -1; dy <= 1; ++dy) {
            visited += visits_.count({c.first + dx, c.second + dy}) ? 1 : 0;
        }
    }
    return 1.0 - visited / 9.0;
}

double ExplorationMemory::potential(const Vec3& position) const {
    return unvisited_fraction(position) / (1.0 + recent_visits(position));
}

bool ExplorationMemory::visited(const Vec3& position) const { return visits_.count(cell_of(position)) > 0; }

ViewCoverage::ViewCoverage(double cell_size, double fov, double probe_radius)
    : cell_(cell_size), fov_(fov), probe_(probe_radius) {
    if (!(cell_size > 0.0) || !(fov > 0.0) || !(probe_radius > 0.0)) {
        throw InvalidInput("invalid view coverage settings");
    }
}

std::int64_t ViewCoverage::key(std::int64_t i, std::int64_t j) const {
    return ((i + (1LL << 31)) << 32) | ((j + (1LL << 31)) & 0xffffffffLL);
}

void ViewCoverage::observe(const Pose& pose, std::span<const Vec2> visible) {
    const double yaw = pose.yaw();
    for (const auto& p : visible) {
        auto i = static_cast<std::int64_t>(std::floor(p.x / cell_));
        auto j = static_cast<std::int64_t>(std::floor(p.y / cell_));
        std::int64_t k = key(i, j);
        known_.insert(k);
        double bearing = wrap_angle(std::atan2(p.y - pose.position.y, p.x - pose.position.x) - yaw);
        if (std::abs(bearing) <= fov_ / 2) {
            seen_.insert(k);
        }
    }
}

double ViewCoverage::novelty(const Vec3& position, double heading) const {
    auto lo_i = static_cast<std::int64_t>(std::floor((position.x - probe_) / cell_));
    auto hi_i = static_cast<std::int64_t>(std::floor((position.x + probe_) / cell_));
    auto lo_j = static_cast<std::int64_t>(std::floor((position.y - probe_) / cell_));
    auto hi_j = static_cast<std::int64_t>(std::floor((position.y + probe_) / cell_));
    std::size_t sector = 0;
    std::size_t fresh = 0;
    for (auto i = lo_i; i <= hi_i; ++i) {
        for (auto j = lo_j; j <= hi_j; ++j) {
            double dx = (static_cast<double>(i) + 0.5) * cell_ - position.x;
            double dy = (static_cast<double>(j) + 0.5) * cell_ - position.y;
            if (dx * dx + dy * dy > probe_ * probe_ ||
                std::abs(wrap_angle(std::atan2(dy, dx) - heading)) > fov_ / 2) {
                continue;
            }
            ++sector;
            std::int64_t k = key(i, j);
            if (known_.count(k) && !seen_.count(k)) {
                ++fresh;
            }
        }
    }
    return sector ? static_cast<double>(fresh) / static_cast<double>(sector) : 0.0;
}

std::int64_t ViewCoverage::key_of(const Vec3& p) const {
    return key(static_cast<std::int64_t>(std::floor(p.x / cell_)), static_cast<std::int64_t>(std::floor(p.y / cell_)));
}

void ViewCoverage::traverse(const Vec3& from, const Vec3& to) {
    auto n = static_cast<int>(std::ceil(distance(from, to) / (0.5 * cell_)));
    for (int k = 0; k <= n; ++k) {
        double f = n ? static_cast<double>(k) / n : 0.0;
        traversed_.insert(key_of(from + (to - from) * f));
    }
}

std::unordered_map<std::int64_t, double> ViewCoverage::spread(const std::vector<std::int64_t>& sources) const {
    using Item = std::pair<double, std::int64_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
    std::unordered_map<std::int64_t, double> dist;
    for (auto k : sources) {
        dist[k] = 0.0;
        open.push({0.0, k});
    }
    while (!open.empty()) {
        auto [d, k] = open.top();
        open.pop();
        if (d > dist[k]) {
            continue;
        }
        std::int64_t i = (k >> 32) - (1LL << 31);
        std::int64_t j = (k & 0xffffffffLL) - (1LL << 31);
        for (int di = -1; di <= 1; ++di) {
            for (int dj = -1; dj <= 1; ++dj) {
                if (di == 0 && dj == 0) {
                    continue;
                }
                std::int64_t nk = key(i + di, j + dj);
                if (!known_.count(nk)) {
                    continue;
                }
                double nd = d + cell_ * ((di != 0 && dj != 0) ? std::sqrt(2.0) : 1.0);
                auto it = dist.find(nk);
                if (it == dist.end() || nd < it->second) {
                    dist[nk] = nd;
                    open.push({nd, nk});
                }
            }
        }
    }
    return dist;
}

std::unordered_map<std::int64_t, double> ViewCoverage::frontier_field(double reach) const {
    std::vector<std::int64_t> walked(traversed_.begin(), traversed_.end());
    std::sort(walked.begin(), walked.end());
    auto from_walked = spread(walked);
    std::vector<std::int64_t> sources;
    for (auto k : known_) {
        auto it = from_walked.find(k);
        if (it == from_walked.end() || it->second > reach) {
            sources.push_back(k);
        }
    }
    std::sort(sources.begin(), sources.end());
    if (sources.empty()) {
        return {};
    }
    return spread(sources);
}

double ViewCoverage::frontier_cost(const std::unordered_map<std::int64_t, double>& field, const Vec3& position) const {
    auto it = field.find(key_of(position));
    return it == field.end() ? std::numeric_limits<double>::infinity() : it->second;
}

std::vector<PolarAction> filter_candidates(const std::vector<PolarAction>& initial, const Pose& agent,
                                           const ExplorationMemory& exploration, const ProposerConfig& cfg) {
    struct Scored {
        std::size_t index;
        double score;
    };
    std::vector<Scored> viable;
    for (std::size_t i = 0; i < initial.size(); ++i) {
        double score = exploration.potential(action_destination(agent, initial[i]));
        if (score > cfg.tau_prop) {
            viable.push_back({i, score});
        }
    }
    std::stable_sort(viable.begin(), viable.end(), [&](const Scored& a, const Scored& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        return std::abs(initial[a.index].theta) < std::abs(initial[b.index].theta);
    });
    std::vector<PolarAction> kept;
    for (const auto& s : viable) {
        const auto& cand = initial[s.index];
        bool separated = std::all_of(kept.begin(), kept.end(), [&](const PolarAction& k) {
            return std::abs(wrap_angle(cand.theta - k.theta)) >= cfg.theta_delta - kAngleEps;
        });
        if (separated) {
            kept.push_back(cand);
        }
    }
    std::sort(kept.begin(), kept.end(), [](const PolarAction& a, const PolarAction& b) { return a.theta < b.theta; });
    return kept;
}

std::vector<int> AnnotatedCandidates::codes() const {
    std::vector<int> out;
    for (const auto& e : entries) {
        out.push_back(e.code);
    }
    return out;
}

bool AnnotatedCandidates::contains(int code) const {
    return std::any_of(entries.begin(), entries.end(), [code](const auto& e) { return e.code == code; });
}

const PolarAction& AnnotatedCandidates::action(int code) const {
    for (const auto& e : entries) {
        if (e.code == code) {
            return e.action;
        }
    }
    throw InvalidCode("no candidate with code " + std::to_string(code));
}

std::string AnnotatedCandidates::render() const {
    std::string out;
    char buf[128];
    for (const auto& e : entries) {
        if (e.code == kTurnAroundCode) {
            std::snprintf(buf, sizeof buf, "%d: turn around\n", e.code);
        } else {
            // Positive bearings turn left (counter-clockwise).
            std::snprintf(buf, sizeof buf, "%d: bearing %+.0f deg, distance %.2f m\n", e.code,
                          rad_to_deg(e.action.theta), e.action.r);
        }
        out += buf;
    }
    return out;
}

AnnotatedCandidates apply_safety_recovery(const std::vector<PolarAction>& filtered,
                                          const std::vector<PolarAction>& initial,
                                          std::int64_t steps_since_rotation, bool turn_active,
                                          const ProposerConfig& cfg) {
    AnnotatedCandidates out;
    const AnnotatedCandidate turn_around{kTurnAroundCode, PolarAction::rotate(kPi)};
    auto number = [&out](std::vector<PolarAction> actions) {
        std::stable_sort(actions.begin(), actions.end(),
                         [](const PolarAction& a, const PolarAction& b) { return a.theta < b.theta; });
        int code = 1;
        for (auto& a : actions) {
            out.entries.push_back({code++, a});
        }
    };

    if (filtered.empty()) {
        if (steps_since_rotation > cfg.rotation_cooldown || initial.empty()) {
            out.entries.push_back(turn_around);
            return out;
        }
        std::vector<PolarAction> halved;
        for (const auto& a : initial) {
            halved.push_back(PolarAction::move(a.r / 2.0, a.theta));
        }
        number(std::move(halved));
        return out;
    }
    if (turn_active) {
        out.entries.push_back(turn_around);
    }
    number(filtered);
    return out;
}

}  // namespace doraemon
