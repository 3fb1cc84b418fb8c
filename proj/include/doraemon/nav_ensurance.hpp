#pragma once

// Stuck detection over a sliding pose window, escape strategies and
// precision-mode action scaling.

#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

#include "doraemon/action_proposer.hpp"
#include "doraemon/core.hpp"

namespace doraemon {

struct StuckConfig {
    std::size_t window = 8;        // steps per window (window + 1 poses)
    double tau_eta = 0.25;
    double tau_rho = 2.0;          // rad / m
    double short_path_len = 0.5;   // m, rho indicator only counts below this
    double area_gain_floor = 0.35; // m^2
    double w_eta = 0.5;
    double w_rho = 0.5;
    double s_threshold = 0.5;
    std::size_t k_consecutive = 2;
    double footprint_resolution = 0.1;  // m per cell for area gain
    double agent_radius = 0.17;

    void validate() const;
};

inline constexpr double kRhoSentinel = std::numeric_limits<double>::infinity();

struct StuckMetrics {
    double eta = 0.0;
    double rho = 0.0;
    double path_length = 0.0;
};

// Path efficiency and rotation/translation ratio. Below 1e-6 m of travel,
// eta = 0 and rho = kRhoSentinel. Throws InvalidInput for < 2 poses.
StuckMetrics stuck_metrics(std::span<const Pose> poses);

struct StuckScore {
    double score = 0.0;
    bool stuck_now = false;
};

StuckScore stuck_score(double eta, double rho, double path_len, double area_gain, const StuckConfig& cfg);

// True iff the latest k_consecutive evaluations are all stuck.
bool confirm_stuck(const std::vector<bool>& history, const StuckConfig& cfg);

struct WindowEvaluation {
    StuckMetrics metrics;
    double area_gain = 0.0;  // m^2 of newly covered footprint within the window
    StuckScore score;
    bool confirmed = false;
};

// Per-episode detector. Evaluates once the window is full, every step after.
class StuckDetector {
public:
    explicit StuckDetector(StuckConfig cfg = {});

    std::optional<WindowEvaluation> observe(const Pose& pose);
    // Drops the window and flag history (used after an escape).
    void reset();

    const std::vector<bool>& flags() const { return flags_; }
    const std::deque<Pose>& window() const { return poses_; }

private:
    StuckConfig cfg_;
    std::deque<Pose> poses_;
    std::deque<std::int64_t> step_of_pose_;
    std::vector<bool> flags_;
    std::unordered_map<std::int64_t, std::int64_t> first_covered_;
    std::int64_t step_ = 0;
};

enum class EscapeKind { CornerTrap, NarrowPassage, Ambiguous };

const char* escape_kind_name(EscapeKind kind);

struct EscapeContext {
    EscapeKind kind = EscapeKind::Ambiguous;
    std::optional<double> recent_success_heading;  // absolute yaw
};

struct HeadingSample {
    double heading = 0.0;     // radians
    double free_range = 0.0;  // meters
};

struct EscapeConfig {
    double free_threshold = 0.5;        // m, heading counts as free at or above this
    double corner_free_fraction = 0.25;
    double narrow_max_arc = deg_to_rad(60.0);
    double antipodal_tolerance = deg_to_rad(20.0);
    double success_displacement = 0.25; // m
    double backoff = 0.25;              // m
    double turn_min = deg_to_rad(60.0);
    double turn_max = deg_to_rad(120.0);
};

// Needs >= 8 evenly spaced samples (InvalidInput otherwise). `history` is
// the recent trajectory, oldest first.
EscapeContext classify_context(std::span<const HeadingSample> samples, std::span<const Pose> history,
                               const EscapeConfig& cfg = {});

// Stateful escape executor; NarrowPassage produces a two-action sequence.
class EscapePlanner {
public:
    explicit EscapePlanner(std::uint64_t seed, EscapeConfig cfg = {});

    // `free_range` is relative to the current heading. `r_min` is the move
    // length of the perpendicular escape.
    PolarAction begin(const EscapeContext& ctx, double current_yaw, const NavigabilityFn& free_range,
                      double r_min);
    std::optional<PolarAction> take_pending();
    bool has_pending() const { return pending_.has_value(); }

private:
    double uniform();

    EscapeConfig cfg_;
    std::mt19937_64 rng_;
    std::optional<PolarAction> pending_;
};

// First action of the escape for `ctx` with a fresh planner seeded by `seed`.
PolarAction escape_action(const EscapeContext& ctx, std::uint64_t seed, double current_yaw = 0.0,
                          const NavigabilityFn& free_range = {}, double r_min = 0.5);

struct PrecisionConfig {
    double gamma_step = 0.1;
    double likelihood_threshold = 0.7;
    double activation_range = 0.5;  // m, target surface distance
};

// Likelihood at or above the threshold with the matching object visible
// within activation_range.
bool precision_mode_active(double target_likelihood, std::optional<double> target_range,
                           const PrecisionConfig& cfg = {});

AnnotatedCandidates precision_scale(const AnnotatedCandidates& actions, double gamma_step = 0.1);

}  // namespace doraemon
