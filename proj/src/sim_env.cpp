#include "doraemon/sim_env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace doraemon {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSkin = 1e-7;

Vec2 unit(double heading) { return {std::cos(heading), std::sin(heading)}; }

// First time a disc of radius R centred at p + t*u touches the disc around c
// (combined radius R), entering only.
double sweep_point(Vec2 p, Vec2 u, double R, Vec2 c) {
    Vec2 m = p - c;
    double b = m.dot(u);
    double cc = m.dot(m) - R * R;
    if (cc <= 0.0) {
        return b < 0.0 ? 0.0 : kInf;
    }
    if (b >= 0.0) {
        return kInf;
    }
    double disc = b * b - cc;
    if (disc < 0.0) {
        return kInf;
    }
    return std::max(0.0, -b - std::sqrt(disc));
}

double sweep_segment(Vec2 p, Vec2 u, double R, const Segment& s) {
    double best = std::min(sweep_point(p, u, R, s.a), sweep_point(p, u, R, s.b));
    Vec2 d = s.b - s.a;
    double len = d.norm();
    if (len < 1e-12) {
        return best;
    }
    Vec2 e = d * (1.0 / len);
    Vec2 n{-e.y, e.x};
    double side = (p - s.a).dot(n);
    double sign = side >= 0.0 ? 1.0 : -1.0;
    double approach = u.dot(n) * sign;
    if (approach >= 0.0) {
        return best;
    }
    double t = (std::abs(side) - R) / -approach;
    t = std::max(t, 0.0);
    double along = (p + u * t - s.a).dot(e);
    if (along >= 0.0 && along <= len) {
        best = std::min(best, t);
    }
    return best;
}

double ray_segment(Vec2 p, Vec2 u, const Segment& s) {
    Vec2 d = s.b - s.a;
    double denom = u.cross(d);
    if (std::abs(denom) < 1e-15) {
        return kInf;
    }
    Vec2 w = s.a - p;
    double t = w.cross(d) / denom;
    double k = w.cross(u) / denom;
    if (t >= 0.0 && k >= 0.0 && k <= 1.0) {
        return t;
    }
    return kInf;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::vector<Segment> wall_segments(const Scene& scene) {
    std::vector<Segment> out;
    const auto& b = scene.bounds;
    out.push_back({{b.xmin, b.ymin}, {b.xmax, b.ymin}});
    out.push_back({{b.xmax, b.ymin}, {b.xmax, b.ymax}});
    out.push_back({{b.xmax, b.ymax}, {b.xmin, b.ymax}});
    out.push_back({{b.xmin, b.ymax}, {b.xmin, b.ymin}});
    for (const auto& poly : scene.obstacles) {
        for (std::size_t i = 0; i < poly.size(); ++i) {
            out.push_back({poly[i], poly[(i + 1) % poly.size()]});
        }
    }
    return out;
}

double point_segment_distance(Vec2 p, const Segment& s) {
    Vec2 d = s.b - s.a;
    double len2 = d.dot(d);
    double t = len2 > 0.0 ? std::clamp((p - s.a).dot(d) / len2, 0.0, 1.0) : 0.0;
    return distance(p, s.a + d * t);
}

bool point_in_polygon(Vec2 p, const Polygon& poly) {
    bool inside = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[j];
        if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) {
            inside = !inside;
        }
    }
    return inside;
}

double ray_to_walls(const std::vector<Segment>& walls, Vec2 origin, double heading, double max_range) {
    Vec2 u = unit(heading);
    double best = max_range;
    for (const auto& s : walls) {
        best = std::min(best, ray_segment(origin, u, s));
    }
    return best;
}

double swept_clearance(const std::vector<Segment>& walls, Vec2 origin, double heading, double radius,
                       double max_range) {
    return swept_clearance(walls, {}, origin, heading, radius, max_range);
}

double swept_clearance(const std::vector<Segment>& walls, const std::vector<SceneObject>& objects, Vec2 origin,
                       double heading, double radius, double max_range) {
    Vec2 u = unit(heading);
    double best = kInf;
    for (const auto& s : walls) {
        best = std::min(best, sweep_segment(origin, u, radius, s));
    }
    for (const auto& o : objects) {
        best = std::min(best, sweep_point(origin, u, radius + o.radius, o.position));
    }
    if (best > max_range) {
        return max_range;
    }
    return std::max(0.0, best - kSkin);
}

void SimConfig::validate() const {
    if (!(agent_radius > 0) || !(fov > 0) || fov > 2 * kPi || !(success_distance > 0) || max_actions <= 0 ||
        !(r_max > 0) || !(sensing_range > 0) || profile_rays < 2 || visibility_bins < 8 ||
        !(near_range > 0) || !(mid_range > near_range)) {
        throw InvalidInput("invalid simulator configuration");
    }
    aori.validate();
}

void validate_scene(const Scene& scene, const SimConfig& cfg) {
    const auto& b = scene.bounds;
    if (!(b.xmax > b.xmin) || !(b.ymax > b.ymin)) {
        throw InvalidInput("scene bounds are empty");
    }
    for (const auto& poly : scene.obstacles) {
        if (poly.size() < 3) {
            throw InvalidInput("obstacle polygon needs at least 3 vertices");
        }
    }
    bool target_found = false;
    for (const auto& o : scene.objects) {
        if (!(o.radius > 0) || o.label.empty()) {
            throw InvalidInput("object needs a label and a positive radius");
        }
        if (!b.contains(o.position)) {
            throw InvalidInput("object '" + o.label + "' lies outside the bounds");
        }
        for (const auto& poly : scene.obstacles) {
            if (point_in_polygon(o.position, poly)) {
                throw InvalidInput("object '" + o.label + "' lies inside an obstacle");
            }
        }
        target_found = target_found || o.label == scene.target_label;
    }
    if (!target_found) {
        throw InvalidInput("no object carries the target label '" + scene.target_label + "'");
    }
    if (!(scene.shortest_path > 0)) {
        throw InvalidInput("shortest path length must be positive");
    }
    if (!b.contains(scene.start_position)) {
        throw InvalidInput("start lies outside the bounds");
    }
    for (const auto& poly : scene.obstacles) {
        if (point_in_polygon(scene.start_position, poly)) {
            throw InvalidInput("start lies inside an obstacle");
        }
    }
    for (const auto& s : wall_segments(scene)) {
        if (point_segment_distance(scene.start_position, s) < cfg.agent_radius - 1e-6) {
            throw InvalidInput("start is closer than the agent radius to a wall");
        }
    }
    for (const auto& o : scene.objects) {
        if (distance(scene.start_position, o.position) < o.radius + cfg.agent_radius - 1e-6) {
            throw InvalidInput("start overlaps object '" + o.label + "'");
        }
    }
}

std::string describe(const std::vector<VisibleObject>& objects, const SimConfig& cfg) {
    if (objects.empty()) {
        return "you see: nothing";
    }
    std::string out = "you see: ";
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const auto& o = objects[i];
        const char* range = o.range < cfg.near_range ? "near" : (o.range < cfg.mid_range ? "mid" : "far");
        const char* side = o.bearing > cfg.side_angle ? "left" : (o.bearing < -cfg.side_angle ? "right" : "ahead");
        if (i > 0) {
            out += ", ";
        }
        out += o.label + " at " + range + " " + side;
    }
    return out;
}

Simulator::Simulator(Scene scene, SimConfig cfg) : scene_(std::move(scene)), cfg_(cfg) {
    cfg_.validate();
    validate_scene(scene_, cfg_);
    walls_ = wall_segments(scene_);
    reset();
}

Observation Simulator::reset() {
    state_ = AgentState{};
    state_.pose = scene_.start_pose();
    last_ = observe();
    state_.stop_trigger_streak = check_success(last_).trigger ? 1 : 0;
    return last_;
}

double Simulator::clearance(Vec2 p) const {
    double best = kInf;
    for (const auto& s : walls_) {
        best = std::min(best, point_segment_distance(p, s));
    }
    for (const auto& o : scene_.objects) {
        best = std::min(best, distance(p, o.position) - o.radius);
    }
    return best;
}

double Simulator::free_range_from(const Pose& pose, double bearing) const {
    double t = swept_clearance(walls_, scene_.objects, pose.position.xy(), pose.yaw() + bearing, cfg_.agent_radius,
                               cfg_.sensing_range);
    return std::min(cfg_.sensing_range, t + cfg_.agent_radius);
}

double Simulator::free_range(double bearing) const { return free_range_from(state_.pose, bearing); }

std::vector<HeadingSample> Simulator::heading_samples(int n) const {
    std::vector<HeadingSample> out;
    for (int i = 0; i < n; ++i) {
        double bearing = wrap_angle(-kPi + 2.0 * kPi * (i + 0.5) / n);
        out.push_back({bearing, free_range(bearing)});
    }
    return out;
}

double Simulator::target_distance_from(Vec2 p) const {
    double best = kInf;
    for (const auto& o : scene_.objects) {
        if (o.label == scene_.target_label) {
            best = std::min(best, std::max(0.0, distance(p, o.position) - o.radius));
        }
    }
    return best;
}

double Simulator::target_distance() const { return target_distance_from(state_.pose.position.xy()); }

bool Simulator::line_of_sight(Vec2 from, Vec2 to) const {
    Vec2 d = to - from;
    double len = d.norm();
    if (len < 1e-12) {
        return true;
    }
    return ray_to_walls(walls_, from, std::atan2(d.y, d.x), len) >= len - 1e-9;
}

Observation Simulator::observe() const {
    Observation obs;
    obs.pose = state_.pose;
    const Vec2 p = state_.pose.position.xy();
    const double yaw = state_.pose.yaw();

    for (int i = 0; i < cfg_.profile_rays; ++i) {
        double bearing = -cfg_.fov / 2 + cfg_.fov * i / (cfg_.profile_rays - 1);
        obs.profile.push_back({bearing, free_range(bearing)});
    }

    for (std::size_t k = 0; k < scene_.objects.size(); ++k) {
        const auto& o = scene_.objects[k];
        Vec2 v = o.position - p;
        double dc = v.norm();
        bool inside = dc <= o.radius;
        double range = std::max(0.0, dc - o.radius);
        double bearing = inside && dc < 1e-12 ? 0.0 : wrap_angle(std::atan2(v.y, v.x) - yaw);
        if (range > cfg_.view_range()) {
            continue;
        }
        if (!inside && std::abs(bearing) > cfg_.fov / 2) {
            continue;
        }
        Vec2 surface = inside ? p : o.position - v * (o.radius / dc);
        if (!line_of_sight(p, surface)) {
            continue;
        }
        obs.objects.push_back({k, o.label, range, bearing});
    }
    std::sort(obs.objects.begin(), obs.objects.end(), [](const VisibleObject& a, const VisibleObject& b) {
        if (a.range != b.range) {
            return a.range < b.range;
        }
        if (a.label != b.label) {
            return a.label < b.label;
        }
        return a.index < b.index;
    });
    obs.description = describe(obs.objects, cfg_);

    // Visible cells: disc of the AORI radius, clipped per angular bin by walls.
    const double R = cfg_.view_range();
    const int bins = cfg_.visibility_bins;
    std::vector<double> reach(bins);
    for (int i = 0; i < bins; ++i) {
        reach[i] = ray_to_walls(walls_, p, -kPi + 2.0 * kPi * (i + 0.5) / bins, R);
    }
    const auto& a = cfg_.aori;
    GridCell lo = world_to_cell({p.x - R, p.y - R}, a);
    GridCell hi = world_to_cell({p.x + R, p.y + R}, a);
    for (auto i = lo.i; i <= hi.i; ++i) {
        for (auto j = lo.j; j <= hi.j; ++j) {
            Vec2 c = cell_center({i, j}, a) - p;
            double d = c.norm();
            if (d > R) {
                continue;
            }
            int bin = static_cast<int>((std::atan2(c.y, c.x) + kPi) / (2.0 * kPi) * bins);
            bin = std::clamp(bin, 0, bins - 1);
            if (d <= reach[bin]) {
                obs.visible_cells.push_back({i, j});
            }
        }
    }
    return obs;
}

SuccessCheck Simulator::check_success(const Observation& obs) const {
    SuccessCheck out;
    double dist = target_distance_from(obs.pose.position.xy());
    bool seen = std::any_of(obs.objects.begin(), obs.objects.end(), [&](const VisibleObject& o) {
        return o.label == scene_.target_label && o.range <= cfg_.success_distance;
    });
    out.trigger = dist <= cfg_.success_distance && seen;
    out.done_success = state_.terminated && state_.success;
    return out;
}

SuccessCheck check_success(const Simulator& sim, const Observation& obs) { return sim.check_success(obs); }

Observation Simulator::step(const PolarAction& action) {
    if (state_.terminated) {
        throw EpisodeOver("episode already terminated");
    }
    action.validate(cfg_.r_max);
    ++state_.steps_taken;
    if (action.is_stop()) {
        state_.terminated = true;
        state_.success = state_.stop_trigger_streak >= 2;
        return last_;
    }
    double yaw = wrap_angle(state_.pose.yaw() + action.theta);
    Vec2 p = state_.pose.position.xy();
    double travel = action.r > 0.0 ? swept_clearance(walls_, scene_.objects, p, yaw, cfg_.agent_radius, action.r) : 0.0;
    Vec2 q = p + unit(yaw) * travel;
    state_.pose = Pose::planar(q.x, q.y, yaw);
    state_.path_length += travel;

    last_ = observe();
    state_.stop_trigger_streak = check_success(last_).trigger ? state_.stop_trigger_streak + 1 : 0;
    if (state_.steps_taken >= cfg_.max_actions) {
        state_.terminated = true;
    }
    return last_;
}

namespace {

double parse_number(const std::string& tok, int line, const char* field) {
    const char* begin = tok.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || !std::isfinite(v)) {
        throw ParseError(std::string("bad number '") + tok + "' in " + field, line);
    }
    return v;
}

void expect_count(const std::vector<std::string>& toks, std::size_t n, int line) {
    if (toks.size() != n) {
        throw ParseError("'" + toks[0] + "' expects " + std::to_string(n - 1) + " values", line);
    }
}

}  // namespace

Scene parse_scene(std::istream& in) {
    Scene scene;
    std::string raw;
    int line = 0;
    bool header = false;
    bool ended = false;
    bool have_bounds = false;
    bool have_start = false;
    bool have_target = false;
    bool have_path = false;
    while (std::getline(in, raw)) {
        ++line;
        std::istringstream ls(raw);
        std::vector<std::string> toks;
        for (std::string t; ls >> t;) {
            toks.push_back(t);
        }
        if (toks.empty() || toks[0][0] == '#') {
            continue;
        }
        if (ended) {
            throw ParseError("content after 'end'", line);
        }
        if (!header) {
            if (toks[0] != "doraemon-scene" || toks.size() != 2) {
                throw ParseError("missing 'doraemon-scene <version>' header", line);
            }
            if (toks[1] != std::to_string(kSceneVersion)) {
                throw VersionError("unsupported scene version " + toks[1]);
            }
            header = true;
            continue;
        }
        const std::string& key = toks[0];
        if (key == "name") {
            expect_count(toks, 2, line);
            scene.name = toks[1];
        } else if (key == "bounds") {
            expect_count(toks, 5, line);
            scene.bounds = {parse_number(toks[1], line, "bounds"), parse_number(toks[2], line, "bounds"),
                            parse_number(toks[3], line, "bounds"), parse_number(toks[4], line, "bounds")};
            have_bounds = true;
        } else if (key == "start") {
            expect_count(toks, 4, line);
            scene.start_position = {parse_number(toks[1], line, "start"), parse_number(toks[2], line, "start")};
            scene.start_yaw = parse_number(toks[3], line, "start");
            have_start = true;
        } else if (key == "target") {
            expect_count(toks, 2, line);
            scene.target_label = toks[1];
            have_target = true;
        } else if (key == "shortest_path") {
            expect_count(toks, 2, line);
            scene.shortest_path = parse_number(toks[1], line, "shortest_path");
            have_path = true;
        } else if (key == "obstacle") {
            if (toks.size() < 2) {
                throw ParseError("'obstacle' expects a vertex count", line);
            }
            double n = parse_number(toks[1], line, "obstacle");
            if (n < 3 || n != std::floor(n) || toks.size() != 2 + 2 * static_cast<std::size_t>(n)) {
                throw ParseError("'obstacle' vertex count does not match its coordinates", line);
            }
            Polygon poly;
            for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
                poly.push_back({parse_number(toks[2 + 2 * i], line, "obstacle"),
                                parse_number(toks[3 + 2 * i], line, "obstacle")});
            }
            scene.obstacles.push_back(std::move(poly));
        } else if (key == "object") {
            expect_count(toks, 5, line);
            scene.objects.push_back({toks[1], {parse_number(toks[2], line, "object"), parse_number(toks[3], line, "object")},
                                     parse_number(toks[4], line, "object")});
        } else if (key == "end") {
            expect_count(toks, 1, line);
            ended = true;
        } else {
            throw ParseError("unknown field '" + key + "'", line);
        }
    }
    if (!header) {
        throw ParseError("empty scene file", line + 1);
    }
    if (!ended) {
        throw ParseError("truncated scene file, missing 'end'", line + 1);
    }
    const char* missing = !have_bounds ? "bounds" : !have_start ? "start" : !have_target ? "target"
                        : !have_path   ? "shortest_path" : nullptr;
    if (missing) {
        throw ParseError(std::string("missing required field '") + missing + "'", line);
    }
    return scene;
}

void write_scene(const Scene& scene, std::ostream& out) {
    out << "doraemon-scene " << kSceneVersion << "\n";
    out << "name " << scene.name << "\n";
    const auto& b = scene.bounds;
    out << "bounds " << fmt(b.xmin) << ' ' << fmt(b.ymin) << ' ' << fmt(b.xmax) << ' ' << fmt(b.ymax) << "\n";
    out << "start " << fmt(scene.start_position.x) << ' ' << fmt(scene.start_position.y) << ' '
        << fmt(scene.start_yaw) << "\n";
    out << "target " << scene.target_label << "\n";
    out << "shortest_path " << fmt(scene.shortest_path) << "\n";
    for (const auto& poly : scene.obstacles) {
        out << "obstacle " << poly.size();
        for (const auto& v : poly) {
            out << ' ' << fmt(v.x) << ' ' << fmt(v.y);
        }
        out << "\n";
    }
    for (const auto& o : scene.objects) {
        out << "object " << o.label << ' ' << fmt(o.position.x) << ' ' << fmt(o.position.y) << ' ' << fmt(o.radius)
            << "\n";
    }
    out << "end\n";
}

Scene load_scene(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidInput("cannot open scene file " + path.string());
    }
    Scene s = parse_scene(in);
    validate_scene(s);
    return s;
}

void save_scene(const Scene& scene, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw InvalidInput("cannot write scene file " + path.string());
    }
    write_scene(scene, out);
}

}  // namespace doraemon
