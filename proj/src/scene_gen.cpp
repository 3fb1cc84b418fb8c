#include "doraemon/scene_gen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <random>

namespace doraemon {

namespace {

struct Rng {
    explicit Rng(std::uint64_t seed) : gen(seed) {}
    double uniform() { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(gen() % n); }
    std::mt19937_64 gen;
};

// Object groups, one per functional area.
const std::vector<std::vector<std::string>>& object_groups() {
    static const std::vector<std::vector<std::string>> groups = {
        {"sofa", "tv", "armchair"},         {"bed", "nightstand", "dresser"},
        {"refrigerator", "stove", "microwave"}, {"toilet", "sink", "bathtub"},
        {"desk", "monitor", "printer"},     {"table", "chair"},
        {"plant", "vase"},
    };
    return groups;
}

Polygon rect(double x0, double y0, double x1, double y1) { return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}; }

double wall_clearance(const std::vector<Segment>& walls, Vec2 p) {
    double best = 1e300;
    for (const auto& s : walls) {
        best = std::min(best, point_segment_distance(p, s));
    }
    return best;
}

bool inside_any(const Scene& scene, Vec2 p) {
    return std::any_of(scene.obstacles.begin(), scene.obstacles.end(),
                       [&](const Polygon& poly) { return point_in_polygon(p, poly); });
}

// Places `label` inside the box, clear of walls and other objects.
bool place_object(Scene& scene, Rng& rng, const std::string& label, double x0, double y0, double x1, double y1,
                  double agent_radius) {
    auto walls = wall_segments(scene);
    for (int attempt = 0; attempt < 200; ++attempt) {
        double r = rng.uniform(0.2, 0.4);
        Vec2 p{rng.uniform(x0, x1), rng.uniform(y0, y1)};
        if (inside_any(scene, p) || wall_clearance(walls, p) < r + 2 * agent_radius + 0.2) {
            continue;
        }
        bool apart = std::all_of(scene.objects.begin(), scene.objects.end(), [&](const SceneObject& o) {
            return distance(o.position, p) > o.radius + r + 0.6;
        });
        if (apart) {
            scene.objects.push_back({label, p, r});
            return true;
        }
    }
    return false;
}

bool place_start(Scene& scene, Rng& rng, double x0, double y0, double x1, double y1, double yaw_lo, double yaw_hi,
                 double agent_radius) {
    auto walls = wall_segments(scene);
    for (int attempt = 0; attempt < 200; ++attempt) {
        Vec2 p{rng.uniform(x0, x1), rng.uniform(y0, y1)};
        if (inside_any(scene, p) || wall_clearance(walls, p) < agent_radius + 0.3) {
            continue;
        }
        bool apart = std::all_of(scene.objects.begin(), scene.objects.end(), [&](const SceneObject& o) {
            return distance(o.position, p) > o.radius + 1.0;
        });
        if (apart) {
            scene.start_position = p;
            scene.start_yaw = wrap_angle(rng.uniform(yaw_lo, yaw_hi));
            return true;
        }
    }
    return false;
}

std::vector<std::size_t> pick_groups(Rng& rng, std::size_t n) {
    std::vector<std::size_t> idx(object_groups().size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        idx[i] = i;
    }
    for (std::size_t i = idx.size() - 1; i > 0; --i) {
        std::swap(idx[i], idx[rng.index(i + 1)]);
    }
    idx.resize(n);
    return idx;
}

bool fill_group(Scene& scene, Rng& rng, std::size_t group, double x0, double y0, double x1, double y1, double ar) {
    for (const auto& label : object_groups()[group]) {
        if (!place_object(scene, rng, label, x0, y0, x1, y1, ar)) {
            return false;
        }
    }
    return true;
}

std::optional<Scene> try_corridor(Rng& rng, double ar) {
    Scene s;
    s.bounds = {0, 0, 12, 4};
    double cy = rng.uniform(1.6, 2.4);
    double x0 = rng.uniform(3.0, 4.0);
    double x1 = x0 + rng.uniform(4.0, 5.0);
    // 0.66 m wide: from the middle, only two end arcs of about 60 deg read as free.
    constexpr double half = 0.33;
    s.obstacles.push_back(rect(x0, 0, x1, cy - half));
    s.obstacles.push_back(rect(x0, cy + half, x1, 4));
    auto groups = pick_groups(rng, 2);
    if (!fill_group(s, rng, groups[0], 0.2, 0.2, x0 - 0.2, 3.8, ar) ||
        !fill_group(s, rng, groups[1], x1 + 0.2, 0.2, 11.8, 3.8, ar)) {
        return std::nullopt;
    }
    const auto& far = object_groups()[groups[1]];
    s.target_label = far[rng.index(far.size())];
    if (!place_start(s, rng, 0.4, 0.4, x0 - 0.4, 3.6, -0.5, 0.5, ar)) {
        return std::nullopt;
    }
    return s;
}

std::optional<Scene> try_rooms(Rng& rng, double ar) {
    Scene s;
    s.bounds = {0, 0, 10, 6};
    double door = rng.uniform(1.2, 4.8);
    s.obstacles.push_back(rect(4.9, 0, 5.1, door - 0.5));
    s.obstacles.push_back(rect(4.9, door + 0.5, 5.1, 6));
    auto groups = pick_groups(rng, 2);
    if (!fill_group(s, rng, groups[0], 0.2, 0.2, 4.7, 5.8, ar) ||
        !fill_group(s, rng, groups[1], 5.3, 0.2, 9.8, 5.8, ar)) {
        return std::nullopt;
    }
    bool flip = rng.uniform() < 0.5;
    const auto& far = object_groups()[groups[flip ? 0 : 1]];
    s.target_label = far[rng.index(far.size())];
    bool ok = flip ? place_start(s, rng, 5.5, 0.5, 9.5, 5.5, kPi - 0.6, kPi + 0.6, ar)
                   : place_start(s, rng, 0.5, 0.5, 4.5, 5.5, -0.6, 0.6, ar);
    if (!ok) {
        return std::nullopt;
    }
    return s;
}

std::optional<Scene> try_blobs(Rng& rng, double ar) {
    Scene s;
    s.bounds = {0, 0, 9, 9};
    std::size_t blobs = 4 + rng.index(3);
    for (std::size_t b = 0; b < blobs; ++b) {
        Vec2 c{rng.uniform(1.5, 7.5), rng.uniform(1.5, 7.5)};
        double rad = rng.uniform(0.4, 0.9);
        double phase = rng.uniform(0, 2 * kPi);
        Polygon poly;
        for (int k = 0; k < 6; ++k) {
            double a = phase + k * kPi / 3;
            double rr = rad * rng.uniform(0.8, 1.0);
            poly.push_back({c.x + rr * std::cos(a), c.y + rr * std::sin(a)});
        }
        s.obstacles.push_back(std::move(poly));
    }
    auto groups = pick_groups(rng, 2);
    if (!fill_group(s, rng, groups[0], 0.3, 0.3, 8.7, 8.7, ar) ||
        !fill_group(s, rng, groups[1], 0.3, 0.3, 8.7, 8.7, ar)) {
        return std::nullopt;
    }
    const auto& g = object_groups()[groups[rng.index(2)]];
    s.target_label = g[rng.index(g.size())];
    if (!place_start(s, rng, 0.4, 0.4, 8.6, 8.6, -kPi, kPi, ar)) {
        return std::nullopt;
    }
    return s;
}

}  // namespace

const char* scene_kind_name(SceneKind kind) {
    switch (kind) {
        case SceneKind::Corridor: return "corridor";
        case SceneKind::Rooms: return "rooms";
        case SceneKind::Blobs: return "blobs";
    }
    return "?";
}

SceneKind parse_scene_kind(std::string_view name) {
    if (name == "corridor") return SceneKind::Corridor;
    if (name == "rooms") return SceneKind::Rooms;
    if (name == "blobs") return SceneKind::Blobs;
    throw InvalidInput("unknown scene kind '" + std::string(name) + "'");
}

std::optional<double> grid_shortest_path(const Scene& scene, double agent_radius, double resolution,
                                         double success_distance) {
    if (!(resolution > 0) || !(agent_radius > 0)) {
        throw InvalidInput("grid resolution and agent radius must be positive");
    }
    const auto walls = wall_segments(scene);
    const auto& b = scene.bounds;
    const int nx = static_cast<int>(std::ceil((b.xmax - b.xmin) / resolution));
    const int ny = static_cast<int>(std::ceil((b.ymax - b.ymin) / resolution));
    auto center = [&](int i, int j) { return Vec2{b.xmin + (i + 0.5) * resolution, b.ymin + (j + 0.5) * resolution}; };
    auto target_gap = [&](Vec2 p) {
        double best = 1e300;
        for (const auto& o : scene.objects) {
            if (o.label == scene.target_label) {
                best = std::min(best, std::max(0.0, distance(p, o.position) - o.radius));
            }
        }
        return best;
    };
    if (target_gap(scene.start_position) <= success_distance) {
        return resolution;
    }

    std::vector<char> free(static_cast<std::size_t>(nx) * ny);
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            Vec2 c = center(i, j);
            free[static_cast<std::size_t>(i) * ny + j] =
                !inside_any(scene, c) && wall_clearance(walls, c) >= agent_radius &&
                std::all_of(scene.objects.begin(), scene.objects.end(), [&](const SceneObject& o) {
                    return distance(c, o.position) - o.radius >= agent_radius;
                });
        }
    }
    auto at = [&](int i, int j) { return static_cast<std::size_t>(i) * ny + j; };
    int si = std::clamp(static_cast<int>((scene.start_position.x - b.xmin) / resolution), 0, nx - 1);
    int sj = std::clamp(static_cast<int>((scene.start_position.y - b.ymin) / resolution), 0, ny - 1);

    std::vector<double> dist(free.size(), 1e300);
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[at(si, sj)] = distance(scene.start_position, center(si, sj));
    pq.push({dist[at(si, sj)], at(si, sj)});
    static constexpr std::array<std::pair<int, int>, 8> moves{
        {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};
    while (!pq.empty()) {
        auto [d, idx] = pq.top();
        pq.pop();
        if (d > dist[idx]) {
            continue;
        }
        int i = static_cast<int>(idx / ny);
        int j = static_cast<int>(idx % ny);
        if (target_gap(center(i, j)) <= success_distance) {
            return std::max(d, resolution);
        }
        for (auto [di, dj] : moves) {
            int a = i + di;
            int c = j + dj;
            if (a < 0 || c < 0 || a >= nx || c >= ny || !free[at(a, c)]) {
                continue;
            }
            if (di != 0 && dj != 0 && (!free[at(i + di, j)] || !free[at(i, j + dj)])) {
                continue;
            }
            double nd = d + resolution * ((di != 0 && dj != 0) ? std::sqrt(2.0) : 1.0);
            if (nd < dist[at(a, c)]) {
                dist[at(a, c)] = nd;
                pq.push({nd, at(a, c)});
            }
        }
    }
    return std::nullopt;
}

Scene generate_scene(SceneKind kind, std::uint64_t seed, const SimConfig& cfg) {
    Rng rng(seed);
    const double ar = cfg.agent_radius;
    for (int attempt = 0; attempt < 100; ++attempt) {
        std::optional<Scene> s;
        switch (kind) {
            case SceneKind::Corridor: s = try_corridor(rng, ar); break;
            case SceneKind::Rooms: s = try_rooms(rng, ar); break;
            case SceneKind::Blobs: s = try_blobs(rng, ar); break;
        }
        if (!s) {
            continue;
        }
        auto l = grid_shortest_path(*s, ar, 0.1, cfg.success_distance);
        if (!l) {
            continue;
        }
        s->shortest_path = *l;
        s->name = scene_kind_name(kind);
        validate_scene(*s, cfg);
        return *s;
    }
    throw Error("scene generation did not converge");
}

std::vector<Scene> generate_scenes(SceneKind kind, std::size_t count, std::uint64_t seed, const SimConfig& cfg) {
    if (count == 0) {
        throw InvalidInput("scene count must be at least 1");
    }
    std::vector<Scene> out;
    for (std::size_t i = 0; i < count; ++i) {
        Scene s = generate_scene(kind, seed + 0x9e3779b97f4a7c15ULL * (i + 1), cfg);
        s.name = std::string(scene_kind_name(kind)) + "_" + std::to_string(i);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace doraemon
