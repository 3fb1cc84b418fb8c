#include "doraemon/memory_hierarchy.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace doraemon {

namespace {

class DisjointSet {
public:
    explicit DisjointSet(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) {
            parent_[std::max(a, b)] = std::min(a, b);
        }
    }

private:
    std::vector<std::size_t> parent_;
};

Vec3 centroid(const std::vector<const MemoryNode*>& nodes) {
    Vec3 acc;
    for (const auto* n : nodes) {
        acc = acc + n->position;
    }
    return acc * (1.0 / static_cast<double>(nodes.size()));
}

}  // namespace

std::string_view level_name(Level level) {
    switch (level) {
        case Level::L0: return "L0";
        case Level::L1: return "L1";
        case Level::L2: return "L2";
        case Level::L3: return "L3";
    }
    return "?";
}

void HierarchyConfig::validate() const {
    if (std::abs(spatial_weight + semantic_weight - 1.0) > 1e-12) {
        throw InvalidInput("spatial and semantic weights must sum to 1");
    }
    if (!(theta1 > 0.0) || !(theta2 > 0.0) || rebuild_every <= 0) {
        throw InvalidInput("hierarchy thresholds must be positive");
    }
}

LabelVocabulary LabelVocabulary::defaults() {
    LabelVocabulary v;
    v.area_keywords = {
        {"bathing_area", {"toilet", "bathtub", "shower", "sink", "towel", "mirror"}},
        {"cooking_area", {"stove", "oven", "refrigerator", "fridge", "microwave", "dishwasher", "counter"}},
        {"dining_area", {"dining", "table", "chair"}},
        {"entry_area", {"door", "shoe", "coat", "rack", "umbrella"}},
        {"greenery_area", {"plant", "flower", "vase"}},
        {"laundry_area", {"washing", "washer", "dryer", "laundry", "basket"}},
        {"lounge_area", {"sofa", "couch", "tv", "television", "armchair", "coffee", "fireplace"}},
        {"sleeping_area", {"bed", "nightstand", "wardrobe", "dresser", "pillow"}},
        {"storage_area", {"shelf", "cabinet", "box", "storage"}},
        {"work_area", {"desk", "computer", "monitor", "bookshelf", "printer"}},
    };
    v.area_to_room = {
        {"bathing_area", "bathroom"},     {"cooking_area", "kitchen"},    {"dining_area", "dining_room"},
        {"entry_area", "hallway"},        {"greenery_area", "sunroom"},   {"laundry_area", "laundry_room"},
        {"lounge_area", "living_room"},   {"sleeping_area", "bedroom"},   {"storage_area", "storage_room"},
        {"work_area", "office"},
    };
    return v;
}

LabelVocabulary LabelVocabulary::parse(std::string_view json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("label vocabulary: ") + e.what());
    }
    LabelVocabulary v;
    try {
        for (const auto& [key, _] : j.items()) {
            if (key != "version" && key != "area_keywords" && key != "area_to_room") {
                throw ParseError("label vocabulary: unknown field '" + key + "'");
            }
        }
        if (j.at("version").get<int>() != 1) {
            throw VersionError("label vocabulary: unsupported version");
        }
        v.area_keywords = j.at("area_keywords").get<decltype(v.area_keywords)>();
        v.area_to_room = j.at("area_to_room").get<decltype(v.area_to_room)>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("label vocabulary: ") + e.what());
    }
    return v;
}

LabelVocabulary LabelVocabulary::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidInput("cannot open label vocabulary " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string LabelVocabulary::to_json() const {
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["area_keywords"] = area_keywords;
    j["area_to_room"] = area_to_room;
    return j.dump(2) + "\n";
}

std::string LabelVocabulary::label_area(const std::vector<const MemoryNode*>& members) const {
    std::string best(kUnknownLabel);
    std::size_t best_hits = 0;
    // std::map iterates types in lexicographic order, so strict > keeps the smallest on ties.
    for (const auto& [type, words] : area_keywords) {
        std::size_t hits = 0;
        for (const auto* m : members) {
            auto tokens = tokenize(m->label);
            std::set<std::string> present(tokens.begin(), tokens.end());
            for (const auto& w : words) {
                hits += present.count(w);
            }
        }
        if (hits > best_hits) {
            best_hits = hits;
            best = type;
        }
    }
    return best;
}

std::string LabelVocabulary::room_function(const std::string& area_type) const {
    auto it = area_to_room.find(area_type);
    return it == area_to_room.end() ? std::string(kUnknownLabel) : it->second;
}

double combined_distance(const Vec3& pa, const Embedding& sa, const Vec3& pb, const Embedding& sb,
                         const HierarchyConfig& cfg) {
    return cfg.spatial_weight * distance(pa, pb) + cfg.semantic_weight * (1.0 - cosine(sa, sb));
}

double combined_distance(const TopoNode& a, const TopoNode& b, const HierarchyConfig& cfg) {
    return combined_distance(a.pose.position, a.embedding, b.pose.position, b.embedding, cfg);
}

double adaptive_threshold(double theta1, std::size_t observation_count) {
    if (observation_count > 20) {
        return 1.5 * theta1;
    }
    if (observation_count < 10) {
        return 0.8 * theta1;
    }
    return theta1;
}

std::vector<std::vector<std::size_t>> single_linkage_clusters(
    std::size_t n, const std::function<double(std::size_t, std::size_t)>& dist, double threshold) {
    // Single-linkage flat clusters at cut t are the connected components of
    // the graph joining every pair with distance <= t.
    DisjointSet ds(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (dist(i, j) <= threshold) {
                ds.unite(i, j);
            }
        }
    }
    std::map<std::size_t, std::vector<std::size_t>> by_root;
    for (std::size_t i = 0; i < n; ++i) {
        by_root[ds.find(i)].push_back(i);
    }
    std::vector<std::vector<std::size_t>> out;
    out.reserve(by_root.size());
    for (auto& [_, members] : by_root) {
        out.push_back(std::move(members));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return out;
}

std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
    std::sort(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) {
        return pts;
    }
    std::vector<Vec2> hull(2 * pts.size());
    std::size_t k = 0;
    auto turn = [](Vec2 o, Vec2 a, Vec2 b) { return (a - o).cross(b - o); };
    for (const auto& p : pts) {
        while (k >= 2 && turn(hull[k - 2], hull[k - 1], p) <= 0) {
            --k;
        }
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && turn(hull[k - 2], hull[k - 1], pts[i]) <= 0) {
            --k;
        }
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

MemoryNode make_parent_node(Level level, std::string id, const std::vector<const MemoryNode*>& children) {
    if (children.empty()) {
        throw EmptyInput("parent node without children");
    }
    MemoryNode n;
    n.id = std::move(id);
    n.level = level;
    n.position = centroid(children);
    std::vector<const Embedding*> embs;
    for (const auto* c : children) {
        n.children.push_back(c->id);
        embs.push_back(&c->summary_embedding);
        n.keywords.insert(c->keywords.begin(), c->keywords.end());
        n.latest_step = std::max(n.latest_step, c->latest_step);
    }
    n.summary_embedding = mean_embedding(embs);
    return n;
}

std::vector<MemoryNode> make_observation_nodes(const TopoMap& map) {
    std::vector<MemoryNode> out;
    out.reserve(map.size());
    for (const auto& v : map.nodes()) {
        MemoryNode n;
        n.id = "obs_" + std::to_string(v.node_id);
        n.level = Level::L3;
        n.topo_node_id = v.node_id;
        n.label = v.observation_desc;
        n.position = v.pose.position;
        n.summary_embedding = v.embedding;
        n.keywords = keyword_set(v.observation_desc);
        n.latest_step = v.step_index;
        out.push_back(std::move(n));
    }
    return out;
}

std::vector<MemoryNode> build_l2_areas(const std::vector<MemoryNode>& l3, const HierarchyConfig& cfg,
                                       const LabelVocabulary& vocab) {
    if (l3.empty()) {
        throw EmptyInput("no observations to cluster into areas");
    }
    cfg.validate();
    double cut = adaptive_threshold(cfg.theta1, l3.size());
    auto clusters = single_linkage_clusters(
        l3.size(),
        [&](std::size_t i, std::size_t j) {
            return combined_distance(l3[i].position, l3[i].summary_embedding, l3[j].position,
                                     l3[j].summary_embedding, cfg);
        },
        cut);
    std::vector<MemoryNode> areas;
    for (std::size_t k = 0; k < clusters.size(); ++k) {
        std::vector<const MemoryNode*> members;
        std::vector<Vec2> pts;
        for (auto idx : clusters[k]) {
            members.push_back(&l3[idx]);
            pts.push_back(l3[idx].position.xy());
        }
        MemoryNode area = make_parent_node(Level::L2, "area_" + std::to_string(k), members);
        area.label = vocab.label_area(members);
        area.hull = convex_hull(std::move(pts));
        areas.push_back(std::move(area));
    }
    return areas;
}

std::vector<MemoryNode> build_l1_rooms(const std::vector<MemoryNode>& l2, const HierarchyConfig& cfg,
                                       const LabelVocabulary& vocab) {
    if (l2.empty()) {
        throw EmptyInput("no areas to group into rooms");
    }
    cfg.validate();
    auto spatial = single_linkage_clusters(
        l2.size(), [&](std::size_t i, std::size_t j) { return distance(l2[i].position, l2[j].position); },
        cfg.theta2);
    std::vector<std::vector<std::size_t>> groups;
    for (const auto& cluster : spatial) {
        // Insertion order keeps groups sorted by their smallest area index.
        std::vector<std::pair<std::string, std::vector<std::size_t>>> by_function;
        for (auto idx : cluster) {
            std::string f = vocab.room_function(l2[idx].label);
            auto it = std::find_if(by_function.begin(), by_function.end(), [&](const auto& p) { return p.first == f; });
            if (it == by_function.end()) {
                by_function.push_back({f, {idx}});
            } else {
                it->second.push_back(idx);
            }
        }
        for (auto& [_, members] : by_function) {
            groups.push_back(std::move(members));
        }
    }
    std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
    std::vector<MemoryNode> rooms;
    for (std::size_t k = 0; k < groups.size(); ++k) {
        std::vector<const MemoryNode*> members;
        for (auto idx : groups[k]) {
            members.push_back(&l2[idx]);
        }
        MemoryNode room = make_parent_node(Level::L1, "room_" + std::to_string(k), members);
        room.label = vocab.room_function(members.front()->label);
        rooms.push_back(std::move(room));
    }
    return rooms;
}

MemoryHierarchy MemoryHierarchy::from_levels(std::vector<MemoryNode> l3, std::vector<MemoryNode> l2,
                                             std::vector<MemoryNode> l1) {
    MemoryHierarchy h;
    std::vector<const MemoryNode*> rooms;
    for (const auto& r : l1) {
        rooms.push_back(&r);
    }
    MemoryNode root = make_parent_node(Level::L0, std::string(kRootId), rooms);
    root.label = std::string(kRootId);

    h.nodes_.reserve(1 + l1.size() + l2.size() + l3.size());
    h.nodes_.push_back(std::move(root));
    for (auto* level : {&l1, &l2, &l3}) {
        for (auto& n : *level) {
            n.parents.clear();
            h.nodes_.push_back(std::move(n));
        }
    }
    for (std::size_t i = 0; i < h.nodes_.size(); ++i) {
        if (!h.index_.emplace(h.nodes_[i].id, i).second) {
            throw InvalidInput("duplicate memory node id " + h.nodes_[i].id);
        }
    }
    for (const auto& n : h.nodes_) {
        for (const auto& c : n.children) {
            auto it = h.index_.find(c);
            if (it == h.index_.end()) {
                throw InvalidInput("memory node " + n.id + " references missing child " + c);
            }
            h.nodes_[it->second].parents.push_back(n.id);
        }
    }
    h.validate();
    return h;
}

const MemoryNode* MemoryHierarchy::find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    return it == index_.end() ? nullptr : &nodes_[it->second];
}

const MemoryNode& MemoryHierarchy::node(std::string_view id) const {
    const MemoryNode* n = find(id);
    if (!n) {
        throw InvalidInput("unknown memory node " + std::string(id));
    }
    return *n;
}

std::vector<const MemoryNode*> MemoryHierarchy::level(Level l) const {
    std::vector<const MemoryNode*> out;
    for (const auto& n : nodes_) {
        if (n.level == l) {
            out.push_back(&n);
        }
    }
    return out;
}

std::vector<const MemoryNode*> MemoryHierarchy::children_of(const MemoryNode& n) const {
    std::vector<const MemoryNode*> out;
    out.reserve(n.children.size());
    for (const auto& c : n.children) {
        out.push_back(&node(c));
    }
    return out;
}

void MemoryHierarchy::validate(const TopoMap* map) const {
    auto fail = [](const std::string& msg) { throw InvalidInput("invalid hierarchy: " + msg); };
    const MemoryNode* root = find(kRootId);
    if (!root || root->level != Level::L0 || !root->parents.empty()) {
        fail("missing or malformed root");
    }
    for (const auto& n : nodes_) {
        if (n.level == Level::L0) {
            if (n.id != kRootId) {
                fail("extra L0 node " + n.id);
            }
        } else if (n.parents.size() != 1) {
            fail(n.id + " must have exactly one parent");
        } else {
            const MemoryNode& p = node(n.parents.front());
            if (static_cast<int>(p.level) + 1 != static_cast<int>(n.level)) {
                fail(n.id + " has a parent on the wrong level");
            }
            if (std::count(p.children.begin(), p.children.end(), n.id) != 1) {
                fail("parent/child references of " + n.id + " disagree");
            }
        }
        if (n.level == Level::L3) {
            if (!n.children.empty() || !n.topo_node_id) {
                fail(n.id + " must be a leaf linked to a topological node");
            }
            if (map && !map->contains(*n.topo_node_id)) {
                fail(n.id + " references a missing topological node");
            }
        } else if (n.children.empty()) {
            fail(n.id + " has no children");
        }
        for (const auto& c : n.children) {
            const MemoryNode& child = node(c);
            if (child.parents.size() != 1 || child.parents.front() != n.id) {
                fail("child " + c + " does not point back to " + n.id);
            }
        }
        double sq = 0.0;
        for (double v : n.summary_embedding.values()) {
            sq += v * v;
        }
        if (std::abs(std::sqrt(sq) - 1.0) > 1e-6) {
            fail(n.id + " summary embedding is not unit norm");
        }
    }
    if (map) {
        std::set<std::int64_t> seen;
        for (const auto* leaf : level(Level::L3)) {
            if (!seen.insert(*leaf->topo_node_id).second) {
                fail("topological node referenced twice");
            }
        }
        if (seen.size() != map->size()) {
            fail("not every topological node is anchored");
        }
    }
}

std::string MemoryHierarchy::dump() const {
    std::ostringstream out;
    std::function<void(const MemoryNode&, int)> walk = [&](const MemoryNode& n, int depth) {
        out << std::string(static_cast<std::size_t>(depth) * 2, ' ') << level_name(n.level) << ' ' << n.id << ' '
            << (n.label.empty() ? "-" : n.label) << " children=" << n.children.size() << '\n';
        for (const auto& c : n.children) {
            walk(node(c), depth + 1);
        }
    };
    walk(root(), 0);
    return out.str();
}

MemoryHierarchy build_hierarchy(const TopoMap& map, const HierarchyConfig& cfg, const LabelVocabulary& vocab) {
    if (map.empty()) {
        throw EmptyMap("cannot build a hierarchy from an empty map");
    }
    auto l3 = make_observation_nodes(map);
    auto l2 = build_l2_areas(l3, cfg, vocab);
    auto l1 = build_l1_rooms(l2, cfg, vocab);
    auto h = MemoryHierarchy::from_levels(std::move(l3), std::move(l2), std::move(l1));
    h.validate(&map);
    return h;
}

}  // namespace doraemon
