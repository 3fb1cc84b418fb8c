#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "doraemon/memory_hierarchy.hpp"

using namespace doraemon;

namespace {

TopoNode obs(std::int64_t id, double x, double y, const std::string& desc, std::int64_t step = 0) {
    TopoNode n;
    n.node_id = id;
    n.step_index = step;
    n.pose = Pose::planar(x, y, 0.0);
    n.observation_desc = desc;
    n.embedding = embed_text(desc);
    return n;
}

TopoMap map_of(const std::vector<TopoNode>& nodes) {
    TopoMap m;
    MapConfig always{1, 1e-9, 1.0};
    for (const auto& n : nodes) {
        REQUIRE(m.maybe_add_node(n, always));
    }
    return m;
}

// Merge the closest pair of clusters while it is within the cut.
std::vector<std::vector<std::size_t>> naive_agglomerative(const std::vector<std::vector<double>>& d, double cut) {
    std::vector<std::vector<std::size_t>> cl;
    for (std::size_t i = 0; i < d.size(); ++i) {
        cl.push_back({i});
    }
    while (cl.size() > 1) {
        double best = INFINITY;
        std::size_t ba = 0, bb = 0;
        for (std::size_t a = 0; a < cl.size(); ++a) {
            for (std::size_t b = a + 1; b < cl.size(); ++b) {
                double link = INFINITY;
                for (auto i : cl[a]) {
                    for (auto j : cl[b]) {
                        link = std::min(link, d[i][j]);
                    }
                }
                if (link < best) {
                    best = link;
                    ba = a;
                    bb = b;
                }
            }
        }
        if (best > cut) {
            break;
        }
        cl[ba].insert(cl[ba].end(), cl[bb].begin(), cl[bb].end());
        cl.erase(cl.begin() + static_cast<std::ptrdiff_t>(bb));
    }
    for (auto& c : cl) {
        std::sort(c.begin(), c.end());
    }
    std::sort(cl.begin(), cl.end());
    return cl;
}

std::set<std::set<std::string>> area_partition(const MemoryHierarchy& h) {
    std::set<std::set<std::string>> out;
    for (const auto* a : h.level(Level::L2)) {
        out.insert(std::set<std::string>(a->children.begin(), a->children.end()));
    }
    return out;
}

}  // namespace

TEST_SUITE("memory_hierarchy") {

TEST_CASE("combined distance cases") {
    HierarchyConfig cfg;
    auto e = Embedding::normalized({1, 0});
    auto f = Embedding::normalized({0, 1});
    CHECK(combined_distance({0, 0, 0}, e, {0, 0, 0}, e, cfg) == doctest::Approx(0.0));
    CHECK(combined_distance({0, 0, 0}, e, {1, 0, 0}, e, cfg) == doctest::Approx(0.4));
    CHECK(combined_distance({0, 0, 0}, e, {0, 0, 0}, f, cfg) == doctest::Approx(0.6));
}

TEST_CASE("adaptive threshold branches switch at 10 and 20") {
    CHECK(adaptive_threshold(1.0, 25) == doctest::Approx(1.5));
    CHECK(adaptive_threshold(1.0, 5) == doctest::Approx(0.8));
    CHECK(adaptive_threshold(1.0, 15) == doctest::Approx(1.0));
    CHECK(adaptive_threshold(1.0, 9) == doctest::Approx(0.8));
    CHECK(adaptive_threshold(1.0, 10) == doctest::Approx(1.0));
    CHECK(adaptive_threshold(1.0, 20) == doctest::Approx(1.0));
    CHECK(adaptive_threshold(1.0, 21) == doctest::Approx(1.5));
}

TEST_CASE("single linkage matches the naive oracle on random points") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 6.0);
    for (int trial = 0; trial < 40; ++trial) {
        std::size_t n = 1 + rng() % 30;
        std::vector<Vec2> p(n);
        for (auto& q : p) {
            q = {u(rng), u(rng)};
        }
        std::vector<std::vector<double>> d(n, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                d[i][j] = distance(p[i], p[j]);
            }
        }
        double cut = 0.3 + 0.1 * static_cast<double>(trial % 10);
        auto got = single_linkage_clusters(n, [&](std::size_t i, std::size_t j) { return d[i][j]; }, cut);
        CHECK(got == naive_agglomerative(d, cut));
    }
}

TEST_CASE("cut is inclusive") {
    auto got = single_linkage_clusters(2, [](std::size_t, std::size_t) { return 1.0; }, 1.0);
    CHECK(got.size() == 1);
    got = single_linkage_clusters(2, [](std::size_t, std::size_t) { return 1.0; }, std::nextafter(1.0, 0.0));
    CHECK(got.size() == 2);
}

TEST_CASE("L2 areas match the oracle on combined distance") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> jitter(0.0, 0.4);
    const char* descs[] = {"you see: sofa at near ahead", "you see: bed at mid left", "you see: stove at far right",
                           "you see: plant at near left", "you see: nothing"};
    HierarchyConfig cfg;
    for (int trial = 0; trial < 30; ++trial) {
        std::size_t n = 1 + rng() % 30;
        std::vector<TopoNode> nodes;
        for (std::size_t i = 0; i < n; ++i) {
            double cx = static_cast<double>(rng() % 3) * 4.0;
            nodes.push_back(obs(static_cast<std::int64_t>(i), cx + jitter(rng), jitter(rng), descs[rng() % 5]));
        }
        auto l3 = make_observation_nodes(map_of(nodes));
        std::vector<std::vector<double>> d(n, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                double cosv = cosine(nodes[i].embedding, nodes[j].embedding);
                d[i][j] = 0.4 * distance(nodes[i].pose.position, nodes[j].pose.position) + 0.6 * (1.0 - cosv);
            }
        }
        double cut = n > 20 ? 1.5 : (n < 10 ? 0.8 : 1.0);
        auto oracle = naive_agglomerative(d, cut);
        auto areas = build_l2_areas(l3, cfg);
        REQUIRE(areas.size() == oracle.size());
        for (std::size_t k = 0; k < areas.size(); ++k) {
            std::vector<std::string> ids;
            for (auto i : oracle[k]) {
                ids.push_back("obs_" + std::to_string(i));
            }
            std::sort(ids.begin(), ids.end());
            auto got = areas[k].children;
            std::sort(got.begin(), got.end());
            CHECK(got == ids);
        }
    }
}

TEST_CASE("three blobs give three areas") {
    std::vector<TopoNode> nodes;
    const char* d[] = {"you see: sofa at near ahead", "you see: bed at near ahead", "you see: stove at near ahead"};
    for (int b = 0; b < 3; ++b) {
        for (int i = 0; i < 4; ++i) {
            nodes.push_back(obs(b * 4 + i, b * 10.0 + 0.1 * i, 0.05 * i, d[b]));
        }
    }
    auto h = build_hierarchy(map_of(nodes), HierarchyConfig{});
    CHECK(h.level(Level::L2).size() == 3);
    CHECK(h.level(Level::L1).size() == 3);
    CHECK(h.level(Level::L3).size() == 12);
    std::set<std::string> labels;
    for (const auto* a : h.level(Level::L2)) {
        labels.insert(a->label);
    }
    CHECK(labels == std::set<std::string>{"cooking_area", "lounge_area", "sleeping_area"});
}

TEST_CASE("single node map gives a four node chain") {
    auto h = build_hierarchy(map_of({obs(0, 0, 0, "you see: sofa at near ahead")}), HierarchyConfig{});
    CHECK(h.nodes().size() == 4);
    CHECK(h.root().children.size() == 1);
    CHECK(h.node("obs_0").parents.size() == 1);
    CHECK_THROWS_AS(build_hierarchy(TopoMap{}, HierarchyConfig{}), EmptyMap);
    CHECK_THROWS_AS(build_l2_areas({}, HierarchyConfig{}), EmptyInput);
    CHECK_THROWS_AS(build_l1_rooms({}, HierarchyConfig{}), EmptyInput);
}

TEST_CASE("rooms split by distance and function") {
    HierarchyConfig cfg;
    auto area = [](std::string id, double x, std::string label) {
        MemoryNode n;
        n.id = std::move(id);
        n.level = Level::L2;
        n.position = {x, 0, 0};
        n.label = std::move(label);
        return n;
    };
    auto far = build_l1_rooms({area("a", 0, "lounge_area"), area("b", 10, "lounge_area")}, cfg);
    CHECK(far.size() == 2);
    auto same = build_l1_rooms({area("a", 0, "lounge_area"), area("b", 1, "lounge_area")}, cfg);
    CHECK(same.size() == 1);
    auto mixed = build_l1_rooms({area("a", 0, "cooking_area"), area("b", 1, "bathing_area")}, cfg);
    REQUIRE(mixed.size() == 2);
    CHECK(mixed[0].label == "kitchen");
    CHECK(mixed[1].label == "bathroom");
}

TEST_CASE("hierarchy invariants and idempotent rebuild") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 12.0);
    const char* descs[] = {"you see: sofa at near ahead", "you see: toilet at mid left", "you see: desk at far right"};
    std::vector<TopoNode> nodes;
    for (int i = 0; i < 40; ++i) {
        nodes.push_back(obs(i, u(rng), u(rng) / 3.0, descs[rng() % 3], i));
    }
    auto map = map_of(nodes);
    auto h = build_hierarchy(map, HierarchyConfig{});
    CHECK_NOTHROW(h.validate(&map));
    CHECK(h.dump() == build_hierarchy(map, HierarchyConfig{}).dump());
    std::set<std::string> seen;
    for (const auto* leaf : h.level(Level::L3)) {
        const MemoryNode* n = leaf;
        int hops = 0;
        while (!n->parents.empty()) {
            REQUIRE(n->parents.size() == 1);
            n = &h.node(n->parents[0]);
            ++hops;
        }
        CHECK(hops == 3);
        CHECK(n->id == kRootId);
        seen.insert(leaf->id);
    }
    CHECK(seen.size() == 40);
    for (const auto& n : h.nodes()) {
        double sq = 0;
        for (double v : n.summary_embedding.values()) {
            sq += v * v;
        }
        CHECK(std::sqrt(sq) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("raising theta1 never adds areas") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 8.0);
    const char* descs[] = {"you see: sofa at near ahead", "you see: bed at mid left", "you see: nothing"};
    std::vector<TopoNode> nodes;
    for (int i = 0; i < 25; ++i) {
        nodes.push_back(obs(i, u(rng), u(rng), descs[rng() % 3]));
    }
    auto l3 = make_observation_nodes(map_of(nodes));
    std::size_t prev = l3.size() + 1;
    for (double t = 0.1; t < 4.0; t += 0.1) {
        HierarchyConfig cfg;
        cfg.theta1 = t;
        auto n = build_l2_areas(l3, cfg).size();
        CHECK(n <= prev);
        prev = n;
    }
}

TEST_CASE("area labelling ties go to the smallest type") {
    auto vocab = LabelVocabulary::defaults();
    MemoryNode a;
    a.label = "you see: sofa at near ahead, bed at near left";
    MemoryNode b;
    b.label = "you see: nothing";
    CHECK(vocab.label_area({&a}) == "lounge_area");
    CHECK(vocab.label_area({&b}) == kUnknownLabel);
    CHECK(vocab.room_function("lounge_area") == "living_room");
}

TEST_CASE("convex hull") {
    auto hull = convex_hull({{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}, {0.5, 0}});
    CHECK(hull.size() == 4);
    double area = 0;
    for (std::size_t i = 0; i < hull.size(); ++i) {
        area += hull[i].cross(hull[(i + 1) % hull.size()]);
    }
    CHECK(area / 2 == doctest::Approx(1.0));
}

TEST_CASE("shipped label vocabulary matches the defaults") {
    auto v = LabelVocabulary::load(DORAEMON_SOURCE_DIR "/data/functional_labels.json");
    auto d = LabelVocabulary::defaults();
    CHECK(v.area_keywords == d.area_keywords);
    CHECK(v.area_to_room == d.area_to_room);
    CHECK(LabelVocabulary::parse(d.to_json()).area_keywords == d.area_keywords);
    CHECK_THROWS_AS(LabelVocabulary::parse(R"({"version":1,"area_keywords":{},"area_to_room":{},"x":1})"),
                    ParseError);
    CHECK_THROWS_AS(LabelVocabulary::parse(R"({"version":2,"area_keywords":{},"area_to_room":{}})"),
                    VersionError);
}

}
