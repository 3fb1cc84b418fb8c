#include <doctest.h>

#include <cmath>
#include <random>

#include "../common/random_hierarchy.hpp"
#include "doraemon/memory_retrieval.hpp"

using namespace doraemon;

namespace {

MemoryNode leaf(const std::string& id, const Embedding& e, Vec3 p, std::set<std::string> keys, std::int64_t step) {
    MemoryNode n;
    n.id = id;
    n.level = Level::L3;
    n.summary_embedding = e;
    n.position = p;
    n.keywords = std::move(keys);
    n.latest_step = step;
    n.topo_node_id = 0;
    return n;
}

TaskSpec task_with(const Embedding& e, std::set<std::string> keys) {
    TaskSpec t;
    t.embedding = e;
    t.keywords = std::move(keys);
    return t;
}

MemoryHierarchy chain(std::vector<MemoryNode> leaves) {
    std::vector<const MemoryNode*> ptrs;
    for (const auto& l : leaves) {
        ptrs.push_back(&l);
    }
    auto area = make_parent_node(Level::L2, "area_0", ptrs);
    const MemoryNode* ap[] = {&area};
    auto room = make_parent_node(Level::L1, "room_0", {ap[0]});
    return MemoryHierarchy::from_levels(std::move(leaves), {area}, {room});
}

const Embedding ex = Embedding::normalized({1, 0, 0});
const Embedding ey = Embedding::normalized({0, 1, 0});
const Embedding exn = Embedding::normalized({-1, 0, 0});

}  // namespace

TEST_SUITE("memory_retrieval") {

TEST_CASE("semantic score mapping") {
    auto t = task_with(ex, {});
    CHECK(semantic_score(leaf("a", ex, {}, {}, 0), t) == doctest::Approx(1.0));
    CHECK(semantic_score(leaf("a", ey, {}, {}, 0), t) == doctest::Approx(0.5));
    CHECK(semantic_score(leaf("a", exn, {}, {}, 0), t) == doctest::Approx(0.0));
}

TEST_CASE("spatial and time decay") {
    auto n = leaf("a", ex, {0, 0, 0}, {}, 0);
    CHECK(spatial_score(n, {0, 0, 0}) == doctest::Approx(1.0));
    CHECK(std::abs(spatial_score(n, {5, 0, 0}) - std::exp(-1.0)) <= 1e-9);
    CHECK(std::abs(spatial_score(n, {6, 8, 0}) - std::exp(-2.0)) <= 1e-9);
    CHECK(time_score(n, 0) == doctest::Approx(1.0));
    CHECK(std::abs(time_score(n, 600) - std::exp(-1.0)) <= 1e-9);
    CHECK(std::abs(time_score(n, 60) - 0.9048374180359595) <= 1e-12);
    double prev = 2.0;
    for (int d = 0; d < 50; ++d) {
        double s = spatial_score(n, {0.5 * d, 0, 0});
        CHECK(s < prev);
        prev = s;
    }
}

TEST_CASE("keyword score") {
    auto n = leaf("a", ex, {}, {"sofa", "chair"}, 0);
    CHECK(keyword_score(n, task_with(ex, {"sofa"})) == doctest::Approx(1.0));
    CHECK(keyword_score(n, task_with(ex, {"red", "chair"})) == doctest::Approx(0.5));
    CHECK(keyword_score(n, task_with(ex, {})) == 0.0);
}

TEST_CASE("node score fixtures") {
    RetrievalConfig cfg;
    CHECK(cfg.alpha_sem + cfg.alpha_spa + cfg.alpha_key + cfg.alpha_time == 1.0);
    auto t = task_with(ex, {"sofa"});
    CHECK(node_score(leaf("a", ex, {0, 0, 0}, {"sofa"}, 10), t, {0, 0, 0}, 10, cfg) == doctest::Approx(1.0));
    double mixed = node_score(leaf("a", ey, {5, 0, 0}, {}, 0), t, {0, 0, 0}, 600, cfg);
    double oracle = 0.45 * 0.5 + 0.30 * std::exp(-1.0) + 0.0 + 0.05 * std::exp(-1.0);
    CHECK(std::abs(mixed - oracle) <= 1e-12);
    CHECK(std::abs(mixed - 0.3538) <= 1e-4);
    double gone = node_score(leaf("a", exn, {1e6, 0, 0}, {}, 0), t, {0, 0, 0}, 100000000, cfg);
    CHECK(gone == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("weights must sum to one") {
    RetrievalConfig cfg;
    cfg.alpha_sem = 0.5;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
    RetrievalConfig b;
    b.beam_width = 0;
    CHECK_THROWS_AS(b.validate(), InvalidInput);
}

TEST_CASE("perfect leaf and empty result") {
    auto t = task_with(ex, {"sofa"});
    auto h = chain({leaf("obs_0", ex, {0, 0, 0}, {"sofa"}, 5), leaf("obs_1", exn, {40, 0, 0}, {}, 0)});
    auto r = retrieve(h, t, {0, 0, 0}, 5, RetrievalConfig{});
    REQUIRE(r.entries.size() == 1);
    CHECK(r.entries[0].id == "obs_0");
    CHECK(r.entries[0].score == doctest::Approx(1.0));

    auto low = chain({leaf("obs_0", exn, {40, 0, 0}, {}, 0), leaf("obs_1", exn, {50, 0, 0}, {}, 0)});
    CHECK(retrieve(low, t, {0, 0, 0}, 5000, RetrievalConfig{}).entries.empty());
}

TEST_CASE("wide beam equals exhaustive top-k") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 30; ++trial) {
        auto h = testutil::random_hierarchy(rng, 200);
        auto task = make_task(testutil::vocabulary()[rng() % testutil::vocabulary().size()]);
        Vec3 agent{static_cast<double>(rng() % 20), static_cast<double>(rng() % 20), 0};
        RetrievalConfig cfg;
        cfg.beam_width = testutil::max_level_width(h);
        auto got = retrieve(h, task, agent, 1200, cfg);
        auto oracle = testutil::exhaustive_leaves(h, task, agent, 1200);
        oracle.resize(std::min<std::size_t>(oracle.size(), 3));
        REQUIRE(got.entries.size() == oracle.size());
        for (std::size_t i = 0; i < oracle.size(); ++i) {
            CHECK(got.entries[i].id == oracle[i].id);
            CHECK(std::abs(got.entries[i].score - oracle[i].score) <= 1e-12);
        }
    }
}

TEST_CASE("results are sorted and above the floor") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        auto h = testutil::random_hierarchy(rng, 120);
        auto task = make_task("sofa");
        auto r = retrieve(h, task, {5, 5, 0}, 1200, RetrievalConfig{});
        CHECK(r.entries.size() <= 3);
        for (std::size_t i = 0; i < r.entries.size(); ++i) {
            CHECK(r.entries[i].score > 0.4);
            if (i > 0) {
                CHECK(ranks_before(r.entries[i - 1], r.entries[i]));
            }
        }
        // Root plus at most beam_width nodes per expanded level, each with its children scored.
        CHECK(r.visited <= h.nodes().size());
    }
}

}
