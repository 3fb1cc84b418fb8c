#pragma once

// Random but spatially coherent hierarchies for retrieval checks, plus an
// exhaustive scorer written out independently of the library.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "doraemon/memory_hierarchy.hpp"
#include "doraemon/memory_retrieval.hpp"

namespace testutil {

inline const std::vector<std::string>& vocabulary() {
    static const std::vector<std::string> words = {"sofa", "bed", "stove", "toilet", "desk", "plant",
                                                   "chair", "table", "tv", "sink", "lamp", "shelf"};
    return words;
}

// nodes <= max_nodes in total (root included).
inline doraemon::MemoryHierarchy random_hierarchy(std::mt19937_64& rng, std::size_t max_nodes = 200) {
    using namespace doraemon;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::size_t rooms = 1 + rng() % 6;
    std::vector<MemoryNode> l1, l2, l3;
    std::size_t budget = max_nodes - 1;
    int leaf_id = 0;
    for (std::size_t r = 0; r < rooms && budget > 2; ++r) {
        Vec3 rc{20.0 * u(rng), 20.0 * u(rng), 0.0};
        std::vector<const MemoryNode*> room_areas;
        std::size_t areas = 1 + rng() % 5;
        std::vector<std::size_t> area_idx;
        for (std::size_t a = 0; a < areas && budget > 2; ++a) {
            Vec3 ac = rc + Vec3{3.0 * u(rng) - 1.5, 3.0 * u(rng) - 1.5, 0.0};
            std::string word = vocabulary()[rng() % vocabulary().size()];
            std::size_t leaves = 1 + rng() % 8;
            leaves = std::min(leaves, budget - 2);
            std::vector<std::size_t> leaf_idx;
            for (std::size_t k = 0; k < leaves; ++k) {
                MemoryNode n;
                n.id = "obs_" + std::to_string(leaf_id);
                n.topo_node_id = leaf_id++;
                n.level = Level::L3;
                std::string desc = "you see: " + word;
                if (u(rng) < 0.5) {
                    desc += " " + vocabulary()[rng() % vocabulary().size()];
                }
                n.label = desc;
                n.keywords = keyword_set(desc);
                n.summary_embedding = embed_text(desc);
                n.position = ac + Vec3{u(rng) - 0.5, u(rng) - 0.5, 0.0};
                n.latest_step = static_cast<std::int64_t>(rng() % 1200);
                leaf_idx.push_back(l3.size());
                l3.push_back(std::move(n));
            }
            budget -= leaves;
            std::vector<const MemoryNode*> members;
            for (auto i : leaf_idx) {
                members.push_back(&l3[i]);
            }
            auto area = make_parent_node(Level::L2, "area_" + std::to_string(l2.size()), members);
            area.label = word;
            area_idx.push_back(l2.size());
            l2.push_back(std::move(area));
            budget -= 1;
        }
        std::vector<const MemoryNode*> members;
        for (auto i : area_idx) {
            members.push_back(&l2[i]);
        }
        auto room = make_parent_node(Level::L1, "room_" + std::to_string(l1.size()), members);
        l1.push_back(std::move(room));
        budget -= 1;
    }
    return MemoryHierarchy::from_levels(std::move(l3), std::move(l2), std::move(l1));
}

// Leaf score written out from the component definitions.
inline double oracle_score(const doraemon::MemoryNode& n, const doraemon::TaskSpec& task,
                           const doraemon::Vec3& agent, std::int64_t now) {
    double sem = (1.0 + doraemon::cosine(n.summary_embedding, task.embedding)) / 2.0;
    double spa = std::exp(-doraemon::distance(n.position, agent) / 5.0);
    std::size_t hits = 0;
    for (const auto& k : task.keywords) {
        hits += n.keywords.count(k);
    }
    double key = static_cast<double>(hits) / std::max<double>(static_cast<double>(task.keywords.size()), 1.0);
    double tim = std::exp(-std::abs(static_cast<double>(now - n.latest_step)) / 600.0);
    return 0.45 * sem + 0.30 * spa + 0.20 * key + 0.05 * tim;
}

struct Scored {
    std::string id;
    double score;
};

// Every leaf scored; those above the floor, best first (id ascending on ties).
inline std::vector<Scored> exhaustive_leaves(const doraemon::MemoryHierarchy& h, const doraemon::TaskSpec& task,
                                             const doraemon::Vec3& agent, std::int64_t now, double floor = 0.4) {
    std::vector<Scored> all;
    for (const auto* leaf : h.level(doraemon::Level::L3)) {
        double s = oracle_score(*leaf, task, agent, now);
        if (s > floor) {
            all.push_back({leaf->id, s});
        }
    }
    std::sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) {
        return a.score != b.score ? a.score > b.score : a.id < b.id;
    });
    return all;
}

inline std::size_t max_level_width(const doraemon::MemoryHierarchy& h) {
    using doraemon::Level;
    return std::max({h.level(Level::L1).size(), h.level(Level::L2).size(), h.level(Level::L3).size()});
}

}  // namespace testutil
