#include "doraemon/memory_retrieval.hpp"

#include <algorithm>
#include <cmath>

namespace doraemon {

void RetrievalConfig::validate() const {
    double sum = alpha_sem + alpha_spa + alpha_key + alpha_time;
    if (std::abs(sum - 1.0) > 1e-12) {
        throw InvalidInput("retrieval weights must sum to 1");
    }
    if (alpha_sem < 0 || alpha_spa < 0 || alpha_key < 0 || alpha_time < 0) {
        throw InvalidInput("retrieval weights must be non-negative");
    }
    if (beam_width < 1 || top_k < 1) {
        throw InvalidInput("beam width and top_k must be at least 1");
    }
    if (!(spatial_scale > 0.0) || !(time_scale > 0.0)) {
        throw InvalidInput("decay scales must be positive");
    }
}

double semantic_score(const MemoryNode& node, const TaskSpec& task) {
    return 0.5 * (1.0 + cosine(task.embedding, node.summary_embedding));
}

double spatial_score(const MemoryNode& node, const Vec3& agent_position, double scale) {
    return std::exp(-distance(agent_position, node.position) / scale);
}

double keyword_score(const MemoryNode& node, const TaskSpec& task) {
    std::size_t hits = 0;
    for (const auto& k : task.keywords) {
        hits += node.keywords.count(k);
    }
    return static_cast<double>(hits) / static_cast<double>(std::max<std::size_t>(task.keywords.size(), 1));
}

double time_score(const MemoryNode& node, std::int64_t current_step, double scale) {
    return std::exp(-std::abs(static_cast<double>(current_step - node.latest_step)) / scale);
}

double node_score(const MemoryNode& node, const TaskSpec& task, const Vec3& agent_position,
                  std::int64_t current_step, const RetrievalConfig& cfg) {
    double s = cfg.alpha_sem * semantic_score(node, task) +
               cfg.alpha_spa * spatial_score(node, agent_position, cfg.spatial_scale) +
               cfg.alpha_key * keyword_score(node, task) +
               cfg.alpha_time * time_score(node, current_step, cfg.time_scale);
    return std::clamp(s, 0.0, 1.0);
}

bool ranks_before(const RetrievalEntry& a, const RetrievalEntry& b) {
    if (a.score != b.score) {
        return a.score > b.score;
    }
    return a.id < b.id;
}

RetrievalResult retrieve(const MemoryHierarchy& hierarchy, const TaskSpec& task, const Vec3& agent_position,
                         std::int64_t current_step, const RetrievalConfig& cfg) {
    cfg.validate();
    RetrievalResult result;
    result.query_step = current_step;

    std::vector<const MemoryNode*> frontier{&hierarchy.root()};
    for (Level level : {Level::L1, Level::L2, Level::L3}) {
        std::vector<RetrievalEntry> scored;
        for (const auto* parent : frontier) {
            for (const auto* child : hierarchy.children_of(*parent)) {
                scored.push_back({child->id, node_score(*child, task, agent_position, current_step, cfg)});
            }
        }
        result.visited += scored.size();
        std::sort(scored.begin(), scored.end(), ranks_before);

        if (level == Level::L3) {
            for (std::size_t i = 0; i < scored.size() && i < cfg.beam_width; ++i) {
                if (result.entries.size() == cfg.top_k) {
                    break;
                }
                if (scored[i].score > cfg.score_floor) {
                    result.entries.push_back(scored[i]);
                }
            }
            break;
        }
        frontier.clear();
        for (std::size_t i = 0; i < scored.size() && i < cfg.beam_width; ++i) {
            frontier.push_back(&hierarchy.node(scored[i].id));
        }
    }
    return result;
}

}  // namespace doraemon
