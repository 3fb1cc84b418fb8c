#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "doraemon/core.hpp"
#include "doraemon/memory_hierarchy.hpp"

namespace doraemon {

struct RetrievalConfig {
    double alpha_sem = 0.45;
    double alpha_spa = 0.30;
    double alpha_key = 0.20;
    double alpha_time = 0.05;
    std::size_t beam_width = 5;
    double score_floor = 0.4;
    std::size_t top_k = 3;
    double spatial_scale = 5.0;  // meters
    double time_scale = 600.0;   // steps

    void validate() const;
};

struct RetrievalEntry {
    std::string id;
    double score = 0.0;

    friend bool operator==(const RetrievalEntry&, const RetrievalEntry&) = default;
};

struct RetrievalResult {
    std::vector<RetrievalEntry> entries;  // score descending, id ascending on ties
    std::int64_t query_step = 0;
    std::size_t visited = 0;              // nodes scored during the search
};

double semantic_score(const MemoryNode& node, const TaskSpec& task);
double spatial_score(const MemoryNode& node, const Vec3& agent_position, double scale = 5.0);
double keyword_score(const MemoryNode& node, const TaskSpec& task);
double time_score(const MemoryNode& node, std::int64_t current_step, double scale = 600.0);

double node_score(const MemoryNode& node, const TaskSpec& task, const Vec3& agent_position,
                  std::int64_t current_step, const RetrievalConfig& cfg);

// Orders by score descending, then id ascending.
bool ranks_before(const RetrievalEntry& a, const RetrievalEntry& b);

// Top-down beam search from the root. Each level keeps the beam_width best
// children of the current frontier; the observation level returns the top_k
// leaves scoring strictly above score_floor (possibly none).
RetrievalResult retrieve(const MemoryHierarchy& hierarchy, const TaskSpec& task, const Vec3& agent_position,
                         std::int64_t current_step, const RetrievalConfig& cfg);

}  // namespace doraemon
