#pragma once

// Four-level memory built bottom-up from topological map nodes:
// L3 observations -> L2 areas -> L1 rooms -> L0 environment root.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "doraemon/core.hpp"
#include "doraemon/topo_map.hpp"

namespace doraemon {

enum class Level { L0 = 0, L1 = 1, L2 = 2, L3 = 3 };

std::string_view level_name(Level level);

inline constexpr std::string_view kRootId = "GLOBAL_ROOT";
inline constexpr std::string_view kUnknownLabel = "unknown";

struct MemoryNode {
    std::string id;
    Level level = Level::L3;
    std::vector<std::string> parents;
    std::vector<std::string> children;

    // L3: source topological node.
    std::optional<std::int64_t> topo_node_id;
    // L3: observation description; L2: area type; L1: room function; L0: root id.
    std::string label;
    // L2: convex hull of member positions, counter-clockwise.
    std::vector<Vec2> hull;

    // L3: observation position; higher levels: centroid of children.
    Vec3 position;
    Embedding summary_embedding;
    std::set<std::string> keywords;
    std::int64_t latest_step = 0;
};

struct HierarchyConfig {
    double spatial_weight = 0.4;
    double semantic_weight = 0.6;
    double theta1 = 1.0;          // base L2 cut, combined-distance units
    double theta2 = 3.0;          // L1 spatial cut, meters
    std::int64_t rebuild_every = 5;

    void validate() const;
};

// Area keyword vocabularies and the area -> room function lookup.
struct LabelVocabulary {
    std::map<std::string, std::vector<std::string>> area_keywords;
    std::map<std::string, std::string> area_to_room;

    static LabelVocabulary defaults();
    static LabelVocabulary load(const std::string& path);
    static LabelVocabulary parse(std::string_view json_text);
    std::string to_json() const;

    // Argmax of keyword hits over member descriptions, ties to the
    // lexicographically smallest type, `unknown` when nothing matches.
    std::string label_area(const std::vector<const MemoryNode*>& members) const;
    std::string room_function(const std::string& area_type) const;
};

double combined_distance(const Vec3& pa, const Embedding& sa, const Vec3& pb, const Embedding& sb,
                         const HierarchyConfig& cfg);
double combined_distance(const TopoNode& a, const TopoNode& b, const HierarchyConfig& cfg);

double adaptive_threshold(double theta1, std::size_t observation_count);

// Flat clusters of single-linkage agglomeration cut at `threshold`
// (pairs at distance <= threshold end up together). Clusters are ordered
// by smallest member; members ascend.
std::vector<std::vector<std::size_t>> single_linkage_clusters(
    std::size_t n, const std::function<double(std::size_t, std::size_t)>& dist, double threshold);

// Andrew's monotone chain; collinear points are dropped.
std::vector<Vec2> convex_hull(std::vector<Vec2> points);

// Fills position, summary embedding, keywords and latest step from children.
MemoryNode make_parent_node(Level level, std::string id, const std::vector<const MemoryNode*>& children);

std::vector<MemoryNode> make_observation_nodes(const TopoMap& map);

// Returns L2 nodes with children set; parents are wired once L1 exists.
std::vector<MemoryNode> build_l2_areas(const std::vector<MemoryNode>& l3, const HierarchyConfig& cfg,
                                       const LabelVocabulary& vocab = LabelVocabulary::defaults());

std::vector<MemoryNode> build_l1_rooms(const std::vector<MemoryNode>& l2, const HierarchyConfig& cfg,
                                       const LabelVocabulary& vocab = LabelVocabulary::defaults());

class MemoryHierarchy {
public:
    // Wires parents from the children lists, adds the root over `l1`, and
    // validates every structural invariant.
    static MemoryHierarchy from_levels(std::vector<MemoryNode> l3, std::vector<MemoryNode> l2,
                                       std::vector<MemoryNode> l1);

    const MemoryNode& root() const { return node(kRootId); }
    const MemoryNode& node(std::string_view id) const;
    const MemoryNode* find(std::string_view id) const;
    const std::vector<MemoryNode>& nodes() const { return nodes_; }
    std::vector<const MemoryNode*> level(Level l) const;
    std::vector<const MemoryNode*> children_of(const MemoryNode& n) const;

    // Throws InvalidInput describing the first violated invariant.
    void validate(const TopoMap* map = nullptr) const;

    // Indented tree: "<level> <id> <label> children=<n>".
    std::string dump() const;

private:
    std::vector<MemoryNode> nodes_;
    std::unordered_map<std::string, std::size_t> index_;
};

MemoryHierarchy build_hierarchy(const TopoMap& map, const HierarchyConfig& cfg,
                                const LabelVocabulary& vocab = LabelVocabulary::defaults());

}  // namespace doraemon
