#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "doraemon/core.hpp"

namespace doraemon {

struct MapConfig {
    std::int64_t s_update = 3;    // steps
    double delta_sample = 0.5;    // meters
    double delta_connect = 1.0;   // meters, edges longer than this are flagged long_range

    void validate() const;
};

// One multimodal observation record.
struct TopoNode {
    std::int64_t node_id = 0;
    Pose pose;
    std::string observation_desc;
    double target_likelihood = 0.0;  // [0, 1]
    Embedding embedding;
    std::int64_t step_index = 0;
};

struct TopoEdge {
    std::int64_t a = 0;
    std::int64_t b = 0;
    double length = 0.0;
    bool long_range = false;
};

// Temporal criterion uses >=, spatial criterion uses strict >.
bool node_addition_due(std::int64_t last_step, const Vec3& last_position, std::int64_t step,
                       const Vec3& position, const MapConfig& cfg);

class TopoMap {
public:
    // Appends `candidate` when the first node, or when either addition
    // criterion holds, wiring it to the nearest existing node. Throws
    // InvalidInput on a step regression, duplicate id or bad likelihood.
    bool maybe_add_node(TopoNode candidate, const MapConfig& cfg);

    // Ties go to the smallest node id. Throws EmptyMap.
    std::int64_t nearest_node(const Vec3& position) const;

    const std::vector<TopoNode>& nodes() const { return nodes_; }
    const std::vector<TopoEdge>& edges() const { return edges_; }
    const TopoNode& node(std::int64_t id) const;
    bool contains(std::int64_t id) const;
    bool empty() const { return nodes_.empty(); }
    std::size_t size() const { return nodes_.size(); }

    std::optional<std::int64_t> last_node_step() const;
    std::optional<Vec3> last_node_position() const;

    bool is_connected() const;

    // Line-delimited snapshot:
    //   # doraemon-map v1
    //   node <id> <step> <x> <y> <z> <qw> <qx> <qy> <qz> <likelihood> <emb,...> <description>
    //   edge <a> <b> <length> <long_range 0|1>
    // Fields are tab separated; the description is the last field.
    void write_snapshot(std::ostream& out) const;
    static TopoMap read_snapshot(std::istream& in);

private:
    std::vector<TopoNode> nodes_;
    std::vector<TopoEdge> edges_;
};

}  // namespace doraemon
