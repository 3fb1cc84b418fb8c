#include "doraemon/topo_map.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace doraemon {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, sep)) {
        out.push_back(cur);
    }
    if (!line.empty() && line.back() == sep) {
        out.emplace_back();
    }
    return out;
}

template <typename T>
T parse_num(const std::string& s, std::size_t line) {
    T v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ParseError("malformed number '" + s + "'", line);
    }
    return v;
}

}  // namespace

void MapConfig::validate() const {
    if (s_update <= 0 || !(delta_sample > 0.0) || !(delta_connect > 0.0)) {
        throw InvalidInput("map config values must be strictly positive");
    }
}

bool node_addition_due(std::int64_t last_step, const Vec3& last_position, std::int64_t step,
                       const Vec3& position, const MapConfig& cfg) {
    return step - last_step >= cfg.s_update || distance(position, last_position) > cfg.delta_sample;
}

bool TopoMap::maybe_add_node(TopoNode candidate, const MapConfig& cfg) {
    cfg.validate();
    candidate.pose.validate();
    if (!(candidate.target_likelihood >= 0.0 && candidate.target_likelihood <= 1.0)) {
        throw InvalidInput("target likelihood must lie in [0, 1]");
    }
    if (candidate.step_index < 0) {
        throw InvalidInput("step index must be non-negative");
    }
    if (!nodes_.empty()) {
        const TopoNode& last = nodes_.back();
        if (candidate.step_index < last.step_index) {
            throw InvalidInput("candidate step precedes the last node step");
        }
        if (!node_addition_due(last.step_index, last.pose.position, candidate.step_index,
                               candidate.pose.position, cfg)) {
            return false;
        }
    }
    if (contains(candidate.node_id)) {
        throw InvalidInput("duplicate node id " + std::to_string(candidate.node_id));
    }
    if (!nodes_.empty()) {
        std::int64_t nearest = nearest_node(candidate.pose.position);
        double len = distance(node(nearest).pose.position, candidate.pose.position);
        edges_.push_back({nearest, candidate.node_id, len, len > cfg.delta_connect});
    }
    nodes_.push_back(std::move(candidate));
    return true;
}

std::int64_t TopoMap::nearest_node(const Vec3& position) const {
    if (nodes_.empty()) {
        throw EmptyMap("nearest_node on an empty map");
    }
    const TopoNode* best = nullptr;
    double best_d = 0.0;
    for (const auto& n : nodes_) {
        double d = distance(n.pose.position, position);
        if (!best || d < best_d || (d == best_d && n.node_id < best->node_id)) {
            best = &n;
            best_d = d;
        }
    }
    return best->node_id;
}

const TopoNode& TopoMap::node(std::int64_t id) const {
    for (const auto& n : nodes_) {
        if (n.node_id == id) {
            return n;
        }
    }
    throw InvalidInput("unknown node id " + std::to_string(id));
}

bool TopoMap::contains(std::int64_t id) const {
    return std::any_of(nodes_.begin(), nodes_.end(), [id](const TopoNode& n) { return n.node_id == id; });
}

std::optional<std::int64_t> TopoMap::last_node_step() const {
    if (nodes_.empty()) {
        return std::nullopt;
    }
    return nodes_.back().step_index;
}

std::optional<Vec3> TopoMap::last_node_position() const {
    if (nodes_.empty()) {
        return std::nullopt;
    }
    return nodes_.back().pose.position;
}

bool TopoMap::is_connected() const {
    if (nodes_.size() <= 1) {
        return true;
    }
    std::map<std::int64_t, std::int64_t> parent;
    for (const auto& n : nodes_) {
        parent[n.node_id] = n.node_id;
    }
    auto find = [&](std::int64_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    std::size_t components = nodes_.size();
    for (const auto& e : edges_) {
        auto ra = find(e.a);
        auto rb = find(e.b);
        if (ra != rb) {
            parent[ra] = rb;
            --components;
        }
    }
    return components == 1;
}

void TopoMap::write_snapshot(std::ostream& out) const {
    out << "# doraemon-map v1\n";
    for (const auto& n : nodes_) {
        const auto& p = n.pose.position;
        const auto& q = n.pose.orientation;
        out << "node\t" << n.node_id << '\t' << n.step_index << '\t' << fmt(p.x) << '\t' << fmt(p.y) << '\t'
            << fmt(p.z) << '\t' << fmt(q.w) << '\t' << fmt(q.x) << '\t' << fmt(q.y) << '\t' << fmt(q.z) << '\t'
            << fmt(n.target_likelihood) << '\t';
        auto v = n.embedding.values();
        for (std::size_t i = 0; i < v.size(); ++i) {
            out << (i ? "," : "") << fmt(v[i]);
        }
        out << '\t' << n.observation_desc << '\n';
    }
    for (const auto& e : edges_) {
        out << "edge\t" << e.a << '\t' << e.b << '\t' << fmt(e.length) << '\t' << (e.long_range ? 1 : 0) << '\n';
    }
}

TopoMap TopoMap::read_snapshot(std::istream& in) {
    TopoMap map;
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!header) {
            if (line != "# doraemon-map v1") {
                throw VersionError("unsupported map snapshot header '" + line + "'");
            }
            header = true;
            continue;
        }
        if (line.empty()) {
            continue;
        }
        auto f = split(line, '\t');
        if (f[0] == "node") {
            if (f.size() != 13) {
                throw ParseError("node record expects 13 fields", lineno);
            }
            TopoNode n;
            n.node_id = parse_num<std::int64_t>(f[1], lineno);
            n.step_index = parse_num<std::int64_t>(f[2], lineno);
            n.pose.position = {parse_num<double>(f[3], lineno), parse_num<double>(f[4], lineno),
                               parse_num<double>(f[5], lineno)};
            n.pose.orientation = {parse_num<double>(f[6], lineno), parse_num<double>(f[7], lineno),
                                  parse_num<double>(f[8], lineno), parse_num<double>(f[9], lineno)};
            n.target_likelihood = parse_num<double>(f[10], lineno);
            std::vector<double> emb;
            for (const auto& tok : split(f[11], ',')) {
                emb.push_back(parse_num<double>(tok, lineno));
            }
            n.embedding = Embedding::normalized(std::move(emb));
            n.observation_desc = f[12];
            if (map.contains(n.node_id)) {
                throw ParseError("duplicate node id", lineno);
            }
            map.nodes_.push_back(std::move(n));
        } else if (f[0] == "edge") {
            if (f.size() != 5) {
                throw ParseError("edge record expects 5 fields", lineno);
            }
            TopoEdge e{parse_num<std::int64_t>(f[1], lineno), parse_num<std::int64_t>(f[2], lineno),
                       parse_num<double>(f[3], lineno), f[4] == "1"};
            if (!map.contains(e.a) || !map.contains(e.b)) {
                throw ParseError("edge references an unknown node", lineno);
            }
            map.edges_.push_back(e);
        } else {
            throw ParseError("unknown record '" + f[0] + "'", lineno);
        }
    }
    if (!header) {
        throw ParseError("empty map snapshot");
    }
    return map;
}

}  // namespace doraemon
