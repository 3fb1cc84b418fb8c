#include "doraemon/policy_engine.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <regex>
#include <tuple>
#include <sstream>

#include <httplib.h>

namespace doraemon {

const std::map<std::string, AttributeRecord>& stub_attribute_table() {
    static const std::map<std::string, AttributeRecord> table = {
        {"armchair", {"a padded chair for one person", "upholstered seat with armrests", "boxy seat with two arms and a back", "living room near the sofa or fireplace"}},
        {"bathtub", {"a large basin for bathing", "white glossy enamel", "long open rectangular tub", "bathroom against a wall"}},
        {"bed", {"furniture for sleeping", "mattress with sheets and pillows", "wide flat rectangle with a headboard", "bedroom against a wall"}},
        {"chair", {"a seat for one person", "wooden or padded seat", "four legs with a backrest", "dining room around the table or office at the desk"}},
        {"desk", {"a table for working", "flat top often holding a computer", "rectangular top on legs or drawers", "office or bedroom corner"}},
        {"dresser", {"a chest of drawers for clothes", "wooden front with handles", "tall box with stacked drawers", "bedroom beside the bed"}},
        {"fireplace", {"an open hearth for a fire", "brick or stone surround", "recessed opening in a wall", "living room facing the sofa"}},
        {"microwave", {"a small oven heating food with radiation", "dark glass door with a keypad", "compact box", "kitchen on the counter"}},
        {"monitor", {"a computer display", "thin black screen", "flat panel on a stand", "office on the desk"}},
        {"nightstand", {"a small bedside table", "wooden top with a drawer", "short cube", "bedroom next to the bed"}},
        {"plant", {"a living potted plant", "green leaves in a pot", "round pot with upright foliage", "sunroom or living room near windows"}},
        {"printer", {"a device printing documents", "grey or white plastic casing", "squat box with a paper tray", "office beside the desk"}},
        {"refrigerator", {"an appliance keeping food cold", "tall white or steel doors", "large upright box", "kitchen along the counter"}},
        {"sink", {"a basin with a tap", "ceramic or steel bowl", "recessed bowl under a faucet", "bathroom or kitchen counter"}},
        {"sofa", {"a long upholstered seat for several people", "cushions on a fabric or leather frame", "long low seat with a back and arms", "living room facing the tv"}},
        {"stove", {"an appliance for cooking", "burners on a flat top", "waist-high box with an oven door", "kitchen between counters"}},
        {"table", {"furniture with a flat top", "wooden or glass surface", "flat top on four legs", "dining room surrounded by chairs"}},
        {"toilet", {"a plumbing fixture for waste", "white porcelain", "bowl with a tank and a seat", "bathroom next to the sink"}},
        {"tv", {"a television screen", "large black screen", "wide flat panel on a stand or wall", "living room facing the sofa"}},
        {"vase", {"a container for flowers", "glazed ceramic or glass", "narrow neck on a rounded body", "sunroom or living room on a shelf"}},
    };
    return table;
}

AttributeProvider stub_attribute_provider() {
    return [](std::string_view target) -> std::optional<AttributeRecord> {
        std::string key;
        for (char c : target) {
            key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
        const auto& table = stub_attribute_table();
        auto it = table.find(key);
        if (it == table.end()) {
            return std::nullopt;
        }
        return it->second;
    };
}

AttributeDatabase build_attribute_database(const TaskSpec& task, const AttributeProvider& provider) {
    AttributeDatabase db;
    std::optional<AttributeRecord> rec;
    try {
        rec = provider ? provider(task.raw_text) : std::nullopt;
    } catch (const std::exception&) {
        rec.reset();
    }
    if (!rec) {
        db.degraded = true;
        return db;
    }
    db.general_description = rec->general_description;
    db.appearance_features = rec->appearance_features;
    db.structure_shape = rec->structure_shape;
    db.common_location = rec->common_location;
    db.location_keywords = keyword_set(db.common_location);
    return db;
}

std::optional<Vec3> estimate_from_description(const Pose& pose, std::string_view description,
                                              std::string_view target, const SimConfig& cfg) {
    constexpr std::string_view prefix = "you see: ";
    if (description.substr(0, prefix.size()) != prefix) {
        return std::nullopt;
    }
    std::string_view rest = description.substr(prefix.size());
    while (!rest.empty()) {
        auto comma = rest.find(", ");
        std::string_view item = rest.substr(0, comma);
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 2);

        std::istringstream in{std::string(item)};
        std::string label, at, range, side;
        if (!(in >> label >> at >> range >> side) || at != "at" || label != target) {
            continue;
        }
        double dist = range == "near" ? cfg.near_range / 2
                    : range == "mid"  ? (cfg.near_range + cfg.mid_range) / 2
                                      : cfg.mid_range + 1.5;
        double off = (cfg.side_angle + cfg.fov / 2) / 2;
        double bearing = side == "left" ? off : side == "right" ? -off : 0.0;
        double h = pose.yaw() + bearing;
        return pose.position + Vec3{dist * std::cos(h), dist * std::sin(h), 0.0};
    }
    return std::nullopt;
}

std::vector<MemoryLine> memory_lines(const RetrievalResult& retrieval, const MemoryHierarchy& hierarchy,
                                     const TaskSpec& task, const TopoMap* map, const SimConfig& cfg) {
    std::vector<MemoryLine> out;
    for (const auto& e : retrieval.entries) {
        const MemoryNode& n = hierarchy.node(e.id);
        MemoryLine line{e.id, n.label, e.score, std::max<std::int64_t>(0, retrieval.query_step - n.latest_step),
                        n.position, keyword_score(n, task), std::nullopt};
        if (map && n.topo_node_id && map->contains(*n.topo_node_id)) {
            const auto& tn = map->node(*n.topo_node_id);
            line.target_estimate = estimate_from_description(tn.pose, tn.observation_desc, task.raw_text, cfg);
        }
        out.push_back(std::move(line));
    }
    return out;
}

namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
    for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
        s.replace(pos, from.size(), to);
    }
}

std::string upper(std::string_view s) {
    std::string out;
    for (char c : s) {
        out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return out;
}

}  // namespace

std::string fill_template(std::string_view target, std::size_t n, bool turn_active) {
    std::string out(cot_template());
    replace_all(out, "[TARGET_OBJECT]", upper(target));
    replace_all(out, "[N]", std::to_string(n));
    replace_all(out, "[TURN_INSTRUCTION]", turn_active ? kTurnInstruction : std::string_view{});
    return out;
}

std::string PromptBundle::text() const {
    return cot_scaffold + "\n\n" + task_block + "\n" + candidate_block + "\n" + memory_block;
}

PromptBundle assemble_prompt(const TaskSpec& task, const AttributeDatabase& db, const AnnotatedCandidates& candidates,
                             const std::vector<MemoryLine>& memory, bool turn_active) {
    if (candidates.empty()) {
        throw InvalidInput("cannot assemble a prompt without candidates");
    }
    PromptBundle b;
    b.cot_scaffold = fill_template(task.raw_text, candidates.size(), turn_active);

    b.task_block = "TARGET: " + task.raw_text + "\n";
    if (db.degraded) {
        b.task_block += "ATTRIBUTES: unavailable\n";
    } else {
        b.task_block += "GENERAL DESCRIPTION: " + db.general_description + "\n";
        b.task_block += "APPEARANCE: " + db.appearance_features + "\n";
        b.task_block += "STRUCTURE: " + db.structure_shape + "\n";
        b.task_block += "COMMON LOCATION: " + db.common_location + "\n";
    }

    b.candidate_block = "ACTIONS (" + std::to_string(candidates.size()) + "):\n" + candidates.render();
    if (candidates.contains(kTurnAroundCode)) {
        b.candidate_block += "Action 0 rotates in place by 180 degrees.\n";
    }

    std::vector<MemoryLine> sorted = memory;
    std::stable_sort(sorted.begin(), sorted.end(), [](const MemoryLine& a, const MemoryLine& c) {
        if (a.score != c.score) {
            return a.score > c.score;
        }
        return a.id < c.id;
    });
    if (sorted.empty()) {
        b.memory_block = "MEMORY: none\n";
    } else {
        b.memory_block = "MEMORY:\n";
        char buf[64];
        for (const auto& m : sorted) {
            std::snprintf(buf, sizeof buf, "%.3f", m.score);
            b.memory_block += "- " + m.label + " (" + m.id + ", " + std::to_string(m.steps_ago) + " steps ago, score " +
                              buf + ")\n";
        }
    }
    return b;
}

DecisionResponse parse_decision(std::string_view raw, const std::vector<int>& valid_codes) {
    static const std::regex pattern(R"re(\{\s*"action"\s*:\s*(-?[0-9]+)\s*\})re");
    std::string text(raw);
    std::smatch last;
    bool found = false;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), pattern); it != std::sregex_iterator(); ++it) {
        last = *it;
        found = true;
    }
    if (!found) {
        auto lines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) + 1;
        throw ParseError("no {\"action\": <code>} object in reply", lines);
    }
    long long code = 0;
    try {
        code = std::stoll(last[1].str());
    } catch (const std::out_of_range&) {
        throw InvalidCode("action code out of range: " + last[1].str());
    }
    if (std::find(valid_codes.begin(), valid_codes.end(), code) == valid_codes.end()) {
        throw InvalidCode("action code " + last[1].str() + " is not among the candidates");
    }
    return {static_cast<int>(code), text};
}

const char* decision_rule_name(DecisionRule rule) {
    switch (rule) {
        case DecisionRule::VisibleTarget: return "visible_target";
        case DecisionRule::Memory: return "memory";
        case DecisionRule::Exploration: return "exploration";
    }
    return "?";
}

ScriptedDecision scripted_decide(const DecisionContext& ctx) {
    if (!ctx.candidates || ctx.candidates->empty()) {
        throw InvalidInput("scripted decision needs candidates");
    }
    const auto& entries = ctx.candidates->entries;
    const Vec3 here = ctx.pose.position;
    const double yaw = ctx.pose.yaw();

    // Argmax with ties to the earliest entry; entries are in ascending code order.
    auto pick = [&](auto&& score) {
        std::size_t best = 0;
        auto best_score = score(entries[0]);
        for (std::size_t i = 1; i < entries.size(); ++i) {
            auto s = score(entries[i]);
            if (s > best_score || (s == best_score && entries[i].code < entries[best].code)) {
                best = i;
                best_score = s;
            }
        }
        return entries[best].code;
    };

    if (ctx.observation) {
        const VisibleObject* target = nullptr;
        for (const auto& o : ctx.observation->objects) {
            if (o.label == ctx.target_label) {
                target = &o;
                break;
            }
        }
        if (target) {
            double h = yaw + target->bearing;
            Vec3 goal = here + Vec3{target->range * std::cos(h), target->range * std::sin(h), 0.0};
            int code = pick([&](const AnnotatedCandidate& c) {
                return -distance(action_destination(ctx.pose, c.action), goal);
            });
            return {code, DecisionRule::VisibleTarget};
        }
    }

    const MemoryLine* best = nullptr;
    Vec3 goal;
    for (const auto& m : ctx.memory) {
        Vec3 g = m.target_estimate.value_or(m.position);
        if (m.keyword_score > 0.0 && distance(g, here) >= ctx.memory_min_distance &&
            (!best || m.score > best->score)) {
            best = &m;
            goal = g;
        }
    }
    if (best) {
        double dir = std::atan2(goal.y - here.y, goal.x - here.x);
        int code = pick([&](const AnnotatedCandidate& c) {
            double heading = yaw + c.action.theta;
            return best->score * std::cos(wrap_angle(heading - dir));
        });
        return {code, DecisionRule::Memory};
    }

    std::unordered_map<std::int64_t, double> field;
    if (ctx.coverage) {
        field = ctx.coverage->frontier_field(ctx.frontier_reach);
    }
    int code = pick([&](const AnnotatedCandidate& c) {
        Vec3 dest = action_destination(ctx.pose, c.action);
        double cost = ctx.coverage ? ctx.coverage->frontier_cost(field, dest) : 0.0;
        double value = ctx.exploration ? ctx.exploration->potential(dest) : 0.0;
        if (ctx.coverage) {
            value += ctx.coverage->novelty(dest, yaw + c.action.theta);
        }
        return std::tuple{-cost, value, c.action.r, -std::abs(c.action.theta)};
    });
    return {code, DecisionRule::Exploration};
}

int RandomDecider::decide(const AnnotatedCandidates& candidates) {
    if (candidates.empty()) {
        throw InvalidInput("random decision needs candidates");
    }
    return candidates.entries[rng_() % candidates.size()].code;
}

nlohmann::json make_wire_request(const TaskSpec& task, const PromptBundle& bundle,
                                 const AnnotatedCandidates& candidates, const std::vector<MemoryLine>& memory) {
    nlohmann::json req;
    req["version"] = kWireVersion;
    req["task"] = {{"target", task.raw_text}, {"block", bundle.task_block}};
    req["candidates"] = nlohmann::json::array();
    for (const auto& c : candidates.entries) {
        req["candidates"].push_back(
            {{"code", c.code}, {"bearing_deg", rad_to_deg(c.action.theta)}, {"range_m", c.action.r}});
    }
    req["memory"] = nlohmann::json::array();
    for (const auto& m : memory) {
        req["memory"].push_back({{"id", m.id}, {"label", m.label}, {"score", m.score}, {"steps_ago", m.steps_ago}});
    }
    req["scaffold"] = bundle.cot_scaffold;
    req["prompt"] = bundle.text();
    return req;
}

namespace {

struct ParsedUrl {
    std::string base;
    std::string path;
};

ParsedUrl split_url(const std::string& url) {
    static const std::regex pattern(R"re(^(https?://[^/]+)(/.*)?$)re");
    std::smatch m;
    if (!std::regex_match(url, m, pattern)) {
        throw InvalidInput("malformed endpoint url '" + url + "'");
    }
    return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

}  // namespace

ExternalResult external_decide(const nlohmann::json& request, const std::vector<int>& valid_codes,
                               const Endpoint& endpoint) {
    ExternalResult out;
    ParsedUrl url;
    try {
        url = split_url(endpoint.url);
    } catch (const Error& e) {
        out.failure = e.what();
        return out;
    }
    httplib::Client client(url.base);
    auto timeout = std::chrono::milliseconds(static_cast<long long>(endpoint.timeout_s * 1000.0));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    const std::string body = request.dump();

    for (int attempt = 0; attempt <= std::max(endpoint.retries, 0); ++attempt) {
        ++out.attempts;
        auto res = client.Post(url.path, body, "application/json");
        if (!res) {
            out.failure = "transport: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            out.failure = "http status " + std::to_string(res->status);
            continue;
        }
        try {
            auto j = nlohmann::json::parse(res->body, nullptr, false);
            if (j.is_object() && j.contains("action") && j["action"].is_number_integer()) {
                int code = j["action"].get<int>();
                if (std::find(valid_codes.begin(), valid_codes.end(), code) == valid_codes.end()) {
                    throw InvalidCode("action code " + std::to_string(code) + " is not among the candidates");
                }
                out.response = DecisionResponse{code, res->body};
            } else {
                out.response = parse_decision(res->body, valid_codes);
            }
            out.failure.clear();
            return out;
        } catch (const Error& e) {
            // A malformed reply is not retried.
            out.failure = std::string("reply: ") + e.what();
            return out;
        }
    }
    return out;
}

struct FakeDecisionServer::Impl {
    httplib::Server server;
};

FakeDecisionServer::FakeDecisionServer(Options options) : impl_(std::make_unique<Impl>()), options_(std::move(options)) {
    impl_->server.Post(options_.path, [this](const httplib::Request& req, httplib::Response& res) {
        ++requests_;
        if (options_.delay_ms > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(options_.delay_ms));
        }
        if (!options_.reply.empty()) {
            res.set_content(options_.reply, "application/json");
            return;
        }
        auto j = nlohmann::json::parse(req.body, nullptr, false);
        int code = 0;
        bool any = false;
        if (j.is_object() && j.contains("candidates") && j["candidates"].is_array()) {
            for (const auto& c : j["candidates"]) {
                if (c.contains("code") && c["code"].is_number_integer()) {
                    int v = c["code"].get<int>();
                    code = any ? std::min(code, v) : v;
                    any = true;
                }
            }
        }
        if (!any) {
            res.status = 400;
            res.set_content("{\"error\": \"no candidates\"}", "application/json");
            return;
        }
        res.set_content(nlohmann::json{{"action", code}}.dump(), "application/json");
    });
}

FakeDecisionServer::~FakeDecisionServer() { stop(); }

int FakeDecisionServer::start(int port) {
    if (port == 0) {
        port_ = impl_->server.bind_to_any_port("127.0.0.1");
    } else if (impl_->server.bind_to_port("127.0.0.1", port)) {
        port_ = port;
    } else {
        port_ = -1;
    }
    if (port_ <= 0) {
        throw Error("fake server could not bind");
    }
    thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port_;
}

void FakeDecisionServer::listen(const std::string& host, int port) {
    port_ = port;
    if (!impl_->server.listen(host, port)) {
        throw Error("fake server could not listen on " + host + ":" + std::to_string(port));
    }
}

void FakeDecisionServer::stop() {
    impl_->server.stop();
    if (thread_.joinable()) {
        thread_.join();
    }
}

std::string FakeDecisionServer::url() const {
    return "http://127.0.0.1:" + std::to_string(port_) + options_.path;
}

}  // namespace doraemon
