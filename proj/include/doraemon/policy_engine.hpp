#pragma once

// Decision layer: target attribute database, prompt assembly, reply
// parsing, the scripted and random deciders and the HTTP decider client.

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "doraemon/action_proposer.hpp"
#include "doraemon/core.hpp"
#include "doraemon/memory_hierarchy.hpp"
#include "doraemon/memory_retrieval.hpp"
#include "doraemon/sim_env.hpp"
#include "doraemon/topo_map.hpp"

namespace doraemon {

struct AttributeRecord {
    std::string general_description;
    std::string appearance_features;
    std::string structure_shape;
    std::string common_location;
};

// Returns the four attribute strings for a target, nullopt when unknown.
// May throw on transport failure.
using AttributeProvider = std::function<std::optional<AttributeRecord>(std::string_view target)>;

const std::map<std::string, AttributeRecord>& stub_attribute_table();
AttributeProvider stub_attribute_provider();

// Provider failures and unknown targets yield an empty, degraded database.
AttributeDatabase build_attribute_database(const TaskSpec& task, const AttributeProvider& provider);

struct MemoryLine {
    std::string id;
    std::string label;
    double score = 0.0;
    std::int64_t steps_ago = 0;
    Vec3 position;
    double keyword_score = 0.0;
    // Where the target probably is, read back from an observation record.
    std::optional<Vec3> target_estimate;
};

// Rough target position from a description produced by describe(): the
// first "<target> at <range> <side>" entry, projected from `pose`.
std::optional<Vec3> estimate_from_description(const Pose& pose, std::string_view description,
                                              std::string_view target, const SimConfig& cfg = {});

// Retrieval entries resolved against the hierarchy, in retrieval order.
// With `map`, observation-level entries carry a target estimate.
std::vector<MemoryLine> memory_lines(const RetrievalResult& retrieval, const MemoryHierarchy& hierarchy,
                                     const TaskSpec& task, const TopoMap* map = nullptr,
                                     const SimConfig& cfg = {});

std::string_view cot_template();
// Template with [TARGET_OBJECT] (upper-cased), [N] and [TURN_INSTRUCTION]
// substituted. The turn slot is empty unless `turn_active`.
std::string fill_template(std::string_view target, std::size_t n, bool turn_active);

inline constexpr std::string_view kTurnInstruction =
    "Action 0 turns you around. Consider it if nothing ahead looks promising.";

struct PromptBundle {
    std::string task_block;
    std::string candidate_block;
    std::string memory_block;
    std::string cot_scaffold;

    // Scaffold followed by the task, candidate and memory sections.
    std::string text() const;
};

// Throws InvalidInput when `candidates` is empty. Memory lines are emitted
// by descending score.
PromptBundle assemble_prompt(const TaskSpec& task, const AttributeDatabase& db, const AnnotatedCandidates& candidates,
                             const std::vector<MemoryLine>& memory, bool turn_active);

struct DecisionResponse {
    int chosen_code = 0;
    std::string raw_text;
};

// Uses the last {"action": <int>} object in `raw`. ParseError when none is
// present, InvalidCode when the code is not in `valid_codes`.
DecisionResponse parse_decision(std::string_view raw, const std::vector<int>& valid_codes);

struct DecisionContext {
    const AnnotatedCandidates* candidates = nullptr;
    Pose pose;
    const Observation* observation = nullptr;
    std::string target_label;
    std::vector<MemoryLine> memory;
    const ExplorationMemory* exploration = nullptr;
    const ViewCoverage* coverage = nullptr;
    double memory_min_distance = 1.0;  // memories closer than this are ignored
    double frontier_reach = 1.5;       // m, known space this far from the walked path is unexplored
};

enum class DecisionRule { VisibleTarget, Memory, Exploration };

const char* decision_rule_name(DecisionRule rule);

struct ScriptedDecision {
    int code = 0;
    DecisionRule rule = DecisionRule::Exploration;
};

// Visible target > memory holding the target > exploration. Exploration
// ranks by geodesic distance to unexplored known space, then potential plus
// view novelty, then longer r, then smaller |theta|.
// Remaining ties go to the lowest code.
ScriptedDecision scripted_decide(const DecisionContext& ctx);

// Uniform choice among the candidate codes.
class RandomDecider {
public:
    explicit RandomDecider(std::uint64_t seed) : rng_(seed) {}
    int decide(const AnnotatedCandidates& candidates);

private:
    std::mt19937_64 rng_;
};

inline constexpr int kWireVersion = 1;

nlohmann::json make_wire_request(const TaskSpec& task, const PromptBundle& bundle,
                                 const AnnotatedCandidates& candidates, const std::vector<MemoryLine>& memory);

struct Endpoint {
    std::string url;          // http://host:port/path
    double timeout_s = 5.0;
    int retries = 1;          // extra attempts after the first
};

struct ExternalResult {
    std::optional<DecisionResponse> response;
    std::string failure;      // set when response is empty
    int attempts = 0;
};

// Never throws for transport or reply problems; the caller falls back to
// the scripted decider when `response` is empty.
ExternalResult external_decide(const nlohmann::json& request, const std::vector<int>& valid_codes,
                               const Endpoint& endpoint);

// Loopback decision server answering POST requests with a canned reply.
// An empty reply answers {"action": <lowest candidate code>}.
class FakeDecisionServer {
public:
    struct Options {
        std::string reply;
        int delay_ms = 0;
        std::string path = "/decide";
    };

    explicit FakeDecisionServer(Options options);
    ~FakeDecisionServer();
    FakeDecisionServer(const FakeDecisionServer&) = delete;
    FakeDecisionServer& operator=(const FakeDecisionServer&) = delete;

    // Binds 127.0.0.1 (port 0 picks a free one) and serves on a thread.
    int start(int port = 0);
    // Blocks on the calling thread.
    void listen(const std::string& host, int port);
    void stop();
    std::string url() const;
    int requests() const { return requests_.load(); }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    Options options_;
    int port_ = 0;
    std::thread thread_;
    std::atomic<int> requests_{0};
};

}  // namespace doraemon
