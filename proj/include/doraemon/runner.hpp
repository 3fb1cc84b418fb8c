#pragma once

// Episode orchestration: configuration, the per-step navigation loop, batch
// execution and metric reports.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "doraemon/action_proposer.hpp"
#include "doraemon/memory_hierarchy.hpp"
#include "doraemon/memory_retrieval.hpp"
#include "doraemon/metrics.hpp"
#include "doraemon/nav_ensurance.hpp"
#include "doraemon/policy_engine.hpp"
#include "doraemon/sim_env.hpp"
#include "doraemon/topo_map.hpp"

namespace doraemon {

enum class DeciderKind { Scripted, Random, External };

const char* decider_name(DeciderKind kind);
DeciderKind parse_decider(std::string_view name);

struct RunConfig {
    std::vector<std::filesystem::path> scenes;
    std::uint64_t seed = 0;
    std::int64_t max_actions = 40;
    std::size_t workers = 1;
    std::filesystem::path output_dir = "runs";
    bool write_logs = true;
    DeciderKind decider = DeciderKind::Scripted;
    Endpoint endpoint;
    int escape_samples = 36;  // headings sampled for escape classification

    MapConfig map;
    HierarchyConfig hierarchy;
    RetrievalConfig retrieval;
    ProposerConfig proposer;
    StuckConfig stuck;
    EscapeConfig escape;
    PrecisionConfig precision;
    AoriConfig aori;
    SimConfig sim;  // its max_actions and aori are taken from the fields above
    EmbedderConfig embedder;

    SimConfig effective_sim() const;
    // Checks every sub-config; with `check_paths`, every scene must exist.
    void validate(bool check_paths = true) const;
};

// Strict: unknown keys raise InvalidInput naming the key. Missing keys keep
// their defaults.
nlohmann::json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const RunConfig& cfg, const std::filesystem::path& path);

struct EpisodeResult {
    std::string scene_name;
    std::string scene_path;
    bool executed = false;     // false when the scene could not be loaded
    std::string error;         // load error or a fault recorded mid-episode
    EpisodeOutcome outcome;
    StepBudget budget;
    std::int64_t actions = 0;
    std::int64_t escapes = 0;
    std::int64_t fallbacks = 0;
    std::size_t map_nodes = 0;
};

// Runs one episode. `log` receives one JSON line per action and a final
// outcome line. `map_out` receives the final topological map.
EpisodeResult run_episode(const Scene& scene, const RunConfig& cfg, std::uint64_t seed, std::ostream* log = nullptr,
                          TopoMap* map_out = nullptr);

std::uint64_t episode_seed(std::uint64_t base, std::size_t index);

// Loads cfg.scenes[index], runs it and, when cfg.write_logs, writes
// <output_dir>/<NNN>_<stem>.jsonl and .map. Scene errors propagate.
EpisodeResult run_scene(const RunConfig& cfg, std::size_t index);

// All scenes over cfg.workers threads; load failures are recorded per
// episode and the batch continues. Results follow cfg.scenes order.
std::vector<EpisodeResult> run_batch(const RunConfig& cfg);

struct BatchSummary {
    std::size_t episodes = 0;  // executed ones
    std::size_t failed_to_run = 0;
    double success_rate = 0.0;
    double spl = 0.0;
    double mean_aori = 0.0;
    double mean_steps = 0.0;   // discrete step conversion
};

// Throws EmptyInput when nothing was executed.
BatchSummary summarize(const std::vector<EpisodeResult>& results);
void write_report(const std::vector<EpisodeResult>& results, std::ostream& out);
// Rebuilds results from the outcome records of *.jsonl logs in `dir`.
std::vector<EpisodeResult> results_from_logs(const std::filesystem::path& dir);

}  // namespace doraemon
