// doraemon command-line driver.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "doraemon/memory_hierarchy.hpp"
#include "doraemon/runner.hpp"
#include "doraemon/scene_gen.hpp"
#include "doraemon/topo_map.hpp"

namespace fs = std::filesystem;
using namespace doraemon;

namespace {

struct CommonFlags {
    std::string config;
    std::uint64_t seed = 0;
    std::int64_t max_actions = 40;
    std::string decider = "scripted";
    std::string url;
    double timeout_s = 5.0;
    int retries = 1;
    std::string out = "runs";
    bool no_logs = false;
    std::size_t workers = 1;
};

void add_common(CLI::App* app, CommonFlags& f) {
    app->add_option("--config", f.config, "JSON run config; its values override flags");
    app->add_option("--seed", f.seed, "base seed");
    app->add_option("--max-actions", f.max_actions, "action cap per episode");
    app->add_option("--decider", f.decider, "scripted, random or external")
        ->check(CLI::IsMember({"scripted", "random", "external"}));
    app->add_option("--url", f.url, "external decider endpoint");
    app->add_option("--timeout", f.timeout_s, "external decider timeout, seconds");
    app->add_option("--retries", f.retries, "external decider retries");
    app->add_option("--out", f.out, "output directory for logs and reports");
    app->add_flag("--no-logs", f.no_logs, "skip episode logs");
}

RunConfig make_config(const CommonFlags& f, const std::vector<fs::path>& scenes) {
    RunConfig cfg;
    cfg.scenes = scenes;
    cfg.seed = f.seed;
    cfg.max_actions = f.max_actions;
    cfg.decider = parse_decider(f.decider);
    cfg.endpoint.url = f.url;
    cfg.endpoint.timeout_s = f.timeout_s;
    cfg.endpoint.retries = f.retries;
    cfg.output_dir = f.out;
    cfg.write_logs = !f.no_logs;
    cfg.workers = f.workers;
    if (!f.config.empty()) {
        std::ifstream in(f.config);
        if (!in) {
            throw InvalidInput("cannot open config " + f.config);
        }
        nlohmann::json merged = to_json(cfg);
        nlohmann::json file = nlohmann::json::parse(in);
        merged.merge_patch(file);
        cfg = run_config_from_json(merged);
    }
    cfg.validate();
    return cfg;
}

std::vector<fs::path> expand_scenes(const std::vector<std::string>& inputs) {
    std::vector<fs::path> out;
    for (const auto& in : inputs) {
        if (fs::is_directory(in)) {
            std::vector<fs::path> found;
            for (const auto& e : fs::directory_iterator(in)) {
                if (e.path().extension() == ".scene") {
                    found.push_back(e.path());
                }
            }
            std::sort(found.begin(), found.end());
            out.insert(out.end(), found.begin(), found.end());
        } else {
            out.emplace_back(in);
        }
    }
    return out;
}

int finish_batch(const RunConfig& cfg, const std::vector<EpisodeResult>& results, const std::string& report_path) {
    write_report(results, std::cout);
    fs::path path = report_path.empty() ? cfg.output_dir / "report.tsv" : fs::path(report_path);
    if (!path.parent_path().empty()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    write_report(results, out);
    bool all_ran = std::all_of(results.begin(), results.end(), [](const EpisodeResult& r) { return r.executed; });
    return all_ran ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"doraemon: object-goal navigation agent on 2D scenes"};
    app.require_subcommand(1);

    CommonFlags run_flags;
    std::string run_scene_path;
    auto* run = app.add_subcommand("run", "run one episode");
    run->add_option("scene", run_scene_path, "scene file")->required();
    add_common(run, run_flags);

    CommonFlags batch_flags;
    std::vector<std::string> batch_inputs;
    std::string batch_report;
    auto* batch = app.add_subcommand("batch", "run many episodes and write a metrics report");
    batch->add_option("scenes", batch_inputs, "scene files or directories")->required();
    batch->add_option("--workers", batch_flags.workers, "parallel episodes");
    batch->add_option("--report", batch_report, "report path (default <out>/report.tsv)");
    add_common(batch, batch_flags);

    std::string gen_kind = "rooms";
    std::size_t gen_count = 1;
    std::uint64_t gen_seed = 0;
    std::string gen_out = "scenes";
    std::string gen_prefix;
    auto* gen = app.add_subcommand("gen-scenes", "generate scene files");
    gen->add_option("--kind", gen_kind, "corridor, rooms or blobs")
        ->check(CLI::IsMember({"corridor", "rooms", "blobs"}));
    gen->add_option("--count", gen_count, "number of scenes")->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--out", gen_out, "output directory");
    gen->add_option("--prefix", gen_prefix, "file name prefix");

    std::string inspect_map;
    std::string inspect_vocab;
    auto* inspect = app.add_subcommand("inspect-memory", "build and print the memory tree of a map snapshot");
    inspect->add_option("map", inspect_map, "map snapshot (.map)")->required();
    inspect->add_option("--vocab", inspect_vocab, "functional label vocabulary JSON");

    std::string report_logs;
    std::string report_out;
    auto* report = app.add_subcommand("report", "recompute a metrics report from episode logs");
    report->add_option("logs", report_logs, "directory of .jsonl episode logs")->required();
    report->add_option("--out", report_out, "also write the report here");

    int fake_port = 8765;
    std::string fake_reply;
    int fake_delay = 0;
    auto* fake = app.add_subcommand("serve-fake", "serve canned decisions over HTTP");
    fake->add_option("--port", fake_port, "port on 127.0.0.1");
    fake->add_option("--reply", fake_reply, "fixed reply body (default: lowest candidate code)");
    fake->add_option("--delay-ms", fake_delay, "delay before replying");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            RunConfig cfg = make_config(run_flags, {run_scene_path});
            EpisodeResult r = run_scene(cfg, 0);
            std::printf("%s success=%d actions=%lld steps=%lld path=%.3f l=%.3f aori=%.4f escapes=%lld%s%s\n",
                        r.scene_name.c_str(), r.outcome.success ? 1 : 0, static_cast<long long>(r.actions),
                        static_cast<long long>(r.budget.total), r.outcome.agent_path, r.outcome.shortest_path,
                        r.outcome.aori, static_cast<long long>(r.escapes), r.error.empty() ? "" : " error=",
                        r.error.c_str());
            return 0;
        }
        if (*batch) {
            RunConfig cfg = make_config(batch_flags, expand_scenes(batch_inputs));
            if (cfg.scenes.empty()) {
                throw EmptyInput("no scene files found");
            }
            return finish_batch(cfg, run_batch(cfg), batch_report);
        }
        if (*gen) {
            fs::create_directories(gen_out);
            auto scenes = generate_scenes(parse_scene_kind(gen_kind), gen_count, gen_seed);
            for (const auto& s : scenes) {
                fs::path p = fs::path(gen_out) / (gen_prefix + s.name + ".scene");
                save_scene(s, p);
                std::printf("%s l=%.3f\n", p.string().c_str(), s.shortest_path);
            }
            return 0;
        }
        if (*inspect) {
            std::ifstream in(inspect_map);
            if (!in) {
                throw InvalidInput("cannot open " + inspect_map);
            }
            TopoMap map = TopoMap::read_snapshot(in);
            LabelVocabulary vocab = inspect_vocab.empty() ? LabelVocabulary::defaults() : LabelVocabulary::load(inspect_vocab);
            std::cout << build_hierarchy(map, HierarchyConfig{}, vocab).dump();
            return 0;
        }
        if (*report) {
            auto results = results_from_logs(report_logs);
            write_report(results, std::cout);
            if (!report_out.empty()) {
                std::ofstream out(report_out);
                write_report(results, out);
            }
            return 0;
        }
        if (*fake) {
            FakeDecisionServer server({fake_reply, fake_delay, "/decide"});
            std::printf("serving on http://127.0.0.1:%d/decide\n", fake_port);
            std::fflush(stdout);
            server.listen("127.0.0.1", fake_port);
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
