#include "doraemon/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace doraemon {

using nlohmann::json;

namespace {

// Field lists shared by the JSON writer and the strict reader.
template <class F> void fields(MapConfig& c, F&& f) {
    f("s_update", c.s_update);
    f("delta_sample", c.delta_sample);
    f("delta_connect", c.delta_connect);
}
template <class F> void fields(HierarchyConfig& c, F&& f) {
    f("spatial_weight", c.spatial_weight);
    f("semantic_weight", c.semantic_weight);
    f("theta1", c.theta1);
    f("theta2", c.theta2);
    f("rebuild_every", c.rebuild_every);
}
template <class F> void fields(RetrievalConfig& c, F&& f) {
    f("alpha_sem", c.alpha_sem);
    f("alpha_spa", c.alpha_spa);
    f("alpha_key", c.alpha_key);
    f("alpha_time", c.alpha_time);
    f("beam_width", c.beam_width);
    f("score_floor", c.score_floor);
    f("top_k", c.top_k);
    f("spatial_scale", c.spatial_scale);
    f("time_scale", c.time_scale);
}
template <class F> void fields(ProposerConfig& c, F&& f) {
    f("theta_max", c.theta_max);
    f("delta_theta", c.delta_theta);
    f("r_max", c.r_max);
    f("r_min", c.r_min);
    f("eta_safe", c.eta_safe);
    f("tau_prop", c.tau_prop);
    f("theta_delta", c.theta_delta);
    f("rotation_cooldown", c.rotation_cooldown);
    f("visit_cell_size", c.visit_cell_size);
    f("history_window", c.history_window);
}
template <class F> void fields(StuckConfig& c, F&& f) {
    f("window", c.window);
    f("tau_eta", c.tau_eta);
    f("tau_rho", c.tau_rho);
    f("short_path_len", c.short_path_len);
    f("area_gain_floor", c.area_gain_floor);
    f("w_eta", c.w_eta);
    f("w_rho", c.w_rho);
    f("s_threshold", c.s_threshold);
    f("k_consecutive", c.k_consecutive);
    f("footprint_resolution", c.footprint_resolution);
    f("agent_radius", c.agent_radius);
}
template <class F> void fields(EscapeConfig& c, F&& f) {
    f("free_threshold", c.free_threshold);
    f("corner_free_fraction", c.corner_free_fraction);
    f("narrow_max_arc", c.narrow_max_arc);
    f("antipodal_tolerance", c.antipodal_tolerance);
    f("success_displacement", c.success_displacement);
    f("backoff", c.backoff);
    f("turn_min", c.turn_min);
    f("turn_max", c.turn_max);
}
template <class F> void fields(PrecisionConfig& c, F&& f) {
    f("gamma_step", c.gamma_step);
    f("likelihood_threshold", c.likelihood_threshold);
    f("activation_range", c.activation_range);
}
template <class F> void fields(AoriConfig& c, F&& f) {
    f("map_size", c.map_size);
    f("voxel_ray_size", c.voxel_ray_size);
    f("explore_threshold", c.explore_threshold);
    f("e_i_scaling", c.e_i_scaling);
    f("w_c", c.w_c);
    f("w_d", c.w_d);
    f("grid_resolution", c.grid_resolution);
    f("overlap_rule", c.overlap_rule);
}
template <class F> void fields(SimConfig& c, F&& f) {
    f("agent_radius", c.agent_radius);
    f("fov", c.fov);
    f("success_distance", c.success_distance);
    f("r_max", c.r_max);
    f("sensing_range", c.sensing_range);
    f("profile_rays", c.profile_rays);
    f("visibility_bins", c.visibility_bins);
    f("near_range", c.near_range);
    f("mid_range", c.mid_range);
    f("side_angle", c.side_angle);
}
template <class F> void fields(EmbedderConfig& c, F&& f) {
    f("dim", c.dim);
    f("seed", c.seed);
}
template <class F> void fields(Endpoint& c, F&& f) {
    f("url", c.url);
    f("timeout_s", c.timeout_s);
    f("retries", c.retries);
}

json value_to_json(const OverlapRule& r) { return r == OverlapRule::Pairwise ? "pairwise" : "revisited_cells"; }
template <class T> json value_to_json(const T& v) { return v; }

void value_from_json(const json& j, OverlapRule& r, const std::string& key) {
    std::string s = j.get<std::string>();
    if (s == "pairwise") {
        r = OverlapRule::Pairwise;
    } else if (s == "revisited_cells") {
        r = OverlapRule::RevisitedCells;
    } else {
        throw InvalidInput("unknown value '" + s + "' for '" + key + "'");
    }
}
template <class T> void value_from_json(const json& j, T& v, const std::string& key) {
    try {
        v = j.get<T>();
    } catch (const json::exception&) {
        throw InvalidInput("bad value for '" + key + "'");
    }
}

template <class C> json section_to_json(const C& cfg) {
    json j = json::object();
    C copy = cfg;
    fields(copy, [&](const char* name, auto& v) { j[name] = value_to_json(v); });
    return j;
}

template <class C> void section_from_json(const json& j, C& cfg, const std::string& prefix) {
    if (!j.is_object()) {
        throw InvalidInput("'" + prefix + "' must be an object");
    }
    std::set<std::string> known;
    fields(cfg, [&](const char* name, auto& v) {
        known.insert(name);
        if (j.contains(name)) {
            value_from_json(j.at(name), v, prefix + "." + name);
        }
    });
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) {
            throw InvalidInput("unknown config key '" + prefix + "." + key + "'");
        }
    }
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

}  // namespace

const char* decider_name(DeciderKind kind) {
    switch (kind) {
        case DeciderKind::Scripted: return "scripted";
        case DeciderKind::Random: return "random";
        case DeciderKind::External: return "external";
    }
    return "?";
}

DeciderKind parse_decider(std::string_view name) {
    if (name == "scripted") return DeciderKind::Scripted;
    if (name == "random") return DeciderKind::Random;
    if (name == "external") return DeciderKind::External;
    throw InvalidInput("unknown decider '" + std::string(name) + "'");
}

SimConfig RunConfig::effective_sim() const {
    SimConfig s = sim;
    s.max_actions = max_actions;
    s.aori = aori;
    return s;
}

void RunConfig::validate(bool check_paths) const {
    if (max_actions <= 0 || workers == 0 || escape_samples < 8) {
        throw InvalidInput("max_actions, workers and escape_samples must be positive (escape_samples >= 8)");
    }
    map.validate();
    hierarchy.validate();
    retrieval.validate();
    proposer.validate();
    stuck.validate();
    effective_sim().validate();
    if (embedder.dim == 0) {
        throw InvalidInput("embedding dimension must be positive");
    }
    if (decider == DeciderKind::External && endpoint.url.empty()) {
        throw InvalidInput("external decider needs endpoint.url");
    }
    if (check_paths) {
        for (const auto& p : scenes) {
            if (!std::filesystem::exists(p)) {
                throw InvalidInput("scene file does not exist: " + p.string());
            }
        }
    }
}

json to_json(const RunConfig& cfg) {
    json j;
    j["version"] = 1;
    j["scenes"] = json::array();
    for (const auto& p : cfg.scenes) {
        j["scenes"].push_back(p.string());
    }
    j["seed"] = cfg.seed;
    j["max_actions"] = cfg.max_actions;
    j["workers"] = cfg.workers;
    j["output_dir"] = cfg.output_dir.string();
    j["write_logs"] = cfg.write_logs;
    j["decider"] = decider_name(cfg.decider);
    j["endpoint"] = section_to_json(cfg.endpoint);
    j["escape_samples"] = cfg.escape_samples;
    j["map"] = section_to_json(cfg.map);
    j["hierarchy"] = section_to_json(cfg.hierarchy);
    j["retrieval"] = section_to_json(cfg.retrieval);
    j["proposer"] = section_to_json(cfg.proposer);
    j["stuck"] = section_to_json(cfg.stuck);
    j["escape"] = section_to_json(cfg.escape);
    j["precision"] = section_to_json(cfg.precision);
    j["aori"] = section_to_json(cfg.aori);
    j["sim"] = section_to_json(cfg.sim);
    j["embedder"] = section_to_json(cfg.embedder);
    return j;
}

RunConfig run_config_from_json(const json& j) {
    if (!j.is_object()) {
        throw InvalidInput("run config must be a JSON object");
    }
    if (j.contains("version") && j.at("version") != 1) {
        throw VersionError("unsupported run config version " + j.at("version").dump());
    }
    RunConfig cfg;
    for (const auto& [key, v] : j.items()) {
        if (key == "version") {
        } else if (key == "scenes") {
            cfg.scenes.clear();
            for (const auto& s : v) {
                cfg.scenes.emplace_back(s.get<std::string>());
            }
        } else if (key == "seed") {
            value_from_json(v, cfg.seed, key);
        } else if (key == "max_actions") {
            value_from_json(v, cfg.max_actions, key);
        } else if (key == "workers") {
            value_from_json(v, cfg.workers, key);
        } else if (key == "output_dir") {
            cfg.output_dir = v.get<std::string>();
        } else if (key == "write_logs") {
            value_from_json(v, cfg.write_logs, key);
        } else if (key == "decider") {
            cfg.decider = parse_decider(v.get<std::string>());
        } else if (key == "escape_samples") {
            value_from_json(v, cfg.escape_samples, key);
        } else if (key == "endpoint") {
            section_from_json(v, cfg.endpoint, key);
        } else if (key == "map") {
            section_from_json(v, cfg.map, key);
        } else if (key == "hierarchy") {
            section_from_json(v, cfg.hierarchy, key);
        } else if (key == "retrieval") {
            section_from_json(v, cfg.retrieval, key);
        } else if (key == "proposer") {
            section_from_json(v, cfg.proposer, key);
        } else if (key == "stuck") {
            section_from_json(v, cfg.stuck, key);
        } else if (key == "escape") {
            section_from_json(v, cfg.escape, key);
        } else if (key == "precision") {
            section_from_json(v, cfg.precision, key);
        } else if (key == "aori") {
            section_from_json(v, cfg.aori, key);
        } else if (key == "sim") {
            section_from_json(v, cfg.sim, key);
        } else if (key == "embedder") {
            section_from_json(v, cfg.embedder, key);
        } else {
            throw InvalidInput("unknown config key '" + key + "'");
        }
    }
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidInput("cannot open config " + path.string());
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config is not valid JSON: ") + e.what());
    }
    return run_config_from_json(j);
}

void save_run_config(const RunConfig& cfg, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw InvalidInput("cannot write config " + path.string());
    }
    out << to_json(cfg).dump(2) << "\n";
}

std::uint64_t episode_seed(std::uint64_t base, std::size_t index) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

json pose_json(const Pose& p) { return json::array({p.position.x, p.position.y, p.yaw()}); }

bool is_rotation(const PolarAction& a) { return !a.is_stop() && (a.r == 0.0 || std::abs(a.theta) >= kPi - 1e-9); }

}  // namespace

EpisodeResult run_episode(const Scene& scene, const RunConfig& cfg, std::uint64_t seed, std::ostream* log,
                          TopoMap* map_out) {
    cfg.validate(false);
    EpisodeResult result;
    result.scene_name = scene.name;
    result.executed = true;

    Simulator sim(scene, cfg.effective_sim());
    const EmbeddingProvider embed = hashed_embedder(cfg.embedder);
    const TaskSpec task = make_task(scene.target_label, embed);
    const AttributeDatabase db = build_attribute_database(task, stub_attribute_provider());

    TopoMap map;
    std::optional<MemoryHierarchy> hierarchy;
    std::int64_t insertions_since_rebuild = 0;
    ExplorationMemory exploration(cfg.proposer.visit_cell_size, cfg.proposer.history_window);
    ViewCoverage coverage(0.3, cfg.sim.fov);
    auto observe_coverage = [&](const Observation& o) {
        std::vector<Vec2> pts;
        pts.reserve(o.visible_cells.size());
        for (const auto& c : o.visible_cells) {
            pts.push_back(cell_center(c, cfg.aori));
        }
        coverage.observe(o.pose, pts);
    };
    StuckDetector detector(cfg.stuck);
    EscapePlanner planner(seed ^ 0x65736361706521ULL, cfg.escape);
    RandomDecider random(seed);
    AoriAccumulator aori(cfg.aori);
    std::vector<PolarAction> executed;
    std::int64_t steps_since_rotation = 0;
    std::int64_t next_node_id = 0;
    std::map<std::string, Embedding> label_cache;

    auto likelihood_of = [&](const Observation& obs) {
        double best = 0.5 * (1.0 + cosine(task.embedding, embed(obs.description)));
        for (const auto& o : obs.objects) {
            auto it = label_cache.find(o.label);
            if (it == label_cache.end()) {
                it = label_cache.emplace(o.label, embed(o.label)).first;
            }
            best = std::max(best, 0.5 * (1.0 + cosine(task.embedding, it->second)));
        }
        return std::clamp(best, 0.0, 1.0);
    };
    const NavigabilityFn free_range = [&sim](double bearing) { return sim.free_range(bearing); };

    Observation obs = sim.last_observation();
    aori.observe_step(obs.visible_cells);
    exploration.record(obs.pose.position);
    observe_coverage(obs);
    coverage.traverse(obs.pose.position, obs.pose.position);

    try {
        while (!sim.state().terminated) {
            const std::int64_t t = sim.state().steps_taken;
            const Pose pose = sim.state().pose;
            json rec;
            rec["type"] = "step";
            rec["t"] = t;
            rec["pose"] = pose_json(pose);

            const double likelihood = likelihood_of(obs);
            rec["likelihood"] = likelihood;
            TopoNode node{next_node_id, pose, obs.description, likelihood, embed(obs.description), t};
            if (map.maybe_add_node(std::move(node), cfg.map)) {
                ++next_node_id;
                ++insertions_since_rebuild;
                if (!hierarchy || insertions_since_rebuild >= cfg.hierarchy.rebuild_every) {
                    hierarchy = build_hierarchy(map, cfg.hierarchy);
                    insertions_since_rebuild = 0;
                }
            }

            std::vector<MemoryLine> memory;
            if (hierarchy) {
                auto retrieval = retrieve(*hierarchy, task, pose.position, t, cfg.retrieval);
                memory = memory_lines(retrieval, *hierarchy, task, &map, sim.config());
            }
            rec["retrieval"] = json::array();
            for (const auto& m : memory) {
                rec["retrieval"].push_back(m.id);
            }

            auto stuck = detector.observe(pose);
            if (stuck) {
                rec["stuck"] = {{"eta", stuck->metrics.eta},
                                {"rho", std::isinf(stuck->metrics.rho) ? -1.0 : stuck->metrics.rho},
                                {"path", stuck->metrics.path_length},
                                {"area_gain", stuck->area_gain},
                                {"score", stuck->score.score},
                                {"stuck_now", stuck->score.stuck_now},
                                {"confirmed", stuck->confirmed}};
            }

            PolarAction action;
            std::string source;
            if (sim.state().stop_trigger_streak >= 2) {
                action = PolarAction::stop();
                source = "auto_stop";
            } else if (sim.state().stop_trigger_streak == 1) {
                // Hold position and face the target so the next observation
                // can confirm the trigger.
                double bearing = 0.0;
                for (const auto& o : obs.objects) {
                    if (o.label == scene.target_label) {
                        bearing = o.bearing;
                        break;
                    }
                }
                action = PolarAction::rotate(bearing);
                source = "confirm";
            } else if (planner.has_pending()) {
                action = *planner.take_pending();
                source = "escape";
            } else if (stuck && stuck->confirmed) {
                auto samples = sim.heading_samples(cfg.escape_samples);
                std::vector<Pose> window(detector.window().begin(), detector.window().end());
                auto ctx = classify_context(samples, window, cfg.escape);
                action = planner.begin(ctx, pose.yaw(), free_range, cfg.proposer.r_min);
                detector.reset();
                ++result.escapes;
                source = "escape";
                rec["escape"] = escape_kind_name(ctx.kind);
            } else {
                auto initial = generate_initial(free_range, cfg.proposer);
                auto filtered = filter_candidates(initial, pose, exploration, cfg.proposer);
                bool turn_active = steps_since_rotation > cfg.proposer.rotation_cooldown;
                auto candidates = apply_safety_recovery(filtered, initial, steps_since_rotation, turn_active,
                                                        cfg.proposer);
                std::optional<double> target_range;
                for (const auto& o : obs.objects) {
                    if (o.label == scene.target_label) {
                        target_range = o.range;
                        break;
                    }
                }
                bool precise = precision_mode_active(likelihood, target_range, cfg.precision);
                if (precise) {
                    candidates = precision_scale(candidates, cfg.precision.gamma_step);
                }
                rec["precision"] = precise;
                rec["candidates"] = json::array();
                for (const auto& c : candidates.entries) {
                    rec["candidates"].push_back({c.code, c.action.r, rad_to_deg(c.action.theta)});
                }

                DecisionContext ctx{&candidates, pose, &obs, scene.target_label, memory, &exploration, &coverage};
                int code = 0;
                if (cfg.decider == DeciderKind::Random) {
                    code = random.decide(candidates);
                    source = "random";
                } else {
                    std::optional<int> external;
                    if (cfg.decider == DeciderKind::External) {
                        auto bundle = assemble_prompt(task, db, candidates, memory, turn_active);
                        auto reply = external_decide(make_wire_request(task, bundle, candidates, memory),
                                                     candidates.codes(), cfg.endpoint);
                        if (reply.response) {
                            external = reply.response->chosen_code;
                        } else {
                            ++result.fallbacks;
                            rec["fallback"] = reply.failure;
                        }
                    }
                    if (external) {
                        code = *external;
                        source = "external";
                    } else {
                        auto d = scripted_decide(ctx);
                        code = d.code;
                        source = "scripted";
                        rec["rule"] = decision_rule_name(d.rule);
                    }
                }
                rec["chosen"] = code;
                action = candidates.action(code);
            }
            rec["source"] = source;
            rec["action"] = action.to_string();

            Vec3 before = obs.pose.position;
            obs = sim.step(action);
            executed.push_back(action);
            if (!action.is_stop()) {
                aori.observe_step(obs.visible_cells);
                exploration.record_path(before, obs.pose.position);
                coverage.traverse(before, obs.pose.position);
                observe_coverage(obs);
                steps_since_rotation = is_rotation(action) ? 0 : steps_since_rotation + 1;
            }
            rec["trigger_streak"] = sim.state().stop_trigger_streak;
            if (log) {
                *log << rec.dump() << "\n";
            }
        }
    } catch (const std::exception& e) {
        result.error = e.what();
    }

    const auto& st = sim.state();
    result.outcome.success = st.success && result.error.empty();
    result.outcome.shortest_path = scene.shortest_path;
    result.outcome.agent_path = st.path_length;
    result.outcome.step_count = st.steps_taken;
    result.outcome.aori = aori.aori();
    result.actions = st.steps_taken;
    result.budget = episode_step_budget(executed);
    result.map_nodes = map.size();
    if (log) {
        json out{{"type", "outcome"},
                 {"scene", scene.name},
                 {"success", result.outcome.success},
                 {"shortest_path", result.outcome.shortest_path},
                 {"agent_path", result.outcome.agent_path},
                 {"actions", result.actions},
                 {"discrete_steps", result.budget.total},
                 {"budget_exceeded", result.budget.exceeded()},
                 {"aori", result.outcome.aori},
                 {"r_overlap", aori.r_overlap()},
                 {"d_norm", aori.d_norm()},
                 {"escapes", result.escapes},
                 {"fallbacks", result.fallbacks},
                 {"map_nodes", result.map_nodes},
                 {"error", result.error}};
        *log << out.dump() << "\n";
    }
    if (map_out) {
        *map_out = std::move(map);
    }
    return result;
}

EpisodeResult run_scene(const RunConfig& cfg, std::size_t index) {
    const auto& path = cfg.scenes.at(index);
    Scene scene = load_scene(path);
    std::uint64_t seed = episode_seed(cfg.seed, index);
    EpisodeResult r;
    if (cfg.write_logs) {
        std::filesystem::create_directories(cfg.output_dir);
        char prefix[16];
        std::snprintf(prefix, sizeof prefix, "%03zu_", index);
        auto stem = cfg.output_dir / (prefix + path.stem().string());
        std::ofstream log(stem.string() + ".jsonl");
        if (!log) {
            throw InvalidInput("cannot write episode log under " + cfg.output_dir.string());
        }
        TopoMap map;
        r = run_episode(scene, cfg, seed, &log, &map);
        std::ofstream snap(stem.string() + ".map");
        map.write_snapshot(snap);
    } else {
        r = run_episode(scene, cfg, seed);
    }
    r.scene_path = path.string();
    return r;
}

std::vector<EpisodeResult> run_batch(const RunConfig& cfg) {
    if (cfg.scenes.empty()) {
        throw EmptyInput("batch needs at least one scene");
    }
    cfg.validate(false);
    std::vector<EpisodeResult> results(cfg.scenes.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cfg.scenes.size(); i = next++) {
            try {
                results[i] = run_scene(cfg, i);
            } catch (const std::exception& e) {
                results[i].scene_path = cfg.scenes[i].string();
                results[i].scene_name = cfg.scenes[i].stem().string();
                results[i].executed = false;
                results[i].error = e.what();
            }
        }
    };
    std::size_t n = std::min(cfg.workers, cfg.scenes.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < n; ++w) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& th : pool) {
        th.join();
    }
    return results;
}

BatchSummary summarize(const std::vector<EpisodeResult>& results) {
    BatchSummary s;
    std::vector<EpisodeOutcome> outcomes;
    double aori_sum = 0.0;
    double steps_sum = 0.0;
    for (const auto& r : results) {
        if (!r.executed) {
            ++s.failed_to_run;
            continue;
        }
        outcomes.push_back(r.outcome);
        aori_sum += r.outcome.aori;
        steps_sum += static_cast<double>(r.budget.total);
    }
    s.episodes = outcomes.size();
    s.success_rate = success_rate(outcomes);
    s.spl = spl(outcomes);
    s.mean_aori = aori_sum / static_cast<double>(s.episodes);
    s.mean_steps = steps_sum / static_cast<double>(s.episodes);
    return s;
}

void write_report(const std::vector<EpisodeResult>& results, std::ostream& out) {
    out << "# doraemon-report v1\n";
    try {
        auto s = summarize(results);
        out << "episodes\t" << s.episodes << "\n";
        out << "failed_to_run\t" << s.failed_to_run << "\n";
        out << "SR\t" << fmt("%.6f", s.success_rate) << "\n";
        out << "SPL\t" << fmt("%.6f", s.spl) << "\n";
        out << "mean_AORI\t" << fmt("%.6f", s.mean_aori) << "\n";
        out << "mean_discrete_steps\t" << fmt("%.3f", s.mean_steps) << "\n";
    } catch (const EmptyInput&) {
        out << "episodes\t0\n";
        out << "failed_to_run\t" << results.size() << "\n";
    }
    out << "note\tAORI = 1 - (w_c (1 - r_overlap)^2 + w_d (1 - d_norm)); r_overlap = 38/499 with d_norm = 1 "
           "evaluates to 0.3172, not the 0.285 sometimes quoted for that case\n";
    out << "scene\tsuccess\tl\tp\tspl\tactions\tdiscrete_steps\tbudget_exceeded\taori\tescapes\tfallbacks\terror\n";
    for (const auto& r : results) {
        double e_spl = 0.0;
        if (r.executed && r.outcome.success && r.outcome.shortest_path > 0) {
            e_spl = r.outcome.shortest_path / std::max(r.outcome.agent_path, r.outcome.shortest_path);
        }
        out << r.scene_name << "\t" << (r.executed ? (r.outcome.success ? "1" : "0") : "-") << "\t"
            << fmt("%.4f", r.outcome.shortest_path) << "\t" << fmt("%.4f", r.outcome.agent_path) << "\t"
            << fmt("%.4f", e_spl) << "\t" << r.actions << "\t" << r.budget.total << "\t"
            << (r.budget.exceeded() ? "1" : "0") << "\t" << fmt("%.6f", r.outcome.aori) << "\t" << r.escapes << "\t"
            << r.fallbacks << "\t" << (r.error.empty() ? "-" : r.error) << "\n";
    }
}

std::vector<EpisodeResult> results_from_logs(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw InvalidInput("not a directory: " + dir.string());
    }
    std::vector<std::filesystem::path> logs;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() == ".jsonl") {
            logs.push_back(entry.path());
        }
    }
    std::sort(logs.begin(), logs.end());
    std::vector<EpisodeResult> out;
    for (const auto& path : logs) {
        std::ifstream in(path);
        std::string line;
        std::optional<json> outcome;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) {
                continue;
            }
            auto j = json::parse(line, nullptr, false);
            if (j.is_discarded()) {
                throw ParseError("malformed log record in " + path.string(), lineno);
            }
            if (j.value("type", "") == "outcome") {
                outcome = j;
            }
        }
        if (!outcome) {
            throw ParseError("log has no outcome record: " + path.string(), lineno + 1);
        }
        const json& o = *outcome;
        EpisodeResult r;
        r.executed = true;
        r.scene_path = path.string();
        r.scene_name = o.at("scene").get<std::string>();
        r.outcome.success = o.at("success").get<bool>();
        r.outcome.shortest_path = o.at("shortest_path").get<double>();
        r.outcome.agent_path = o.at("agent_path").get<double>();
        r.outcome.aori = o.at("aori").get<double>();
        r.actions = o.at("actions").get<std::int64_t>();
        r.outcome.step_count = r.actions;
        r.budget.total = o.at("discrete_steps").get<std::int64_t>();
        r.escapes = o.at("escapes").get<std::int64_t>();
        r.fallbacks = o.at("fallbacks").get<std::int64_t>();
        r.map_nodes = o.at("map_nodes").get<std::size_t>();
        r.error = o.at("error").get<std::string>();
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace doraemon
