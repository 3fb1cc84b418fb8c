// Acceptance checks. One PASS/FAIL line per criterion, clause details
// indented below it. Tolerances are fixed here, not read from anywhere.
//
//   acceptance                      all criteria
//   acceptance --only 8             one criterion
//   acceptance --only 8 --skip aori_vs_random
//   acceptance --only 8 --clause aori_vs_random

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <utility>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>

#include "common/random_hierarchy.hpp"
#include "doraemon/memory_hierarchy.hpp"
#include "doraemon/memory_retrieval.hpp"
#include "doraemon/metrics.hpp"
#include "doraemon/nav_ensurance.hpp"
#include "doraemon/policy_engine.hpp"
#include "doraemon/runner.hpp"
#include "doraemon/scene_gen.hpp"
#include "doraemon/sim_env.hpp"
#include "doraemon/topo_map.hpp"

using namespace doraemon;
namespace fs = std::filesystem;

namespace {

struct Clause {
    std::string name;
    bool ok = false;
    std::string detail;
};

class Report {
public:
    Report(std::string only_clause, std::string skip_clause)
        : only_(std::move(only_clause)), skip_(std::move(skip_clause)) {}

    bool wanted(const std::string& name) const {
        if (!only_.empty() && name != only_) {
            return false;
        }
        return skip_.empty() || name != skip_;
    }
    void add(const std::string& name, bool ok, const std::string& detail) {
        if (wanted(name)) {
            clauses_.push_back({name, ok, detail});
        }
    }
    std::vector<Clause> take() { return std::exchange(clauses_, {}); }

private:
    std::string only_;
    std::string skip_;
    std::vector<Clause> clauses_;
};

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string fmt(const char* f, double a, double b) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---- 1

void criterion_1(Report& rep) {
    auto t0 = Clock::now();

    Scene scene = generate_scene(SceneKind::Rooms, 5);
    SimConfig sc;
    sc.max_actions = 1000;
    Simulator sim(scene, sc);
    AoriAccumulator acc;
    acc.observe_step(sim.reset().visible_cells);
    for (int t = 1; t < 100; ++t) {
        acc.observe_step(sim.step(PolarAction::rotate(0.0)).visible_cells);
    }
    double still = acc.aori();
    rep.add("stay_still", std::abs(still - 1.0) <= 1e-9,
            fmt("100 steps without moving: AORI %.12f, want 1 +- 1e-9", still));

    double best = aori_value(0.0, 0.0);
    rep.add("optimal_boundary", std::abs(best) <= 1e-9, fmt("r_overlap 0, d_norm 0: %.12f, want 0 +- 1e-9", best));

    // 1 - [w_c (1 - r)^2 + w_d (1 - d)], written out here.
    double r = 38.0 / 499.0;
    double by_formula = 1.0 - (0.8 * (1.0 - r) * (1.0 - r) + 0.2 * (1.0 - 1.0));
    double got = aori_value(r, 1.0);
    rep.add("case2", std::abs(got - 0.3172) <= 1e-3 && std::abs(got - by_formula) <= 1e-12,
            fmt("r_overlap 38/499, d_norm 1: %.6f, want 0.3172 +- 1e-3 (the printed worked value 0.285 does "
                "not follow from these inputs; formula gives %.6f)",
                got, by_formula));

    double secs = seconds_since(t0);
    rep.add("runtime", secs < 1.0, fmt("%.3f s, want < 1 s", secs));
}

// ---- 2

std::int64_t oracle_steps(double r, double deg) {
    std::int64_t n = static_cast<std::int64_t>(std::ceil(r / 0.25)) + static_cast<std::int64_t>(std::ceil(deg / 30.0));
    return std::max<std::int64_t>(n, 1);
}

void criterion_2(Report& rep) {
    auto t0 = Clock::now();
    auto stop_n = discrete_steps(PolarAction::stop());
    auto half = discrete_steps(PolarAction::move(0.5, 0.0));
    auto quarter_turn = discrete_steps(PolarAction::move(1.0, deg_to_rad(90.0)));
    rep.add("fixtures", stop_n == 1 && half == 2 && quarter_turn == 7,
            "stop -> " + std::to_string(stop_n) + ", (0.5 m, 0 deg) -> " + std::to_string(half) +
                ", (1.0 m, 90 deg) -> " + std::to_string(quarter_turn) + "; want 1, 2, 7");

    // Actions are drawn on a 1 mm / 0.01 deg lattice so the ceilings below
    // are not at the mercy of radian round trips.
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> mm(0, 1700);
    std::uniform_int_distribution<int> centideg(-18000, 18000);
    int bad = 0;
    int zero_both = 0;
    for (int i = 0; i < 10000; ++i) {
        double r = (rng() % 20 == 0) ? 0.0 : mm(rng) / 1000.0;
        double deg = (rng() % 20 == 0) ? 0.0 : centideg(rng) / 100.0;
        auto n = discrete_steps(PolarAction::move(r, deg_to_rad(deg)));
        bool both_zero = std::ceil(r / 0.25) == 0 && std::ceil(std::abs(deg) / 30.0) == 0;
        zero_both += both_zero ? 1 : 0;
        if (n < 1 || n != oracle_steps(r, std::abs(deg))) {
            ++bad;
        }
    }
    rep.add("random_10000", bad == 0,
            std::to_string(bad) + " mismatches against ceil(r/0.25) + ceil(deg/30) (floor 1); " +
                std::to_string(zero_both) + " draws hit the both-zero case");

    auto longest = discrete_steps(PolarAction::move(1.7, kPi));
    rep.add("long_half_turn", longest == 13,
            "(1.7 m, 180 deg) -> " + std::to_string(longest) +
                "; outside the 7-8 band, as expected for a full half turn");

    // Typical mid-range action: 1.0-1.2 m with a turn beyond 60 deg and up to 90 deg.
    std::int64_t lo = 1 << 30, hi = 0;
    for (int cm = 100; cm <= 120; ++cm) {
        for (int d = 61; d <= 90; ++d) {
            for (int sign : {-1, 1}) {
                auto n = discrete_steps(PolarAction::move(cm / 100.0, sign * deg_to_rad(d)));
                lo = std::min(lo, n);
                hi = std::max(hi, n);
            }
        }
    }
    auto a = discrete_steps(PolarAction::move(1.0, deg_to_rad(90.0)));
    auto b = discrete_steps(PolarAction::move(1.2, deg_to_rad(90.0)));
    rep.add("mid_range_band", lo >= 7 && hi <= 8 && a == 7 && b == 8,
            "r in [1.0, 1.2] m, 60 < |theta| <= 90 deg: N in [" + std::to_string(lo) + ", " + std::to_string(hi) +
                "], (1.0, 90) -> " + std::to_string(a) + ", (1.2, 90) -> " + std::to_string(b) + "; want 7-8");

    double secs = seconds_since(t0);
    rep.add("runtime", secs < 1.0, fmt("%.3f s, want < 1 s", secs));
}

// ---- 3

void criterion_3(Report& rep) {
    auto t0 = Clock::now();
    RetrievalConfig base;
    const std::size_t k = base.top_k;
    bool exact = true;
    bool bounded = true;
    int separated = 0;
    double overlap_sum = 0.0;
    std::size_t max_nodes = 0;
    std::string first_diff;

    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        auto h = testutil::random_hierarchy(rng, 200);
        max_nodes = std::max(max_nodes, h.nodes().size());
        auto task = make_task(testutil::vocabulary()[rng() % testutil::vocabulary().size()]);
        Vec3 agent{20.0 * (rng() % 1000) / 1000.0, 20.0 * (rng() % 1000) / 1000.0, 0.0};
        const std::int64_t now = 1200;

        auto all = testutil::exhaustive_leaves(h, task, agent, now, base.score_floor);
        auto oracle = all;
        oracle.resize(std::min(oracle.size(), k));

        RetrievalConfig wide = base;
        wide.beam_width = testutil::max_level_width(h);
        auto got = retrieve(h, task, agent, now, wide);
        bool same = got.entries.size() == oracle.size();
        for (std::size_t i = 0; same && i < oracle.size(); ++i) {
            same = got.entries[i].id == oracle[i].id && std::abs(got.entries[i].score - oracle[i].score) <= 1e-12;
        }
        if (!same && first_diff.empty()) {
            first_diff = " (first mismatch at trial " + std::to_string(trial) + ")";
        }
        exact = exact && same;

        auto narrow = retrieve(h, task, agent, now, base);
        for (std::size_t i = 0; i < narrow.entries.size(); ++i) {
            if (i >= oracle.size() || narrow.entries[i].score > oracle[i].score + 1e-12) {
                bounded = false;
            }
        }

        // Well separated: the k-th and (k + 1)-th best leaf scores are at
        // least 0.05 apart, so the top-k set is unambiguous.
        if (oracle.size() == k) {
            auto scores = testutil::exhaustive_leaves(h, task, agent, now, -1.0);
            bool sep = scores.size() == k || scores[k - 1].score - scores[k].score >= 0.05;
            if (sep) {
                ++separated;
                std::set<std::string> want;
                for (const auto& o : oracle) {
                    want.insert(o.id);
                }
                std::size_t hit = 0;
                for (const auto& e : narrow.entries) {
                    hit += want.count(e.id);
                }
                overlap_sum += static_cast<double>(hit) / static_cast<double>(k);
            }
        }
    }

    rep.add("wide_beam_exact", exact,
            std::string("beam >= widest level equals the exhaustive top-") + std::to_string(k) +
                " on 100 hierarchies (largest " + std::to_string(max_nodes) + " nodes)" + first_diff);
    rep.add("beam5_scores_bounded", bounded, "beam 5: every returned score <= the oracle score at the same rank");
    double overlap = separated > 0 ? overlap_sum / separated : 0.0;
    rep.add("beam5_overlap", separated > 0 && overlap >= 0.8,
            fmt("beam 5 on %.0f well-separated hierarchies (gap >= 0.05): mean top-k overlap %.3f, want >= 0.8",
                static_cast<double>(separated), overlap));

    double sum = base.alpha_sem + base.alpha_spa + base.alpha_key + base.alpha_time;
    rep.add("weights_sum", sum == 1.0, fmt("alpha_sem + alpha_spa + alpha_key + alpha_time = %.17g, want exactly 1", sum));

    double secs = seconds_since(t0);
    rep.add("runtime", secs < 10.0, fmt("%.3f s, want < 10 s", secs));
}

// ---- 4

MemoryNode leaf_at(const Embedding& e, Vec3 p, std::set<std::string> keys, std::int64_t step) {
    MemoryNode n;
    n.id = "obs_0";
    n.level = Level::L3;
    n.summary_embedding = e;
    n.position = p;
    n.keywords = std::move(keys);
    n.latest_step = step;
    n.topo_node_id = 0;
    return n;
}

void criterion_4(Report& rep) {
    const auto ex = Embedding::normalized({1, 0, 0});
    const auto ey = Embedding::normalized({0, 1, 0});
    const auto exn = Embedding::normalized({-1, 0, 0});
    TaskSpec task;
    task.embedding = ex;
    task.keywords = {"sofa"};

    auto n = leaf_at(ex, {0, 0, 0}, {}, 0);
    double spa = spatial_score(n, {5, 0, 0});
    rep.add("spatial_5m", std::abs(spa - std::exp(-1.0)) <= 1e-9, fmt("spatial_score(5 m) = %.12f, want e^-1 +- 1e-9", spa));
    double tim = time_score(n, 600);
    rep.add("time_600", std::abs(tim - std::exp(-1.0)) <= 1e-9, fmt("time_score(600) = %.12f, want e^-1 +- 1e-9", tim));

    double s_anti = semantic_score(leaf_at(exn, {}, {}, 0), task);
    double s_orth = semantic_score(leaf_at(ey, {}, {}, 0), task);
    double s_same = semantic_score(leaf_at(ex, {}, {}, 0), task);
    rep.add("semantic", std::abs(s_anti) <= 1e-12 && std::abs(s_orth - 0.5) <= 1e-12 && std::abs(s_same - 1.0) <= 1e-12,
            fmt("antipodal %.12f, orthogonal %.12f", s_anti, s_orth) + fmt(", identical %.12f; want 0, 0.5, 1", s_same));

    // Orthogonal embedding, 5 m away, no keyword hit, 600 steps old.
    double oracle = 0.45 * 0.5 + 0.30 * std::exp(-1.0) + 0.20 * 0.0 + 0.05 * std::exp(-1.0);
    double mixed = node_score(leaf_at(ey, {5, 0, 0}, {}, 0), task, {0, 0, 0}, 600, RetrievalConfig{});
    rep.add("mixed_fixture", std::abs(mixed - 0.3538) <= 1e-4 && std::abs(mixed - oracle) <= 1e-12,
            fmt("node_score = %.6f, independent sum %.6f, want 0.3538 +- 1e-4", mixed, oracle));
}

// ---- 5

// Merge the closest pair of clusters while the link is within the cut.
std::vector<std::vector<std::size_t>> naive_single_linkage(const std::vector<std::vector<double>>& d, double cut) {
    std::vector<std::vector<std::size_t>> cl;
    for (std::size_t i = 0; i < d.size(); ++i) {
        cl.push_back({i});
    }
    while (cl.size() > 1) {
        double best = INFINITY;
        std::size_t ba = 0, bb = 0;
        for (std::size_t a = 0; a < cl.size(); ++a) {
            for (std::size_t b = a + 1; b < cl.size(); ++b) {
                for (auto i : cl[a]) {
                    for (auto j : cl[b]) {
                        if (d[i][j] < best) {
                            best = d[i][j];
                            ba = a;
                            bb = b;
                        }
                    }
                }
            }
        }
        if (best > cut) {
            break;
        }
        cl[ba].insert(cl[ba].end(), cl[bb].begin(), cl[bb].end());
        cl.erase(cl.begin() + static_cast<std::ptrdiff_t>(bb));
    }
    std::set<std::vector<std::size_t>> sorted;
    for (auto& c : cl) {
        std::sort(c.begin(), c.end());
        sorted.insert(c);
    }
    return {sorted.begin(), sorted.end()};
}

// Areas built by the library against the oracle on the same observations.
bool areas_match_oracle(const std::vector<TopoNode>& nodes) {
    TopoMap m;
    MapConfig always{1, 1e-9, 1.0};
    std::int64_t step = 0;
    for (auto n : nodes) {
        n.step_index = step++;
        m.maybe_add_node(n, always);
    }
    const std::size_t n = nodes.size();
    std::vector<std::vector<double>> d(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            d[i][j] = 0.4 * distance(nodes[i].pose.position, nodes[j].pose.position) +
                      0.6 * (1.0 - cosine(nodes[i].embedding, nodes[j].embedding));
        }
    }
    double cut = n > 20 ? 1.5 : (n < 10 ? 0.8 : 1.0);
    auto oracle = naive_single_linkage(d, cut);

    std::set<std::vector<std::string>> want;
    for (const auto& c : oracle) {
        std::vector<std::string> ids;
        for (auto i : c) {
            ids.push_back("obs_" + std::to_string(nodes[i].node_id));
        }
        std::sort(ids.begin(), ids.end());
        want.insert(ids);
    }
    std::set<std::vector<std::string>> got;
    for (const auto& a : build_l2_areas(make_observation_nodes(m), HierarchyConfig{})) {
        auto ids = a.children;
        std::sort(ids.begin(), ids.end());
        got.insert(ids);
    }
    return got == want;
}

void criterion_5(Report& rep) {
    auto t0 = Clock::now();
    auto scenes = generate_scenes(SceneKind::Rooms, 5, 77);
    RunConfig cfg;
    cfg.write_logs = false;
    int leaves = 0;
    int bad_paths = 0;
    int invalid = 0;
    int oracle_sets = 0;
    int oracle_bad = 0;
    for (std::size_t s = 0; s < scenes.size(); ++s) {
        TopoMap map;
        run_episode(scenes[s], cfg, episode_seed(cfg.seed, s), nullptr, &map);
        auto h = build_hierarchy(map, cfg.hierarchy);
        try {
            h.validate(&map);
        } catch (const Error&) {
            ++invalid;
        }
        std::set<std::int64_t> topo_ids;
        for (const auto* leaf : h.level(Level::L3)) {
            ++leaves;
            const MemoryNode* n = leaf;
            int hops = 0;
            bool unique = true;
            while (!n->parents.empty()) {
                unique = unique && n->parents.size() == 1;
                n = &h.node(n->parents[0]);
                ++hops;
            }
            bool fresh = leaf->topo_node_id && topo_ids.insert(*leaf->topo_node_id).second;
            if (!unique || hops != 3 || n->id != kRootId || !fresh) {
                ++bad_paths;
            }
        }

        // Oracle on real episode observations, at most 30 at a time.
        std::vector<TopoNode> nodes = map.nodes();
        for (std::size_t from = 0; from < nodes.size(); from += 30) {
            std::vector<TopoNode> chunk(nodes.begin() + static_cast<std::ptrdiff_t>(from),
                                        nodes.begin() + static_cast<std::ptrdiff_t>(std::min(nodes.size(), from + 30)));
            ++oracle_sets;
            oracle_bad += areas_match_oracle(chunk) ? 0 : 1;
        }
    }
    rep.add("unique_paths", leaves > 0 && bad_paths == 0 && invalid == 0,
            std::to_string(leaves) + " L3 nodes over 5 rooms episodes, " + std::to_string(bad_paths) +
                " without a unique 3-hop path to the root, " + std::to_string(invalid) + " failed validation");

    // Synthetic observations too: three blobs with mixed descriptions.
    std::mt19937_64 rng(11);
    std::normal_distribution<double> jitter(0.0, 0.4);
    const char* descs[] = {"you see: sofa at near ahead", "you see: bed at mid left", "you see: stove at far right",
                           "you see: plant at near left", "you see: nothing"};
    for (int trial = 0; trial < 40; ++trial) {
        std::size_t n = 1 + rng() % 30;
        std::vector<TopoNode> nodes;
        for (std::size_t i = 0; i < n; ++i) {
            TopoNode t;
            t.node_id = static_cast<std::int64_t>(i);
            double cx = static_cast<double>(rng() % 3) * 4.0;
            t.pose = Pose::planar(cx + jitter(rng), jitter(rng), 0.0);
            t.observation_desc = descs[rng() % 5];
            t.embedding = embed_text(t.observation_desc);
            nodes.push_back(std::move(t));
        }
        ++oracle_sets;
        oracle_bad += areas_match_oracle(nodes) ? 0 : 1;
    }
    rep.add("single_linkage_oracle", oracle_bad == 0,
            std::to_string(oracle_sets - oracle_bad) + "/" + std::to_string(oracle_sets) +
                " observation sets (<= 30 each) give the brute-force partition");

    struct Probe {
        std::size_t count;
        double want;
    };
    const Probe probes[] = {{9, 0.8}, {10, 1.0}, {20, 1.0}, {21, 1.5}};
    bool sw = true;
    std::string detail;
    for (const auto& p : probes) {
        double got = adaptive_threshold(1.0, p.count);
        sw = sw && std::abs(got - p.want) <= 1e-12;
        detail += std::to_string(p.count) + " -> " + fmt("%.2f", got) + " ";
    }
    rep.add("adaptive_switch", sw, detail + "(theta1 = 1; want 0.8, 1.0, 1.0, 1.5)");

    double secs = seconds_since(t0);
    rep.add("runtime", secs < 10.0, fmt("%.3f s, want < 10 s", secs));
}

// ---- 6

void criterion_6(Report& rep) {
    StuckDetector spin;
    int confirmed_at = -1;
    for (int t = 0; t < 40 && confirmed_at < 0; ++t) {
        auto ev = spin.observe(Pose::planar(2, 2, wrap_angle(0.5 * t)));
        if (ev && ev->confirmed) {
            confirmed_at = t;
        }
    }
    // First evaluation needs window + 1 poses; k = 2 means the second one.
    const int second_window = static_cast<int>(StuckConfig{}.window) + 1;
    rep.add("spin_confirmed", confirmed_at >= 0 && confirmed_at <= second_window,
            "spin in place confirmed at step " + std::to_string(confirmed_at) + ", want <= " +
                std::to_string(second_window) + " (second window)");

    StuckDetector line;
    int flagged = 0;
    for (int t = 0; t < 1000; ++t) {
        auto ev = line.observe(Pose::planar(0.25 * t, 0, 0));
        if (ev && (ev->score.stuck_now || ev->confirmed)) {
            ++flagged;
        }
    }
    rep.add("straight_line", flagged == 0, std::to_string(flagged) + " flagged windows over 1000 straight steps");

    std::vector<Pose> out_back;
    for (int i = 0; i <= 4; ++i) {
        out_back.push_back(Pose::planar(0.5 * i, 0, 0));
    }
    for (int i = 3; i >= 0; --i) {
        out_back.push_back(Pose::planar(0.5 * i, 0, kPi));
    }
    double eta = stuck_metrics(out_back).eta;
    rep.add("out_and_back", std::abs(eta) <= 1e-9, fmt("eta = %.3g, want 0 +- 1e-9", eta));

    // Only two of 36 headings open.
    std::vector<HeadingSample> samples;
    for (int i = 0; i < 36; ++i) {
        samples.push_back({wrap_angle(2 * kPi * i / 36.0), i < 2 ? 3.0 : 0.2});
    }
    auto ctx = classify_context(samples, {});
    auto act = escape_action(ctx, 1);
    rep.add("corner_trap", ctx.kind == EscapeKind::CornerTrap && act.r == 0.0 && std::abs(act.theta - kPi) <= 1e-12,
            std::string("context ") + escape_kind_name(ctx.kind) + fmt(", escape (%.3f, %.6f), want (0, pi)", act.r, act.theta));
}

// ---- 7

void criterion_7(Report& rep) {
    MapConfig cfg;
    const double delta = cfg.delta_sample;
    const std::int64_t s_update = cfg.s_update;
    bool at_delta = !node_addition_due(0, {0, 0, 0}, 1, {delta, 0, 0}, cfg);
    bool past_delta = node_addition_due(0, {0, 0, 0}, 1, {std::nextafter(delta, 10.0), 0, 0}, cfg);
    bool at_s = node_addition_due(0, {0, 0, 0}, s_update, {0, 0, 0}, cfg);
    bool before_s = !node_addition_due(0, {0, 0, 0}, s_update - 1, {0, 0, 0}, cfg);
    rep.add("boundaries", at_delta && past_delta && at_s && before_s,
            std::string("displacement = delta_sample ") + (at_delta ? "not added" : "ADDED") + ", just above " +
                (past_delta ? "added" : "NOT added") + "; elapsed = S_update " + (at_s ? "added" : "NOT added") +
                ", one less " + (before_s ? "not added" : "ADDED"));

    std::mt19937_64 rng(42);
    std::uniform_int_distribution<int> dstep(0, 4);
    std::uniform_real_distribution<double> dmove(-0.6, 0.6);
    int mismatches = 0;
    int disconnected = 0;
    int insertions = 0;
    for (int trial = 0; trial < 200; ++trial) {
        TopoMap m;
        std::int64_t step = 0;
        double x = 0, y = 0;
        std::int64_t last_step = 0;
        double lx = 0, ly = 0;
        for (int i = 0; i < 80; ++i) {
            step += dstep(rng);
            // Sometimes land exactly on the displacement boundary.
            if (rng() % 10 == 0 && !m.empty()) {
                x = lx + delta;
                y = ly;
            } else {
                x += dmove(rng);
                y += dmove(rng);
            }
            bool expect = m.empty() || step - last_step >= s_update || std::hypot(x - lx, y - ly) > delta;
            TopoNode n;
            n.node_id = i;
            n.step_index = step;
            n.pose = Pose::planar(x, y, 0.0);
            n.observation_desc = "you see: nothing";
            n.embedding = embed_text(n.observation_desc);
            bool added = m.maybe_add_node(n, cfg);
            ++insertions;
            mismatches += added != expect ? 1 : 0;
            if (added) {
                last_step = step;
                lx = x;
                ly = y;
            }
            disconnected += m.is_connected() && m.edges().size() + 1 == m.size() ? 0 : 1;
        }
    }
    rep.add("random_sequences", mismatches == 0, std::to_string(mismatches) + " predicate mismatches over " +
                                                      std::to_string(insertions) + " insertion attempts");
    rep.add("connected", disconnected == 0,
            std::to_string(disconnected) + " states not a connected tree after an insertion attempt");
}

// ---- 8

std::vector<fs::path> desk_suite() {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(fs::path(DORAEMON_SOURCE_DIR) / "scenes" / "desk_suite")) {
        if (e.path().extension() == ".scene") {
            out.push_back(e.path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Every file under `dir`, name -> bytes.
std::vector<std::pair<std::string, std::string>> snapshot_dir(const fs::path& dir) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        out.emplace_back(e.path().filename().string(), slurp(e.path()));
    }
    std::sort(out.begin(), out.end());
    return out;
}

void criterion_8(Report& rep) {
    auto t0 = Clock::now();
    auto scenes = desk_suite();
    auto scratch = fs::temp_directory_path() / ("doraemon_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(scratch);

    auto batch = [&](DeciderKind decider, const std::string& tag) {
        RunConfig cfg;
        cfg.scenes = scenes;
        cfg.decider = decider;
        cfg.workers = std::max(1u, std::thread::hardware_concurrency());
        cfg.output_dir = scratch / tag;
        fs::create_directories(cfg.output_dir);
        auto results = run_batch(cfg);
        std::ofstream report(cfg.output_dir / "report.txt", std::ios::binary);
        write_report(results, report);
        return summarize(results);
    };

    auto scripted = batch(DeciderKind::Scripted, "scripted_a");
    auto scripted_again = batch(DeciderKind::Scripted, "scripted_b");
    auto random = batch(DeciderKind::Random, "random");

    rep.add("success_rate", scenes.size() == 20 && scripted.success_rate >= 0.9,
            std::to_string(scenes.size()) + " scenes, scripted SR " + fmt("%.3f (SPL %.3f), want >= 0.9",
                                                                           scripted.success_rate, scripted.spl));
    rep.add("aori_vs_random", scripted.mean_aori < random.mean_aori,
            fmt("scripted mean AORI %.6f vs random %.6f, want strictly less", scripted.mean_aori, random.mean_aori) +
                fmt("; random SR %.3f. Both saturate at 1 because the %.2f m visible disk covers every desk scene",
                    random.success_rate, AoriConfig{}.visible_radius()));

    auto a = snapshot_dir(scratch / "scripted_a");
    auto b = snapshot_dir(scratch / "scripted_b");
    rep.add("deterministic", !a.empty() && a == b,
            std::to_string(a.size()) + " log and report files, " + (a == b ? "byte-identical" : "DIFFERENT") +
                " across two runs");
    fs::remove_all(scratch);

    double secs = seconds_since(t0);
    rep.add("runtime", secs < 120.0, fmt("%.1f s for three batches, want < 120 s", secs));
}

// ---- 9

void criterion_9(Report& rep) {
    auto task = make_task("sofa");
    auto db = build_attribute_database(task, stub_attribute_provider());
    AnnotatedCandidates cands;
    cands.entries = {{1, PolarAction::move(1.0, -0.5)}, {2, PolarAction::move(1.0, 0.0)}, {3, PolarAction::move(1.0, 0.5)}};
    auto bundle = assemble_prompt(task, db, cands, {}, false);
    auto text = bundle.text();
    bool scaffold = text.find("Let's solve this navigation task step by step") != std::string::npos &&
                    text.find("NAVIGATE TO THE NEAREST SOFA") != std::string::npos;
    rep.add("scaffold", scaffold, "assembled prompt carries the step-by-step scaffold with the target filled in");

    const std::string reply = "Looking at the arrows... {\"action\": 3}";
    FakeDecisionServer server({.reply = reply});
    server.start();
    auto req = make_wire_request(task, bundle, cands, {});
    auto got = external_decide(req, cands.codes(), {server.url(), 2.0, 0});
    bool round_trip = got.response && got.response->chosen_code == 3 && got.response->raw_text == reply &&
                      parse_decision(got.response->raw_text, cands.codes()).chosen_code == 3;
    rep.add("fake_server", round_trip,
            got.response ? "reply parsed to code " + std::to_string(got.response->chosen_code) + ", want 3"
                         : "no response: " + got.failure);
    server.stop();

    Scene s;
    s.name = "fallback";
    s.bounds = {0, 0, 6, 6};
    s.objects = {{"sofa", {4.3, 3}, 0.3}};
    s.start_position = {3, 3};
    s.target_label = "sofa";
    s.shortest_path = 0.7;
    RunConfig cfg;
    cfg.decider = DeciderKind::External;
    cfg.write_logs = false;
    bool rejects_empty = false;
    try {
        run_episode(s, cfg, 1);
    } catch (const InvalidInput&) {
        rejects_empty = true;
    }
    // Nothing listens on port 1: every decision falls back to the scripted rules.
    cfg.endpoint = {"http://127.0.0.1:1/decide", 0.2, 0};
    auto dead = run_episode(s, cfg, 1);
    rep.add("fallback",
            rejects_empty && dead.executed && dead.error.empty() && dead.fallbacks > 0 &&
                dead.outcome.success,
            std::string("empty url ") + (rejects_empty ? "rejected" : "NOT rejected") + "; unreachable endpoint: " +
                std::to_string(dead.fallbacks) + " fallbacks over " + std::to_string(dead.actions) + " actions, " +
                (dead.outcome.success ? "success" : "FAILED"));
}

struct Criterion {
    int id;
    const char* title;
    std::function<void(Report&)> run;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance checks"};
    int only = 0;
    std::string clause, skip;
    app.add_option("--only", only, "run a single criterion (1-9)")->check(CLI::Range(1, 9));
    app.add_option("--clause", clause, "run only this clause");
    app.add_option("--skip", skip, "leave this clause out");
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> all = {
        {1, "AORI worked cases", criterion_1},
        {2, "step conversion", criterion_2},
        {3, "retrieval oracle equivalence", criterion_3},
        {4, "scoring components", criterion_4},
        {5, "hierarchy structure", criterion_5},
        {6, "stuck detection and escape", criterion_6},
        {7, "topological map", criterion_7},
        {8, "end-to-end scripted runs", criterion_8},
        {9, "prompt and decision contract", criterion_9},
    };

    Report rep(clause, skip);
    int failed = 0;
    for (const auto& c : all) {
        if (only != 0 && c.id != only) {
            continue;
        }
        auto t0 = Clock::now();
        bool ok = true;
        std::vector<Clause> clauses;
        try {
            c.run(rep);
            clauses = rep.take();
        } catch (const std::exception& e) {
            clauses = rep.take();
            clauses.push_back({"exception", false, e.what()});
        }
        for (const auto& cl : clauses) {
            ok = ok && cl.ok;
        }
        ok = ok && !clauses.empty();
        failed += ok ? 0 : 1;
        std::printf("criterion %d %s  %s  [%.2f s]\n", c.id, ok ? "PASS" : "FAIL", c.title, seconds_since(t0));
        for (const auto& cl : clauses) {
            std::printf("    %-4s %-22s %s\n", cl.ok ? "ok" : "FAIL", cl.name.c_str(), cl.detail.c_str());
        }
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
