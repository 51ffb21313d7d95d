#pragma once

// Shared fixtures and test-only oracles. The dense 3x3 SVD and the
// hand-solved completion cases live here so library code is never checked
// against itself.

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "trieplan/config.hpp"
#include "trieplan/trie.hpp"
#include "trieplan/world.hpp"

namespace ts {

using namespace trieplan;

// ── Two-model depth-2 fixture (G cheap/fast, S pricey/strong) ─────────

inline ModelCatalog two_model_catalog(double noise_sigma = 0.0) {
    ModelCatalog cat;
    cat.engines = {"eg", "es"};
    LatencyNoise noise;
    if (noise_sigma > 0.0) noise = {LatencyNoise::Kind::Lognormal, noise_sigma};
    cat.models.push_back({"G", 1.0, 1.0, noise, "eg"});
    cat.models.push_back({"S", 10.0, 3.5, noise, "es"});
    return cat;
}

// Hand-entered annotations for the worked two-stage example.
inline ExecutionTrie toy_annotated_trie() {
    auto cat = two_model_catalog();
    auto tmpl = make_uniform_template(cat, 2);
    auto trie = ExecutionTrie::build(tmpl, cat);
    auto set = [&](const char* key, double acc, double cost, double lat) {
        int n = trie.find_key(key);
        trie.node_mut(n).ann = Annotation{acc, cost, lat, 1, 1, 1};
    };
    set("G", 0.72, 1.0, 1.0);
    set("S", 0.86, 10.0, 3.5);
    set("G/G", 0.79, 2.0, 2.1);
    set("G/S", 0.91, 11.0, 4.8);
    set("S/G", 0.89, 11.0, 4.7);
    set("S/S", 0.94, 20.0, 7.0);
    return trie;
}

// World whose true column means reproduce the toy trie's accuracies.
inline WorldConfig toy_world_config(int requests) {
    WorldConfig wc;
    wc.num_requests = requests;
    wc.law.kind = AccuracyLaw::Kind::Table;
    wc.law.table = {
        {"G", 0.72},         {"S", 0.86},
        {"G/G", 0.25},       {"G/S", 19.0 / 28.0},
        {"S/G", 3.0 / 14.0}, {"S/S", 4.0 / 7.0},
    };
    return wc;
}

// ── Reference eight-model depth-3 world ────────────────────────────────
// Heterogeneous catalog (cheap/weak through pricey/strong) with a
// near-rank-1 deep conditional block; the substrate for the estimator
// bias-signature and consistency checks.

struct Fixture {
    ModelCatalog catalog;
    WorkflowTemplate tmpl;
    WorldConfig world;
};

inline Fixture reference8(int requests) {
    Fixture fx;
    fx.catalog.engines = {"e0", "e1"};
    const double costs[8] = {0.3, 0.5, 0.8, 1.2, 1.8, 2.7, 4.0, 6.0};
    const double lats[8] = {0.6, 0.8, 1.0, 1.3, 1.7, 2.2, 2.8, 3.5};
    const double strengths[8] = {-0.2, 0.0, 0.2, 0.45, 0.7, 1.0, 1.3, 1.7};
    for (int i = 0; i < 8; ++i) {
        ModelSpec m;
        m.id = "m" + std::to_string(i);
        m.cost_per_invocation = costs[i];
        m.latency_mean = lats[i];
        m.latency_noise = {LatencyNoise::Kind::Lognormal, 0.3};
        m.engine_id = i % 2 ? "e1" : "e0";
        fx.catalog.models.push_back(std::move(m));
    }
    fx.tmpl = make_uniform_template(fx.catalog, 3, 0.05, 0.01);
    fx.world.num_requests = requests;
    auto& law = fx.world.law;
    law.kind = AccuracyLaw::Kind::Logistic;
    law.difficulty = {0.0, 1.1};
    for (int i = 0; i < 8; ++i) law.strengths["m" + std::to_string(i)] = strengths[i];
    law.depth_penalty = 0.45;
    law.deep.kind = DeepBlockLaw::Kind::Rank1Logit;
    law.deep.start_depth = 3;
    law.deep.row_min = 0.8;
    law.deep.row_max = 1.6;
    law.deep.col_min = -2.6;
    law.deep.col_max = -0.8;
    law.deep.noise_sigma = 0.10;
    return fx;
}

// Three-model catalog for latency experiments: generation runs on light
// models, repair may escalate to a slow strong one, so mid-course
// corrections have real room to act.
inline Fixture slo_fixture(int requests, double latency_noise_sigma = 0.0) {
    Fixture fx;
    fx.catalog.engines = {"ef", "es"};
    LatencyNoise noise;
    if (latency_noise_sigma > 0.0) noise = {LatencyNoise::Kind::Lognormal, latency_noise_sigma};
    fx.catalog.models.push_back({"fast", 0.5, 0.4, noise, "ef"});
    fx.catalog.models.push_back({"mid", 2.0, 2.0, noise, "ef"});
    fx.catalog.models.push_back({"slow", 8.0, 6.0, noise, "es"});
    fx.tmpl.families.push_back({"gen", true, {0, 1}, 0.0, 0.0});
    fx.tmpl.families.push_back({"repair", true, {0, 1, 2}, 0.0, 0.0});
    fx.tmpl.max_depth = 2;
    fx.tmpl.terminal_depths = {1, 2};
    fx.tmpl.derive_depth_families();
    fx.world.num_requests = requests;
    fx.world.law.kind = AccuracyLaw::Kind::Logistic;
    fx.world.law.difficulty = {0.0, 1.0};
    fx.world.law.strengths = {{"fast", -0.8}, {"mid", 0.3}, {"slow", 1.8}};
    fx.world.law.depth_penalty = 0.1;
    return fx;
}

// Deep conditional block exactly rank-1 in probability space, noise-free.
inline Fixture rank1_deep8(int requests) {
    Fixture fx = reference8(requests);
    auto& deep = fx.world.law.deep;
    deep.kind = DeepBlockLaw::Kind::Rank1Prob;
    deep.row_min = 0.35;
    deep.row_max = 0.95;
    deep.col_min = 0.10;
    deep.col_max = 0.55;
    deep.noise_sigma = 0.0;
    return fx;
}

// ── Random monotone annotations ────────────────────────────────────────
// Metrics grow by random nonnegative increments along every edge, so the
// result is monotone by construction; `unannotated_frac` knocks out nodes
// to exercise skip handling.

inline void random_monotone_annotations(ExecutionTrie& trie, std::uint64_t seed,
                                        double unannotated_frac = 0.0) {
    for (int i = 1; i < trie.size_with_root(); ++i) {
        const auto& parent_ann = trie.node(trie.node(i).parent).ann;
        Annotation base = parent_ann ? *parent_ann : Annotation{};
        Annotation ann;
        double u1 = u01(hash_key(seed, "ann-acc", static_cast<std::uint64_t>(i)));
        double u2 = u01(hash_key(seed, "ann-cost", static_cast<std::uint64_t>(i)));
        double u3 = u01(hash_key(seed, "ann-lat", static_cast<std::uint64_t>(i)));
        ann.acc = base.acc + (1.0 - base.acc) * 0.5 * u1;
        ann.cost = base.cost + 5.0 * u2;
        ann.lat = base.lat + 3.0 * u3;
        ann.n_acc = ann.n_cost = ann.n_lat = 100;
        trie.node_mut(i).ann = ann;
        if (unannotated_frac > 0.0 &&
            u01(hash_key(seed, "ann-drop", static_cast<std::uint64_t>(i))) < unannotated_frac) {
            // Parent chain stays intact so children still extend real values.
            if (trie.node(i).children.empty()) trie.node_mut(i).ann.reset();
        }
    }
}

// ── Dense 3x3 SVD oracle (Jacobi eigenvalues of M^T M) ─────────────────

inline std::array<double, 3> singular_values_3x3(const std::array<double, 9>& m) {
    double a[9];  // A = M^T M, symmetric
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += m[static_cast<std::size_t>(k * 3 + i)] *
                                              m[static_cast<std::size_t>(k * 3 + j)];
            a[i * 3 + j] = s;
        }
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = std::fabs(a[1]) + std::fabs(a[2]) + std::fabs(a[5]);
        if (off < 1e-14) break;
        for (int p = 0; p < 3; ++p)
            for (int q = p + 1; q < 3; ++q) {
                if (std::fabs(a[p * 3 + q]) < 1e-18) continue;
                double theta = (a[q * 3 + q] - a[p * 3 + p]) / (2.0 * a[p * 3 + q]);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                double app = a[p * 3 + p], aqq = a[q * 3 + q], apq = a[p * 3 + q];
                a[p * 3 + p] = c * c * app - 2.0 * s * c * apq + s * s * aqq;
                a[q * 3 + q] = s * s * app + 2.0 * s * c * apq + c * c * aqq;
                a[p * 3 + q] = a[q * 3 + p] = 0.0;
                for (int k = 0; k < 3; ++k) {
                    if (k == p || k == q) continue;
                    double akp = a[k * 3 + p], akq = a[k * 3 + q];
                    a[k * 3 + p] = a[p * 3 + k] = c * akp - s * akq;
                    a[k * 3 + q] = a[q * 3 + k] = s * akp + c * akq;
                }
            }
    }
    std::array<double, 3> sv{std::sqrt(std::max(0.0, a[0])), std::sqrt(std::max(0.0, a[4])),
                             std::sqrt(std::max(0.0, a[8]))};
    std::sort(sv.begin(), sv.end(), std::greater<double>());
    return sv;
}

// Exhaustive traces: every request down every terminal-eligible path.
inline std::vector<TraceRecord> exhaustive_traces(const GroundTruthWorld& world,
                                                  const ExecutionTrie& trie) {
    std::vector<TraceRecord> traces;
    for (int node = 1; node < trie.size_with_root(); ++node) {
        if (!trie.node(node).terminal_eligible) continue;
        auto path = trie.path_of(node);
        for (int q = 0; q < world.num_requests(); ++q)
            traces.push_back(realize_run(world, q, path));
    }
    return traces;
}

}  // namespace ts
