#include "trieplan/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

namespace trieplan {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& why) {
    throw ConfigError(path + ": " + why);
}

const json& need(const json& doc, const char* field, const std::string& path) {
    if (!doc.contains(field)) fail(path + "." + field, "missing");
    return doc[field];
}

double need_number(const json& doc, const char* field, const std::string& path) {
    const json& v = need(doc, field, path);
    if (!v.is_number()) fail(path + "." + field, "expected a number");
    return v.get<double>();
}

std::string need_string(const json& doc, const char* field, const std::string& path) {
    const json& v = need(doc, field, path);
    if (!v.is_string()) fail(path + "." + field, "expected a string");
    return v.get<std::string>();
}

json load_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open: " + path);
    try {
        return json::parse(f);
    } catch (const json::exception& e) {
        throw IoError(path + ": invalid JSON: " + e.what());
    }
}

AccuracyLaw parse_law(const json& doc, const std::string& path) {
    AccuracyLaw law;
    std::string kind = need_string(doc, "kind", path);
    if (kind == "table") {
        law.kind = AccuracyLaw::Kind::Table;
        const json& cells = need(doc, "cells", path);
        if (!cells.is_object()) fail(path + ".cells", "expected an object");
        for (auto it = cells.begin(); it != cells.end(); ++it) {
            if (!it.value().is_number())
                fail(path + ".cells['" + it.key() + "']", "expected a number");
            law.table[it.key()] = it.value().get<double>();
        }
        return law;
    }
    if (kind != "logistic") fail(path + ".kind", "unknown law '" + kind + "'");
    law.kind = AccuracyLaw::Kind::Logistic;
    if (doc.contains("difficulty")) {
        const json& d = doc["difficulty"];
        law.difficulty.mean = d.value("mean", 0.0);
        law.difficulty.sigma = d.value("sigma", 1.0);
    }
    if (doc.contains("strengths")) {
        for (auto it = doc["strengths"].begin(); it != doc["strengths"].end(); ++it)
            law.strengths[it.key()] = it.value().get<double>();
    }
    law.depth_penalty = doc.value("depth_penalty", 0.0);
    if (doc.contains("deep")) {
        const json& d = doc["deep"];
        std::string dk = d.value("kind", "none");
        if (dk == "rank1_logit") law.deep.kind = DeepBlockLaw::Kind::Rank1Logit;
        else if (dk == "rank1_prob") law.deep.kind = DeepBlockLaw::Kind::Rank1Prob;
        else if (dk == "none") law.deep.kind = DeepBlockLaw::Kind::Inherit;
        else fail(path + ".deep.kind", "unknown kind '" + dk + "'");
        law.deep.start_depth = d.value("start_depth", 3);
        if (d.contains("row")) {
            law.deep.row_min = d["row"].at(0).get<double>();
            law.deep.row_max = d["row"].at(1).get<double>();
        }
        if (d.contains("col")) {
            law.deep.col_min = d["col"].at(0).get<double>();
            law.deep.col_max = d["col"].at(1).get<double>();
        }
        law.deep.noise_sigma = d.value("noise_sigma", 0.0);
    }
    return law;
}

}  // namespace

ExperimentConfig parse_experiment_config(const json& doc) {
    ExperimentConfig cfg;
    cfg.raw = doc;

    const json& engines = need(doc, "engines", "config");
    if (!engines.is_array() || engines.empty()) fail("config.engines", "expected a non-empty array");
    for (const auto& e : engines) cfg.catalog.engines.push_back(e.get<std::string>());

    const json& models = need(doc, "models", "config");
    if (!models.is_array() || models.empty()) fail("config.models", "expected a non-empty array");
    for (std::size_t i = 0; i < models.size(); ++i) {
        const json& m = models[i];
        std::string path = "config.models[" + std::to_string(i) + "]";
        ModelSpec spec;
        spec.id = need_string(m, "id", path);
        spec.cost_per_invocation = need_number(m, "cost", path);
        spec.latency_mean = need_number(m, "latency", path);
        double sigma = m.value("noise_sigma", 0.0);
        if (sigma > 0.0) spec.latency_noise = {LatencyNoise::Kind::Lognormal, sigma};
        spec.engine_id = need_string(m, "engine", path);
        cfg.catalog.models.push_back(std::move(spec));
    }
    cfg.catalog.validate();

    const json& tj = need(doc, "template", "config");
    const json& families = need(tj, "families", "config.template");
    if (!families.is_array() || families.empty())
        fail("config.template.families", "expected a non-empty array");
    for (std::size_t i = 0; i < families.size(); ++i) {
        const json& fj = families[i];
        std::string path = "config.template.families[" + std::to_string(i) + "]";
        StageFamily fam;
        fam.id = need_string(fj, "id", path);
        if (fj.contains("models")) {
            fam.configurable = true;
            for (const auto& mid : fj["models"]) {
                int mi = cfg.catalog.index_of(mid.get<std::string>());
                if (mi < 0) fail(path + ".models", "unknown model '" + mid.get<std::string>() + "'");
                fam.admissible.push_back(mi);
            }
            std::sort(fam.admissible.begin(), fam.admissible.end(), [&](int a, int b) {
                return cfg.catalog.models[static_cast<std::size_t>(a)].id <
                       cfg.catalog.models[static_cast<std::size_t>(b)].id;
            });
            fam.admissible.erase(std::unique(fam.admissible.begin(), fam.admissible.end()),
                                 fam.admissible.end());
        } else {
            fam.configurable = false;
            fam.tool_latency = fj.value("tool_latency", 0.0);
            fam.tool_cost = fj.value("tool_cost", 0.0);
        }
        cfg.tmpl.families.push_back(std::move(fam));
    }
    cfg.tmpl.max_depth = static_cast<int>(need_number(tj, "max_depth", "config.template"));
    if (tj.contains("terminal_depths")) {
        for (const auto& d : tj["terminal_depths"])
            cfg.tmpl.terminal_depths.push_back(d.get<int>());
        std::sort(cfg.tmpl.terminal_depths.begin(), cfg.tmpl.terminal_depths.end());
    } else {
        for (int d = 1; d <= cfg.tmpl.max_depth; ++d) cfg.tmpl.terminal_depths.push_back(d);
    }
    if (tj.contains("depth_families")) {
        for (const auto& fid : tj["depth_families"]) {
            int found = -1;
            for (std::size_t k = 0; k < cfg.tmpl.families.size(); ++k)
                if (cfg.tmpl.families[k].id == fid.get<std::string>()) found = static_cast<int>(k);
            if (found < 0)
                fail("config.template.depth_families",
                     "unknown family '" + fid.get<std::string>() + "'");
            cfg.tmpl.family_of_depth.push_back(found);
        }
    }
    cfg.tmpl.derive_depth_families();
    cfg.tmpl.validate(cfg.catalog);

    const json& wj = need(doc, "world", "config");
    cfg.world.num_requests = static_cast<int>(need_number(wj, "requests", "config.world"));
    cfg.world.law = parse_law(need(wj, "law", "config.world"), "config.world.law");
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    return parse_experiment_config(load_json_file(path));
}

ScenarioSpec load_scenario(const std::string& path, unsigned threads) {
    json doc = load_json_file(path);
    std::filesystem::path base = std::filesystem::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp.string() : (base / fp).string();
    };

    ScenarioSpec spec;
    spec.mode = doc.value("mode", "run");
    if (spec.mode != "run" && spec.mode != "frontier" && spec.mode != "policy_gap")
        fail("scenario.mode", "unknown mode '" + spec.mode + "'");
    spec.config = load_experiment_config(resolve(need_string(doc, "config", "scenario")));
    spec.world_seed = doc.value("world_seed", 0ULL);
    spec.hash = fnv1a64(doc.dump());

    Scenario& sc = spec.scenario;
    sc.hash = spec.hash;
    sc.threads = threads;
    sc.world = GroundTruthWorld::generate(spec.config.tmpl, spec.config.catalog, spec.config.world,
                                          spec.world_seed);
    spec.objective = Objective::parse(need_string(doc, "objective", "scenario"));
    sc.objective = spec.objective;

    // Annotation source for the policy run.
    std::string ann = "oracle";
    if (doc.contains("annotations")) {
        if (doc["annotations"].is_string()) ann = doc["annotations"].get<std::string>();
        else ann = resolve(need_string(doc["annotations"], "file", "scenario.annotations"));
    }
    if (ann == "oracle") {
        sc.planning_trie = ExecutionTrie::build(spec.config.tmpl, spec.config.catalog);
        oracle_annotate(sc.planning_trie, sc.world, threads);
    } else {
        sc.planning_trie = load_annotations_file(ann, spec.config.tmpl, spec.config.catalog);
    }

    if (spec.mode != "run") {
        const json& bounds = need(doc, "bounds", "scenario");
        for (const auto& b : bounds) spec.bounds.push_back(b.get<double>());
        const json& sources = need(doc, "sources", "scenario");
        for (auto it = sources.begin(); it != sources.end(); ++it) {
            std::string v = it.value().get<std::string>();
            spec.sources.emplace_back(it.key(), v == "oracle" ? v : resolve(v));
        }
        return spec;
    }

    sc.request_count = static_cast<int>(need_number(doc, "requests", "scenario"));
    sc.seed = doc.value("seed", 0ULL);
    sc.with_replacement = doc.value("with_replacement", false);
    if (!doc.contains("policies")) fail("scenario.policies", "missing");
    for (const auto& p : doc["policies"]) sc.policies.push_back(p.get<std::string>());
    sc.hard_stop = doc.value("hard_stop", true);

    if (doc.contains("noise")) {
        const json& n = doc["noise"];
        std::string kind = n.value("kind", "none");
        if (kind == "lognormal") {
            sc.noise.kind = NoiseCfg::Kind::Lognormal;
            sc.noise.sigma = need_number(n, "sigma", "scenario.noise");
        } else if (kind != "none") {
            fail("scenario.noise.kind", "unknown kind '" + kind + "'");
        }
    }

    auto parse_knots = [&](const json& arr, const std::string& p) {
        LoadModel::Curve curve;
        for (const auto& k : arr) {
            if (!k.is_array() || k.size() != 2) fail(p, "expected [t, value] pairs");
            curve.knots.emplace_back(k[0].get<double>(), k[1].get<double>());
        }
        std::sort(curve.knots.begin(), curve.knots.end());
        return curve;
    };
    if (doc.contains("engine_queues"))
        for (auto it = doc["engine_queues"].begin(); it != doc["engine_queues"].end(); ++it) {
            StepFn fn;
            for (const auto& s : it.value())
                fn.steps.emplace_back(s[0].get<double>(), s[1].get<double>());
            std::sort(fn.steps.begin(), fn.steps.end());
            sc.engine_queues[it.key()] = std::move(fn);
        }
    if (doc.contains("true_slowdown"))
        for (auto it = doc["true_slowdown"].begin(); it != doc["true_slowdown"].end(); ++it)
            sc.true_slowdown[it.key()] =
                parse_knots(it.value(), "scenario.true_slowdown['" + it.key() + "']");

    if (doc.contains("load_model")) {
        if (doc["load_model"].is_string() && doc["load_model"] == "true") {
            // The controller sees the ground-truth slowdown curves.
            sc.controller_lm.mode = LoadModel::Mode::Slowdown;
            for (const auto& [engine, curve] : sc.true_slowdown)
                sc.controller_lm.engines[engine] = curve;
        } else if (doc["load_model"].is_object()) {
            sc.controller_lm = load_load_model(
                resolve(need_string(doc["load_model"], "file", "scenario.load_model")));
        } else {
            fail("scenario.load_model", "expected \"true\" or {\"file\": ...}");
        }
    }
    return spec;
}

}  // namespace trieplan
