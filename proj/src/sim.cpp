#include "trieplan/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace trieplan {

double StepFn::at(double t) const {
    double v = 0.0;
    for (const auto& [start, value] : steps) {
        if (t < start) break;
        v = value;
    }
    return v;
}

namespace {

double sim_noise(const Scenario& sc, int request, std::uint64_t node_key) {
    if (sc.noise.kind != NoiseCfg::Kind::Lognormal || sc.noise.sigma <= 0.0) return 1.0;
    return lognormal_unit_mean(sc.noise.sigma, hash_key(sc.seed, "sim-noise", node_key,
                                                        static_cast<std::uint64_t>(request)));
}

double true_slowdown_at(const Scenario& sc, const std::string& engine, double t) {
    auto q_it = sc.engine_queues.find(engine);
    double queue = q_it == sc.engine_queues.end() ? 0.0 : q_it->second.at(t);
    auto s_it = sc.true_slowdown.find(engine);
    if (s_it == sc.true_slowdown.end() || s_it->second.knots.empty()) return 1.0;
    return s_it->second.at(queue);
}

// Realized wall time of one stage: frozen world draw, scenario noise, and
// the engine's current multiplicative slowdown.
double realized_latency(const Scenario& sc, int request, int node, double t_start) {
    const ExecutionTrie& trie = sc.world.trie();
    const auto& spec = trie.catalog().models[static_cast<std::size_t>(trie.node(node).model)];
    double base = sc.world.stage_latency(request, node);
    return base * sim_noise(sc, request, trie.node(node).draw_key) *
           true_slowdown_at(sc, spec.engine_id, t_start);
}

std::vector<int> sampled_requests(const Scenario& sc) {
    const int q_count = sc.world.num_requests();
    std::vector<int> sample;
    sample.reserve(static_cast<std::size_t>(sc.request_count));
    if (sc.with_replacement) {
        for (int i = 0; i < sc.request_count; ++i)
            sample.push_back(std::min(
                q_count - 1,
                static_cast<int>(u01(hash_key(sc.seed, "sample", static_cast<std::uint64_t>(i))) *
                                 q_count)));
    } else {
        if (sc.request_count > q_count)
            throw ConfigError("scenario: request count exceeds |Q| without replacement");
        if (sc.request_count == q_count) {
            for (int q = 0; q < q_count; ++q) sample.push_back(q);
        } else {
            std::vector<std::pair<std::uint64_t, int>> ranked(static_cast<std::size_t>(q_count));
            for (int q = 0; q < q_count; ++q)
                ranked[static_cast<std::size_t>(q)] = {
                    hash_key(sc.seed, "sample-rank", static_cast<std::uint64_t>(q)), q};
            std::sort(ranked.begin(), ranked.end());
            for (int i = 0; i < sc.request_count; ++i)
                sample.push_back(ranked[static_cast<std::size_t>(i)].second);
            std::sort(sample.begin(), sample.end());
        }
    }
    return sample;
}

// Minimum-latency family-bound configuration; admission fallback when the
// static plan is infeasible.
PlanResult min_latency_static(const ExecutionTrie& trie) {
    const auto& binding = trie.tmpl().family_of_depth;
    PlanResult best;
    double best_lat = std::numeric_limits<double>::infinity();
    double best_cost = std::numeric_limits<double>::infinity();
    for (int i = 1; i < trie.size_with_root(); ++i) {
        const TrieNode& n = trie.node(i);
        if (!n.terminal_eligible || !n.ann) continue;
        auto path = trie.path_of(i);
        std::map<int, int> model_of_group;
        bool is_static = true;
        for (std::size_t d = 0; d < path.size(); ++d) {
            int group = binding[d];
            auto [it, inserted] = model_of_group.emplace(group, path[d]);
            if (!inserted && it->second != path[d]) {
                is_static = false;
                break;
            }
        }
        if (!is_static) continue;
        bool better = n.ann->lat < best_lat ||
                      (n.ann->lat == best_lat && n.ann->cost < best_cost) ||
                      (n.ann->lat == best_lat && n.ann->cost == best_cost && !best.feasible);
        if (better) {
            best.feasible = true;
            best.path = path;
            best.acc = n.ann->acc;
            best.cost = n.ann->cost;
            best.lat = n.ann->lat;
            best_lat = n.ann->lat;
            best_cost = n.ann->cost;
        }
    }
    return best;
}

std::string path_key(const ExecutionTrie& trie, const std::vector<int>& path) {
    std::string key;
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (i) key += '/';
        key += trie.model_id(path[i]);
    }
    return key;
}

RunRow run_static(const Scenario& sc, int request) {
    const ExecutionTrie& trie = sc.planning_trie;
    RunRow row;
    row.request = request;
    row.policy = "static";

    PlanResult plan = select_static_plan(as_view(trie), sc.objective);
    if (!plan.feasible) plan = min_latency_static(trie);
    row.planned = path_key(trie, plan.path);

    double elapsed = 0.0, spent = 0.0;
    bool success = false;
    int node = trie.root();
    std::vector<int> realized;
    for (int model : plan.path) {
        node = trie.child_of(node, model);
        realized.push_back(model);
        spent += sc.world.stage_cost(node);
        elapsed += realized_latency(sc, request, node, elapsed);
        if (sc.world.node_outcome(request, node)) {
            success = true;
            break;
        }
    }
    row.realized = path_key(trie, realized);
    row.success = success;
    row.cost = spent;
    row.latency = elapsed;
    row.violated = sc.objective.lat_cap && elapsed > *sc.objective.lat_cap;
    return row;
}

RunRow run_dynamic(const Scenario& sc, int request, bool load_aware) {
    const ExecutionTrie& trie = sc.planning_trie;
    RunRow row;
    row.request = request;
    row.policy = load_aware ? "dynamic_load_aware" : "dynamic";

    RequestContext ctx;
    ctx.objective = sc.objective;
    ctx.hard_stop = sc.hard_stop;

    int node = trie.root();
    bool first = true;
    while (ctx.status == RunStatus::Running) {
        EngineLoad load;
        if (load_aware)
            for (const auto& [engine, fn] : sc.engine_queues)
                load.queue_depth[engine] = fn.at(ctx.elapsed);
        Decision d = next_action(trie, ctx, load_aware ? &sc.controller_lm : nullptr,
                                 load_aware ? &load : nullptr);
        if (first) {
            std::vector<int> planned = ctx.prefix;
            planned.insert(planned.end(), d.suffix.begin(), d.suffix.end());
            row.planned = path_key(trie, planned);
            first = false;
        }
        if (!d.invoke) {
            mark_stopped(ctx);
            break;
        }
        node = trie.child_of(node, d.model);
        StageResult sr;
        sr.model = d.model;
        sr.cost = sc.world.stage_cost(node);
        sr.latency = realized_latency(sc, request, node, ctx.elapsed);
        sr.succeeded = sc.world.node_outcome(request, node);
        update_after_stage(ctx, sr, trie);
    }

    row.realized = path_key(trie, ctx.prefix);
    row.success = ctx.status == RunStatus::Success;
    row.cost = ctx.spent;
    row.latency = ctx.elapsed;
    row.violated = sc.objective.lat_cap && ctx.elapsed > *sc.objective.lat_cap;
    return row;
}

}  // namespace

RunReport run_scenario(const Scenario& scenario) {
    scenario.objective.validate();
    if (scenario.planning_trie.template_hash() != scenario.world.trie().template_hash() ||
        scenario.planning_trie.catalog_hash() != scenario.world.trie().catalog_hash())
        throw ConfigError("scenario: annotations do not match the world's template/catalog");
    for (const auto& p : scenario.policies)
        if (p != "static" && p != "dynamic" && p != "dynamic_load_aware")
            throw ConfigError("scenario: unknown policy '" + p + "'");
    if (scenario.policies.empty()) throw ConfigError("scenario: no policies");
    if (scenario.request_count <= 0) throw ConfigError("scenario: request count must be >= 1");

    auto sample = sampled_requests(scenario);
    RunReport report;
    report.scenario_hash = scenario.hash;
    report.objective = scenario.objective.str();
    const std::size_t per_policy = sample.size();
    report.rows.resize(per_policy * scenario.policies.size());

    parallel_for(report.rows.size(), scenario.threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            std::size_t pi = i / per_policy;
            int request = sample[i % per_policy];
            const std::string& policy = scenario.policies[pi];
            if (policy == "static")
                report.rows[i] = run_static(scenario, request);
            else
                report.rows[i] = run_dynamic(scenario, request, policy == "dynamic_load_aware");
        }
    });

    for (std::size_t pi = 0; pi < scenario.policies.size(); ++pi) {
        PolicyAggregate agg;
        agg.policy = scenario.policies[pi];
        agg.n = static_cast<int>(per_policy);
        for (std::size_t i = pi * per_policy; i < (pi + 1) * per_policy; ++i) {
            const auto& r = report.rows[i];
            agg.accuracy += r.success ? 1.0 : 0.0;
            agg.mean_cost += r.cost;
            agg.mean_latency += r.latency;
            agg.violation_rate += r.violated ? 1.0 : 0.0;
        }
        double n = static_cast<double>(per_policy);
        agg.accuracy /= n;
        agg.mean_cost /= n;
        agg.mean_latency /= n;
        agg.violation_rate /= n;
        report.aggregates.push_back(std::move(agg));
    }
    return report;
}

namespace {

Objective with_bound(const Objective& tmpl, double bound) {
    Objective o = tmpl;
    if (o.goal == Objective::Goal::MinCost) {
        o.acc_floor = bound;
    } else if (o.lat_cap && !o.cost_cap) {
        o.lat_cap = bound;
    } else {
        o.cost_cap = bound;
    }
    return o;
}

}  // namespace

std::vector<FrontierRow> frontier_sweep(
    const std::vector<PathMetrics>& truth,
    const std::vector<std::pair<std::string, const ExecutionTrie*>>& sources,
    const Objective& objective_template, const std::vector<double>& bounds) {
    std::vector<FrontierRow> rows;
    for (double bound : bounds) {
        Objective obj = with_bound(objective_template, bound);
        for (const auto& [name, trie] : sources) {
            FrontierRow row;
            row.bound = bound;
            row.source = name;
            PlanResult plan = select_path(as_view(*trie), obj);
            row.feasible = plan.feasible;
            if (plan.feasible) {
                int node = trie->find(plan.path);
                row.path = trie->key_of(node);
                row.planned_acc = plan.acc;
                row.planned_cost = plan.cost;
                row.planned_lat = plan.lat;
                const auto& t = truth[static_cast<std::size_t>(node)];
                row.true_acc = t.acc;
                row.true_cost = t.cost;
                row.true_lat = t.lat;
                if (obj.goal == Objective::Goal::MinCost)
                    row.satisfied = row.true_acc >= bound;
                else if (obj.lat_cap && !obj.cost_cap)
                    row.satisfied = row.true_lat <= bound;
                else
                    row.satisfied = row.true_cost <= bound;
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::vector<GapRow> policy_gap_report(
    const std::vector<PathMetrics>& truth,
    const std::vector<std::pair<std::string, const ExecutionTrie*>>& sources,
    const std::vector<double>& cost_bounds, const FamilyBinding* binding) {
    std::vector<GapRow> rows;
    for (double bound : cost_bounds) {
        Objective obj;
        obj.goal = Objective::Goal::MaxAcc;
        obj.cost_cap = bound;
        for (const auto& [name, trie] : sources) {
            GapRow row;
            row.bound = bound;
            row.source = name;
            PlanResult st = select_static_plan(as_view(*trie), obj, binding);
            PlanResult dy = select_path(as_view(*trie), obj);
            row.static_feasible = st.feasible;
            row.trie_feasible = dy.feasible;
            if (st.feasible) {
                row.static_planned_acc = st.acc;
                row.static_true_acc =
                    truth[static_cast<std::size_t>(trie->find(st.path))].acc;
            }
            if (dy.feasible) {
                row.trie_planned_acc = dy.acc;
                row.trie_true_acc = truth[static_cast<std::size_t>(trie->find(dy.path))].acc;
            }
            row.delta_planned = row.trie_planned_acc - row.static_planned_acc;
            row.delta_true = row.trie_true_acc - row.static_true_acc;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

}  // namespace trieplan
