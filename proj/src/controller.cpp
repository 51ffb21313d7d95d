#include "trieplan/controller.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace trieplan {

double LoadModel::Curve::at(double queue_depth) const {
    if (knots.empty()) return 0.0;
    if (queue_depth <= knots.front().first) return knots.front().second;
    if (queue_depth >= knots.back().first) return knots.back().second;
    for (std::size_t i = 1; i < knots.size(); ++i) {
        if (queue_depth <= knots[i].first) {
            double x0 = knots[i - 1].first, y0 = knots[i - 1].second;
            double x1 = knots[i].first, y1 = knots[i].second;
            double t = (queue_depth - x0) / (x1 - x0);
            return y0 + t * (y1 - y0);
        }
    }
    return knots.back().second;
}

double LoadModel::value(const std::string& engine, double queue_depth) const {
    auto it = engines.find(engine);
    if (it == engines.end() || it->second.knots.empty()) return identity_value();
    return it->second.at(queue_depth);
}

LoadModel::Curve fit_slowdown_curve(const std::vector<std::pair<double, double>>& samples,
                                    double baseline_latency, LoadModel::Mode mode) {
    if (!(baseline_latency > 0.0))
        throw ConfigError("fit_slowdown_curve: baseline latency must be > 0");
    std::map<double, std::vector<double>> by_depth;
    for (const auto& [depth, lat] : samples) by_depth[depth].push_back(lat);
    if (by_depth.size() < 2)
        throw ConfigError("fit_slowdown_curve: need samples at >= 2 distinct queue depths");

    struct Pool {
        double value;
        double weight;
        std::size_t span;
    };
    std::vector<double> depths;
    std::vector<Pool> pools;
    for (auto& [depth, lats] : by_depth) {
        std::sort(lats.begin(), lats.end());
        std::size_t n = lats.size();
        double median = n % 2 ? lats[n / 2] : 0.5 * (lats[n / 2 - 1] + lats[n / 2]);
        double v = mode == LoadModel::Mode::Slowdown ? median / baseline_latency
                                                     : median - baseline_latency;
        depths.push_back(depth);
        pools.push_back({v, static_cast<double>(n), 1});
        // Pool-adjacent-violators: merge while decreasing.
        while (pools.size() > 1 && pools[pools.size() - 2].value > pools.back().value) {
            Pool b = pools.back();
            pools.pop_back();
            Pool& a = pools.back();
            a.value = (a.value * a.weight + b.value * b.weight) / (a.weight + b.weight);
            a.weight += b.weight;
            a.span += b.span;
        }
    }

    LoadModel::Curve curve;
    std::size_t di = 0;
    for (const auto& p : pools)
        for (std::size_t k = 0; k < p.span; ++k) curve.knots.emplace_back(depths[di++], p.value);

    double se = 0.0;
    for (const auto& [depth, lat] : samples) {
        double v = mode == LoadModel::Mode::Slowdown ? lat / baseline_latency
                                                     : lat - baseline_latency;
        double d = v - curve.at(depth);
        se += d * d;
    }
    curve.fit_residual = std::sqrt(se / static_cast<double>(samples.size()));
    return curve;
}

void save_load_model(const LoadModel& lm, const std::string& path) {
    nlohmann::json doc;
    doc["version"] = 1;
    doc["mode"] = lm.mode == LoadModel::Mode::Slowdown ? "slowdown" : "additive";
    nlohmann::json engines = nlohmann::json::object();
    for (const auto& [id, curve] : lm.engines) {
        nlohmann::json e;
        e["knots"] = curve.knots;
        e["residual"] = curve.fit_residual;
        engines[id] = std::move(e);
    }
    doc["engines"] = std::move(engines);
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for write: " + path);
    f << doc.dump(2) << '\n';
}

LoadModel load_load_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open: " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path + ": invalid JSON: " + e.what());
    }
    LoadModel lm;
    std::string mode = doc.value("mode", "additive");
    lm.mode = mode == "slowdown" ? LoadModel::Mode::Slowdown : LoadModel::Mode::AdditiveDelay;
    if (doc.contains("engines"))
        for (auto it = doc["engines"].begin(); it != doc["engines"].end(); ++it) {
            LoadModel::Curve c;
            for (const auto& k : it.value().at("knots"))
                c.knots.emplace_back(k.at(0).get<double>(), k.at(1).get<double>());
            c.fit_residual = it.value().value("residual", 0.0);
            lm.engines[it.key()] = std::move(c);
        }
    return lm;
}

double EngineLoad::at(const std::string& engine) const {
    auto it = queue_depth.find(engine);
    return it == queue_depth.end() ? 0.0 : it->second;
}

void update_after_stage(RequestContext& ctx, const StageResult& result,
                        const ExecutionTrie& trie) {
    if (ctx.status != RunStatus::Running)
        throw ConfigError("update_after_stage: context already terminated");
    ctx.prefix.push_back(result.model);
    ctx.elapsed += result.latency;
    ctx.spent += result.cost;
    ctx.history.push_back(result);
    if (result.succeeded) {
        ctx.status = RunStatus::Success;
    } else if (ctx.hard_stop && ctx.objective.lat_cap && ctx.elapsed > *ctx.objective.lat_cap) {
        ctx.status = RunStatus::BudgetStop;
    } else if (static_cast<int>(ctx.prefix.size()) >= trie.tmpl().max_depth) {
        ctx.status = RunStatus::Exhausted;
    }
}

void mark_stopped(RequestContext& ctx) {
    if (ctx.status == RunStatus::Running) ctx.status = RunStatus::Exhausted;
}

namespace {

// Additive mode: each engine first used by the suffix contributes its
// current expected delay once. Slowdown mode: each suffix stage's annotated
// latency increment is scaled by its engine's multiplier.
struct LiveInflater final : LatencyInflater {
    const ExecutionTrie& trie;
    const LoadModel& lm;
    const EngineLoad& load;
    mutable std::vector<double> delay_of_engine;  // resolved once per engine

    LiveInflater(const ExecutionTrie& t, const LoadModel& m, const EngineLoad& l)
        : trie(t), lm(m), load(l) {
        const auto& engines = trie.catalog().engines;
        delay_of_engine.resize(engines.size());
        for (std::size_t i = 0; i < engines.size(); ++i) {
            double v = lm.value(engines[i], load.at(engines[i]));
            // A fitted curve can dip below the idle point; planning never
            // credits an engine with running faster than unloaded, and
            // negative inflation would break pruning monotonicity.
            delay_of_engine[i] = std::max(v, lm.identity_value());
        }
    }

    double extra(int node, int parent, double parent_extra) const override {
        const TrieNode& n = trie.node(node);
        const auto& spec = trie.catalog().models[static_cast<std::size_t>(n.model)];
        int ei = trie.catalog().engine_index(spec.engine_id);
        double v = ei >= 0 ? delay_of_engine[static_cast<std::size_t>(ei)] : lm.identity_value();
        if (lm.mode == LoadModel::Mode::AdditiveDelay)
            return parent_extra + (charged_in_chain(node, parent) ? 0.0 : v);
        // Slowdown: inflate this stage's annotated increment.
        double inc = 0.0;
        if (n.ann && trie.node(n.parent).ann) inc = n.ann->lat - trie.node(n.parent).ann->lat;
        return parent_extra + inc * (v - 1.0);
    }

    // True when `engine(node)` already appears strictly between the view
    // root (exclusive) and `node` (exclusive) on the realized suffix chain.
    bool charged_in_chain(int node, int parent) const {
        const auto& spec = trie.catalog().models[static_cast<std::size_t>(trie.node(node).model)];
        for (int cur = parent; cur > 0; cur = trie.node(cur).parent) {
            if (!in_suffix_[static_cast<std::size_t>(cur)]) break;
            const auto& anc = trie.catalog().models[static_cast<std::size_t>(trie.node(cur).model)];
            if (anc.engine_id == spec.engine_id) return true;
        }
        return false;
    }

    std::vector<std::uint8_t> in_suffix_;
};

}  // namespace

Decision next_action(const ExecutionTrie& trie, const RequestContext& ctx,
                     const LoadModel* load_model, const EngineLoad* load) {
    if (ctx.status != RunStatus::Running)
        throw ConfigError("next_action: context is not running");
    TrieView view = reroot(trie, ctx.prefix);
    const TrieNode& here = trie.node(view.root);
    const Annotation base = here.ann ? *here.ann : Annotation{};

    // Restate the request budgets at the current prefix: a suffix node v is
    // feasible when spend-so-far plus its incremental cost stays under the
    // cost cap, and elapsed time plus its (inflated) incremental latency
    // stays under the latency cap. Accuracy estimates never change online.
    Objective remaining = ctx.objective;
    if (remaining.cost_cap) remaining.cost_cap = base.cost + (*remaining.cost_cap - ctx.spent);
    if (remaining.lat_cap) remaining.lat_cap = base.lat + (*remaining.lat_cap - ctx.elapsed);

    std::optional<LiveInflater> inflater;
    if (load_model && load) {
        inflater.emplace(trie, *load_model, *load);
        // Mark the descendant region so additive charging can tell suffix
        // nodes from the already-executed prefix.
        inflater->in_suffix_.assign(static_cast<std::size_t>(trie.size_with_root()), 0);
        std::vector<int> stack{view.root};
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            if (v != view.root) inflater->in_suffix_[static_cast<std::size_t>(v)] = 1;
            for (int c : trie.node(v).children) stack.push_back(c);
        }
    }

    PlanResult plan = select_path(view, remaining, inflater ? &*inflater : nullptr);

    Decision d;
    if (plan.feasible) {
        d.feasible = true;
        d.suffix = plan.path;
        d.d_acc = plan.acc - base.acc;
        d.d_cost = plan.cost - base.cost;
        d.d_lat = plan.lat - base.lat;
        if (plan.path.empty()) {
            d.invoke = false;  // staying here is optimal
        } else {
            d.invoke = true;
            d.model = plan.path.front();
        }
        return d;
    }

    // Fallback: nothing satisfies the budgets. Stop if allowed; otherwise
    // limp along the smallest inflated-latency route to a terminal node.
    if (here.terminal_eligible || here.children.empty()) {
        d.invoke = false;
        return d;
    }
    double best_lat = std::numeric_limits<double>::infinity();
    double best_cost = std::numeric_limits<double>::infinity();
    std::vector<int> best_path;
    std::vector<int> stack{view.root};
    std::vector<double> extra(static_cast<std::size_t>(trie.size_with_root()), 0.0);
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        const TrieNode& n = trie.node(v);
        if (v != view.root && inflater)
            extra[static_cast<std::size_t>(v)] =
                inflater->extra(v, n.parent, extra[static_cast<std::size_t>(n.parent)]);
        if (v != view.root && n.terminal_eligible && n.ann) {
            double lat = n.ann->lat + extra[static_cast<std::size_t>(v)] - base.lat;
            double cost = n.ann->cost - base.cost;
            bool better = lat < best_lat || (lat == best_lat && cost < best_cost);
            if (better) {
                best_lat = lat;
                best_cost = cost;
                best_path = trie.path_of(v);
                best_path.erase(best_path.begin(), best_path.begin() + here.depth);
            }
        }
        for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) stack.push_back(*it);
    }
    if (best_path.empty()) {
        // No annotated terminal descendant at all: take the first child and
        // let later steps terminate as soon as eligibility allows.
        d.invoke = true;
        d.model = trie.node(here.children.front()).model;
        d.suffix = {d.model};
        return d;
    }
    d.invoke = true;
    d.model = best_path.front();
    d.suffix = std::move(best_path);
    d.d_lat = best_lat;
    d.d_cost = best_cost;
    return d;
}

ProbeStats replanning_overhead_probe(const ExecutionTrie& trie, const Objective& objective,
                                     int repetitions) {
    if (repetitions < 1) throw ConfigError("replanning_overhead_probe: repetitions must be >= 1");
    RequestContext ctx;
    ctx.objective = objective;
    std::vector<double> us(static_cast<std::size_t>(repetitions), 0.0);
    for (int i = 0; i < repetitions; ++i) {
        auto t0 = std::chrono::steady_clock::now();
        Decision d = next_action(trie, ctx);
        auto t1 = std::chrono::steady_clock::now();
        (void)d;
        us[static_cast<std::size_t>(i)] =
            std::chrono::duration<double, std::micro>(t1 - t0).count();
    }
    std::sort(us.begin(), us.end());
    ProbeStats stats;
    stats.reps = repetitions;
    double sum = 0.0;
    for (double v : us) sum += v;
    stats.mean_us = sum / static_cast<double>(repetitions);
    stats.p50_us = us[static_cast<std::size_t>(repetitions / 2)];
    stats.p99_us = us[static_cast<std::size_t>(std::min<int>(repetitions - 1,
                                                             (repetitions * 99) / 100))];
    stats.max_us = us.back();
    return stats;
}

}  // namespace trieplan
