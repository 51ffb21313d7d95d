#include "trieplan/world.hpp"

#include <algorithm>
#include <cmath>

#include "trieplan/common.hpp"

namespace trieplan {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double difficulty_of(const WorldConfig& cfg, std::uint64_t seed, int request) {
    const auto& d = cfg.law.difficulty;
    return d.mean + d.sigma * std_normal(hash_key(seed, "difficulty", static_cast<std::uint64_t>(request)));
}

}  // namespace

double GroundTruthWorld::conditional_prob(int request, int node) const {
    const TrieNode& n = trie_.node(node);
    if (config_.law.kind == AccuracyLaw::Kind::Table) {
        auto it = config_.law.table.find(trie_.key_of(node));
        return it->second;  // validated at generate()
    }

    const auto& deep = config_.law.deep;
    if (deep.kind != DeepBlockLaw::Kind::Inherit && n.depth >= deep.start_depth) {
        // Outer-product law per depth block; request-independent so the
        // population conditional matrix is exactly the configured one.
        const TrieNode& parent = trie_.node(n.parent);
        double row = deep.row_min +
                     (deep.row_max - deep.row_min) * u01(hash_key(seed_, "deep-row", parent.draw_key));
        double col = deep.col_min +
                     (deep.col_max - deep.col_min) *
                         u01(hash_key(seed_, "deep-col", static_cast<std::uint64_t>(n.model),
                                      static_cast<std::uint64_t>(n.depth)));
        double noise = deep.noise_sigma > 0.0
                           ? deep.noise_sigma * std_normal(hash_key(seed_, "deep-noise", n.draw_key))
                           : 0.0;
        if (deep.kind == DeepBlockLaw::Kind::Rank1Logit) return sigmoid(row * col + noise);
        return std::clamp(row * col + noise, 0.0, 1.0);
    }

    double strength = 0.0;
    auto it = config_.law.strengths.find(trie_.model_id(n.model));
    if (it != config_.law.strengths.end()) strength = it->second;
    double difficulty = difficulty_of(config_, seed_, request);
    return sigmoid(strength - difficulty - config_.law.depth_penalty * (n.depth - 1));
}

double GroundTruthWorld::stage_latency(int request, int node) const {
    const TrieNode& n = trie_.node(node);
    const ModelSpec& m = catalog_.models[static_cast<std::size_t>(n.model)];
    double noise = 1.0;
    if (m.latency_noise.kind == LatencyNoise::Kind::Lognormal)
        noise = lognormal_unit_mean(m.latency_noise.sigma,
                                    hash_key(seed_, "latency", n.draw_key,
                                             static_cast<std::uint64_t>(request)));
    return m.latency_mean * noise + template_.tool_latency_per_depth;
}

double GroundTruthWorld::stage_cost(int node) const {
    const TrieNode& n = trie_.node(node);
    return catalog_.models[static_cast<std::size_t>(n.model)].cost_per_invocation +
           template_.tool_cost_per_depth;
}

bool GroundTruthWorld::path_success(int request, int node) const {
    for (int cur = node; cur > 0; cur = trie_.node(cur).parent)
        if (node_outcome(request, cur)) return true;
    return false;
}

GroundTruthWorld GroundTruthWorld::generate(const WorkflowTemplate& tmpl,
                                            const ModelCatalog& catalog, const WorldConfig& cfg,
                                            std::uint64_t seed) {
    if (cfg.num_requests <= 0) throw ConfigError("world.requests: must be >= 1");

    GroundTruthWorld w;
    w.template_ = tmpl;
    w.catalog_ = catalog;
    w.config_ = cfg;
    w.trie_ = ExecutionTrie::build(tmpl, catalog);
    w.seed_ = seed;
    w.num_requests_ = cfg.num_requests;

    if (cfg.law.kind == AccuracyLaw::Kind::Table) {
        for (int i = 1; i < w.trie_.size_with_root(); ++i) {
            auto key = w.trie_.key_of(i);
            auto it = cfg.law.table.find(key);
            if (it == cfg.law.table.end())
                throw ConfigError("world.law.table: missing prefix '" + key + "'");
            if (!(it->second >= 0.0 && it->second <= 1.0))
                throw ConfigError("world.law.table['" + key + "']: probability outside [0,1]");
        }
    } else {
        for (const auto& [id, s] : cfg.law.strengths) {
            if (catalog.index_of(id) < 0)
                throw ConfigError("world.law.strengths: unknown model '" + id + "'");
            if (!std::isfinite(s)) throw ConfigError("world.law.strengths['" + id + "']: non-finite");
        }
    }

    const int q_count = cfg.num_requests;
    w.outcomes_.assign(static_cast<std::size_t>(w.trie_.node_count()) *
                           static_cast<std::size_t>(q_count),
                       0);
    for (int node = 1; node < w.trie_.size_with_root(); ++node) {
        std::uint64_t node_key = w.trie_.node(node).draw_key;
        for (int q = 0; q < q_count; ++q) {
            double p = w.conditional_prob(q, node);
            double u = u01(hash_key(seed, "outcome", node_key, static_cast<std::uint64_t>(q)));
            w.outcomes_[w.cell(q, node)] = u < p ? 1 : 0;
        }
    }
    return w;
}

TraceRecord realize_run(const GroundTruthWorld& world, int request,
                        const std::vector<int>& model_path) {
    const ExecutionTrie& trie = world.trie();
    TraceRecord tr;
    tr.request = request;
    tr.path = model_path;
    tr.reached.assign(model_path.size(), 0);
    tr.stage_cost.assign(model_path.size(), 0.0);
    tr.stage_latency.assign(model_path.size(), 0.0);
    tr.stop_depth = static_cast<int>(model_path.size());

    int cur = 0;
    bool done = false;
    for (std::size_t i = 0; i < model_path.size(); ++i) {
        cur = trie.child_of(cur, model_path[i]);
        if (cur < 0)
            throw ConfigError("realize_run: infeasible path at position " + std::to_string(i));
        if (done) continue;  // keep validating the tail, but nothing executes
        tr.reached[i] = 1;
        tr.stage_cost[i] = world.stage_cost(cur);
        tr.stage_latency[i] = world.stage_latency(request, cur);
        if (world.node_outcome(request, cur)) {
            tr.success = true;
            tr.stop_depth = static_cast<int>(i) + 1;
            done = true;
        }
    }
    return tr;
}

TraceRecord realize_run_node(const GroundTruthWorld& world, int request, int node) {
    return realize_run(world, request, world.trie().path_of(node));
}

namespace {

// Shared DFS: visits every node with the set of requests whose ancestors all
// failed (the requests that would actually execute this stage).
template <typename Fn>
void walk_alive(const GroundTruthWorld& world, const ExecutionTrie& trie, int subtree_root,
                const std::vector<int>& alive_at_parent, const PathMetrics& parent_metrics,
                std::vector<PathMetrics>& out, Fn&& per_node) {
    const auto& n = trie.node(subtree_root);
    const double q_total = static_cast<double>(world.num_requests());

    std::vector<int> still_failing;
    still_failing.reserve(alive_at_parent.size());
    double lat_sum = 0.0;
    for (int q : alive_at_parent) {
        lat_sum += world.stage_latency(q, subtree_root);
        if (!world.node_outcome(q, subtree_root)) still_failing.push_back(q);
    }

    PathMetrics m;
    m.acc = 1.0 - static_cast<double>(still_failing.size()) / q_total;
    m.cost = parent_metrics.cost +
             (static_cast<double>(alive_at_parent.size()) / q_total) * world.stage_cost(subtree_root);
    double own_lat = alive_at_parent.empty() ? 0.0 : lat_sum / static_cast<double>(alive_at_parent.size());
    m.lat = parent_metrics.lat + own_lat;
    out[static_cast<std::size_t>(subtree_root)] = m;
    per_node(subtree_root, m, static_cast<std::int64_t>(alive_at_parent.size()));

    for (int c : n.children) walk_alive(world, trie, c, still_failing, m, out, per_node);
}

template <typename Fn>
std::vector<PathMetrics> oracle_walk(const GroundTruthWorld& world, const ExecutionTrie& trie,
                                     unsigned threads, Fn&& per_node) {
    if (trie.template_hash() != world.trie().template_hash() ||
        trie.catalog_hash() != world.trie().catalog_hash())
        throw ConfigError("oracle: trie does not match the world's template/catalog");

    std::vector<PathMetrics> out(static_cast<std::size_t>(trie.size_with_root()));
    std::vector<int> all(static_cast<std::size_t>(world.num_requests()));
    for (int q = 0; q < world.num_requests(); ++q) all[static_cast<std::size_t>(q)] = q;

    const auto& top = trie.node(trie.root()).children;
    if (threads > 1 && top.size() > 1) {
        // Depth-1 subtrees are independent and write disjoint slots.
        parallel_for(
            top.size(), threads,
            [&](std::size_t b, std::size_t e) {
                for (std::size_t i = b; i < e; ++i)
                    walk_alive(world, trie, top[i], all, PathMetrics{}, out, per_node);
            },
            /*chunk=*/1);
    } else {
        for (int c : top) walk_alive(world, trie, c, all, PathMetrics{}, out, per_node);
    }
    return out;
}

}  // namespace

std::vector<PathMetrics> true_column_means(const GroundTruthWorld& world,
                                           const ExecutionTrie& trie, unsigned threads) {
    return oracle_walk(world, trie, threads, [](int, const PathMetrics&, std::int64_t) {});
}

void oracle_annotate(ExecutionTrie& trie, const GroundTruthWorld& world, unsigned threads) {
    const std::int64_t q_count = world.num_requests();
    std::vector<std::int64_t> reach(static_cast<std::size_t>(trie.size_with_root()), 0);
    auto metrics = oracle_walk(world, trie, threads,
                               [&](int node, const PathMetrics&, std::int64_t reached) {
                                   reach[static_cast<std::size_t>(node)] = reached;
                               });
    for (int i = 1; i < trie.size_with_root(); ++i) {
        Annotation ann;
        ann.acc = metrics[static_cast<std::size_t>(i)].acc;
        ann.cost = metrics[static_cast<std::size_t>(i)].cost;
        ann.lat = metrics[static_cast<std::size_t>(i)].lat;
        ann.n_acc = q_count;
        ann.n_cost = q_count;
        ann.n_lat = reach[static_cast<std::size_t>(i)];
        trie.node_mut(i).ann = ann;
    }
}

}  // namespace trieplan
