#include "trieplan/profiler.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_set>

#include <json.hpp>

namespace trieplan {

namespace {

// Reach count per node: requests for which every ancestor stage failed.
std::vector<std::int64_t> reach_counts(const GroundTruthWorld& world, const ExecutionTrie& trie) {
    std::vector<std::int64_t> reach(static_cast<std::size_t>(trie.size_with_root()), 0);
    std::vector<int> all(static_cast<std::size_t>(world.num_requests()));
    for (int q = 0; q < world.num_requests(); ++q) all[static_cast<std::size_t>(q)] = q;

    // Iterative DFS carrying the still-failing request set.
    struct Frame {
        int node;
        std::vector<int> alive;
    };
    std::vector<Frame> stack;
    for (auto it = trie.node(0).children.rbegin(); it != trie.node(0).children.rend(); ++it)
        stack.push_back({*it, all});
    while (!stack.empty()) {
        Frame f = std::move(stack.back());
        stack.pop_back();
        reach[static_cast<std::size_t>(f.node)] = static_cast<std::int64_t>(f.alive.size());
        const auto& n = trie.node(f.node);
        if (n.children.empty()) continue;
        std::vector<int> failing;
        failing.reserve(f.alive.size());
        for (int q : f.alive)
            if (!world.node_outcome(q, f.node)) failing.push_back(q);
        for (auto it = n.children.rbegin(); it != n.children.rend(); ++it)
            stack.push_back({*it, failing});
    }
    return reach;
}

}  // namespace

ObservationSet cascade_sample(const GroundTruthWorld& world, const ExecutionTrie& trie,
                              Budget budget, std::uint64_t seed) {
    if (!(budget.value > 0.0)) throw ConfigError("cascade_sample: budget must be positive");

    double dollars_cap = std::numeric_limits<double>::infinity();
    std::int64_t runs_cap = -1;
    switch (budget.kind) {
        case Budget::Kind::CoverageCheckpointed:
            if (budget.value > 1.0) throw ConfigError("cascade_sample: coverage must be in (0,1]");
            dollars_cap = budget.value * checkpointed_full_cost(world, trie).dollars;
            break;
        case Budget::Kind::CoverageNaive:
            if (budget.value > 1.0) throw ConfigError("cascade_sample: coverage must be in (0,1]");
            dollars_cap = budget.value * naive_full_cost(world, trie).dollars;
            break;
        case Budget::Kind::Runs:
            runs_cap = static_cast<std::int64_t>(budget.value);
            if (runs_cap < 1) throw ConfigError("cascade_sample: run budget must be >= 1");
            break;
        case Budget::Kind::Dollars:
            dollars_cap = budget.value;
            break;
    }

    ObservationSet obs;
    obs.seed = seed;
    std::unordered_set<std::uint64_t> seen;
    const int q_count = world.num_requests();
    // Dollar-capped sampling can only converge on the cap asymptotically once
    // most pairs are checkpointed; stop after a long streak of free runs.
    const std::int64_t stall_limit = std::max<std::int64_t>(10000, 50LL * q_count);
    std::int64_t stalled = 0;

    for (std::int64_t r = 0;; ++r) {
        if (runs_cap >= 0 && r >= runs_cap) break;
        if (runs_cap < 0 && obs.dollars >= dollars_cap) break;
        if (runs_cap < 0 && stalled >= stall_limit) break;

        int q = std::min(q_count - 1, static_cast<int>(u01(hash_key(seed, "run-request",
                                                                     static_cast<std::uint64_t>(r))) *
                                                       q_count));
        int cur = 0;
        double run_spend = 0.0;
        for (int depth = 1; depth <= trie.tmpl().max_depth; ++depth) {
            const auto& admissible = trie.tmpl().admissible_at(depth);
            auto pick_u = u01(hash_key(seed, "run-model", static_cast<std::uint64_t>(r),
                                       static_cast<std::uint64_t>(depth)));
            int mi = admissible[std::min(admissible.size() - 1,
                                         static_cast<std::size_t>(pick_u * admissible.size()))];
            int node = trie.child_of(cur, mi);
            std::uint64_t key = static_cast<std::uint64_t>(node) *
                                    static_cast<std::uint64_t>(q_count) +
                                static_cast<std::uint64_t>(q);
            if (seen.insert(key).second) {
                ObsEntry e;
                e.request = q;
                e.node = node;
                e.outcome = world.node_outcome(q, node) ? 1 : 0;
                e.cost = world.stage_cost(node);
                e.latency = world.stage_latency(q, node);
                obs.entries.push_back(e);
                obs.dollars += e.cost;
                ++obs.invocations;
                run_spend += e.cost;
            }
            if (world.node_outcome(q, node)) break;
            cur = node;
        }
        ++obs.runs;
        stalled = run_spend == 0.0 ? stalled + 1 : 0;
    }
    return obs;
}

void save_observations(const ObservationSet& obs, const ExecutionTrie& trie,
                       const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for write: " + path);
    nlohmann::json header;
    header["kind"] = "observations";
    header["seed"] = obs.seed;
    header["runs"] = obs.runs;
    header["invocations"] = obs.invocations;
    header["dollars"] = obs.dollars;
    f << header.dump() << '\n';
    for (const auto& e : obs.entries) {
        nlohmann::json rec;
        rec["request_id"] = e.request;
        rec["prefix"] = trie.key_of(e.node);
        rec["outcome"] = static_cast<int>(e.outcome);
        rec["cost"] = e.cost;
        rec["latency"] = e.latency;
        f << rec.dump() << '\n';
    }
}

ObservationSet load_observations(const std::string& path, const ExecutionTrie& trie) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open: " + path);
    ObservationSet obs;
    std::string line;
    bool first = true;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw IoError(path + ":" + std::to_string(line_no) + ": invalid JSON: " + e.what());
        }
        if (first) {
            if (!rec.contains("kind") || rec["kind"] != "observations")
                throw IoError(path + ": not an observation file");
            obs.seed = rec.value("seed", 0ULL);
            obs.runs = rec.value("runs", 0LL);
            first = false;
            continue;
        }
        ObsEntry e;
        e.request = rec.at("request_id").get<int>();
        std::string prefix = rec.at("prefix").get<std::string>();
        e.node = trie.find_key(prefix);
        if (e.node <= 0)
            throw IoError(path + ":" + std::to_string(line_no) + ": unknown prefix '" + prefix + "'");
        e.outcome = static_cast<std::uint8_t>(rec.at("outcome").get<int>());
        e.cost = rec.at("cost").get<double>();
        e.latency = rec.at("latency").get<double>();
        obs.entries.push_back(e);
        obs.dollars += e.cost;
        ++obs.invocations;
    }
    if (first) throw IoError(path + ": empty observation file");

    // Fill-in soundness rests on cascade reachability: a deep entry exists
    // only where every ancestor stage was observed failing.
    auto cell_key = [](int node, int request) {
        return (static_cast<std::uint64_t>(node) << 32) | static_cast<std::uint32_t>(request);
    };
    std::unordered_set<std::uint64_t> failed;
    for (const auto& e : obs.entries)
        if (!e.outcome) failed.insert(cell_key(e.node, e.request));
    for (const auto& e : obs.entries)
        for (int anc = trie.node(e.node).parent; anc > 0; anc = trie.node(anc).parent)
            if (!failed.count(cell_key(anc, e.request)))
                throw IoError(path + ": entry at '" + trie.key_of(e.node) + "' for request " +
                              std::to_string(e.request) + " lacks a failing ancestor observation");
    return obs;
}

FilledTable subtree_fill_in(const ObservationSet& obs, const ExecutionTrie& trie) {
    FilledTable table;
    table.columns.assign(static_cast<std::size_t>(trie.size_with_root()), ColumnFill{});
    table.cells.reserve(obs.entries.size());

    for (const auto& e : obs.entries) {
        table.cells.push_back({e.request, e.node, e.outcome, 1});
        auto& col = table.columns[static_cast<std::size_t>(e.node)];
        ++col.n_direct;
        col.ones_direct += e.outcome;
        if (!e.outcome) continue;
        // Success propagates to every extension of this prefix. Cascade
        // reachability guarantees these cells were never visited directly,
        // so no dedup is needed.
        std::vector<int> stack(trie.node(e.node).children);
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            table.cells.push_back({e.request, v, 1, 0});
            ++table.columns[static_cast<std::size_t>(v)].n_fill;
            for (int c : trie.node(v).children) stack.push_back(c);
        }
    }
    return table;
}

LedgerRow naive_full_cost(const GroundTruthWorld& world, const ExecutionTrie& trie) {
    LedgerRow row{"naive_full", 0, 0.0};
    const int q_count = world.num_requests();

    // DFS carrying each request's first success depth along the current path
    // and the cumulative stage cost at each depth.
    std::vector<int> succ(static_cast<std::size_t>(q_count), 0);
    std::vector<double> cost_at_depth(static_cast<std::size_t>(trie.tmpl().max_depth) + 1, 0.0);

    struct Frame {
        int node;
        int child_pos;
        std::vector<int> saved;  // success depths overwritten at this level
        std::vector<int> touched;
    };

    auto visit = [&](auto&& self, int node) -> void {
        const auto& n = trie.node(node);
        int d = n.depth;
        cost_at_depth[static_cast<std::size_t>(d)] =
            cost_at_depth[static_cast<std::size_t>(d - 1)] + world.stage_cost(node);
        std::vector<int> newly;
        for (int q = 0; q < q_count; ++q) {
            if (succ[static_cast<std::size_t>(q)] == 0 && world.node_outcome(q, node)) {
                succ[static_cast<std::size_t>(q)] = d;
                newly.push_back(q);
            }
        }
        if (n.terminal_eligible) {
            for (int q = 0; q < q_count; ++q) {
                int stop = succ[static_cast<std::size_t>(q)] == 0
                               ? d
                               : std::min(succ[static_cast<std::size_t>(q)], d);
                row.invocations += stop;
                row.dollars += cost_at_depth[static_cast<std::size_t>(stop)];
            }
        }
        for (int c : n.children) self(self, c);
        for (int q : newly) succ[static_cast<std::size_t>(q)] = 0;
    };
    for (int c : trie.node(0).children) visit(visit, c);
    return row;
}

LedgerRow checkpointed_full_cost(const GroundTruthWorld& world, const ExecutionTrie& trie) {
    LedgerRow row{"checkpointed_full", 0, 0.0};
    auto reach = reach_counts(world, trie);
    for (int i = 1; i < trie.size_with_root(); ++i) {
        row.invocations += reach[static_cast<std::size_t>(i)];
        row.dollars += static_cast<double>(reach[static_cast<std::size_t>(i)]) * world.stage_cost(i);
    }
    return row;
}

LedgerRow sparse_cost(const ObservationSet& obs) {
    return LedgerRow{"sparse", obs.invocations, obs.dollars};
}

CostLedger make_cost_ledger(const GroundTruthWorld& world, const ExecutionTrie& trie,
                            const ObservationSet* obs) {
    CostLedger ledger;
    ledger.naive_full = naive_full_cost(world, trie);
    ledger.checkpointed_full = checkpointed_full_cost(world, trie);
    if (obs) ledger.sparse = sparse_cost(*obs);
    return ledger;
}

namespace {

template <typename Cell>
CoverageStats coverage_from(const std::vector<Cell>& cells, const ExecutionTrie& trie,
                            int num_requests) {
    CoverageStats stats;
    stats.per_column_counts.assign(static_cast<std::size_t>(trie.size_with_root()), 0);
    for (const auto& c : cells) ++stats.per_column_counts[static_cast<std::size_t>(c.node)];

    int max_depth = trie.tmpl().max_depth;
    stats.depths.resize(static_cast<std::size_t>(max_depth));
    for (int d = 1; d <= max_depth; ++d) stats.depths[static_cast<std::size_t>(d - 1)].depth = d;
    for (int i = 1; i < trie.size_with_root(); ++i) {
        auto& row = stats.depths[static_cast<std::size_t>(trie.node(i).depth - 1)];
        ++row.columns;
        auto count = stats.per_column_counts[static_cast<std::size_t>(i)];
        row.entries += count;
        if (count > 0) ++row.observed_columns;
    }
    for (auto& row : stats.depths) {
        row.column_fraction =
            row.columns ? static_cast<double>(row.observed_columns) / static_cast<double>(row.columns)
                        : 0.0;
        row.cell_fraction =
            row.columns ? static_cast<double>(row.entries) /
                              (static_cast<double>(row.columns) * static_cast<double>(num_requests))
                        : 0.0;
    }
    return stats;
}

}  // namespace

CoverageStats coverage_stats(const ObservationSet& obs, const ExecutionTrie& trie,
                             int num_requests) {
    return coverage_from(obs.entries, trie, num_requests);
}

CoverageStats coverage_stats(const FilledTable& filled, const ExecutionTrie& trie,
                             int num_requests) {
    return coverage_from(filled.cells, trie, num_requests);
}

}  // namespace trieplan
