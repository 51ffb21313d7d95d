#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "trieplan/trie.hpp"
#include "trieplan/workflow.hpp"

namespace trieplan {

// ── Synthetic success law ──────────────────────────────────────────────
// The per-(request, prefix) probability that the stage at the end of the
// prefix succeeds given every earlier stage failed. Two laws:
//   Table    — request-independent probability per prefix, given explicitly.
//   Logistic — sigmoid(model strength - request difficulty - depth penalty),
//              optionally overriding deep blocks with an outer-product law
//              so the deep conditional matrix is (near-)rank-1.

struct DifficultyLaw {
    double mean = 0.0;
    double sigma = 1.0;
};

struct DeepBlockLaw {
    enum class Kind { Inherit, Rank1Logit, Rank1Prob };
    Kind kind = Kind::Inherit;
    int start_depth = 3;
    double row_min = 0.5, row_max = 1.5;
    double col_min = -1.0, col_max = 1.0;
    double noise_sigma = 0.0;  // additive on the outer product, per cell
};

struct AccuracyLaw {
    enum class Kind { Logistic, Table };
    Kind kind = Kind::Logistic;
    // Logistic law
    DifficultyLaw difficulty;
    std::map<std::string, double> strengths;  // by model id
    double depth_penalty = 0.0;
    DeepBlockLaw deep;
    // Table law: conditional probability per prefix key ("G/S"), request-free
    std::map<std::string, double> table;
};

struct WorldConfig {
    int num_requests = 0;
    AccuracyLaw law;
};

struct TraceRecord {
    int request = -1;
    std::vector<int> path;               // model indices
    std::vector<std::uint8_t> reached;   // per position
    std::vector<double> stage_cost;      // realized, zero where unreached
    std::vector<double> stage_latency;   // realized, zero where unreached
    bool success = false;
    int stop_depth = 0;  // first successful depth, else path length
};

// Ground truth for experiments: a frozen table of per-(request, prefix)
// conditional outcomes with cost/latency samplers. Success of a full path
// is "some prefix succeeded", so the request-path table is prefix-closed
// by construction. Everything is a pure function of (template, catalog,
// config, seed); regeneration is bit-identical.
class GroundTruthWorld {
public:
    static GroundTruthWorld generate(const WorkflowTemplate& tmpl, const ModelCatalog& catalog,
                                     const WorldConfig& cfg, std::uint64_t seed);

    int num_requests() const { return num_requests_; }
    std::uint64_t seed() const { return seed_; }
    const ExecutionTrie& trie() const { return trie_; }
    const WorldConfig& config() const { return config_; }

    // Bernoulli outcome of the stage ending `node`, given all ancestors failed.
    bool node_outcome(int request, int node) const {
        return outcomes_[cell(request, node)] != 0;
    }
    double conditional_prob(int request, int node) const;
    // Realized stage latency: model draw plus per-depth tool overhead.
    double stage_latency(int request, int node) const;
    // Realized stage cost: model cost plus per-depth tool overhead.
    double stage_cost(int node) const;
    // Whether request succeeds somewhere on the prefix ending at `node`.
    bool path_success(int request, int node) const;

private:
    std::size_t cell(int request, int node) const {
        return static_cast<std::size_t>(node - 1) * static_cast<std::size_t>(num_requests_) +
               static_cast<std::size_t>(request);
    }

    WorkflowTemplate template_;
    ModelCatalog catalog_;
    WorldConfig config_;
    ExecutionTrie trie_;
    std::uint64_t seed_ = 0;
    int num_requests_ = 0;
    std::vector<std::uint8_t> outcomes_;  // (node-1) * Q + request
};

// Executes a path for one request: walk stages in order, stop at the first
// success or at path end. Rejects paths that are not feasible prefixes.
TraceRecord realize_run(const GroundTruthWorld& world, int request,
                        const std::vector<int>& model_path);
TraceRecord realize_run_node(const GroundTruthWorld& world, int request, int node);

struct PathMetrics {
    double acc = 0.0;
    double cost = 0.0;
    double lat = 0.0;
};

// Brute-force oracle: exact column means over every request, per node.
// Index 0 is the root (all zeros). This is the reference every estimator
// is tested against.
std::vector<PathMetrics> true_column_means(const GroundTruthWorld& world,
                                           const ExecutionTrie& trie, unsigned threads = 1);

// Stamps the oracle metrics into the trie's annotations (supports = |Q| and
// per-stage reach counts).
void oracle_annotate(ExecutionTrie& trie, const GroundTruthWorld& world, unsigned threads = 1);

}  // namespace trieplan
