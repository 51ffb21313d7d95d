#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trieplan/profiler.hpp"
#include "trieplan/trie.hpp"

namespace trieplan {

// ── Conditional accuracy cells ─────────────────────────────────────────
// Raw cascade entries at a node are exactly the outcomes of "this stage,
// given every ancestor failed", so their mean is an unbiased estimate of
// the conditional success rate. Cells are kept per child node; depth-d
// blocks (rows = depth-(d-1) prefixes, cols = admissible models) are views
// over them.

struct CondCell {
    double sum = 0.0;
    std::int64_t n = 0;
    bool observed() const { return n > 0; }
    double mean() const { return n > 0 ? sum / static_cast<double>(n) : 0.0; }
};

struct ConditionalMatrix {
    const ExecutionTrie* trie = nullptr;
    std::vector<CondCell> cells;  // indexed by node
};

ConditionalMatrix build_conditional_matrix(const ObservationSet& obs, const ExecutionTrie& trie);

// ── Column-mean estimates ──────────────────────────────────────────────

struct EstimateMeta {
    std::vector<std::int64_t> fallback_by_depth;  // unobserved conditional cells substituted
    double impute_residual = 0.0;                 // masked RMSE of the low-rank fit
    int impute_iters = 0;
    std::vector<double> rank1_residuals;          // Frobenius residual per smoothed depth
};

// One estimate per trie node (index 0 = root = 0). Estimators always
// extrapolate; no column is left without a value.
struct ColumnMeanEstimate {
    std::vector<double> mu;
    std::string method;
    EstimateMeta meta;
};

// Baseline 1: per-column mean of the directly visited entries only. Under
// cascade sampling deep columns are seen only where every ancestor failed,
// so this is strongly pessimistic at depth >= 2. Unobserved columns borrow
// the parent's estimate.
ColumnMeanEstimate estimate_direct_average(const FilledTable& filled, const ExecutionTrie& trie);

// Baseline 2: per-column mean over direct plus fill-in entries. Fill-in
// contributes successes only, so deep columns skew optimistic.
ColumnMeanEstimate estimate_prefix_avg(const FilledTable& filled, const ExecutionTrie& trie);

// Baseline 3: after fill-in, complete the request-path matrix with a masked
// rank-r factorization and average the completed columns.
ColumnMeanEstimate estimate_prefix_lowrank_impute(const FilledTable& filled,
                                                  const ExecutionTrie& trie, int rank);

// Cascade decomposition: mu(u.l) = mu(u) + (1-mu(u)) * q(l | u fails), with
// the conditional cells estimated from raw cascade entries. Unobserved
// cells substitute their depth block's observed-cell mean (recorded in
// meta.fallback_by_depth).
ColumnMeanEstimate estimate_cascade_lite(const ObservationSet& obs, const ExecutionTrie& trie);

// Same recursion, but conditional cells at depth >= 3 are replaced by the
// rank-1 projection of their depth block before recursing; depth-2 cells
// stay raw.
ColumnMeanEstimate estimate_cascade_smoothed(const ObservationSet& obs, const ExecutionTrie& trie);

// ── Low-rank primitives ────────────────────────────────────────────────

struct Rank1Result {
    std::vector<double> values;  // row-major rows x cols, clamped to [0,1]
    double residual = 0.0;       // Frobenius distance to the filled input
    int iters = 0;
    std::vector<int> all_missing_cols;
};

// Best rank-1 approximation by power iteration (tol 1e-8 on the singular
// vector, cap 500). Missing cells are initialized with column means;
// all-missing columns fall back to the block mean and are flagged.
Rank1Result rank1_project(const std::vector<double>& values, const std::vector<std::uint8_t>& mask,
                          int rows, int cols);

struct CompletionResult {
    std::vector<double> values;  // observed kept, missing imputed (clamped)
    double residual = 0.0;
    int iters = 0;
};

// Masked alternating least squares, rank `rank`, fixed iteration cap.
// Non-convergence is reported through the residual, never fatal.
CompletionResult masked_lowrank_complete(const std::vector<double>& values,
                                         const std::vector<std::uint8_t>& mask, int rows, int cols,
                                         int rank, int max_iters = 100);

// ── Error reporting ────────────────────────────────────────────────────

struct ErrorStats {
    int depth = 0;  // 0 = overall
    std::int64_t columns = 0;
    double mean_signed = 0.0;
    double mean_abs = 0.0;
    double max_abs = 0.0;
};

struct ErrorReport {
    ErrorStats overall;
    std::vector<ErrorStats> by_depth;
};

// Signed error is estimate minus truth, per terminal-eligible column.
ErrorReport error_report(const ColumnMeanEstimate& estimate, const std::vector<double>& truth_mu,
                         const ExecutionTrie& trie);

std::vector<double> truth_mu_of(const std::vector<PathMetrics>& metrics);

// Stamps an estimate into the trie. Accuracy comes from the estimate;
// cost/latency derive from the observation set's per-stage means (costs
// reach-discounted through the estimate's own success chain). Nodes whose
// stage was never observed borrow the same-model same-depth mean, then the
// depth mean.
void annotate_with_estimate(ExecutionTrie& trie, const ColumnMeanEstimate& est,
                            const ObservationSet& obs);

}  // namespace trieplan
