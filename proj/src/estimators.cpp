#include "trieplan/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace trieplan {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Parents precede children in build order, so a single forward sweep sees
// every parent estimate before it is needed.
void back_fill_from_parent(std::vector<double>& mu, const ExecutionTrie& trie,
                           const std::vector<std::uint8_t>& has_value) {
    for (int i = 1; i < trie.size_with_root(); ++i)
        if (!has_value[static_cast<std::size_t>(i)])
            mu[static_cast<std::size_t>(i)] = mu[static_cast<std::size_t>(trie.node(i).parent)];
}

}  // namespace

ConditionalMatrix build_conditional_matrix(const ObservationSet& obs, const ExecutionTrie& trie) {
    ConditionalMatrix m;
    m.trie = &trie;
    m.cells.assign(static_cast<std::size_t>(trie.size_with_root()), CondCell{});
    for (const auto& e : obs.entries) {
        auto& c = m.cells[static_cast<std::size_t>(e.node)];
        c.sum += e.outcome;
        ++c.n;
    }
    return m;
}

ColumnMeanEstimate estimate_direct_average(const FilledTable& filled, const ExecutionTrie& trie) {
    ColumnMeanEstimate est;
    est.method = "direct_average";
    est.mu.assign(static_cast<std::size_t>(trie.size_with_root()), 0.0);
    std::vector<std::uint8_t> has(static_cast<std::size_t>(trie.size_with_root()), 0);
    for (int i = 1; i < trie.size_with_root(); ++i) {
        const auto& col = filled.columns[static_cast<std::size_t>(i)];
        if (col.n_direct > 0) {
            est.mu[static_cast<std::size_t>(i)] =
                static_cast<double>(col.ones_direct) / static_cast<double>(col.n_direct);
            has[static_cast<std::size_t>(i)] = 1;
        }
    }
    back_fill_from_parent(est.mu, trie, has);
    return est;
}

ColumnMeanEstimate estimate_prefix_avg(const FilledTable& filled, const ExecutionTrie& trie) {
    ColumnMeanEstimate est;
    est.method = "prefix_avg";
    est.mu.assign(static_cast<std::size_t>(trie.size_with_root()), 0.0);
    std::vector<std::uint8_t> has(static_cast<std::size_t>(trie.size_with_root()), 0);
    for (int i = 1; i < trie.size_with_root(); ++i) {
        const auto& col = filled.columns[static_cast<std::size_t>(i)];
        std::int64_t n = col.n_direct + col.n_fill;
        if (n > 0) {
            est.mu[static_cast<std::size_t>(i)] =
                static_cast<double>(col.ones_direct + col.n_fill) / static_cast<double>(n);
            has[static_cast<std::size_t>(i)] = 1;
        }
    }
    back_fill_from_parent(est.mu, trie, has);
    return est;
}

// ── Masked ALS ─────────────────────────────────────────────────────────

namespace {

// Solves the small SPD system (G + lambda I) x = b in place, n <= rank.
void solve_spd(std::vector<double>& g, std::vector<double>& b, int n, double lambda) {
    for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i * n + i)] += lambda;
    // Gaussian elimination with partial pivoting; n is tiny.
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::fabs(g[static_cast<std::size_t>(r * n + col)]) >
                std::fabs(g[static_cast<std::size_t>(pivot * n + col)]))
                pivot = r;
        if (pivot != col) {
            for (int c = 0; c < n; ++c)
                std::swap(g[static_cast<std::size_t>(col * n + c)],
                          g[static_cast<std::size_t>(pivot * n + c)]);
            std::swap(b[static_cast<std::size_t>(col)], b[static_cast<std::size_t>(pivot)]);
        }
        double d = g[static_cast<std::size_t>(col * n + col)];
        if (d == 0.0) continue;
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            double f = g[static_cast<std::size_t>(r * n + col)] / d;
            if (f == 0.0) continue;
            for (int c = col; c < n; ++c)
                g[static_cast<std::size_t>(r * n + c)] -= f * g[static_cast<std::size_t>(col * n + c)];
            b[static_cast<std::size_t>(r)] -= f * b[static_cast<std::size_t>(col)];
        }
    }
    for (int i = 0; i < n; ++i) {
        double d = g[static_cast<std::size_t>(i * n + i)];
        b[static_cast<std::size_t>(i)] = d != 0.0 ? b[static_cast<std::size_t>(i)] / d : 0.0;
    }
}

}  // namespace

CompletionResult masked_lowrank_complete(const std::vector<double>& values,
                                         const std::vector<std::uint8_t>& mask, int rows, int cols,
                                         int rank, int max_iters) {
    if (rank < 1) throw ConfigError("masked_lowrank_complete: rank must be >= 1");
    const double lambda = 1e-9;
    const std::size_t r = static_cast<std::size_t>(rank);

    auto at = [&](int i, int j) { return static_cast<std::size_t>(i) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(j); };

    std::vector<double> u(static_cast<std::size_t>(rows) * r, 0.0);
    std::vector<double> v(static_cast<std::size_t>(cols) * r, 0.0);
    for (int j = 0; j < cols; ++j) {
        double sum = 0.0;
        std::int64_t n = 0;
        for (int i = 0; i < rows; ++i)
            if (mask[at(i, j)]) {
                sum += values[at(i, j)];
                ++n;
            }
        v[static_cast<std::size_t>(j) * r] = n > 0 ? sum / static_cast<double>(n) : 0.5;
        for (std::size_t k = 1; k < r; ++k)
            v[static_cast<std::size_t>(j) * r + k] =
                0.01 * u01(hash_key(0x5eedULL, "als-init", static_cast<std::uint64_t>(j), k));
    }
    for (int i = 0; i < rows; ++i) u[static_cast<std::size_t>(i) * r] = 1.0;

    auto solve_side = [&](bool solve_rows) {
        int outer = solve_rows ? rows : cols;
        std::vector<double> gram(r * r), rhs(r);
        for (int a = 0; a < outer; ++a) {
            std::fill(gram.begin(), gram.end(), 0.0);
            std::fill(rhs.begin(), rhs.end(), 0.0);
            int inner = solve_rows ? cols : rows;
            bool any = false;
            for (int b = 0; b < inner; ++b) {
                int i = solve_rows ? a : b;
                int j = solve_rows ? b : a;
                if (!mask[at(i, j)]) continue;
                any = true;
                const double* w = solve_rows ? &v[static_cast<std::size_t>(j) * r]
                                             : &u[static_cast<std::size_t>(i) * r];
                for (std::size_t p = 0; p < r; ++p) {
                    rhs[p] += w[p] * values[at(i, j)];
                    for (std::size_t q2 = 0; q2 < r; ++q2) gram[p * r + q2] += w[p] * w[q2];
                }
            }
            double* out = solve_rows ? &u[static_cast<std::size_t>(a) * r]
                                     : &v[static_cast<std::size_t>(a) * r];
            if (!any) continue;  // leave initialization in place
            std::vector<double> g = gram, b2 = rhs;
            solve_spd(g, b2, rank, lambda);
            for (std::size_t p = 0; p < r; ++p) out[p] = b2[p];
        }
    };

    double prev_rmse = std::numeric_limits<double>::infinity();
    CompletionResult res;
    for (res.iters = 0; res.iters < max_iters; ++res.iters) {
        solve_side(true);
        solve_side(false);
        double se = 0.0;
        std::int64_t n = 0;
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) {
                if (!mask[at(i, j)]) continue;
                double fit = 0.0;
                for (std::size_t p = 0; p < r; ++p)
                    fit += u[static_cast<std::size_t>(i) * r + p] * v[static_cast<std::size_t>(j) * r + p];
                double d = fit - values[at(i, j)];
                se += d * d;
                ++n;
            }
        double rmse = n > 0 ? std::sqrt(se / static_cast<double>(n)) : 0.0;
        res.residual = rmse;
        if (std::fabs(prev_rmse - rmse) < 1e-12) break;
        prev_rmse = rmse;
    }

    res.values = values;
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
            if (mask[at(i, j)]) continue;
            double fit = 0.0;
            for (std::size_t p = 0; p < r; ++p)
                fit += u[static_cast<std::size_t>(i) * r + p] * v[static_cast<std::size_t>(j) * r + p];
            res.values[at(i, j)] = clamp01(fit);
        }
    return res;
}

ColumnMeanEstimate estimate_prefix_lowrank_impute(const FilledTable& filled,
                                                  const ExecutionTrie& trie, int rank) {
    if (rank < 1) throw ConfigError("estimate_prefix_lowrank_impute: rank must be >= 1");
    ColumnMeanEstimate est;
    est.method = "prefix_lowrank_impute";
    est.mu.assign(static_cast<std::size_t>(trie.size_with_root()), 0.0);

    // Rows: requests with at least one (direct or filled) cell — a uniform
    // subsample of the request set, so their column means stay unbiased.
    std::map<int, int> row_of;
    for (const auto& c : filled.cells) row_of.emplace(c.request, 0);
    int rows = 0;
    for (auto& [req, idx] : row_of) idx = rows++;
    const int cols = trie.node_count();

    if (rows == 0) {
        est.method = "prefix_lowrank_impute";
        return est;  // nothing observed anywhere; all-zero estimate
    }

    std::vector<double> values(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0);
    std::vector<std::uint8_t> mask(values.size(), 0);
    auto at = [&](int i, int node) {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(cols) +
               static_cast<std::size_t>(node - 1);
    };
    for (const auto& c : filled.cells) {
        std::size_t idx = at(row_of[c.request], c.node);
        values[idx] = c.value;
        mask[idx] = 1;
    }

    auto completed = masked_lowrank_complete(values, mask, rows, cols, rank);
    est.meta.impute_residual = completed.residual;
    est.meta.impute_iters = completed.iters;

    for (int node = 1; node < trie.size_with_root(); ++node) {
        double sum = 0.0;
        for (int i = 0; i < rows; ++i) sum += completed.values[at(i, node)];
        est.mu[static_cast<std::size_t>(node)] = clamp01(sum / static_cast<double>(rows));
    }
    return est;
}

// ── Rank-1 projection ──────────────────────────────────────────────────

Rank1Result rank1_project(const std::vector<double>& values, const std::vector<std::uint8_t>& mask,
                          int rows, int cols) {
    if (rows <= 0 || cols <= 0) throw ConfigError("rank1_project: empty block");
    Rank1Result res;
    auto at = [&](int i, int j) {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(cols) +
               static_cast<std::size_t>(j);
    };

    double global_sum = 0.0;
    std::int64_t global_n = 0;
    for (std::size_t k = 0; k < values.size(); ++k)
        if (mask[k]) {
            global_sum += values[k];
            ++global_n;
        }
    double global_mean = global_n > 0 ? global_sum / static_cast<double>(global_n) : 0.0;

    std::vector<double> filled(values.size(), 0.0);
    std::vector<double> col_mean(static_cast<std::size_t>(cols), global_mean);
    for (int j = 0; j < cols; ++j) {
        double sum = 0.0;
        std::int64_t n = 0;
        for (int i = 0; i < rows; ++i)
            if (mask[at(i, j)]) {
                sum += values[at(i, j)];
                ++n;
            }
        if (n > 0)
            col_mean[static_cast<std::size_t>(j)] = sum / static_cast<double>(n);
        else
            res.all_missing_cols.push_back(j);
    }
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            filled[at(i, j)] = mask[at(i, j)] ? values[at(i, j)] : col_mean[static_cast<std::size_t>(j)];

    // Leading singular triple by power iteration on the filled block.
    std::vector<double> v(static_cast<std::size_t>(cols), 0.0), u(static_cast<std::size_t>(rows), 0.0);
    double vnorm = 0.0;
    for (int j = 0; j < cols; ++j) vnorm += col_mean[static_cast<std::size_t>(j)] * col_mean[static_cast<std::size_t>(j)];
    vnorm = std::sqrt(vnorm);
    for (int j = 0; j < cols; ++j)
        v[static_cast<std::size_t>(j)] = vnorm > 0.0 ? col_mean[static_cast<std::size_t>(j)] / vnorm
                                                     : 1.0 / std::sqrt(static_cast<double>(cols));

    double sigma = 0.0;
    for (res.iters = 0; res.iters < 500; ++res.iters) {
        double unorm = 0.0;
        for (int i = 0; i < rows; ++i) {
            double s = 0.0;
            for (int j = 0; j < cols; ++j) s += filled[at(i, j)] * v[static_cast<std::size_t>(j)];
            u[static_cast<std::size_t>(i)] = s;
            unorm += s * s;
        }
        unorm = std::sqrt(unorm);
        if (unorm == 0.0) break;  // zero block
        for (int i = 0; i < rows; ++i) u[static_cast<std::size_t>(i)] /= unorm;

        std::vector<double> v_new(static_cast<std::size_t>(cols), 0.0);
        double vnorm2 = 0.0;
        for (int j = 0; j < cols; ++j) {
            double s = 0.0;
            for (int i = 0; i < rows; ++i) s += filled[at(i, j)] * u[static_cast<std::size_t>(i)];
            v_new[static_cast<std::size_t>(j)] = s;
            vnorm2 += s * s;
        }
        vnorm2 = std::sqrt(vnorm2);
        if (vnorm2 == 0.0) break;
        sigma = vnorm2;
        double delta = 0.0;
        for (int j = 0; j < cols; ++j) {
            v_new[static_cast<std::size_t>(j)] /= vnorm2;
            delta = std::max(delta, std::fabs(v_new[static_cast<std::size_t>(j)] - v[static_cast<std::size_t>(j)]));
        }
        v = std::move(v_new);
        if (delta < 1e-8) break;
    }

    res.values.assign(values.size(), 0.0);
    double fro = 0.0;
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
            double fit = sigma * u[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(j)];
            double d = fit - filled[at(i, j)];
            fro += d * d;
            res.values[at(i, j)] = clamp01(fit);
        }
    res.residual = std::sqrt(fro);
    return res;
}

// ── Cascade decomposition ──────────────────────────────────────────────

namespace {

// Fallback per depth: mean of that depth's observed conditional cells,
// borrowing the nearest shallower depth when a whole block is unobserved.
std::vector<double> depth_fallbacks(const ConditionalMatrix& cond, const ExecutionTrie& trie) {
    int max_depth = trie.tmpl().max_depth;
    std::vector<double> sum(static_cast<std::size_t>(max_depth) + 1, 0.0);
    std::vector<std::int64_t> cnt(static_cast<std::size_t>(max_depth) + 1, 0);
    for (int i = 1; i < trie.size_with_root(); ++i) {
        const auto& c = cond.cells[static_cast<std::size_t>(i)];
        if (!c.observed()) continue;
        auto d = static_cast<std::size_t>(trie.node(i).depth);
        sum[d] += c.mean();
        ++cnt[d];
    }
    std::vector<double> fb(static_cast<std::size_t>(max_depth) + 1, 0.0);
    double last = 0.0;
    for (int d = 1; d <= max_depth; ++d) {
        if (cnt[static_cast<std::size_t>(d)] > 0)
            last = sum[static_cast<std::size_t>(d)] / static_cast<double>(cnt[static_cast<std::size_t>(d)]);
        fb[static_cast<std::size_t>(d)] = last;
    }
    return fb;
}

ColumnMeanEstimate cascade_reconstruct(const ConditionalMatrix& cond, const ExecutionTrie& trie,
                                       const std::vector<double>* overrides, int override_from_depth,
                                       std::string method) {
    ColumnMeanEstimate est;
    est.method = std::move(method);
    est.mu.assign(static_cast<std::size_t>(trie.size_with_root()), 0.0);
    est.meta.fallback_by_depth.assign(static_cast<std::size_t>(trie.tmpl().max_depth) + 1, 0);
    auto fb = depth_fallbacks(cond, trie);

    for (int i = 1; i < trie.size_with_root(); ++i) {  // parents precede children
        const auto& n = trie.node(i);
        double q_hat;
        if (overrides && n.depth >= override_from_depth &&
            (*overrides)[static_cast<std::size_t>(i)] >= 0.0) {
            q_hat = (*overrides)[static_cast<std::size_t>(i)];
        } else if (cond.cells[static_cast<std::size_t>(i)].observed()) {
            q_hat = cond.cells[static_cast<std::size_t>(i)].mean();
        } else {
            q_hat = fb[static_cast<std::size_t>(n.depth)];
            ++est.meta.fallback_by_depth[static_cast<std::size_t>(n.depth)];
        }
        double parent_mu = est.mu[static_cast<std::size_t>(n.parent)];
        est.mu[static_cast<std::size_t>(i)] = parent_mu + (1.0 - parent_mu) * clamp01(q_hat);
    }
    return est;
}

}  // namespace

ColumnMeanEstimate estimate_cascade_lite(const ObservationSet& obs, const ExecutionTrie& trie) {
    auto cond = build_conditional_matrix(obs, trie);
    return cascade_reconstruct(cond, trie, nullptr, 0, "cascade_lite");
}

ColumnMeanEstimate estimate_cascade_smoothed(const ObservationSet& obs, const ExecutionTrie& trie) {
    auto cond = build_conditional_matrix(obs, trie);
    constexpr int kSmoothFromDepth = 3;

    std::vector<double> overrides(static_cast<std::size_t>(trie.size_with_root()), -1.0);
    std::vector<double> residuals;

    for (int d = kSmoothFromDepth; d <= trie.tmpl().max_depth; ++d) {
        // Depth-d block: rows are depth-(d-1) prefixes, cols the admissible
        // models at depth d. Node indices are contiguous per depth (BFS).
        std::vector<int> parents;
        for (int i = 1; i < trie.size_with_root(); ++i)
            if (trie.node(i).depth == d - 1) parents.push_back(i);
        const auto& admissible = trie.tmpl().admissible_at(d);
        int rows = static_cast<int>(parents.size());
        int cols = static_cast<int>(admissible.size());
        if (rows == 0 || cols == 0) continue;

        std::vector<double> vals(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0);
        std::vector<std::uint8_t> mask(vals.size(), 0);
        std::int64_t observed = 0;
        for (int ri = 0; ri < rows; ++ri)
            for (int ci = 0; ci < cols; ++ci) {
                int node = trie.child_of(parents[static_cast<std::size_t>(ri)],
                                         admissible[static_cast<std::size_t>(ci)]);
                const auto& cell = cond.cells[static_cast<std::size_t>(node)];
                std::size_t k = static_cast<std::size_t>(ri) * static_cast<std::size_t>(cols) +
                                static_cast<std::size_t>(ci);
                if (cell.observed()) {
                    vals[k] = cell.mean();
                    mask[k] = 1;
                    ++observed;
                }
            }
        if (observed == 0) continue;  // nothing to project; recursion falls back

        auto proj = rank1_project(vals, mask, rows, cols);
        residuals.push_back(proj.residual);
        for (int ri = 0; ri < rows; ++ri)
            for (int ci = 0; ci < cols; ++ci) {
                int node = trie.child_of(parents[static_cast<std::size_t>(ri)],
                                         admissible[static_cast<std::size_t>(ci)]);
                overrides[static_cast<std::size_t>(node)] =
                    proj.values[static_cast<std::size_t>(ri) * static_cast<std::size_t>(cols) +
                                static_cast<std::size_t>(ci)];
            }
    }

    auto est = cascade_reconstruct(cond, trie, &overrides, kSmoothFromDepth, "cascade_smoothed");
    est.meta.rank1_residuals = std::move(residuals);
    return est;
}

// ── Error reporting ────────────────────────────────────────────────────

std::vector<double> truth_mu_of(const std::vector<PathMetrics>& metrics) {
    std::vector<double> mu(metrics.size(), 0.0);
    for (std::size_t i = 0; i < metrics.size(); ++i) mu[i] = metrics[i].acc;
    return mu;
}

void annotate_with_estimate(ExecutionTrie& trie, const ColumnMeanEstimate& est,
                            const ObservationSet& obs) {
    struct StageAgg {
        double cost_sum = 0.0, lat_sum = 0.0;
        std::int64_t n = 0;
    };
    std::vector<StageAgg> per_node(static_cast<std::size_t>(trie.size_with_root()));
    for (const auto& e : obs.entries) {
        auto& a = per_node[static_cast<std::size_t>(e.node)];
        a.cost_sum += e.cost;
        a.lat_sum += e.latency;
        ++a.n;
    }

    // Fallback means for unobserved stages: same (model, depth), then depth.
    std::map<std::pair<int, int>, StageAgg> by_model_depth;
    std::map<int, StageAgg> by_depth;
    for (int i = 1; i < trie.size_with_root(); ++i) {
        const auto& a = per_node[static_cast<std::size_t>(i)];
        if (a.n == 0) continue;
        auto& md = by_model_depth[{trie.node(i).model, trie.node(i).depth}];
        md.cost_sum += a.cost_sum;
        md.lat_sum += a.lat_sum;
        md.n += a.n;
        auto& d = by_depth[trie.node(i).depth];
        d.cost_sum += a.cost_sum;
        d.lat_sum += a.lat_sum;
        d.n += a.n;
    }
    auto stage_means = [&](int node) -> std::pair<double, double> {
        const auto& a = per_node[static_cast<std::size_t>(node)];
        if (a.n > 0) return {a.cost_sum / static_cast<double>(a.n), a.lat_sum / static_cast<double>(a.n)};
        auto md = by_model_depth.find({trie.node(node).model, trie.node(node).depth});
        if (md != by_model_depth.end() && md->second.n > 0)
            return {md->second.cost_sum / static_cast<double>(md->second.n),
                    md->second.lat_sum / static_cast<double>(md->second.n)};
        auto d = by_depth.find(trie.node(node).depth);
        if (d != by_depth.end() && d->second.n > 0)
            return {d->second.cost_sum / static_cast<double>(d->second.n),
                    d->second.lat_sum / static_cast<double>(d->second.n)};
        return {0.0, 0.0};
    };

    for (int i = 1; i < trie.size_with_root(); ++i) {  // parents precede children
        const TrieNode& n = trie.node(i);
        const Annotation parent = *trie.node(n.parent).ann;
        auto [stage_cost, stage_lat] = stage_means(i);
        Annotation ann;
        ann.acc = est.mu[static_cast<std::size_t>(i)];
        double reach = 1.0 - est.mu[static_cast<std::size_t>(n.parent)];
        ann.cost = parent.cost + reach * stage_cost;
        ann.lat = parent.lat + stage_lat;
        ann.n_acc = per_node[static_cast<std::size_t>(i)].n;
        ann.n_cost = per_node[static_cast<std::size_t>(i)].n;
        ann.n_lat = per_node[static_cast<std::size_t>(i)].n;
        trie.node_mut(i).ann = ann;
    }
}

ErrorReport error_report(const ColumnMeanEstimate& estimate, const std::vector<double>& truth_mu,
                         const ExecutionTrie& trie) {
    ErrorReport report;
    int max_depth = trie.tmpl().max_depth;
    report.by_depth.resize(static_cast<std::size_t>(max_depth));
    for (int d = 1; d <= max_depth; ++d) report.by_depth[static_cast<std::size_t>(d - 1)].depth = d;

    auto add = [](ErrorStats& s, double err) {
        ++s.columns;
        s.mean_signed += err;
        s.mean_abs += std::fabs(err);
        s.max_abs = std::max(s.max_abs, std::fabs(err));
    };
    for (int i = 1; i < trie.size_with_root(); ++i) {
        if (!trie.node(i).terminal_eligible) continue;
        double err = estimate.mu[static_cast<std::size_t>(i)] - truth_mu[static_cast<std::size_t>(i)];
        add(report.overall, err);
        add(report.by_depth[static_cast<std::size_t>(trie.node(i).depth - 1)], err);
    }
    auto finish = [](ErrorStats& s) {
        if (s.columns > 0) {
            s.mean_signed /= static_cast<double>(s.columns);
            s.mean_abs /= static_cast<double>(s.columns);
        }
    };
    finish(report.overall);
    for (auto& s : report.by_depth) finish(s);
    return report;
}

}  // namespace trieplan
