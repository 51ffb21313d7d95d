// Command-line front end: generate worlds, profile them sparsely, estimate
// path metrics, plan single requests, and drive policy simulations. All
// tabular outputs are CSV (header row, '.' decimal); configs and artifacts
// are JSON. Data goes to files, diagnostics to stderr.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>

#include <CLI11.hpp>
#include <json.hpp>

#include "trieplan/config.hpp"
#include "trieplan/controller.hpp"
#include "trieplan/estimators.hpp"
#include "trieplan/planner.hpp"
#include "trieplan/profiler.hpp"
#include "trieplan/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace trieplan;

namespace {

constexpr const char* kToolVersion = "0.1.0";

std::ofstream open_out(const fs::path& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for write: " + path.string());
    return f;
}

void csv_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << csv_escape(fields[i]);
    }
    out << "\r\n";
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

struct Manifest {
    std::string subcommand;
    json args = json::object();
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    void write(const fs::path& out_dir, std::uint64_t seed) const {
        json doc;
        doc["tool"] = "trieplan";
        doc["version"] = kToolVersion;
        doc["subcommand"] = subcommand;
        doc["args"] = args;
        doc["seed"] = seed;
        doc["outputs"] = outputs;
        doc["wall_ms"] =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        auto f = open_out(out_dir / "manifest.json");
        f << doc.dump(2) << '\n';
    }
};

fs::path ensure_out_dir(const std::string& out) {
    if (out.empty()) throw ConfigError("--out is required");
    fs::path dir(out);
    fs::create_directories(dir);
    return dir;
}

// ── gen-world ──────────────────────────────────────────────────────────

int cmd_gen_world(const std::string& config_path, std::uint64_t seed, const std::string& out,
                  unsigned threads) {
    Manifest mf;
    mf.subcommand = "gen-world";
    auto cfg = load_experiment_config(config_path);
    auto out_dir = ensure_out_dir(out);
    auto world = GroundTruthWorld::generate(cfg.tmpl, cfg.catalog, cfg.world, seed);
    auto trie = ExecutionTrie::build(cfg.tmpl, cfg.catalog);
    auto metrics = true_column_means(world, trie, threads);

    {
        auto f = open_out(out_dir / "true_metrics.csv");
        csv_row(f, {"prefix", "depth", "terminal", "acc", "cost", "lat"});
        for (int i = 1; i < trie.size_with_root(); ++i) {
            const auto& m = metrics[static_cast<std::size_t>(i)];
            csv_row(f, {trie.key_of(i), std::to_string(trie.node(i).depth),
                        trie.node(i).terminal_eligible ? "1" : "0", fmt_double(m.acc),
                        fmt_double(m.cost), fmt_double(m.lat)});
        }
        mf.outputs.push_back("true_metrics.csv");
    }
    {
        ExecutionTrie annotated = trie;
        oracle_annotate(annotated, world, threads);
        save_annotations_file(annotated, (out_dir / "oracle_annotations.json").string());
        mf.outputs.push_back("oracle_annotations.json");
    }
    {
        json summary;
        summary["requests"] = world.num_requests();
        summary["nodes"] = trie.node_count();
        summary["terminal_nodes"] = trie.terminal_count();
        std::map<int, int> per_depth;
        for (int i = 1; i < trie.size_with_root(); ++i) ++per_depth[trie.node(i).depth];
        summary["nodes_per_depth"] = per_depth;
        summary["template_hash"] = hex64(trie.template_hash());
        summary["catalog_hash"] = hex64(trie.catalog_hash());
        auto f = open_out(out_dir / "summary.json");
        f << summary.dump(2) << '\n';
        mf.outputs.push_back("summary.json");
    }
    mf.args = {{"config", config_path}, {"threads", threads}};
    mf.write(out_dir, seed);
    std::cerr << "gen-world: " << trie.node_count() << " nodes, " << world.num_requests()
              << " requests -> " << out_dir.string() << "\n";
    return 0;
}

// ── profile ────────────────────────────────────────────────────────────

int cmd_profile(const std::string& config_path, std::uint64_t seed, double coverage,
                const std::string& budget_mode, const std::string& out, unsigned threads) {
    Manifest mf;
    mf.subcommand = "profile";
    auto cfg = load_experiment_config(config_path);
    auto out_dir = ensure_out_dir(out);
    auto world = GroundTruthWorld::generate(cfg.tmpl, cfg.catalog, cfg.world, seed);
    auto trie = ExecutionTrie::build(cfg.tmpl, cfg.catalog);

    Budget budget;
    budget.value = coverage;
    if (budget_mode == "checkpointed") budget.kind = Budget::Kind::CoverageCheckpointed;
    else if (budget_mode == "naive") budget.kind = Budget::Kind::CoverageNaive;
    else if (budget_mode == "runs") budget.kind = Budget::Kind::Runs;
    else if (budget_mode == "dollars") budget.kind = Budget::Kind::Dollars;
    else throw ConfigError("--budget-mode: expected checkpointed|naive|runs|dollars");

    std::uint64_t profile_seed = hash_key(seed, "profile-stream");
    auto obs = cascade_sample(world, trie, budget, profile_seed);
    save_observations(obs, trie, (out_dir / "observations.jsonl").string());
    mf.outputs.push_back("observations.jsonl");

    auto ledger = make_cost_ledger(world, trie, &obs);
    {
        auto f = open_out(out_dir / "cost_ledger.csv");
        csv_row(f, {"regime", "invocations", "dollars", "ratio_vs_naive"});
        auto emit = [&](const LedgerRow& row) {
            double ratio = row.dollars > 0.0 ? ledger.naive_full.dollars / row.dollars : 0.0;
            csv_row(f, {row.regime, std::to_string(row.invocations), fmt_double(row.dollars),
                        fmt_double(ratio)});
        };
        emit(ledger.naive_full);
        emit(ledger.checkpointed_full);
        emit(ledger.sparse);
        mf.outputs.push_back("cost_ledger.csv");
    }

    auto stats = coverage_stats(obs, trie, world.num_requests());
    {
        auto f = open_out(out_dir / "coverage.csv");
        csv_row(f, {"depth", "columns", "observed_columns", "column_fraction", "entries",
                    "cell_fraction"});
        for (const auto& d : stats.depths)
            csv_row(f, {std::to_string(d.depth), std::to_string(d.columns),
                        std::to_string(d.observed_columns), fmt_double(d.column_fraction),
                        std::to_string(d.entries), fmt_double(d.cell_fraction)});
        mf.outputs.push_back("coverage.csv");
    }
    {
        // Per-column entry counts, bucketed per depth.
        const std::vector<std::int64_t> edges{0, 1, 2, 5, 10, 20, 50, 100, 200, 500};
        auto f = open_out(out_dir / "coverage_hist.csv");
        csv_row(f, {"depth", "bucket_lo", "bucket_hi", "columns"});
        for (int d = 1; d <= trie.tmpl().max_depth; ++d) {
            std::vector<std::int64_t> buckets(edges.size(), 0);
            for (int i = 1; i < trie.size_with_root(); ++i) {
                if (trie.node(i).depth != d) continue;
                auto count = stats.per_column_counts[static_cast<std::size_t>(i)];
                std::size_t b = 0;
                while (b + 1 < edges.size() && count >= edges[b + 1]) ++b;
                ++buckets[b];
            }
            for (std::size_t b = 0; b < edges.size(); ++b) {
                std::string hi = b + 1 < edges.size() ? std::to_string(edges[b + 1] - 1) : "inf";
                csv_row(f, {std::to_string(d), std::to_string(edges[b]), hi,
                            std::to_string(buckets[b])});
            }
        }
        mf.outputs.push_back("coverage_hist.csv");
    }

    mf.args = {{"config", config_path}, {"coverage", coverage}, {"budget_mode", budget_mode},
               {"threads", threads}};
    mf.write(out_dir, seed);
    std::cerr << "profile: " << obs.runs << " runs, " << obs.invocations << " invocations, $"
              << fmt_double(obs.dollars) << " -> " << out_dir.string() << "\n";
    return 0;
}

// ── estimate ───────────────────────────────────────────────────────────

int cmd_estimate(const std::string& config_path, std::uint64_t seed, const std::string& obs_path,
                 const std::string& method, int rank, const std::string& out, unsigned threads) {
    Manifest mf;
    mf.subcommand = "estimate";
    auto cfg = load_experiment_config(config_path);
    auto out_dir = ensure_out_dir(out);
    auto world = GroundTruthWorld::generate(cfg.tmpl, cfg.catalog, cfg.world, seed);
    auto trie = ExecutionTrie::build(cfg.tmpl, cfg.catalog);
    auto obs = load_observations(obs_path, trie);

    ColumnMeanEstimate est;
    if (method == "direct") {
        est = estimate_direct_average(subtree_fill_in(obs, trie), trie);
    } else if (method == "prefix_avg") {
        est = estimate_prefix_avg(subtree_fill_in(obs, trie), trie);
    } else if (method == "impute") {
        est = estimate_prefix_lowrank_impute(subtree_fill_in(obs, trie), trie, rank);
    } else if (method == "lite") {
        est = estimate_cascade_lite(obs, trie);
    } else if (method == "smoothed") {
        est = estimate_cascade_smoothed(obs, trie);
    } else {
        throw ConfigError("--method: expected direct|prefix_avg|impute|lite|smoothed");
    }

    ExecutionTrie annotated = trie;
    annotate_with_estimate(annotated, est, obs);
    save_annotations_file(annotated, (out_dir / "annotations.json").string());
    mf.outputs.push_back("annotations.json");

    auto truth = truth_mu_of(true_column_means(world, trie, threads));
    auto report = error_report(est, truth, trie);
    {
        auto f = open_out(out_dir / "error_report.csv");
        csv_row(f, {"method", "scope", "columns", "mean_signed", "mean_abs", "max_abs"});
        auto emit = [&](const std::string& scope, const ErrorStats& s) {
            csv_row(f, {est.method, scope, std::to_string(s.columns), fmt_double(s.mean_signed),
                        fmt_double(s.mean_abs), fmt_double(s.max_abs)});
        };
        emit("overall", report.overall);
        for (const auto& s : report.by_depth) emit("depth" + std::to_string(s.depth), s);
        mf.outputs.push_back("error_report.csv");
    }

    mf.args = {{"config", config_path}, {"obs", obs_path}, {"method", method}, {"rank", rank},
               {"threads", threads}};
    mf.write(out_dir, seed);
    std::cerr << "estimate(" << method << "): overall MAE " << fmt_double(report.overall.mean_abs)
              << " -> " << out_dir.string() << "\n";
    return 0;
}

// ── plan ───────────────────────────────────────────────────────────────

int cmd_plan(const std::string& config_path, const std::string& annotations_path,
             const std::string& objective_str, bool force, const std::string& out) {
    auto cfg = load_experiment_config(config_path);
    auto trie = load_annotations_file(annotations_path, cfg.tmpl, cfg.catalog, force);
    auto objective = Objective::parse(objective_str);
    auto result = select_path(as_view(trie), objective);

    auto emit = [&](std::ostream& os) {
        csv_row(os, {"objective", "feasible", "path", "acc", "cost", "lat", "nodes_expanded",
                     "nodes_pruned", "skipped_unannotated", "binding"});
        std::string path_str;
        if (result.feasible) path_str = trie.key_of(trie.find(result.path));
        csv_row(os, {objective.str(), result.feasible ? "1" : "0", path_str,
                     fmt_double(result.acc), fmt_double(result.cost), fmt_double(result.lat),
                     std::to_string(result.nodes_expanded), std::to_string(result.nodes_pruned),
                     std::to_string(result.skipped_unannotated), result.binding});
    };
    if (!out.empty()) {
        auto f = open_out(out);
        emit(f);
    }
    emit(std::cout);
    if (!result.feasible) {
        std::cerr << "plan: infeasible (binding constraint: " << result.binding << ")\n";
        return 3;
    }
    return 0;
}

// ── simulate ───────────────────────────────────────────────────────────

int cmd_simulate(const std::string& scenario_path, const std::string& out, unsigned threads) {
    Manifest mf;
    mf.subcommand = "simulate";
    auto out_dir = ensure_out_dir(out);
    auto spec = load_scenario(scenario_path, threads);

    if (spec.mode == "run") {
        auto report = run_scenario(spec.scenario);
        {
            auto f = open_out(out_dir / "run_report.csv");
            csv_row(f, {"request_id", "policy", "planned", "realized", "success", "cost",
                        "latency", "violated"});
            for (const auto& r : report.rows)
                csv_row(f, {std::to_string(r.request), r.policy, r.planned, r.realized,
                            r.success ? "1" : "0", fmt_double(r.cost), fmt_double(r.latency),
                            r.violated ? "1" : "0"});
            mf.outputs.push_back("run_report.csv");
        }
        {
            auto f = open_out(out_dir / "aggregates.csv");
            csv_row(f, {"policy", "n", "accuracy", "mean_cost", "mean_latency", "violation_rate",
                        "slo", "objective", "scenario_hash"});
            std::string slo = spec.scenario.objective.lat_cap
                                  ? fmt_double(*spec.scenario.objective.lat_cap)
                                  : "";
            for (const auto& a : report.aggregates)
                csv_row(f, {a.policy, std::to_string(a.n), fmt_double(a.accuracy),
                            fmt_double(a.mean_cost), fmt_double(a.mean_latency),
                            fmt_double(a.violation_rate), slo, report.objective,
                            hex64(report.scenario_hash)});
            mf.outputs.push_back("aggregates.csv");
        }
    } else {
        // Sweep modes: plan against each annotation source, score with the
        // oracle.
        auto truth = true_column_means(spec.scenario.world, spec.scenario.world.trie(), threads);
        std::vector<std::unique_ptr<ExecutionTrie>> holders;
        std::vector<std::pair<std::string, const ExecutionTrie*>> sources;
        for (const auto& [name, origin] : spec.sources) {
            auto t = std::make_unique<ExecutionTrie>(
                ExecutionTrie::build(spec.config.tmpl, spec.config.catalog));
            if (origin == "oracle")
                oracle_annotate(*t, spec.scenario.world, threads);
            else
                *t = load_annotations_file(origin, spec.config.tmpl, spec.config.catalog);
            sources.emplace_back(name, t.get());
            holders.push_back(std::move(t));
        }
        if (spec.mode == "frontier") {
            auto rows = frontier_sweep(truth, sources, spec.objective, spec.bounds);
            auto f = open_out(out_dir / "frontier.csv");
            csv_row(f, {"bound", "source", "feasible", "path", "planned_acc", "planned_cost",
                        "planned_lat", "true_acc", "true_cost", "true_lat", "satisfied",
                        "scenario_hash"});
            for (const auto& r : rows)
                csv_row(f, {fmt_double(r.bound), r.source, r.feasible ? "1" : "0", r.path,
                            fmt_double(r.planned_acc), fmt_double(r.planned_cost),
                            fmt_double(r.planned_lat), fmt_double(r.true_acc),
                            fmt_double(r.true_cost), fmt_double(r.true_lat),
                            r.satisfied ? "1" : "0", hex64(spec.hash)});
            mf.outputs.push_back("frontier.csv");
        } else {
            auto rows = policy_gap_report(truth, sources, spec.bounds);
            auto f = open_out(out_dir / "policy_gap.csv");
            csv_row(f, {"bound", "source", "static_feasible", "trie_feasible",
                        "static_planned_acc", "static_true_acc", "trie_planned_acc",
                        "trie_true_acc", "delta_planned", "delta_true", "scenario_hash"});
            for (const auto& r : rows)
                csv_row(f, {fmt_double(r.bound), r.source, r.static_feasible ? "1" : "0",
                            r.trie_feasible ? "1" : "0", fmt_double(r.static_planned_acc),
                            fmt_double(r.static_true_acc), fmt_double(r.trie_planned_acc),
                            fmt_double(r.trie_true_acc), fmt_double(r.delta_planned),
                            fmt_double(r.delta_true), hex64(spec.hash)});
            mf.outputs.push_back("policy_gap.csv");
        }
    }

    mf.args = {{"scenario", scenario_path}, {"threads", threads}, {"mode", spec.mode}};
    mf.write(out_dir, spec.world_seed);
    std::cerr << "simulate(" << spec.mode << ") -> " << out_dir.string() << "\n";
    return 0;
}

// ── fit-load ───────────────────────────────────────────────────────────

std::vector<std::vector<std::string>> read_csv(const std::string& path);

// Samples CSV {engine_id, queue_depth, latency_s} -> fitted LoadModel JSON.
int cmd_fit_load(const std::string& samples_path, double baseline, const std::string& mode_str,
                 const std::string& out) {
    LoadModel lm;
    if (mode_str == "slowdown") lm.mode = LoadModel::Mode::Slowdown;
    else if (mode_str == "additive") lm.mode = LoadModel::Mode::AdditiveDelay;
    else throw ConfigError("--mode: expected slowdown|additive");

    auto rows = read_csv(samples_path);
    if (rows.size() < 2) throw IoError(samples_path + ": no sample rows");
    const auto& header = rows.front();
    if (header.size() < 3 || header[0] != "engine_id" || header[1] != "queue_depth" ||
        header[2] != "latency_s")
        throw IoError(samples_path + ": expected header engine_id,queue_depth,latency_s");

    std::map<std::string, std::vector<std::pair<double, double>>> by_engine;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() < 3) throw IoError(samples_path + ": short row " + std::to_string(i));
        by_engine[rows[i][0]].emplace_back(std::stod(rows[i][1]), std::stod(rows[i][2]));
    }
    for (const auto& [engine, samples] : by_engine)
        lm.engines[engine] = fit_slowdown_curve(samples, baseline, lm.mode);
    save_load_model(lm, out);
    std::cerr << "fit-load: " << lm.engines.size() << " engine curve(s) -> " << out << "\n";
    return 0;
}

// ── report ─────────────────────────────────────────────────────────────

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open: " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string cur;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            char c = line[i];
            if (quoted) {
                if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else if (c == '"') {
                    quoted = false;
                } else {
                    cur += c;
                }
            } else if (c == '"') {
                quoted = true;
            } else if (c == ',') {
                fields.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        fields.push_back(cur);
        rows.push_back(std::move(fields));
    }
    return rows;
}

int cmd_report(const std::string& kind, const std::vector<std::string>& inputs,
               const std::string& out) {
    if (inputs.empty()) throw ConfigError("report: at least one input file is required");
    fs::path out_path(out);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());

    std::vector<std::string> header;
    std::vector<std::vector<std::string>> merged;
    for (const auto& in : inputs) {
        auto rows = read_csv(in);
        if (rows.empty()) throw IoError(in + ": empty CSV");
        if (header.empty()) header = rows.front();
        else if (header != rows.front()) throw IoError(in + ": header mismatch");
        for (std::size_t i = 1; i < rows.size(); ++i) merged.push_back(std::move(rows[i]));
    }

    int hash_col = -1;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == "scenario_hash") hash_col = static_cast<int>(i);
    std::string first_hash = hash_col >= 0 && !merged.empty()
                                 ? merged.front()[static_cast<std::size_t>(hash_col)]
                                 : "";

    auto f = open_out(out_path);
    if (kind == "violation") {
        // One row per (slo, policy) from merged aggregates.
        int slo_c = -1, pol_c = -1, acc_c = -1, cost_c = -1, viol_c = -1, n_c = -1;
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == "slo") slo_c = static_cast<int>(i);
            if (header[i] == "policy") pol_c = static_cast<int>(i);
            if (header[i] == "accuracy") acc_c = static_cast<int>(i);
            if (header[i] == "mean_cost") cost_c = static_cast<int>(i);
            if (header[i] == "violation_rate") viol_c = static_cast<int>(i);
            if (header[i] == "n") n_c = static_cast<int>(i);
        }
        if (slo_c < 0 || pol_c < 0 || viol_c < 0)
            throw IoError("report violation: inputs must be aggregates.csv files");
        csv_row(f, {"slo", "policy", "n", "accuracy", "mean_cost", "violation_rate",
                    "scenario_hash", "hash_mismatch"});
        for (const auto& r : merged) {
            std::string hash = hash_col >= 0 ? r[static_cast<std::size_t>(hash_col)] : "";
            csv_row(f, {r[static_cast<std::size_t>(slo_c)], r[static_cast<std::size_t>(pol_c)],
                        n_c >= 0 ? r[static_cast<std::size_t>(n_c)] : "",
                        acc_c >= 0 ? r[static_cast<std::size_t>(acc_c)] : "",
                        cost_c >= 0 ? r[static_cast<std::size_t>(cost_c)] : "",
                        r[static_cast<std::size_t>(viol_c)], hash,
                        hash == first_hash ? "0" : "1"});
        }
    } else if (kind == "frontier" || kind == "delta") {
        auto out_header = header;
        out_header.push_back("hash_mismatch");
        csv_row(f, out_header);
        for (const auto& r : merged) {
            auto row = r;
            std::string hash = hash_col >= 0 ? r[static_cast<std::size_t>(hash_col)] : "";
            row.push_back(hash == first_hash ? "0" : "1");
            csv_row(f, row);
        }
    } else {
        throw ConfigError("--kind: expected violation|frontier|delta");
    }
    std::cerr << "report(" << kind << "): " << merged.size() << " rows -> " << out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Annotated-trie workflow planning toolkit"};
    app.require_subcommand(1);
    unsigned threads = 2;
    app.add_option("--threads", threads, "Worker thread cap")->capture_default_str();

    std::string config_path, out, obs_path, method = "smoothed", annotations_path, objective_str,
                scenario_path, budget_mode = "checkpointed", kind;
    std::vector<std::string> inputs;
    std::uint64_t seed = 0;
    double coverage = 0.0;
    int rank = 2;
    bool force = false;

    auto* gen = app.add_subcommand("gen-world", "Generate a synthetic world and its oracle");
    gen->add_option("--config", config_path, "Experiment config JSON")->required();
    gen->add_option("--seed", seed, "World seed")->required();
    gen->add_option("--out", out, "Output directory")->required();

    auto* prof = app.add_subcommand("profile", "Cascade-sample a world under a budget");
    prof->add_option("--config", config_path)->required();
    prof->add_option("--seed", seed, "World seed")->required();
    prof->add_option("--coverage", coverage, "Budget value (fraction, runs, or dollars)")
        ->required();
    prof->add_option("--budget-mode", budget_mode, "checkpointed|naive|runs|dollars")
        ->capture_default_str();
    prof->add_option("--out", out)->required();

    auto* est = app.add_subcommand("estimate", "Estimate path metrics from observations");
    est->add_option("--config", config_path)->required();
    est->add_option("--seed", seed, "World seed (oracle for the error report)")->required();
    est->add_option("--obs", obs_path, "observations.jsonl")->required();
    est->add_option("--method", method, "direct|prefix_avg|impute|lite|smoothed")
        ->capture_default_str();
    est->add_option("--rank", rank, "Rank for the imputation baseline")->capture_default_str();
    est->add_option("--out", out)->required();

    auto* plan = app.add_subcommand("plan", "Select a path under an objective");
    plan->add_option("--config", config_path)->required();
    plan->add_option("--annotations", annotations_path)->required();
    plan->add_option("--objective", objective_str, "e.g. max_acc:cost<=11")->required();
    plan->add_flag("--force", force, "Ignore template/catalog hash mismatches");
    plan->add_option("--out", out, "Also write the result row to a file");

    auto* sim = app.add_subcommand("simulate", "Run a scenario file");
    sim->add_option("--scenario", scenario_path)->required();
    sim->add_option("--out", out)->required();

    auto* rep = app.add_subcommand("report", "Merge result CSVs into a plot-ready table");
    rep->add_option("--kind", kind, "violation|frontier|delta")->required();
    rep->add_option("--inputs", inputs, "Input CSV files")->required();
    rep->add_option("--out", out)->required();

    std::string samples_path, lm_mode = "slowdown";
    double baseline = 0.0;
    auto* fit = app.add_subcommand("fit-load", "Fit per-engine load curves from injection samples");
    fit->add_option("--samples", samples_path, "CSV: engine_id,queue_depth,latency_s")->required();
    fit->add_option("--baseline", baseline, "Unloaded latency in seconds")->required();
    fit->add_option("--mode", lm_mode, "slowdown|additive")->capture_default_str();
    fit->add_option("--out", out)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_world(config_path, seed, out, threads);
        if (prof->parsed())
            return cmd_profile(config_path, seed, coverage, budget_mode, out, threads);
        if (est->parsed())
            return cmd_estimate(config_path, seed, obs_path, method, rank, out, threads);
        if (plan->parsed())
            return cmd_plan(config_path, annotations_path, objective_str, force, out);
        if (sim->parsed()) return cmd_simulate(scenario_path, out, threads);
        if (rep->parsed()) return cmd_report(kind, inputs, out);
        if (fit->parsed()) return cmd_fit_load(samples_path, baseline, lm_mode, out);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
