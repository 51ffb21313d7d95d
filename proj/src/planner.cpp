#include "trieplan/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace trieplan {

Objective Objective::parse(std::string_view text) {
    Objective o;
    auto fail = [&](const std::string& why) {
        throw ConfigError("objective '" + std::string(text) + "': " + why +
                          " (expected e.g. \"min_cost:acc>=0.9\", \"max_acc:cost<=11\", "
                          "\"max_acc:lat<=4.9,cost<=20\")");
    };
    std::size_t colon = text.find(':');
    if (colon == std::string_view::npos) fail("missing ':'");
    std::string_view goal = text.substr(0, colon);
    if (goal == "min_cost") o.goal = Goal::MinCost;
    else if (goal == "max_acc") o.goal = Goal::MaxAcc;
    else fail("unknown goal '" + std::string(goal) + "'");

    std::string_view rest = text.substr(colon + 1);
    while (!rest.empty()) {
        std::size_t comma = rest.find(',');
        std::string_view tok = rest.substr(0, comma);
        auto parse_bound = [&](std::string_view prefix) -> std::optional<double> {
            if (tok.substr(0, prefix.size()) != prefix) return std::nullopt;
            std::string num(tok.substr(prefix.size()));
            try {
                std::size_t used = 0;
                double v = std::stod(num, &used);
                if (used != num.size()) fail("trailing characters in bound '" + num + "'");
                return v;
            } catch (const std::exception&) {
                fail("bad bound '" + num + "'");
            }
            return std::nullopt;
        };
        if (auto v = parse_bound("acc>=")) o.acc_floor = v;
        else if (auto v2 = parse_bound("cost<=")) o.cost_cap = v2;
        else if (auto v3 = parse_bound("lat<=")) o.lat_cap = v3;
        else fail("unknown constraint '" + std::string(tok) + "'");
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
    }
    o.validate();
    return o;
}

void Objective::validate() const {
    auto check = [&](const std::optional<double>& b, const char* name) {
        if (b && !(std::isfinite(*b) && *b >= 0.0))
            throw ConfigError(std::string("objective: ") + name + " must be finite and >= 0");
    };
    check(acc_floor, "acc floor");
    check(cost_cap, "cost cap");
    check(lat_cap, "lat cap");
    if (goal == Goal::MinCost && !acc_floor)
        throw ConfigError("objective: min_cost requires an accuracy floor");
    if (goal == Goal::MaxAcc && !cost_cap && !lat_cap)
        throw ConfigError("objective: max_acc requires a cost or latency cap");
}

std::string Objective::str() const {
    std::string s = goal == Goal::MinCost ? "min_cost:" : "max_acc:";
    bool first = true;
    auto put = [&](const char* name, const std::optional<double>& b) {
        if (!b) return;
        if (!first) s += ',';
        s += name;
        s += fmt_double(*b);
        first = false;
    };
    put("acc>=", acc_floor);
    put("cost<=", cost_cap);
    put("lat<=", lat_cap);
    return s;
}

namespace {

struct Candidate {
    int node = -1;
    double acc = 0.0, cost = 0.0, lat = 0.0;
    double eff_lat = 0.0;  // annotated latency plus controller inflation
    std::vector<int> rel_path;
};

bool better_than(const Objective& o, const Candidate& a, const Candidate& b) {
    if (o.goal == Objective::Goal::MaxAcc && a.acc != b.acc) return a.acc > b.acc;
    if (a.cost != b.cost) return a.cost < b.cost;
    if (a.eff_lat != b.eff_lat) return a.eff_lat < b.eff_lat;
    return std::lexicographical_compare(a.rel_path.begin(), a.rel_path.end(), b.rel_path.begin(),
                                        b.rel_path.end());
}

std::vector<int> relative_path(const ExecutionTrie& trie, int from, int to) {
    std::vector<int> path;
    for (int cur = to; cur != from; cur = trie.node(cur).parent)
        path.push_back(trie.node(cur).model);
    std::reverse(path.begin(), path.end());
    return path;
}

std::string binding_of(const Objective& o) {
    if (o.goal == Objective::Goal::MinCost) return "acc";
    if (o.cost_cap && o.lat_cap) return "cost+lat";
    return o.cost_cap ? "cost" : "lat";
}

struct Search {
    const ExecutionTrie& trie;
    const Objective& obj;
    const LatencyInflater* inflater;
    int view_root;
    PlanResult result;
    std::optional<Candidate> best;

    void consider(int node, const Annotation& ann, double eff_lat) {
        Candidate c{node, ann.acc, ann.cost, ann.lat, eff_lat,
                    relative_path(trie, view_root, node)};
        if (!best || better_than(obj, c, *best)) best = std::move(c);
    }

    bool within_caps(const Annotation& ann, double eff_lat) const {
        if (obj.cost_cap && ann.cost > *obj.cost_cap) return false;
        if (obj.lat_cap && eff_lat > *obj.lat_cap) return false;
        return true;
    }

    void visit(int node, int parent, double parent_extra) {
        ++result.nodes_expanded;
        const TrieNode& n = trie.node(node);
        // The view root is already executed; inflation applies to the suffix.
        double extra = (inflater && node != view_root)
                           ? inflater->extra(node, parent, parent_extra)
                           : 0.0;

        if (!n.ann) {
            // No metrics: cannot prune, cannot select; keep descending.
            if (n.terminal_eligible) ++result.skipped_unannotated;
            for (int c : n.children) visit(c, node, extra);
            return;
        }
        double eff_lat = n.ann->lat + extra;

        // Budget caps are monotone along any chain: violating prefixes close
        // their whole subtree.
        if (!within_caps(*n.ann, eff_lat)) {
            result.nodes_pruned += n.subtree_size - 1;
            return;
        }
        if (obj.goal == Objective::Goal::MinCost) {
            // Incumbent bound: descendants cost at least this prefix.
            if (best && n.ann->cost > best->cost) {
                result.nodes_pruned += n.subtree_size - 1;
                return;
            }
            bool meets_floor = !obj.acc_floor || n.ann->acc >= *obj.acc_floor;
            if (meets_floor && n.terminal_eligible) {
                consider(node, *n.ann, eff_lat);
                // Descendants are weakly costlier, slower, and lex-larger.
                result.nodes_pruned += n.subtree_size - 1;
                return;
            }
        } else {
            bool meets_floor = !obj.acc_floor || n.ann->acc >= *obj.acc_floor;
            if (meets_floor && n.terminal_eligible) consider(node, *n.ann, eff_lat);
            // Internal-node accuracy never prunes under max-accuracy goals.
        }
        for (int c : n.children) visit(c, node, extra);
    }
};

PlanResult finish(Search& s, std::chrono::steady_clock::time_point t0) {
    PlanResult r = std::move(s.result);
    if (s.best) {
        r.feasible = true;
        r.path = s.best->rel_path;
        r.acc = s.best->acc;
        r.cost = s.best->cost;
        r.lat = s.best->lat;
    } else {
        r.binding = binding_of(s.obj);
    }
    r.wall_us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0)
                    .count();
    return r;
}

}  // namespace

PlanResult select_path(TrieView view, const Objective& objective,
                       const LatencyInflater* inflater) {
    objective.validate();
    auto t0 = std::chrono::steady_clock::now();
    Search s{*view.trie, objective, inflater, view.root, {}, std::nullopt};
    s.visit(view.root, view.trie->node(view.root).parent, 0.0);
    return finish(s, t0);
}

PlanResult select_path_exhaustive(TrieView view, const Objective& objective,
                                  const LatencyInflater* inflater) {
    objective.validate();
    auto t0 = std::chrono::steady_clock::now();
    Search s{*view.trie, objective, inflater, view.root, {}, std::nullopt};

    struct Frame {
        int node, parent;
        double parent_extra;
    };
    std::vector<Frame> stack{{view.root, view.trie->node(view.root).parent, 0.0}};
    while (!stack.empty()) {
        Frame f = stack.back();
        stack.pop_back();
        ++s.result.nodes_expanded;
        const TrieNode& n = view.trie->node(f.node);
        double extra = (inflater && f.node != view.root)
                           ? inflater->extra(f.node, f.parent, f.parent_extra)
                           : 0.0;
        if (n.ann) {
            double eff_lat = n.ann->lat + extra;
            bool ok = s.within_caps(*n.ann, eff_lat) &&
                      (!objective.acc_floor || n.ann->acc >= *objective.acc_floor);
            if (ok && n.terminal_eligible) s.consider(f.node, *n.ann, eff_lat);
        } else if (n.terminal_eligible) {
            ++s.result.skipped_unannotated;
        }
        for (auto it = n.children.rbegin(); it != n.children.rend(); ++it)
            stack.push_back({*it, f.node, extra});
    }
    return finish(s, t0);
}

namespace {

// Groups of depths bound to one model, in order of first appearance.
struct BindingGroups {
    std::vector<int> group_of_depth;           // 0-based group per depth-1..d
    std::vector<std::vector<int>> admissible;  // per group: models valid at all its depths
};

BindingGroups make_groups(const WorkflowTemplate& tmpl, const FamilyBinding* binding) {
    FamilyBinding labels = binding ? *binding : tmpl.family_of_depth;
    if (labels.size() != static_cast<std::size_t>(tmpl.max_depth))
        throw ConfigError("family binding: size must equal max_depth");

    BindingGroups g;
    g.group_of_depth.resize(labels.size());
    std::vector<int> label_of_group;
    for (std::size_t d = 0; d < labels.size(); ++d) {
        int gi = -1;
        for (std::size_t k = 0; k < label_of_group.size(); ++k)
            if (label_of_group[k] == labels[d]) gi = static_cast<int>(k);
        if (gi < 0) {
            gi = static_cast<int>(label_of_group.size());
            label_of_group.push_back(labels[d]);
            g.admissible.push_back(tmpl.admissible_at(static_cast<int>(d) + 1));
        } else {
            // One model must be valid at every depth of the group.
            const auto& here = tmpl.admissible_at(static_cast<int>(d) + 1);
            auto& acc = g.admissible[static_cast<std::size_t>(gi)];
            std::vector<int> merged;
            for (int m : acc)
                if (std::find(here.begin(), here.end(), m) != here.end()) merged.push_back(m);
            acc = std::move(merged);
        }
        g.group_of_depth[d] = gi;
    }
    return g;
}

}  // namespace

std::int64_t static_candidate_count(const WorkflowTemplate& tmpl, const FamilyBinding* binding) {
    auto groups = make_groups(tmpl, binding);
    std::int64_t total = 0;
    for (int h : tmpl.terminal_depths) {
        std::vector<bool> active(groups.admissible.size(), false);
        for (int d = 1; d <= h; ++d)
            active[static_cast<std::size_t>(groups.group_of_depth[static_cast<std::size_t>(d - 1)])] =
                true;
        std::int64_t combos = 1;
        for (std::size_t gi = 0; gi < groups.admissible.size(); ++gi)
            if (active[gi]) combos *= static_cast<std::int64_t>(groups.admissible[gi].size());
        total += combos;
    }
    return total;
}

PlanResult select_static_plan(TrieView view, const Objective& objective,
                              const FamilyBinding* binding) {
    objective.validate();
    auto t0 = std::chrono::steady_clock::now();
    const ExecutionTrie& trie = *view.trie;
    if (view.root != trie.root())
        throw ConfigError("select_static_plan: static plans are chosen at admission (root view)");
    const WorkflowTemplate& tmpl = trie.tmpl();
    auto groups = make_groups(tmpl, binding);

    PlanResult result;
    std::optional<Candidate> best;

    for (int h : tmpl.terminal_depths) {
        std::vector<int> active;  // group ids used by depths 1..h, in order
        std::vector<bool> seen(groups.admissible.size(), false);
        for (int d = 1; d <= h; ++d) {
            int gi = groups.group_of_depth[static_cast<std::size_t>(d - 1)];
            if (!seen[static_cast<std::size_t>(gi)]) {
                seen[static_cast<std::size_t>(gi)] = true;
                active.push_back(gi);
            }
        }
        bool empty_group = false;
        for (int gi : active)
            if (groups.admissible[static_cast<std::size_t>(gi)].empty()) empty_group = true;
        if (empty_group) continue;

        // Odometer over the active groups' model choices.
        std::vector<std::size_t> pick(active.size(), 0);
        for (;;) {
            ++result.nodes_expanded;
            std::vector<int> model_of_group(groups.admissible.size(), -1);
            for (std::size_t k = 0; k < active.size(); ++k)
                model_of_group[static_cast<std::size_t>(active[k])] =
                    groups.admissible[static_cast<std::size_t>(active[k])][pick[k]];

            int node = trie.root();
            for (int d = 1; d <= h && node >= 0; ++d)
                node = trie.child_of(
                    node, model_of_group[static_cast<std::size_t>(
                              groups.group_of_depth[static_cast<std::size_t>(d - 1)])]);
            if (node > 0) {
                const TrieNode& n = trie.node(node);
                if (!n.ann) {
                    ++result.skipped_unannotated;
                } else {
                    bool ok = (!objective.cost_cap || n.ann->cost <= *objective.cost_cap) &&
                              (!objective.lat_cap || n.ann->lat <= *objective.lat_cap) &&
                              (!objective.acc_floor || n.ann->acc >= *objective.acc_floor);
                    if (ok && n.terminal_eligible) {
                        Candidate c{node, n.ann->acc, n.ann->cost, n.ann->lat, n.ann->lat,
                                    relative_path(trie, trie.root(), node)};
                        if (!best || better_than(objective, c, *best)) best = std::move(c);
                    }
                }
            }

            std::size_t k = 0;
            for (; k < active.size(); ++k) {
                if (++pick[k] < groups.admissible[static_cast<std::size_t>(active[k])].size()) break;
                pick[k] = 0;
            }
            if (k == active.size()) break;
        }
    }

    if (best) {
        result.feasible = true;
        result.path = best->rel_path;
        result.acc = best->acc;
        result.cost = best->cost;
        result.lat = best->lat;
    } else {
        result.binding = binding_of(objective);
    }
    result.wall_us =
        std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

}  // namespace trieplan
