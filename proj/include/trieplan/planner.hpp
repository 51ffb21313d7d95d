#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trieplan/trie.hpp"

namespace trieplan {

// Request-level objective: one optimized metric plus constraint bounds.
// Compact string form: "min_cost:acc>=0.9", "max_acc:cost<=11",
// "max_acc:lat<=4.9", and joint caps "max_acc:cost<=11,lat<=5".
struct Objective {
    enum class Goal { MinCost, MaxAcc };
    Goal goal = Goal::MaxAcc;
    std::optional<double> acc_floor;
    std::optional<double> cost_cap;
    std::optional<double> lat_cap;

    static Objective parse(std::string_view text);
    std::string str() const;
    void validate() const;
};

struct PlanResult {
    bool feasible = false;
    std::vector<int> path;  // model indices from the search root
    double acc = 0.0, cost = 0.0, lat = 0.0;
    std::int64_t nodes_expanded = 0;
    std::int64_t nodes_pruned = 0;        // nodes skipped by cutting subtrees
    std::int64_t skipped_unannotated = 0;  // terminal-eligible nodes without annotations
    double wall_us = 0.0;
    std::string binding;  // constraint blamed when infeasible
};

// Optional latency transform used by the online controller: `extra(node)`
// is added to the node's annotated latency before feasibility checks. It
// must be nondecreasing along root-to-leaf chains or pruning is unsound.
struct LatencyInflater {
    virtual ~LatencyInflater() = default;
    virtual double extra(int node, int parent, double parent_extra) const = 0;
};

// Pruned depth-first search. Under a min-cost goal, descent stops at a
// feasible terminal-eligible node (descendants only cost more) and at any
// prefix whose cost already exceeds the incumbent; under max-accuracy
// goals only budget violations prune. Ties break on (cost, lat, lex path).
PlanResult select_path(TrieView view, const Objective& objective,
                       const LatencyInflater* inflater = nullptr);

// Full enumeration twin with identical tie-breaks; the verification oracle
// for select_path.
PlanResult select_path_exhaustive(TrieView view, const Objective& objective,
                                  const LatencyInflater* inflater = nullptr);

// Restricts the search to plans that bind one model per stage family plus
// a stop depth, the coarse-grained baseline. `binding` maps depth-1..d to
// family ids; defaults to the template's own mapping. nodes_expanded
// counts enumerated configurations.
using FamilyBinding = std::vector<int>;
PlanResult select_static_plan(TrieView view, const Objective& objective,
                              const FamilyBinding* binding = nullptr);

// Size of the static configuration space (per-family model choices times
// eligible stop depths), independent of annotations.
std::int64_t static_candidate_count(const WorkflowTemplate& tmpl,
                                    const FamilyBinding* binding = nullptr);

}  // namespace trieplan
