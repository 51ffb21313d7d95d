#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "trieplan/workflow.hpp"

namespace trieplan {

struct TraceRecord;

// Per-node estimates: expected accuracy if execution stopped here, expected
// spend in dollars (unreached stages contribute nothing), and the sum of
// per-stage conditional latency means. Supports record how many samples
// back each metric; n_lat counts samples of this node's own stage.
struct Annotation {
    double acc = 0.0;
    double cost = 0.0;
    double lat = 0.0;
    std::int64_t n_acc = 0;
    std::int64_t n_cost = 0;
    std::int64_t n_lat = 0;
};

struct TrieNode {
    int parent = -1;
    int model = -1;    // catalog index; -1 at the root
    int depth = 0;
    bool terminal_eligible = false;
    int subtree_size = 1;           // nodes in this subtree, including self
    std::uint64_t draw_key = 0;     // chain hash of the model-id prefix
    std::vector<int> children;      // ordered by model id
    std::optional<Annotation> ann;
};

// Prefix tree over feasible model-choice sequences. One node per feasible
// prefix; children of a depth-d node are the admissible models at depth
// d+1, in model-id order. Node 0 is the empty-prefix root and always
// carries a zero annotation. Immutable after annotation; share freely.
class ExecutionTrie {
public:
    static ExecutionTrie build(const WorkflowTemplate& tmpl, const ModelCatalog& catalog);

    const WorkflowTemplate& tmpl() const { return template_; }
    const ModelCatalog& catalog() const { return catalog_; }

    int node_count() const { return static_cast<int>(nodes_.size()) - 1; }  // excluding root
    int terminal_count() const { return terminal_count_; }
    int root() const { return 0; }
    const TrieNode& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
    TrieNode& node_mut(int i) { return nodes_[static_cast<std::size_t>(i)]; }
    int size_with_root() const { return static_cast<int>(nodes_.size()); }

    int child_of(int node_index, int model_index) const;  // -1 if absent
    // Path lookup; returns -1 when the prefix is not feasible.
    int find(const std::vector<int>& model_path) const;
    int find_key(std::string_view slash_joined_ids) const;

    std::vector<int> path_of(int node_index) const;   // model indices, root->node
    std::string key_of(int node_index) const;         // "G/S/S"; "" for the root

    const std::string& model_id(int model_index) const {
        return catalog_.models[static_cast<std::size_t>(model_index)].id;
    }

    std::uint64_t template_hash() const { return template_hash_; }
    std::uint64_t catalog_hash() const { return catalog_hash_; }

private:
    WorkflowTemplate template_;
    ModelCatalog catalog_;
    std::vector<TrieNode> nodes_;
    int terminal_count_ = 0;
    std::uint64_t template_hash_ = 0;
    std::uint64_t catalog_hash_ = 0;
};

// Read-only window onto the subtree under `root`; the underlying trie is
// untouched and may back many views at once.
struct TrieView {
    const ExecutionTrie* trie = nullptr;
    int root = 0;

    const TrieNode& node(int i) const { return trie->node(i); }
};

TrieView as_view(const ExecutionTrie& trie);
TrieView reroot(const ExecutionTrie& trie, const std::vector<int>& model_path);
TrieView reroot(const ExecutionTrie& trie, std::string_view key);
// Rerooting a view composes: reroot(reroot(t,u), v) == reroot(t, u+v).
TrieView reroot(TrieView view, const std::vector<int>& relative_path);

// ── Annotation sources ─────────────────────────────────────────────────

// Aggregates realized runs into per-node annotations. Nodes covered by no
// trace stay unannotated; they are never zero-filled.
void annotate_from_traces(ExecutionTrie& trie, const std::vector<TraceRecord>& traces);

struct MonoViolation {
    int parent = -1;
    int child = -1;
    char metric = '?';  // 'A', 'C', or 'T'
    double parent_value = 0.0;
    double child_value = 0.0;
};

struct MonotonicityReport {
    std::vector<MonoViolation> violations;
    int annotated_edges = 0;
    bool ok() const { return violations.empty(); }
};

// Flags every parent->child edge where acc, cost, or lat decreases by more
// than `tol`. Edges with an unannotated endpoint are skipped.
MonotonicityReport check_monotonicity(const ExecutionTrie& trie, double tol = 1e-9);

// ── Serialization ──────────────────────────────────────────────────────
// Versioned JSON document: header {version, template_hash, catalog_hash},
// body "nodes" keyed by slash-joined prefix. Round-trips bit-exactly.

void save_annotations(const ExecutionTrie& trie, std::ostream& out);
void save_annotations_file(const ExecutionTrie& trie, const std::string& path);

// Builds a fresh trie for (tmpl, catalog) and loads annotations into it.
// Hash mismatches are errors unless `force`; unknown prefixes are always
// errors; nodes absent from the file stay unannotated.
ExecutionTrie load_annotations(std::istream& in, const WorkflowTemplate& tmpl,
                               const ModelCatalog& catalog, bool force = false);
ExecutionTrie load_annotations_file(const std::string& path, const WorkflowTemplate& tmpl,
                                    const ModelCatalog& catalog, bool force = false);

}  // namespace trieplan
