#include "trieplan/trie.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "trieplan/world.hpp"

namespace trieplan {

ExecutionTrie ExecutionTrie::build(const WorkflowTemplate& tmpl, const ModelCatalog& catalog) {
    catalog.validate();
    tmpl.validate(catalog);

    ExecutionTrie t;
    t.template_ = tmpl;
    t.catalog_ = catalog;
    t.template_hash_ = tmpl.structural_hash(catalog);
    t.catalog_hash_ = catalog.content_hash();

    TrieNode root;
    root.draw_key = fnv1a64("prefix-root");
    root.ann = Annotation{};  // empty prefix: zero metrics by definition
    t.nodes_.push_back(root);

    // Breadth-first so sibling blocks stay contiguous; child order follows
    // the admissible list, which is sorted by model id.
    std::vector<int> frontier{0};
    for (int depth = 1; depth <= tmpl.max_depth; ++depth) {
        const auto& admissible = tmpl.admissible_at(depth);
        std::vector<int> next;
        next.reserve(frontier.size() * admissible.size());
        for (int parent : frontier) {
            for (int mi : admissible) {
                TrieNode n;
                n.parent = parent;
                n.model = mi;
                n.depth = depth;
                n.terminal_eligible = tmpl.terminal_at(depth);
                n.draw_key = hash_combine(t.nodes_[static_cast<std::size_t>(parent)].draw_key,
                                          fnv1a64(catalog.models[static_cast<std::size_t>(mi)].id));
                int idx = static_cast<int>(t.nodes_.size());
                t.nodes_.push_back(std::move(n));
                t.nodes_[static_cast<std::size_t>(parent)].children.push_back(idx);
                next.push_back(idx);
                if (tmpl.terminal_at(depth)) ++t.terminal_count_;
            }
        }
        frontier = std::move(next);
    }

    for (int i = static_cast<int>(t.nodes_.size()) - 1; i >= 0; --i) {
        auto& n = t.nodes_[static_cast<std::size_t>(i)];
        for (int c : n.children) n.subtree_size += t.nodes_[static_cast<std::size_t>(c)].subtree_size;
    }
    return t;
}

int ExecutionTrie::child_of(int node_index, int model_index) const {
    const auto& n = nodes_[static_cast<std::size_t>(node_index)];
    for (int c : n.children)
        if (nodes_[static_cast<std::size_t>(c)].model == model_index) return c;
    return -1;
}

int ExecutionTrie::find(const std::vector<int>& model_path) const {
    int cur = 0;
    for (int mi : model_path) {
        cur = child_of(cur, mi);
        if (cur < 0) return -1;
    }
    return cur;
}

int ExecutionTrie::find_key(std::string_view slash_joined_ids) const {
    if (slash_joined_ids.empty()) return 0;
    int cur = 0;
    std::size_t pos = 0;
    while (pos <= slash_joined_ids.size()) {
        std::size_t sep = slash_joined_ids.find('/', pos);
        std::string_view id = slash_joined_ids.substr(
            pos, sep == std::string_view::npos ? std::string_view::npos : sep - pos);
        int mi = catalog_.index_of(id);
        if (mi < 0) return -1;
        cur = child_of(cur, mi);
        if (cur < 0) return -1;
        if (sep == std::string_view::npos) break;
        pos = sep + 1;
    }
    return cur;
}

std::vector<int> ExecutionTrie::path_of(int node_index) const {
    std::vector<int> path;
    for (int cur = node_index; cur > 0; cur = nodes_[static_cast<std::size_t>(cur)].parent)
        path.push_back(nodes_[static_cast<std::size_t>(cur)].model);
    std::reverse(path.begin(), path.end());
    return path;
}

std::string ExecutionTrie::key_of(int node_index) const {
    auto path = path_of(node_index);
    std::string key;
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (i) key += '/';
        key += model_id(path[i]);
    }
    return key;
}

TrieView as_view(const ExecutionTrie& trie) { return TrieView{&trie, 0}; }

TrieView reroot(const ExecutionTrie& trie, const std::vector<int>& model_path) {
    int n = trie.find(model_path);
    if (n < 0) throw ConfigError("reroot: prefix not in trie");
    return TrieView{&trie, n};
}

TrieView reroot(const ExecutionTrie& trie, std::string_view key) {
    int n = trie.find_key(key);
    if (n < 0) throw ConfigError("reroot: unknown prefix '" + std::string(key) + "'");
    return TrieView{&trie, n};
}

TrieView reroot(TrieView view, const std::vector<int>& relative_path) {
    int cur = view.root;
    for (int mi : relative_path) {
        cur = view.trie->child_of(cur, mi);
        if (cur < 0) throw ConfigError("reroot: prefix not under view root");
    }
    return TrieView{view.trie, cur};
}

void annotate_from_traces(ExecutionTrie& trie, const std::vector<TraceRecord>& traces) {
    struct Agg {
        std::int64_t n = 0;       // traces whose path covers this node
        double succ_sum = 0.0;    // success observed within this prefix
        double cost_sum = 0.0;    // realized spend truncated at this prefix
        std::int64_t n_reached = 0;
        double lat_sum = 0.0;     // this node's own stage latency over reaching traces
    };
    std::vector<Agg> agg(static_cast<std::size_t>(trie.size_with_root()));

    for (const auto& tr : traces) {
        int cur = 0;
        double cost_so_far = 0.0;
        for (std::size_t i = 0; i < tr.path.size(); ++i) {
            cur = trie.child_of(cur, tr.path[i]);
            if (cur < 0) throw ConfigError("annotate_from_traces: trace path not in trie");
            auto& a = agg[static_cast<std::size_t>(cur)];
            bool reached = tr.reached[i] != 0;
            if (reached) {
                cost_so_far += tr.stage_cost[i];
                a.lat_sum += tr.stage_latency[i];
                ++a.n_reached;
            }
            ++a.n;
            a.cost_sum += cost_so_far;
            if (tr.success && tr.stop_depth <= static_cast<int>(i) + 1) a.succ_sum += 1.0;
        }
    }

    for (int i = 1; i < trie.size_with_root(); ++i) {
        auto& n = trie.node_mut(i);
        const auto& a = agg[static_cast<std::size_t>(i)];
        if (a.n == 0) {
            n.ann.reset();
            continue;
        }
        const auto* parent_ann =
            n.parent == 0 ? &*trie.node(0).ann
                          : (trie.node(n.parent).ann ? &*trie.node(n.parent).ann : nullptr);
        Annotation ann;
        ann.acc = a.succ_sum / static_cast<double>(a.n);
        ann.cost = a.cost_sum / static_cast<double>(a.n);
        double own_lat = a.n_reached > 0 ? a.lat_sum / static_cast<double>(a.n_reached) : 0.0;
        // Cumulative latency: parent's sum plus this stage's conditional mean.
        // A covered node always has a covered parent (traces walk from the root).
        ann.lat = (parent_ann ? parent_ann->lat : 0.0) + own_lat;
        ann.n_acc = a.n;
        ann.n_cost = a.n;
        ann.n_lat = a.n_reached;
        n.ann = ann;
    }
}

MonotonicityReport check_monotonicity(const ExecutionTrie& trie, double tol) {
    MonotonicityReport report;
    for (int i = 1; i < trie.size_with_root(); ++i) {
        const auto& child = trie.node(i);
        if (!child.ann) continue;
        const auto& parent = trie.node(child.parent);
        if (!parent.ann) continue;
        ++report.annotated_edges;
        auto flag = [&](char m, double pv, double cv) {
            if (cv < pv - tol) report.violations.push_back({child.parent, i, m, pv, cv});
        };
        flag('A', parent.ann->acc, child.ann->acc);
        flag('C', parent.ann->cost, child.ann->cost);
        flag('T', parent.ann->lat, child.ann->lat);
    }
    return report;
}

namespace {
constexpr int kAnnotationVersion = 1;

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}
}  // namespace

void save_annotations(const ExecutionTrie& trie, std::ostream& out) {
    nlohmann::json doc;
    doc["version"] = kAnnotationVersion;
    doc["template_hash"] = hex64(trie.template_hash());
    doc["catalog_hash"] = hex64(trie.catalog_hash());
    nlohmann::json nodes = nlohmann::json::object();
    for (int i = 1; i < trie.size_with_root(); ++i) {
        const auto& n = trie.node(i);
        if (!n.ann) continue;
        nlohmann::json e;
        e["acc"] = n.ann->acc;
        e["cost"] = n.ann->cost;
        e["lat"] = n.ann->lat;
        e["n_acc"] = n.ann->n_acc;
        e["n_cost"] = n.ann->n_cost;
        e["n_lat"] = n.ann->n_lat;
        nodes[trie.key_of(i)] = std::move(e);
    }
    doc["nodes"] = std::move(nodes);
    out << doc.dump(2) << '\n';
}

void save_annotations_file(const ExecutionTrie& trie, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for write: " + path);
    save_annotations(trie, f);
}

ExecutionTrie load_annotations(std::istream& in, const WorkflowTemplate& tmpl,
                               const ModelCatalog& catalog, bool force) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("annotation file: invalid JSON: ") + e.what());
    }
    if (!doc.contains("version") || !doc["version"].is_number_integer())
        throw IoError("annotation file: missing version");
    if (doc["version"].get<int>() != kAnnotationVersion)
        throw IoError("annotation file: unsupported version " +
                      std::to_string(doc["version"].get<int>()));

    ExecutionTrie trie = ExecutionTrie::build(tmpl, catalog);
    auto check_hash = [&](const char* field, std::uint64_t expected) {
        if (!doc.contains(field)) throw IoError(std::string("annotation file: missing ") + field);
        std::string got = doc[field].get<std::string>();
        if (got != hex64(expected) && !force)
            throw IoError(std::string("annotation file: ") + field +
                          " mismatch (use force to override)");
    };
    check_hash("template_hash", trie.template_hash());
    check_hash("catalog_hash", trie.catalog_hash());

    if (!doc.contains("nodes") || !doc["nodes"].is_object())
        throw IoError("annotation file: missing nodes map");
    for (auto it = doc["nodes"].begin(); it != doc["nodes"].end(); ++it) {
        int idx = trie.find_key(it.key());
        if (idx <= 0) throw IoError("annotation file: prefix '" + it.key() + "' not in template");
        const auto& e = it.value();
        Annotation ann;
        try {
            ann.acc = e.at("acc").get<double>();
            ann.cost = e.at("cost").get<double>();
            ann.lat = e.at("lat").get<double>();
            ann.n_acc = e.at("n_acc").get<std::int64_t>();
            ann.n_cost = e.at("n_cost").get<std::int64_t>();
            ann.n_lat = e.at("n_lat").get<std::int64_t>();
        } catch (const nlohmann::json::exception& ex) {
            throw IoError("annotation file: node '" + it.key() + "': " + ex.what());
        }
        if (!std::isfinite(ann.acc) || !std::isfinite(ann.cost) || !std::isfinite(ann.lat))
            throw IoError("annotation file: node '" + it.key() + "': non-finite value");
        trie.node_mut(idx).ann = ann;
    }
    return trie;
}

ExecutionTrie load_annotations_file(const std::string& path, const WorkflowTemplate& tmpl,
                                    const ModelCatalog& catalog, bool force) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open: " + path);
    return load_annotations(f, tmpl, catalog, force);
}

}  // namespace trieplan
