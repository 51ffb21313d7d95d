#include "trieplan/workflow.hpp"

#include <algorithm>
#include <set>

namespace trieplan {

int ModelCatalog::index_of(std::string_view model_id) const {
    for (std::size_t i = 0; i < models.size(); ++i)
        if (models[i].id == model_id) return static_cast<int>(i);
    return -1;
}

int ModelCatalog::engine_index(std::string_view engine_id) const {
    for (std::size_t i = 0; i < engines.size(); ++i)
        if (engines[i] == engine_id) return static_cast<int>(i);
    return -1;
}

void ModelCatalog::validate() const {
    if (models.empty()) throw ConfigError("catalog.models: empty");
    std::set<std::string> seen;
    for (const auto& m : models) {
        if (m.id.empty()) throw ConfigError("catalog.models[].id: empty");
        if (!seen.insert(m.id).second)
            throw ConfigError("catalog.models: duplicate id '" + m.id + "'");
        if (!(m.cost_per_invocation > 0.0))
            throw ConfigError("catalog.models['" + m.id + "'].cost_per_invocation: must be > 0");
        if (!(m.latency_mean > 0.0))
            throw ConfigError("catalog.models['" + m.id + "'].latency_mean: must be > 0");
        if (m.latency_noise.sigma < 0.0)
            throw ConfigError("catalog.models['" + m.id + "'].latency_noise.sigma: negative");
        if (engine_index(m.engine_id) < 0)
            throw ConfigError("catalog.models['" + m.id + "'].engine: unknown engine '" +
                              m.engine_id + "'");
    }
}

std::uint64_t ModelCatalog::content_hash() const {
    std::uint64_t h = fnv1a64("catalog.v1");
    for (const auto& m : models) {
        h = hash_combine(h, fnv1a64(m.id));
        h = hash_combine(h, fnv1a64(fmt_double(m.cost_per_invocation)));
        h = hash_combine(h, fnv1a64(fmt_double(m.latency_mean)));
        h = hash_combine(h, static_cast<std::uint64_t>(m.latency_noise.kind));
        h = hash_combine(h, fnv1a64(fmt_double(m.latency_noise.sigma)));
        h = hash_combine(h, fnv1a64(m.engine_id));
    }
    for (const auto& e : engines) h = hash_combine(h, fnv1a64(e));
    return h;
}

bool WorkflowTemplate::terminal_at(int depth) const {
    return std::binary_search(terminal_depths.begin(), terminal_depths.end(), depth);
}

const std::vector<int>& WorkflowTemplate::admissible_at(int depth) const {
    return families[static_cast<std::size_t>(family_at(depth))].admissible;
}

void WorkflowTemplate::derive_depth_families() {
    double lat = 0.0, cost = 0.0;
    for (const auto& f : families) {
        if (!f.configurable) {
            lat += f.tool_latency;
            cost += f.tool_cost;
        }
    }
    tool_latency_per_depth = lat;
    tool_cost_per_depth = cost;

    if (!family_of_depth.empty()) return;
    std::vector<int> configurable;
    for (std::size_t i = 0; i < families.size(); ++i)
        if (families[i].configurable) configurable.push_back(static_cast<int>(i));
    if (configurable.empty()) throw ConfigError("template.families: no configurable family");
    family_of_depth.resize(static_cast<std::size_t>(max_depth));
    for (int d = 0; d < max_depth; ++d) {
        std::size_t k = std::min(static_cast<std::size_t>(d), configurable.size() - 1);
        family_of_depth[static_cast<std::size_t>(d)] = configurable[k];
    }
}

void WorkflowTemplate::validate(const ModelCatalog& catalog) const {
    if (max_depth < 1) throw ConfigError("template.max_depth: must be >= 1");
    if (terminal_depths.empty()) throw ConfigError("template.terminal_depths: empty");
    if (!std::is_sorted(terminal_depths.begin(), terminal_depths.end()))
        throw ConfigError("template.terminal_depths: must be sorted");
    for (int d : terminal_depths)
        if (d < 1 || d > max_depth)
            throw ConfigError("template.terminal_depths: depth out of range");
    if (terminal_depths.back() != max_depth)
        throw ConfigError("template.terminal_depths: must contain max_depth");
    if (family_of_depth.size() != static_cast<std::size_t>(max_depth))
        throw ConfigError("template.family_of_depth: size mismatch with max_depth");
    for (int fi : family_of_depth) {
        if (fi < 0 || fi >= static_cast<int>(families.size()))
            throw ConfigError("template.family_of_depth: index out of range");
        const auto& fam = families[static_cast<std::size_t>(fi)];
        if (!fam.configurable)
            throw ConfigError("template.family_of_depth: family '" + fam.id +
                              "' is not configurable");
        if (fam.admissible.empty())
            throw ConfigError("template.families['" + fam.id + "'].models: empty");
        for (int mi : fam.admissible)
            if (mi < 0 || mi >= static_cast<int>(catalog.models.size()))
                throw ConfigError("template.families['" + fam.id + "'].models: unknown model");
    }
    for (const auto& f : families) {
        if (f.configurable) continue;
        if (f.tool_latency < 0.0 || f.tool_cost < 0.0)
            throw ConfigError("template.families['" + f.id + "']: negative tool latency/cost");
    }
}

std::uint64_t WorkflowTemplate::structural_hash(const ModelCatalog& catalog) const {
    std::uint64_t h = fnv1a64("template.v1");
    h = hash_combine(h, static_cast<std::uint64_t>(max_depth));
    for (int d : terminal_depths) h = hash_combine(h, static_cast<std::uint64_t>(d));
    for (int d = 1; d <= max_depth; ++d) {
        const auto& fam = families[static_cast<std::size_t>(family_at(d))];
        h = hash_combine(h, fnv1a64(fam.id));
        for (int mi : fam.admissible)
            h = hash_combine(h, fnv1a64(catalog.models[static_cast<std::size_t>(mi)].id));
    }
    h = hash_combine(h, fnv1a64(fmt_double(tool_latency_per_depth)));
    h = hash_combine(h, fnv1a64(fmt_double(tool_cost_per_depth)));
    return h;
}

WorkflowTemplate make_uniform_template(const ModelCatalog& catalog, int max_depth,
                                       double tool_latency, double tool_cost) {
    std::vector<int> all(catalog.models.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    std::sort(all.begin(), all.end(), [&](int a, int b) {
        return catalog.models[static_cast<std::size_t>(a)].id <
               catalog.models[static_cast<std::size_t>(b)].id;
    });

    WorkflowTemplate t;
    t.families.push_back({"gen", true, all, 0.0, 0.0});
    if (tool_latency > 0.0 || tool_cost > 0.0)
        t.families.push_back({"exec", false, {}, tool_latency, tool_cost});
    t.families.push_back({"repair", true, all, 0.0, 0.0});
    t.max_depth = max_depth;
    for (int d = 1; d <= max_depth; ++d) t.terminal_depths.push_back(d);
    t.derive_depth_families();
    t.validate(catalog);
    return t;
}

}  // namespace trieplan
