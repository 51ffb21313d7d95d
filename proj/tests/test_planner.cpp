#include <doctest.h>

#include "test_support.hpp"
#include "trieplan/planner.hpp"

using namespace trieplan;

namespace {

ModelCatalog n_model_catalog(int n) {
    ModelCatalog cat;
    cat.engines = {"e0"};
    for (int i = 0; i < n; ++i)
        cat.models.push_back({"m" + std::to_string(i), 1.0 + i, 1.0 + 0.1 * i, {}, "e0"});
    return cat;
}

std::string key_of_result(const ExecutionTrie& trie, const PlanResult& r) {
    return r.feasible ? trie.key_of(trie.find(r.path)) : std::string("<infeasible>");
}

bool same_selection(const PlanResult& a, const PlanResult& b) {
    if (a.feasible != b.feasible) return false;
    if (!a.feasible) return a.binding == b.binding;
    return a.path == b.path && a.acc == b.acc && a.cost == b.cost && a.lat == b.lat;
}

}  // namespace

TEST_CASE("objective parsing") {
    auto o1 = Objective::parse("min_cost:acc>=0.90");
    CHECK(o1.goal == Objective::Goal::MinCost);
    CHECK(*o1.acc_floor == doctest::Approx(0.9));

    auto o2 = Objective::parse("max_acc:cost<=11");
    CHECK(o2.goal == Objective::Goal::MaxAcc);
    CHECK(*o2.cost_cap == doctest::Approx(11.0));

    auto o3 = Objective::parse("max_acc:lat<=4.9,cost<=20");
    CHECK(*o3.lat_cap == doctest::Approx(4.9));
    CHECK(*o3.cost_cap == doctest::Approx(20.0));
    CHECK(Objective::parse(o3.str()).str() == o3.str());

    CHECK_THROWS_AS(Objective::parse("max_acc"), ConfigError);
    CHECK_THROWS_AS(Objective::parse("max_acc:"), ConfigError);
    CHECK_THROWS_AS(Objective::parse("best:acc>=0.5"), ConfigError);
    CHECK_THROWS_AS(Objective::parse("max_acc:acc>=0.5"), ConfigError);  // no cap
    CHECK_THROWS_AS(Objective::parse("min_cost:cost<=3"), ConfigError);  // no floor
    CHECK_THROWS_AS(Objective::parse("min_cost:acc>=abc"), ConfigError);
}

TEST_CASE("worked objectives on the hand-annotated toy trie") {
    auto trie = ts::toy_annotated_trie();
    auto view = as_view(trie);

    auto r1 = select_path(view, Objective::parse("min_cost:acc>=0.90"));
    CHECK(key_of_result(trie, r1) == "G/S");
    CHECK(r1.cost == 11.0);

    auto r2 = select_path(view, Objective::parse("max_acc:cost<=11"));
    CHECK(key_of_result(trie, r2) == "G/S");
    CHECK(r2.acc == 0.91);

    auto r3 = select_path(view, Objective::parse("max_acc:lat<=4.9"));
    CHECK(key_of_result(trie, r3) == "G/S");

    auto r4 = select_path(view, Objective::parse("max_acc:lat<=7.0"));
    CHECK(key_of_result(trie, r4) == "S/S");
    CHECK(r4.acc == 0.94);

    // S/S (7.0 s) stays infeasible at a 5.0 s cap; the formulas pick G/S.
    auto r5 = select_path(view, Objective::parse("max_acc:lat<=5.0"));
    CHECK(key_of_result(trie, r5) == "G/S");

    auto r6 = select_path(view, Objective::parse("min_cost:acc>=1.01"));
    CHECK_FALSE(r6.feasible);
    CHECK(r6.binding == "acc");

    SUBCASE("identical inputs give identical results, counters included") {
        auto a = select_path(view, Objective::parse("max_acc:cost<=11"));
        auto b = select_path(view, Objective::parse("max_acc:cost<=11"));
        CHECK(a.path == b.path);
        CHECK(a.nodes_expanded == b.nodes_expanded);
        CHECK(a.nodes_pruned == b.nodes_pruned);
        CHECK(a.skipped_unannotated == b.skipped_unannotated);
    }
}

TEST_CASE("pruned search equals exhaustive enumeration everywhere") {
    int checked = 0;
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
        int k = 1 + static_cast<int>(u01(hash_key(trial, "k")) * 4);       // 1..4
        int d = 1 + static_cast<int>(u01(hash_key(trial, "d")) * 5);       // 1..5
        auto cat = n_model_catalog(k);
        auto tmpl = make_uniform_template(cat, d);
        if (trial % 3 == 1 && d > 1) tmpl.terminal_depths.erase(tmpl.terminal_depths.begin());
        auto trie = ExecutionTrie::build(tmpl, cat);
        ts::random_monotone_annotations(trie, trial, trial % 4 == 0 ? 0.2 : 0.0);
        auto view = as_view(trie);

        double floor = u01(hash_key(trial, "floor"));
        double cost_cap = 12.0 * u01(hash_key(trial, "cap"));
        double lat_cap = 8.0 * u01(hash_key(trial, "lcap"));
        Objective objectives[3];
        objectives[0].goal = Objective::Goal::MinCost;
        objectives[0].acc_floor = floor;
        objectives[1].goal = Objective::Goal::MaxAcc;
        objectives[1].cost_cap = cost_cap;
        objectives[2].goal = Objective::Goal::MaxAcc;
        objectives[2].lat_cap = lat_cap;
        if (trial % 5 == 0) objectives[2].cost_cap = cost_cap;  // joint caps

        for (const auto& obj : objectives) {
            auto fast = select_path(view, obj);
            auto slow = select_path_exhaustive(view, obj);
            REQUIRE(same_selection(fast, slow));
            ++checked;
        }
    }
    CHECK(checked == 300);
}

TEST_CASE("pruned search equals exhaustive search under latency inflation") {
    // Arbitrary monotone inflater: every stage adds a per-model surcharge.
    struct Surcharge final : LatencyInflater {
        const ExecutionTrie* trie = nullptr;
        std::vector<double> per_model;
        double extra(int node, int, double parent_extra) const override {
            return parent_extra +
                   per_model[static_cast<std::size_t>(trie->node(node).model)];
        }
    };
    for (std::uint64_t trial = 0; trial < 40; ++trial) {
        int k = 2 + static_cast<int>(u01(hash_key(trial, "ik")) * 3);
        auto cat = n_model_catalog(k);
        auto tmpl = make_uniform_template(cat, 3);
        auto trie = ExecutionTrie::build(tmpl, cat);
        ts::random_monotone_annotations(trie, trial + 7000);
        Surcharge inflater;
        inflater.trie = &trie;
        for (int m = 0; m < k; ++m)
            inflater.per_model.push_back(3.0 *
                                         u01(hash_key(trial, "isur", static_cast<std::uint64_t>(m))));
        Objective obj;
        obj.goal = Objective::Goal::MaxAcc;
        obj.lat_cap = 12.0 * u01(hash_key(trial, "icap"));
        auto fast = select_path(as_view(trie), obj, &inflater);
        auto slow = select_path_exhaustive(as_view(trie), obj, &inflater);
        REQUIRE(same_selection(fast, slow));
    }
}

TEST_CASE("pruning never expands more nodes than exhaustive search") {
    auto cat = n_model_catalog(4);
    auto tmpl = make_uniform_template(cat, 5);
    auto trie = ExecutionTrie::build(tmpl, cat);
    ts::random_monotone_annotations(trie, 9);
    auto obj = Objective::parse("min_cost:acc>=0.6");
    auto fast = select_path(as_view(trie), obj);
    auto slow = select_path_exhaustive(as_view(trie), obj);
    CHECK(fast.nodes_expanded < slow.nodes_expanded);
    CHECK(fast.nodes_pruned > 0);
    CHECK(fast.nodes_expanded + fast.nodes_pruned <= trie.size_with_root());
}

TEST_CASE("tie-breaks: cost, then latency, then lexicographic path") {
    auto cat = ts::two_model_catalog();
    auto tmpl = make_uniform_template(cat, 2);
    auto trie = ExecutionTrie::build(tmpl, cat);
    auto set = [&](const char* key, double acc, double cost, double lat) {
        trie.node_mut(trie.find_key(key)).ann = Annotation{acc, cost, lat, 1, 1, 1};
    };
    // Equal accuracy everywhere; G/S beats S/G lexicographically when tied.
    set("G", 0.5, 5.0, 3.0);
    set("S", 0.5, 5.0, 3.0);
    set("G/G", 0.9, 7.0, 4.0);
    set("G/S", 0.9, 6.0, 4.0);
    set("S/G", 0.9, 6.0, 4.0);
    set("S/S", 0.9, 6.0, 5.0);
    auto r = select_path(as_view(trie), Objective::parse("max_acc:cost<=10"));
    CHECK(trie.key_of(trie.find(r.path)) == "G/S");

    // Lower latency wins before lex order.
    set("G/S", 0.9, 6.0, 4.5);
    auto r2 = select_path(as_view(trie), Objective::parse("max_acc:cost<=10"));
    CHECK(trie.key_of(trie.find(r2.path)) == "S/G");
}

TEST_CASE("unannotated terminal nodes are skipped and counted") {
    auto trie = ts::toy_annotated_trie();
    trie.node_mut(trie.find_key("G/S")).ann.reset();
    auto r = select_path(as_view(trie), Objective::parse("max_acc:cost<=11"));
    CHECK(trie.key_of(trie.find(r.path)) == "S/G");  // next best within budget
    CHECK(r.skipped_unannotated == 1);
}

TEST_CASE("single-node and degenerate feasibility cases") {
    auto cat = n_model_catalog(1);
    auto tmpl = make_uniform_template(cat, 1);
    auto trie = ExecutionTrie::build(tmpl, cat);
    trie.node_mut(1).ann = Annotation{0.8, 2.0, 1.0, 1, 1, 1};
    auto r = select_path(as_view(trie), Objective::parse("max_acc:cost<=2"));
    CHECK(r.feasible);
    CHECK(trie.key_of(trie.find(r.path)) == "m0");

    auto r2 = select_path(as_view(trie), Objective::parse("max_acc:cost<=1.99"));
    CHECK_FALSE(r2.feasible);
    auto r3 = select_path_exhaustive(as_view(trie), Objective::parse("max_acc:cost<=1.99"));
    CHECK_FALSE(r3.feasible);
}

TEST_CASE("static plans: candidate counts match the configuration space") {
    auto cat8 = n_model_catalog(8);
    auto tmpl8 = make_uniform_template(cat8, 3);
    CHECK(static_candidate_count(tmpl8) == 136);  // 8 + 64 + 64

    auto cat2 = n_model_catalog(2);
    auto tmpl2 = make_uniform_template(cat2, 4);
    CHECK(static_candidate_count(tmpl2) == 14);  // 2 + 4 + 4 + 4

    auto trie = ExecutionTrie::build(tmpl8, cat8);
    ts::random_monotone_annotations(trie, 3);
    auto r = select_static_plan(as_view(trie), Objective::parse("max_acc:cost<=1000"));
    CHECK(r.nodes_expanded == 136);
    CHECK(r.feasible);
}

TEST_CASE("static plans bind one model per family") {
    auto cat = n_model_catalog(2);
    auto tmpl = make_uniform_template(cat, 3);  // depths 2..3 share the repair family
    auto trie = ExecutionTrie::build(tmpl, cat);
    ts::random_monotone_annotations(trie, 5);
    auto r = select_static_plan(as_view(trie), Objective::parse("max_acc:cost<=1000"));
    REQUIRE(r.feasible);
    if (r.path.size() == 3) CHECK(r.path[1] == r.path[2]);  // repair model reused
}

TEST_CASE("restriction dominance: static never beats the unrestricted plan") {
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
        int k = 2 + static_cast<int>(u01(hash_key(trial, "k2")) * 3);  // 2..4
        int d = 2 + static_cast<int>(u01(hash_key(trial, "d2")) * 3);  // 2..4
        auto cat = n_model_catalog(k);
        auto tmpl = make_uniform_template(cat, d);
        auto trie = ExecutionTrie::build(tmpl, cat);
        ts::random_monotone_annotations(trie, trial + 1000);
        auto view = as_view(trie);

        Objective max_acc;
        max_acc.goal = Objective::Goal::MaxAcc;
        max_acc.cost_cap = 20.0 * u01(hash_key(trial, "cap2"));
        auto st = select_static_plan(view, max_acc);
        auto dy = select_path(view, max_acc);
        if (st.feasible) {
            REQUIRE(dy.feasible);
            CHECK(dy.acc >= st.acc);
        }

        Objective min_cost;
        min_cost.goal = Objective::Goal::MinCost;
        min_cost.acc_floor = u01(hash_key(trial, "floor2"));
        auto st2 = select_static_plan(view, min_cost);
        auto dy2 = select_path(view, min_cost);
        if (st2.feasible) {
            REQUIRE(dy2.feasible);
            CHECK(dy2.cost <= st2.cost);
        }
    }
}
