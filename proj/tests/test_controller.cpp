#include <doctest.h>

#include "test_support.hpp"
#include "trieplan/controller.hpp"

using namespace trieplan;

TEST_CASE("slowdown curve fitting") {
    SUBCASE("medians at the knots, interpolation between, flat outside") {
        std::vector<std::pair<double, double>> samples{{0, 1.0}, {8, 1.5}, {16, 2.0}};
        auto curve = fit_slowdown_curve(samples, 1.0, LoadModel::Mode::Slowdown);
        CHECK(curve.at(8) == doctest::Approx(1.5));
        CHECK(curve.at(12) == doctest::Approx(1.75));
        CHECK(curve.at(100) == doctest::Approx(2.0));
        CHECK(curve.at(-5) == doctest::Approx(1.0));
        CHECK(curve.fit_residual == doctest::Approx(0.0));
    }

    SUBCASE("pool-adjacent-violators restores monotonicity") {
        std::vector<std::pair<double, double>> samples{{0, 1.0}, {4, 0.9}, {8, 1.4}};
        auto curve = fit_slowdown_curve(samples, 1.0, LoadModel::Mode::Slowdown);
        REQUIRE(curve.knots.size() == 3);
        CHECK(curve.knots[0].second == doctest::Approx(0.95));
        CHECK(curve.knots[1].second == doctest::Approx(0.95));
        CHECK(curve.knots[2].second == doctest::Approx(1.4));
        for (std::size_t i = 1; i < curve.knots.size(); ++i)
            CHECK(curve.knots[i].second >= curve.knots[i - 1].second);
    }

    SUBCASE("medians are per-depth, additive mode subtracts the baseline") {
        std::vector<std::pair<double, double>> samples{
            {0, 0.9}, {0, 1.0}, {0, 1.3}, {8, 1.4}, {8, 1.5}, {8, 9.0}};
        auto curve = fit_slowdown_curve(samples, 1.0, LoadModel::Mode::AdditiveDelay);
        CHECK(curve.at(0) == doctest::Approx(0.0));
        CHECK(curve.at(8) == doctest::Approx(0.5));
    }

    SUBCASE("fewer than two depths is an error") {
        std::vector<std::pair<double, double>> samples{{4, 1.0}, {4, 1.2}};
        CHECK_THROWS_AS(fit_slowdown_curve(samples, 1.0, LoadModel::Mode::Slowdown), ConfigError);
        CHECK_THROWS_AS(fit_slowdown_curve(samples, 0.0, LoadModel::Mode::Slowdown), ConfigError);
    }
}

TEST_CASE("context updates") {
    auto trie = ts::toy_annotated_trie();
    RequestContext ctx;
    ctx.objective = Objective::parse("max_acc:lat<=7.0");

    update_after_stage(ctx, {trie.catalog().index_of("S"), 3.0, 10.0, false}, trie);
    CHECK(ctx.status == RunStatus::Running);
    CHECK(ctx.prefix.size() == 1);
    CHECK(ctx.elapsed == 3.0);

    SUBCASE("success terminates") {
        update_after_stage(ctx, {0, 1.0, 1.0, true}, trie);
        CHECK(ctx.status == RunStatus::Success);
        CHECK_THROWS_AS(update_after_stage(ctx, {0, 1.0, 1.0, false}, trie), ConfigError);
    }
    SUBCASE("budget exhaustion hard-stops when enabled") {
        update_after_stage(ctx, {0, 9.0, 1.0, false}, trie);
        CHECK(ctx.status == RunStatus::BudgetStop);
    }
    SUBCASE("running off the horizon exhausts") {
        update_after_stage(ctx, {0, 1.0, 1.0, false}, trie);
        CHECK(ctx.status == RunStatus::Exhausted);
    }
    SUBCASE("hard stop can be disabled") {
        ctx.hard_stop = false;
        update_after_stage(ctx, {0, 9.0, 1.0, false}, trie);
        CHECK(ctx.status == RunStatus::Exhausted);  // depth 2 reached without success
    }
}

TEST_CASE("a fresh context reproduces the offline plan") {
    auto trie = ts::toy_annotated_trie();
    RequestContext ctx;
    ctx.objective = Objective::parse("max_acc:lat<=7.0");
    auto offline = select_path(as_view(trie), ctx.objective);
    auto d = next_action(trie, ctx);
    CHECK(d.invoke);
    CHECK(d.feasible);
    CHECK(d.suffix == offline.path);
    CHECK(d.model == offline.path.front());
    CHECK(trie.key_of(trie.find(d.suffix)) == "S/S");
}

TEST_CASE("replanning reacts to realized latency") {
    auto trie = ts::toy_annotated_trie();
    int s = trie.catalog().index_of("S");

    // Plan S/S under lat<=7.0; stage 1 runs slow. With 1.5 s left the S/G
    // continuation (increment 1.2 s) still fits and has higher accuracy
    // than stopping at S; with 1.0 s left nothing fits and the controller
    // stops at the terminal-eligible prefix.
    SUBCASE("switches to a cheaper continuation when it still fits") {
        RequestContext ctx;
        ctx.objective = Objective::parse("max_acc:lat<=7.0");
        update_after_stage(ctx, {s, 5.5, 10.0, false}, trie);
        REQUIRE(ctx.status == RunStatus::Running);
        auto d = next_action(trie, ctx);
        CHECK(d.invoke);
        CHECK(d.model == trie.catalog().index_of("G"));
        CHECK(d.d_lat == doctest::Approx(1.2));
    }

    SUBCASE("terminates rather than violate") {
        RequestContext ctx;
        ctx.objective = Objective::parse("max_acc:lat<=7.0");
        update_after_stage(ctx, {s, 6.0, 10.0, false}, trie);
        REQUIRE(ctx.status == RunStatus::Running);
        auto d = next_action(trie, ctx);
        CHECK_FALSE(d.invoke);
        CHECK(d.feasible);  // staying at S satisfies the cap
        CHECK(d.suffix.empty());
    }
}

TEST_CASE("cost budgets restate in remaining terms") {
    auto trie = ts::toy_annotated_trie();
    RequestContext ctx;
    ctx.objective = Objective::parse("max_acc:cost<=11");
    int g = trie.catalog().index_of("G");
    // Realized stage-1 spend of 3 leaves 8: continuing to G/S predicts
    // an increment of 10, infeasible; G/G (increment 1) fits.
    update_after_stage(ctx, {g, 1.0, 3.0, false}, trie);
    auto d = next_action(trie, ctx);
    CHECK(d.invoke);
    CHECK(d.model == g);
    CHECK(trie.key_of(trie.find(std::vector<int>{g, d.model}))== "G/G");
}

TEST_CASE("load-aware planning avoids congested engines") {
    auto trie = ts::toy_annotated_trie();
    LoadModel lm;
    lm.mode = LoadModel::Mode::AdditiveDelay;
    lm.engines["es"] = {{{0.0, 0.0}, {8.0, 10.0}}, 0.0};  // 10 s delay at depth 8
    EngineLoad load;
    load.queue_depth["es"] = 8.0;

    RequestContext ctx;
    ctx.objective = Objective::parse("max_acc:lat<=6.0");
    auto d = next_action(trie, ctx, &lm, &load);
    REQUIRE(d.invoke);
    // Every path touching model S carries +10 s; only G-paths remain.
    CHECK(trie.model_id(d.model) == "G");
    CHECK(trie.key_of(trie.find(d.suffix)) == "G/G");

    SUBCASE("idle queues change nothing") {
        EngineLoad idle;
        auto d2 = next_action(trie, ctx, &lm, &idle);
        auto offline = select_path(as_view(trie), ctx.objective);
        CHECK(d2.suffix == offline.path);
    }

    SUBCASE("slowdown mode scales suffix increments") {
        LoadModel sm;
        sm.mode = LoadModel::Mode::Slowdown;
        sm.engines["es"] = {{{0.0, 1.0}, {8.0, 3.0}}, 0.0};
        auto d3 = next_action(trie, ctx, &sm, &load);
        REQUIRE(d3.invoke);
        // S alone inflates to 10.5 s; G-paths win again.
        CHECK(trie.model_id(d3.model) == "G");
    }
}

TEST_CASE("fallback keeps moving at non-terminal prefixes") {
    auto cat = ts::two_model_catalog();
    auto tmpl = make_uniform_template(cat, 2);
    tmpl.terminal_depths = {2};  // depth-1 cannot stop
    auto trie = ExecutionTrie::build(tmpl, cat);
    auto set = [&](const char* key, double acc, double cost, double lat) {
        trie.node_mut(trie.find_key(key)).ann = Annotation{acc, cost, lat, 1, 1, 1};
    };
    set("G", 0.5, 1.0, 1.0);
    set("S", 0.6, 10.0, 3.5);
    set("G/G", 0.6, 2.0, 2.0);
    set("G/S", 0.8, 11.0, 4.0);
    set("S/G", 0.7, 11.0, 4.5);
    set("S/S", 0.9, 20.0, 7.0);

    RequestContext ctx;
    ctx.objective = Objective::parse("max_acc:lat<=0.5");  // nothing fits
    auto d = next_action(trie, ctx);
    CHECK(d.invoke);            // must keep moving toward a terminal depth
    CHECK_FALSE(d.feasible);    // flagged as a fallback action
    CHECK(trie.model_id(d.model) == "G");  // smallest projected latency
}

TEST_CASE("replanning overhead probe") {
    auto cat = [] {
        ModelCatalog c;
        c.engines = {"e0"};
        for (int i = 0; i < 4; ++i)
            c.models.push_back({"m" + std::to_string(i), 1.0, 1.0, {}, "e0"});
        return c;
    }();
    auto tmpl = make_uniform_template(cat, 6);
    auto trie = ExecutionTrie::build(tmpl, cat);
    CHECK(trie.node_count() == 5460);
    ts::random_monotone_annotations(trie, 123);

    auto stats = replanning_overhead_probe(trie, Objective::parse("max_acc:lat<=9.0"), 50);
    CHECK(stats.reps == 50);
    CHECK(stats.mean_us > 0.0);
    CHECK(stats.mean_us < 10000.0);  // well under 10 ms per decision
    CHECK(stats.p99_us >= stats.p50_us);

    SUBCASE("eight models, depth three") {
        ModelCatalog cat8;
        cat8.engines = {"e0"};
        for (int i = 0; i < 8; ++i)
            cat8.models.push_back({"m" + std::to_string(i), 1.0, 1.0, {}, "e0"});
        auto trie8 = ExecutionTrie::build(make_uniform_template(cat8, 3), cat8);
        ts::random_monotone_annotations(trie8, 7);
        auto s8 = replanning_overhead_probe(trie8, Objective::parse("max_acc:lat<=1e9"), 100);
        CHECK(s8.mean_us < 5000.0);
    }
}
