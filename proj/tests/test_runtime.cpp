#include <doctest.h>

#include <map>
#include <random>
#include <set>
#include <vector>

#include "vizplan/errors.hpp"
#include "vizplan/expr.hpp"
#include "vizplan/graph.hpp"
#include "vizplan/plan.hpp"
#include "vizplan/runtime.hpp"

using namespace vizplan;

namespace {

TransformSpec filter(const char *text) {
    TransformSpec t;
    t.kind = TransformKind::Filter;
    t.expr_text = text;
    t.expr = std::shared_ptr<const ExprAst>(parse_expr(text).release());
    return t;
}

TransformSpec extent(const char *field, const char *signal_out) {
    TransformSpec t;
    t.kind = TransformKind::Extent;
    t.field.field = field;
    t.signal_out = signal_out;
    return t;
}

TransformSpec bin_on_signals(const char *field, const char *lo, const char *hi,
                             const char *maxbins_sig, std::vector<std::string> as) {
    TransformSpec t;
    t.kind = TransformKind::Bin;
    t.field.field = field;
    t.extent_from = TransformSpec::ExtentFrom::Signals;
    t.extent_lo_signal = lo;
    t.extent_hi_signal = hi;
    t.maxbins_signal = maxbins_sig;
    t.as = std::move(as);
    return t;
}

TransformSpec bin_literal(const char *field, double lo, double hi, double maxbins,
                          std::vector<std::string> as) {
    TransformSpec t;
    t.kind = TransformKind::Bin;
    t.field.field = field;
    t.extent_lo = lo;
    t.extent_hi = hi;
    t.maxbins = maxbins;
    t.as = std::move(as);
    return t;
}

TransformSpec count_by(std::vector<std::string> groupby, const char *as) {
    TransformSpec t;
    t.kind = TransformKind::Aggregate;
    t.groupby = std::move(groupby);
    t.agg_ops = {AggOp::Count};
    t.agg_fields = {""};
    t.as = {as};
    return t;
}

TransformSpec collect_by(std::vector<std::string> fields) {
    TransformSpec t;
    t.kind = TransformKind::Collect;
    t.sort.fields = std::move(fields);
    t.sort.descending.assign(t.sort.fields.size(), false);
    return t;
}

TransformSpec stack_unsorted(const char *field, std::vector<std::string> as) {
    TransformSpec t;
    t.kind = TransformKind::Stack;
    t.field.field = field;
    t.groupby = {"c"};
    t.as = std::move(as);
    return t;
}

SignalSpec slider(const char *name, double init) {
    SignalSpec s;
    s.name = name;
    SignalBind b;
    b.kind = BindKind::Slider;
    b.min = 0;
    b.max = 100;
    b.step = 1;
    s.bind = b;
    s.init = {{name, Value::number(init)}};
    return s;
}

SignalSpec field_dropdown(const char *name, std::vector<std::string> candidates,
                          const char *init) {
    SignalSpec s;
    s.name = name;
    SignalBind b;
    b.kind = BindKind::Dropdown;
    b.options_are_field_names = true;
    b.candidates = std::move(candidates);
    s.bind = b;
    s.init = {{name, Value::text(init)}};
    return s;
}

DashboardSpec histogram_spec() {
    DashboardSpec d;
    d.tables = {{"flights", ""}};
    d.signals = {slider("bins", 20), slider("unused", 5)};
    DataEntry e;
    e.name = "hist";
    e.source = "flights";
    e.transforms = {extent("delay", "ext"),
                    bin_on_signals("delay", "ext_min", "ext_max", "bins", {"b0", "b1"}),
                    count_by({"b0", "b1"}, "cnt")};
    d.data = {e};
    d.views = {{"chart", "hist"}};
    return d;
}

DataTable flights_rows(size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    DataTable t;
    t.schema.columns = {{"delay", ValueKind::Number, FieldRole::Quantitative}};
    for (size_t i = 0; i < n; ++i)
        t.rows.push_back({Value::number(static_cast<double>(rng() % 120) - 20.0)});
    return t;
}

std::map<std::string, Schema> catalog_of(const std::map<std::string, DataTable> &tables) {
    std::map<std::string, Schema> out;
    for (const auto &kv : tables) out[kv.first] = kv.second.schema;
    return out;
}

struct Rig {
    DashboardSpec spec;
    PipelineGraph graph;
    LocalExecutor backend;
    std::vector<ExecutionPlan> plans;
};

Rig make_rig(DashboardSpec spec, std::map<std::string, DataTable> tables) {
    Rig r{std::move(spec), {}, LocalExecutor(7), {}};
    r.graph = compile_graph(r.spec, catalog_of(tables));
    mark_preserved(r.graph, r.spec);
    for (auto &kv : tables) r.backend.register_table(kv.first, std::move(kv.second));
    r.plans = enumerate_plans(r.graph, r.spec);
    return r;
}

// stamps never run backwards along data or scalar edges
void check_stamp_order(const RuntimeState &st) {
    const PipelineGraph &g = *st.graph;
    for (size_t id = 0; id < g.nodes.size(); ++id) {
        if (st.stamps[id] == 0) continue;
        const GraphNode &n = g.nodes[id];
        if (n.kind != GraphNode::Kind::Operator) continue;
        if (n.data_parent >= 0)
            CHECK(st.stamps[id] >= st.stamps[static_cast<size_t>(n.data_parent)]);
        for (int sp : n.signal_parents)
            CHECK(st.stamps[id] >= st.stamps[static_cast<size_t>(sp)]);
    }
}

void check_same_appearance(const RuntimeState &a, const RuntimeState &b) {
    REQUIRE(a.signals == b.signals);
    for (int node : a.held_nodes) {
        const auto &ra = a.outputs[static_cast<size_t>(node)];
        const auto &rb = b.outputs[static_cast<size_t>(node)];
        REQUIRE(ra);
        REQUIRE(rb);
        CHECK(multiset_equal(*ra, *rb));
    }
}

// ---- randomized dashboards (same shape the enumerator suite uses) ----

DashboardSpec random_spec(unsigned seed) {
    std::mt19937_64 rng(seed);
    DashboardSpec d;
    d.tables = {{"t", ""}};
    d.signals = {slider("sig0", 10), field_dropdown("fsel", {"a", "b"}, "a")};

    int uniq = 0;
    std::vector<std::string> published;
    const size_t entries = 1 + rng() % 3;
    size_t total_ops = 0;
    for (size_t ei = 0; ei < entries; ++ei) {
        DataEntry e;
        e.name = "d" + std::to_string(ei);
        e.source = (ei > 0 && rng() % 100 < 35) ? d.data[rng() % d.data.size()].name : "t";
        size_t want = rng() % 4;
        while (want > 0 && total_ops < 9) {
            --want;
            ++total_ops;
            const int pick = static_cast<int>(rng() % 100);
            const char *num_field = rng() % 2 ? "a" : "b";
            if (pick < 25) {
                if (!published.empty() && rng() % 100 < 40) {
                    std::string text = std::string("datum.a > ") +
                                       published[rng() % published.size()] + "_min";
                    e.transforms.push_back(filter(text.c_str()));
                } else if (rng() % 2) {
                    e.transforms.push_back(filter("datum.a > sig0"));
                } else {
                    e.transforms.push_back(filter("datum.b <= 3 || datum.a == 1"));
                }
            } else if (pick < 50) {
                std::string sig = "e" + std::to_string(uniq++);
                if (rng() % 100 < 12) {
                    TransformSpec t = extent("", sig.c_str());
                    t.field.signal = "fsel";
                    e.transforms.push_back(t);
                } else {
                    e.transforms.push_back(extent(num_field, sig.c_str()));
                }
                published.push_back(sig);
            } else if (pick < 75) {
                std::string b0 = "b" + std::to_string(uniq) + "_0";
                std::string b1 = "b" + std::to_string(uniq) + "_1";
                ++uniq;
                if (!published.empty() && rng() % 2) {
                    const std::string &base = published[rng() % published.size()];
                    e.transforms.push_back(bin_on_signals(num_field, (base + "_min").c_str(),
                                                          (base + "_max").c_str(),
                                                          rng() % 2 ? "sig0" : "", {b0, b1}));
                } else {
                    e.transforms.push_back(bin_literal(num_field, 0, 100, 10, {b0, b1}));
                }
            } else if (pick < 88) {
                e.transforms.push_back(collect_by({"a"}));
            } else {
                std::string y0 = "y" + std::to_string(uniq) + "_0";
                std::string y1 = "y" + std::to_string(uniq) + "_1";
                ++uniq;
                e.transforms.push_back(stack_unsorted("a", {y0, y1}));
            }
        }
        d.data.push_back(std::move(e));
    }
    d.views = {{"chart", d.data.back().name}};
    return d;
}

DataTable random_rows(size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    static const char *cats[] = {"x", "y", "z"};
    DataTable t;
    t.schema.columns = {{"a", ValueKind::Number, FieldRole::Quantitative},
                        {"b", ValueKind::Number, FieldRole::Quantitative},
                        {"c", ValueKind::Text, FieldRole::Categorical},
                        {"d", ValueKind::Timestamp, FieldRole::Temporal}};
    for (size_t i = 0; i < n; ++i) {
        Row r;
        r.push_back(rng() % 20 == 0 ? Value::null()
                                    : Value::number(static_cast<double>(rng() % 21) - 5.0));
        r.push_back(Value::number(static_cast<double>(rng() % 9)));
        r.push_back(Value::text(cats[rng() % 3]));
        r.push_back(Value::timestamp(1500000000000LL + static_cast<int64_t>(i) * 3600000));
        t.rows.push_back(std::move(r));
    }
    return t;
}

} // namespace

TEST_CASE("every valid plan renders the same dashboard") {
    Rig r = make_rig(histogram_spec(), {{"flights", flights_rows(500, 3)}});
    REQUIRE(r.plans.size() == 4);

    RuntimeState base = eval_full(r.graph, r.spec, r.plans[0], r.backend);
    CHECK(base.entry_rows("hist").rows.size() > 0);
    CHECK(base.signals.at("ext_min").kind() == ValueKind::Number);

    for (size_t i = 1; i < r.plans.size(); ++i) {
        RuntimeState st = eval_full(r.graph, r.spec, r.plans[i], r.backend);
        check_same_appearance(base, st);
        check_stamp_order(st);
    }
}

TEST_CASE("boundary meters per plan") {
    Rig r = make_rig(histogram_spec(), {{"flights", flights_rows(500, 3)}});
    RuntimeState cc = eval_full(r.graph, r.spec, r.plans[0], r.backend);
    const double groups = static_cast<double>(cc.entry_rows("hist").rows.size());

    // all client: one raw pull, three in-memory operators
    CHECK(cc.last_stats.queries == 1);
    CHECK(cc.last_stats.transfer_rows == 500);
    CHECK(cc.last_stats.scanned_rows == 500);
    CHECK(cc.last_stats.client_rows == 1000 + groups);

    // extent on the server: min/max summary plus the raw pull the bin needs
    RuntimeState sc = eval_full(r.graph, r.spec, r.plans[1], r.backend);
    CHECK(sc.last_stats.queries == 2);
    CHECK(sc.last_stats.transfer_rows == 501);
    CHECK(sc.last_stats.client_rows == 500 + groups);

    // extent and bin on the server: the bin layer crosses as a table
    RuntimeState ss = eval_full(r.graph, r.spec, r.plans[2], r.backend);
    CHECK(ss.last_stats.queries == 2);
    CHECK(ss.last_stats.transfer_rows == 501);
    CHECK(ss.last_stats.client_rows == groups);

    // fully server: only the summary row and the aggregated groups cross
    RuntimeState sv = eval_full(r.graph, r.spec, r.plans[3], r.backend);
    CHECK(sv.last_stats.queries == 2);
    CHECK(sv.last_stats.transfer_rows == 1 + groups);
    CHECK(sv.last_stats.scanned_rows == 1000);
    CHECK(sv.last_stats.client_rows == 0);
}

TEST_CASE("interaction re-evaluates the reachable slice only") {
    Rig r = make_rig(histogram_spec(), {{"flights", flights_rows(400, 5)}});

    SUBCASE("in-memory plan") {
        RuntimeState st = eval_full(r.graph, r.spec, r.plans[0], r.backend);
        const Value ext_before = st.signals.at("ext_min");

        apply_interaction(st, "bins", Value::number(40));
        CHECK(st.clock == 2);
        CHECK(st.last_active == std::set<int>{1, 2});
        CHECK(st.stamp_of(0) == 1); // extent untouched
        CHECK(st.stamp_of(1) == 2);
        CHECK(st.stamp_of(2) == 2);
        CHECK(st.signals.at("ext_min") == ext_before);
        CHECK(st.last_stats.queries == 0); // source stays cached client-side
        CHECK(st.last_stats.transfer_rows == 0);
        check_stamp_order(st);
    }

    SUBCASE("fully server plan re-runs one query") {
        RuntimeState st = eval_full(r.graph, r.spec, r.plans[3], r.backend);
        apply_interaction(st, "bins", Value::number(40));
        CHECK(st.last_active == std::set<int>{1, 2});
        CHECK(st.last_stats.queries == 1); // bin layer only; the summary stands
        CHECK(st.last_stats.transfer_rows ==
              static_cast<double>(st.entry_rows("hist").rows.size()));
        CHECK(st.stamp_of(0) == 1);
    }

    SUBCASE("signal nothing reads") {
        RuntimeState st = eval_full(r.graph, r.spec, r.plans[0], r.backend);
        apply_interaction(st, "unused", Value::number(9));
        CHECK(st.clock == 2);
        CHECK(st.last_active.empty());
        CHECK(st.last_stats.queries == 0);
        CHECK(st.last_stats.client_rows == 0);
        CHECK(st.stamp_of(2) == 1);
        CHECK(st.signals.at("unused") == Value::number(9));
    }

    SUBCASE("unknown signal") {
        RuntimeState st = eval_full(r.graph, r.spec, r.plans[0], r.backend);
        CHECK_THROWS_AS(apply_interaction(st, "nope", Value::number(1)), ValidationError);
        CHECK_THROWS_AS(eval_full(r.graph, r.spec, r.plans[0], r.backend,
                                  {{"nope", Value::number(1)}}),
                        ValidationError);
    }
}

TEST_CASE("field selector reruns its whole entry") {
    DashboardSpec d;
    d.tables = {{"t", ""}};
    d.signals = {field_dropdown("fsel", {"a", "b"}, "a")};
    DataEntry e;
    e.name = "hist";
    e.source = "t";
    TransformSpec ex = extent("", "e0");
    ex.field.signal = "fsel";
    e.transforms = {ex, bin_on_signals("a", "e0_min", "e0_max", "", {"b0", "b1"}),
                    count_by({"b0"}, "n")};
    d.data = {e};
    d.views = {{"chart", "hist"}};

    Rig r = make_rig(std::move(d), {{"t", random_rows(300, 11)}});
    REQUIRE(r.plans.size() == 1); // the selector pins everything client-side

    RuntimeState st = eval_full(r.graph, r.spec, r.plans[0], r.backend);
    apply_interaction(st, "fsel", Value::text("b"));
    CHECK(st.last_active == std::set<int>{0, 1, 2});
    CHECK(st.stamp_of(0) == 2);

    RuntimeState fresh =
        eval_full(r.graph, r.spec, r.plans[0], r.backend, {{"fsel", Value::text("b")}});
    check_same_appearance(fresh, st);
}

TEST_CASE("reachability passes through derived signals") {
    DashboardSpec d;
    d.tables = {{"t", ""}};
    d.signals = {slider("sig0", 3)};
    SignalSpec twice;
    twice.name = "twice";
    twice.expr_text = "sig0 * 2";
    twice.expr = std::shared_ptr<const ExprAst>(parse_expr(twice.expr_text).release());
    d.signals.push_back(twice);
    DataEntry e;
    e.name = "kept";
    e.source = "t";
    e.transforms = {filter("datum.a > twice")};
    d.data = {e};
    d.views = {{"chart", "kept"}};

    Rig r = make_rig(std::move(d), {{"t", random_rows(200, 13)}});
    RuntimeState st = eval_full(r.graph, r.spec, r.plans[0], r.backend);
    CHECK(st.signals.at("twice") == Value::number(6));

    apply_interaction(st, "sig0", Value::number(5));
    CHECK(st.signals.at("twice") == Value::number(10));
    CHECK(st.last_active == std::set<int>{0});

    RuntimeState fresh =
        eval_full(r.graph, r.spec, r.plans[0], r.backend, {{"sig0", Value::number(5)}});
    check_same_appearance(fresh, st);
}

TEST_CASE("a slider step equals a fresh render under every plan") {
    Rig r = make_rig(histogram_spec(), {{"flights", flights_rows(500, 3)}});
    for (const auto &plan : r.plans) {
        RuntimeState walked = eval_full(r.graph, r.spec, plan, r.backend);
        apply_interaction(walked, "bins", Value::number(7));
        apply_interaction(walked, "bins", Value::number(40));
        RuntimeState fresh =
            eval_full(r.graph, r.spec, plan, r.backend, {{"bins", Value::number(40)}});
        check_same_appearance(fresh, walked);
        check_stamp_order(walked);
    }
}

TEST_CASE("plan independence across randomized dashboards") {
    for (unsigned seed = 1; seed <= 30; ++seed) {
        CAPTURE(seed);
        DashboardSpec spec = random_spec(seed);
        const size_t n = seed % 5 == 0 ? 0 : 80 + seed * 5;
        Rig r = make_rig(std::move(spec), {{"t", random_rows(n, seed * 17 + 1)}});
        REQUIRE(!r.plans.empty());

        RuntimeState base = eval_full(r.graph, r.spec, r.plans[0], r.backend);
        check_stamp_order(base);
        for (size_t i = 1; i < r.plans.size(); ++i) {
            CAPTURE(i);
            RuntimeState st = eval_full(r.graph, r.spec, r.plans[i], r.backend);
            check_same_appearance(base, st);
            check_stamp_order(st);
        }
    }
}

TEST_CASE("interaction equals fresh render across randomized dashboards") {
    for (unsigned seed = 1; seed <= 12; ++seed) {
        CAPTURE(seed);
        DashboardSpec spec = random_spec(seed);
        Rig r = make_rig(std::move(spec), {{"t", random_rows(150, seed * 31 + 2)}});
        for (const auto &plan : r.plans) {
            CAPTURE(plan.plan_id);
            RuntimeState walked = eval_full(r.graph, r.spec, plan, r.backend);
            apply_interaction(walked, "sig0", Value::number(2));
            RuntimeState fresh =
                eval_full(r.graph, r.spec, plan, r.backend, {{"sig0", Value::number(2)}});
            check_same_appearance(fresh, walked);
            check_stamp_order(walked);
        }
    }
}

TEST_CASE("empty sources stay well-defined") {
    Rig r = make_rig(histogram_spec(), {{"flights", flights_rows(0, 1)}});
    RuntimeState base = eval_full(r.graph, r.spec, r.plans[0], r.backend);
    CHECK(base.signals.at("ext_min").is_null());
    for (size_t i = 1; i < r.plans.size(); ++i) {
        RuntimeState st = eval_full(r.graph, r.spec, r.plans[i], r.backend);
        check_same_appearance(base, st);
    }
}

TEST_CASE("measured cardinalities cover what the encoder reads") {
    Rig r = make_rig(histogram_spec(), {{"flights", flights_rows(500, 3)}});

    RuntimeState sv = eval_full(r.graph, r.spec, r.plans[3], r.backend);
    auto cards = measured_cards(sv);
    REQUIRE(cards.count(2)); // span boundary
    CHECK(cards.at(2) == static_cast<double>(sv.entry_rows("hist").rows.size()));
    PlanVector v = encode_plan(r.graph, r.spec, r.plans[3].server, cards);
    CHECK(v.counts[kSpanSlot] == 2);

    RuntimeState cc = eval_full(r.graph, r.spec, r.plans[0], r.backend);
    cards = measured_cards(cc);
    REQUIRE(cards.size() == 3);
    CHECK(cards.at(0) == 500);
    CHECK(cards.at(1) == 500);
    std::set<int> active{1, 2};
    encode_plan(r.graph, r.spec, r.plans[0].server, cards, &active); // no throw
}

TEST_CASE("estimates annotate every operator without running a plan") {
    DashboardSpec d;
    d.tables = {{"t", ""}};
    d.signals = {slider("sig0", 4)};
    DataEntry base;
    base.name = "base";
    base.source = "t";
    base.transforms = {filter("datum.a > 4")};
    DataEntry agg;
    agg.name = "agg";
    agg.source = "base";
    agg.transforms = {count_by({"c"}, "n")};
    d.data = {base, agg};
    d.views = {{"chart", "agg"}};

    DataTable t = random_rows(12000, 21);
    double truth = 0;
    for (const auto &row : t.rows)
        if (row[0].kind() == ValueKind::Number && row[0].as_number() > 4) ++truth;

    Rig r = make_rig(std::move(d), {{"t", t}});
    auto est = annotate_estimates(r.graph, r.spec, r.backend);
    REQUIRE(est.size() == 2);
    CHECK(est.at(0) == doctest::Approx(truth).epsilon(0.25));
    CHECK(est.at(1) == 3); // grouped: observed groups in the sample
    CHECK(r.graph.op(0).out_rows == est.at(0));
    CHECK(r.graph.op(1).out_rows == est.at(1));

    auto again = annotate_estimates(r.graph, r.spec, r.backend);
    CHECK(again == est); // deterministic sampling
}

TEST_CASE("estimates run extents so bin parameters resolve") {
    Rig r = make_rig(histogram_spec(), {{"flights", flights_rows(5000, 9)}});
    auto est = annotate_estimates(r.graph, r.spec, r.backend);
    CHECK(est.at(0) == 5000);
    CHECK(est.at(1) == 5000);
    CHECK(est.at(2) > 2);  // real bins, not a single degenerate bucket
    CHECK(est.at(2) < 60);
}

TEST_CASE("estimates pin field selectors to their current value") {
    DashboardSpec d;
    d.tables = {{"t", ""}};
    d.signals = {field_dropdown("fsel", {"a", "b"}, "b")};
    DataEntry e;
    e.name = "hist";
    e.source = "t";
    TransformSpec ex = extent("", "e0");
    ex.field.signal = "fsel";
    e.transforms = {ex, bin_on_signals("b", "e0_min", "e0_max", "", {"b0", "b1"}),
                    count_by({"b0"}, "n")};
    d.data = {e};
    d.views = {{"chart", "hist"}};

    Rig r = make_rig(std::move(d), {{"t", random_rows(3000, 23)}});
    auto est = annotate_estimates(r.graph, r.spec, r.backend);
    CHECK(est.at(0) == 3000);
    CHECK(est.at(2) > 1); // bins resolved against the selected field's bounds
}
