#include <doctest.h>

#include <map>
#include <random>
#include <set>
#include <vector>

#include "vizplan/errors.hpp"
#include "vizplan/expr.hpp"
#include "vizplan/graph.hpp"
#include "vizplan/plan.hpp"

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

// single entry: extent -> bin over the published extent -> count per bin
DashboardSpec histogram_spec() {
    DashboardSpec d;
    d.tables = {{"flights", ""}};
    d.signals = {slider("bins", 20)};
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

std::map<std::string, Schema> histogram_catalog() {
    Schema s;
    s.columns = {{"delay", ValueKind::Number, FieldRole::Quantitative}};
    return {{"flights", s}};
}

// base filter entry feeding one aggregate entry
DashboardSpec chain_spec() {
    DashboardSpec d;
    d.tables = {{"t", ""}};
    DataEntry a;
    a.name = "base";
    a.source = "t";
    a.transforms = {filter("datum.a > 0")};
    DataEntry b;
    b.name = "agg";
    b.source = "base";
    b.transforms = {count_by({"c"}, "n")};
    d.data = {a, b};
    d.views = {{"chart", "agg"}};
    return d;
}

// base filter entry feeding two aggregate entries
DashboardSpec fanout_spec() {
    DashboardSpec d = chain_spec();
    DataEntry c;
    c.name = "agg2";
    c.source = "base";
    c.transforms = {count_by({"c"}, "m")};
    d.data.push_back(c);
    d.views.push_back({"chart2", "agg2"});
    return d;
}

std::map<std::string, Schema> two_col_catalog() {
    Schema s;
    s.columns = {{"a", ValueKind::Number, FieldRole::Quantitative},
                 {"c", ValueKind::Text, FieldRole::Categorical}};
    return {{"t", s}};
}

std::set<std::vector<bool>> assignments(const std::vector<ExecutionPlan> &plans) {
    std::set<std::vector<bool>> out;
    for (const auto &p : plans) out.insert(p.server);
    return out;
}

// Independent validity check, straight off the rule: every server operator
// is rewritable and all its upstream operators (previous transform in the
// entry, the feeding entry's last transform, publishers of scalars it
// reads) are server too. Works from the spec alone, not the graph.
struct FlatOp {
    const TransformSpec *t;
    int data_parent; // flat index, -1 for a base table
    std::vector<int> signal_parents;
};

std::vector<FlatOp> flatten_ops(const DashboardSpec &spec) {
    std::vector<FlatOp> ops;
    std::map<std::string, int> entry_out; // entry name -> last flat op, -1 none
    std::map<std::string, int> publisher; // scalar -> flat op
    for (const auto &e : spec.data) {
        int cur = -1;
        if (auto it = entry_out.find(e.source); it != entry_out.end()) cur = it->second;
        for (const auto &t : e.transforms) {
            FlatOp op{&t, cur, {}};
            std::vector<std::string> reads;
            if (t.field.from_signal()) reads.push_back(t.field.signal);
            if (t.kind == TransformKind::Bin) {
                if (!t.maxbins_signal.empty()) reads.push_back(t.maxbins_signal);
                if (t.extent_from == TransformSpec::ExtentFrom::Signals) {
                    reads.push_back(t.extent_lo_signal);
                    reads.push_back(t.extent_hi_signal);
                }
            }
            if (t.kind == TransformKind::Filter) collect_signal_refs(*t.expr, reads);
            for (const auto &s : reads)
                if (auto it = publisher.find(s); it != publisher.end())
                    op.signal_parents.push_back(it->second);
            cur = static_cast<int>(ops.size());
            if (t.kind == TransformKind::Extent && !t.signal_out.empty()) {
                publisher[t.signal_out + "_min"] = cur;
                publisher[t.signal_out + "_max"] = cur;
            }
            ops.push_back(std::move(op));
        }
        entry_out[e.name] = cur;
    }
    return ops;
}

std::set<std::vector<bool>> oracle_valid_sets(const DashboardSpec &spec) {
    const auto ops = flatten_ops(spec);
    const size_t n = ops.size();
    std::set<std::vector<bool>> out;
    for (uint32_t mask = 0; mask < (1u << n); ++mask) {
        std::vector<bool> server(n);
        for (size_t i = 0; i < n; ++i) server[i] = (mask >> i) & 1;
        bool ok = true;
        for (size_t i = 0; i < n && ok; ++i) {
            if (!server[i]) continue;
            const TransformSpec &t = *ops[i].t;
            if (t.field.from_signal()) ok = false;
            if (t.kind == TransformKind::Stack && t.sort.fields.empty()) ok = false;
            if (ops[i].data_parent >= 0 && !server[static_cast<size_t>(ops[i].data_parent)])
                ok = false;
            for (int p : ops[i].signal_parents)
                if (!server[static_cast<size_t>(p)]) ok = false;
        }
        if (ok) out.insert(std::move(server));
    }
    return out;
}

// Random dashboards over a fixed base table. Transforms only ever add
// columns, so generated references stay resolvable at any position.
DashboardSpec random_spec(unsigned seed) {
    std::mt19937_64 rng(seed);
    DashboardSpec d;
    d.tables = {{"t", ""}};
    d.signals = {slider("sig0", 10), field_dropdown("fsel", {"a", "b"}, "a")};

    int uniq = 0;
    std::vector<std::string> published; // extent signal bases seen so far
    const size_t entries = 1 + rng() % 3;
    size_t total_ops = 0;
    for (size_t ei = 0; ei < entries; ++ei) {
        DataEntry e;
        e.name = "d" + std::to_string(ei);
        e.source = (ei > 0 && rng() % 100 < 35)
                       ? d.data[rng() % d.data.size()].name
                       : "t";
        size_t want = rng() % 4; // 0..3, op-less entries allowed
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
                    t.field.signal = "fsel"; // not rewritable
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
                    e.transforms.push_back(
                        bin_on_signals(num_field, (base + "_min").c_str(),
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
                e.transforms.push_back(stack_unsorted("a", {y0, y1})); // not rewritable
            }
        }
        d.data.push_back(std::move(e));
    }
    d.views = {{"chart", d.data.back().name}};
    return d;
}

std::map<std::string, Schema> random_catalog() {
    Schema s;
    s.columns = {{"a", ValueKind::Number, FieldRole::Quantitative},
                 {"b", ValueKind::Number, FieldRole::Quantitative},
                 {"c", ValueKind::Text, FieldRole::Categorical},
                 {"d", ValueKind::Timestamp, FieldRole::Temporal}};
    return {{"t", s}};
}

std::map<int, double> histogram_cards() {
    return {{0, 1000.0}, {1, 1000.0}, {2, 25.0}};
}

} // namespace

TEST_CASE("histogram enumerates exactly the four prefix plans") {
    const auto spec = histogram_spec();
    const auto g = compile_graph(spec, histogram_catalog());
    const auto plans = enumerate_plans(g, spec);
    REQUIRE(plans.size() == 4);
    CHECK(plans[0].server == std::vector<bool>{false, false, false});
    CHECK(plans[1].server == std::vector<bool>{true, false, false});
    CHECK(plans[2].server == std::vector<bool>{true, true, false});
    CHECK(plans[3].server == std::vector<bool>{true, true, true});
    for (size_t i = 0; i < plans.size(); ++i) CHECK(plans[i].plan_id == i);
}

TEST_CASE("an operator with a signal-selected field pins everything downstream client-side") {
    DashboardSpec d;
    d.tables = {{"t", ""}};
    d.signals = {field_dropdown("fsel", {"a", "b"}, "a")};
    DataEntry e;
    e.name = "d0";
    e.source = "t";
    TransformSpec sel = extent("", "ex");
    sel.field.signal = "fsel";
    e.transforms = {sel, filter("datum.a > 0")};
    d.data = {e};
    d.views = {{"chart", "d0"}};
    const auto g = compile_graph(d, random_catalog());

    const auto plans = enumerate_plans(g, d);
    REQUIRE(plans.size() == 1);
    CHECK(plans[0].server == std::vector<bool>{false, false});
    CHECK(!op_rewritable(g, d, 0));
    CHECK(op_rewritable(g, d, 1));
}

TEST_CASE("enumeration matches the exhaustive subset oracle on random dashboards") {
    for (unsigned seed = 0; seed < 40; ++seed) {
        CAPTURE(seed);
        const DashboardSpec spec = random_spec(seed);
        PipelineGraph g;
        REQUIRE_NOTHROW(g = compile_graph(spec, random_catalog()));
        const auto plans = enumerate_plans(g, spec);
        const auto expect = oracle_valid_sets(spec);
        CHECK(assignments(plans) == expect);
        REQUIRE(!plans.empty());
        CHECK(plans[0].server == std::vector<bool>(static_cast<size_t>(g.op_count()), false));
        for (size_t i = 0; i < plans.size(); ++i) CHECK(plans[i].plan_id == i);
    }
}

TEST_CASE("boundary cuts are a valid subset of the full enumeration") {
    const auto spec = fanout_spec();
    const auto g = compile_graph(spec, two_col_catalog());
    const auto full = enumerate_plans(g, spec);
    const auto cuts = enumerate_plans(g, spec, true);
    CHECK(full.size() == 5);  // the base filter may serve either aggregate alone
    CHECK(cuts.size() == 4);  // cuts only grow along document order
    const auto all = assignments(full);
    for (const auto &p : cuts) {
        CHECK(all.count(p.server) == 1);
        CHECK(plan_valid(g, spec, p.server));
    }

    // a single chain degenerates to the full set
    const auto hspec = histogram_spec();
    const auto hg = compile_graph(hspec, histogram_catalog());
    CHECK(assignments(enumerate_plans(hg, hspec, true)) ==
          assignments(enumerate_plans(hg, hspec)));
}

TEST_CASE("compiling the histogram plans yields the expected query spans") {
    const auto spec = histogram_spec();
    const auto g = compile_graph(spec, histogram_catalog());

    CHECK(compile_plan(g, spec, {false, false, false}).empty());

    // extent only: its published scalars come from the min/max summary and
    // the client keeps working off the raw rows
    auto spans = compile_plan(g, spec, {true, false, false});
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].scalar);
    CHECK(spans[0].entry == "hist");
    CHECK(spans[0].publisher_pos == 0);
    CHECK(spans[0].builder.text() ==
          "SELECT MIN(\"delay\") AS \"min\", MAX(\"delay\") AS \"max\" FROM \"flights\"");

    // everything server: the summary plus one batched table query
    spans = compile_plan(g, spec, {true, true, true});
    REQUIRE(spans.size() == 2);
    CHECK(spans[0].scalar);
    REQUIRE(!spans[1].scalar);
    CHECK(spans[1].ops == std::vector<int>{1, 2});
    CHECK(spans[1].output_pos == 2);
    CHECK(spans[1].builder.text() ==
          "SELECT \"b0\", \"b1\", COUNT(*) AS \"cnt\" FROM "
          "(SELECT \"delay\", "
          "((floor(((\"delay\" - :min) / :step)) * :step) + :min) AS \"b0\", "
          "(((floor(((\"delay\" - :min) / :step)) * :step) + :min) + :step) AS \"b1\" "
          "FROM \"flights\") GROUP BY \"b0\", \"b1\"");

    // partial prefix: the table query ends at the bin layer
    spans = compile_plan(g, spec, {true, true, false});
    REQUIRE(spans.size() == 2);
    CHECK(!spans[1].scalar);
    CHECK(spans[1].ops == std::vector<int>{1});
    CHECK(spans[1].output_pos == 1);
    CHECK(spans[1].builder.text() ==
          "SELECT \"delay\", "
          "((floor(((\"delay\" - :min) / :step)) * :step) + :min) AS \"b0\", "
          "(((floor(((\"delay\" - :min) / :step)) * :step) + :min) + :step) AS \"b1\" "
          "FROM \"flights\"");
}

TEST_CASE("a fully server feeder nests instead of materializing") {
    const auto spec = chain_spec();
    const auto g = compile_graph(spec, two_col_catalog());

    // both server: one span, the filter folded in as a subquery
    auto spans = compile_plan(g, spec, {true, true});
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].entry == "agg");
    CHECK(spans[0].ops == std::vector<int>{0, 1});
    CHECK(spans[0].output_pos == 1);
    CHECK(spans[0].builder.text() ==
          "SELECT \"c\", COUNT(*) AS \"n\" FROM "
          "(SELECT \"a\", \"c\" FROM \"t\" WHERE (\"a\" > 0)) GROUP BY \"c\"");

    // only the feeder server: its rows must land on the client for the
    // native aggregate
    spans = compile_plan(g, spec, {true, false});
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].entry == "base");
    CHECK(spans[0].ops == std::vector<int>{0});
    CHECK(spans[0].output_pos == 0);
    CHECK(spans[0].builder.text() == "SELECT \"a\", \"c\" FROM \"t\" WHERE (\"a\" > 0)");
}

TEST_CASE("a shared feeder materializes even when every consumer is server") {
    const auto spec = fanout_spec();
    const auto g = compile_graph(spec, two_col_catalog());
    const auto spans = compile_plan(g, spec, {true, true, true});
    REQUIRE(spans.size() == 3);
    CHECK(spans[0].entry == "base");
    CHECK(spans[0].ops == std::vector<int>{0});
    CHECK(spans[1].entry == "agg");
    CHECK(spans[1].ops == std::vector<int>{0, 1});
    CHECK(spans[2].entry == "agg2");
    CHECK(spans[2].ops == std::vector<int>{0, 2});
    // consumers still recompute the feeder server-side
    CHECK(spans[1].builder.text().find("FROM (SELECT") != std::string::npos);
}

TEST_CASE("plan vectors tally client kinds and spans with their cardinalities") {
    const auto spec = histogram_spec();
    const auto g = compile_graph(spec, histogram_catalog());
    const auto cards = histogram_cards();

    PlanVector all_client = encode_plan(g, spec, {false, false, false}, cards);
    CHECK(all_client.counts[kind_slot(TransformKind::Extent)] == 1);
    CHECK(all_client.counts[kind_slot(TransformKind::Bin)] == 1);
    CHECK(all_client.counts[kind_slot(TransformKind::Aggregate)] == 1);
    CHECK(all_client.counts[kSpanSlot] == 0);
    CHECK(all_client.card_sums[kind_slot(TransformKind::Extent)] == 1000.0);
    CHECK(all_client.card_sums[kind_slot(TransformKind::Aggregate)] == 25.0);

    PlanVector all_server = encode_plan(g, spec, {true, true, true}, cards);
    for (size_t i = 0; i < kSpanSlot; ++i) {
        CHECK(all_server.counts[i] == 0);
        CHECK(all_server.card_sums[i] == 0);
    }
    CHECK(all_server.counts[kSpanSlot] == 2);
    CHECK(all_server.card_sums[kSpanSlot] == 1.0 + 25.0); // summary row + aggregate rows

    PlanVector mixed = encode_plan(g, spec, {true, false, false}, cards);
    CHECK(mixed.counts[kind_slot(TransformKind::Extent)] == 0);
    CHECK(mixed.counts[kind_slot(TransformKind::Bin)] == 1);
    CHECK(mixed.counts[kSpanSlot] == 1);
    CHECK(mixed.card_sums[kSpanSlot] == 1.0);

    // a missing cardinality for a counted operator is an error
    std::map<int, double> incomplete = {{0, 1000.0}, {1, 1000.0}};
    CHECK_THROWS_AS(encode_plan(g, spec, {false, false, false}, incomplete), ExecError);
}

TEST_CASE("restricting to active operators drops idle spans and kinds") {
    const auto spec = histogram_spec();
    const auto g = compile_graph(spec, histogram_catalog());
    const auto cards = histogram_cards();

    // only the aggregate re-ran: the table span fires, the summary does not
    std::set<int> active = {2};
    PlanVector v = encode_plan(g, spec, {true, true, true}, cards, &active);
    CHECK(v.counts[kSpanSlot] == 1);
    CHECK(v.card_sums[kSpanSlot] == 25.0);

    PlanVector w = encode_plan(g, spec, {false, false, false}, cards, &active);
    CHECK(w.counts[kind_slot(TransformKind::Extent)] == 0);
    CHECK(w.counts[kind_slot(TransformKind::Aggregate)] == 1);
    CHECK(w.card_sums[kind_slot(TransformKind::Aggregate)] == 25.0);

    // inactive operators may lack cardinalities without harm
    std::map<int, double> only_agg = {{2, 25.0}};
    CHECK_NOTHROW(encode_plan(g, spec, {false, false, false}, only_agg, &active));
}

TEST_CASE("normalization scales sums into the unit range per candidate set") {
    const auto spec = histogram_spec();
    const auto g = compile_graph(spec, histogram_catalog());
    const auto cards = histogram_cards();
    const auto plans = enumerate_plans(g, spec);

    std::vector<PlanVector> vecs;
    for (const auto &p : plans) vecs.push_back(encode_plan(g, spec, p.server, cards));
    const Normalizer norm = Normalizer::fit(vecs);
    for (auto &v : vecs) {
        norm.apply(v);
        for (double x : v.normalized) {
            CHECK(x >= 0.0);
            CHECK(x <= 1.0);
        }
    }
    // the candidates stay distinguishable after scaling
    for (size_t i = 0; i < vecs.size(); ++i)
        for (size_t j = i + 1; j < vecs.size(); ++j)
            CHECK(vecs[i].features() != vecs[j].features());
    // extremes of a populated slot hit the ends of the range
    CHECK(vecs[0].normalized[kSpanSlot] == 0.0);

    // a degenerate slot scales to zero
    const Normalizer flat = Normalizer::fit({vecs[0], vecs[0]});
    PlanVector copy = vecs[0];
    flat.apply(copy);
    for (double x : copy.normalized) CHECK(x == 0.0);

    // out-of-range values clamp instead of escaping the unit interval
    PlanVector big = vecs[0];
    big.card_sums[0] = 1e9;
    norm.apply(big);
    CHECK(big.normalized[0] == 1.0);

    const size_t dims = big.features().size();
    CHECK(dims == 2 * kPlanKinds);
}

TEST_CASE("plans render to a stable text form") {
    const auto spec = histogram_spec();
    const auto g = compile_graph(spec, histogram_catalog());
    const auto plans = enumerate_plans(g, spec);
    REQUIRE(plans.size() == 4);
    CHECK(plan_to_text(g, spec, plans[2]) ==
          "plan 2\n"
          "  hist[0]:extent SERVER\n"
          "  hist[1]:bin SERVER\n"
          "  hist[2]:aggregate CLIENT\n"
          "  span scalar hist op 0: "
          "SELECT MIN(\"delay\") AS \"min\", MAX(\"delay\") AS \"max\" FROM \"flights\"\n"
          "  span table hist ops 1 out 1: "
          "SELECT \"delay\", "
          "((floor(((\"delay\" - :min) / :step)) * :step) + :min) AS \"b0\", "
          "(((floor(((\"delay\" - :min) / :step)) * :step) + :min) + :step) AS \"b1\" "
          "FROM \"flights\"\n");
}
