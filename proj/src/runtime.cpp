#include "vizplan/runtime.hpp"

#include <algorithm>
#include <functional>
#include <optional>

#include "vizplan/errors.hpp"
#include "vizplan/expr.hpp"
#include "vizplan/rewrite.hpp"
#include "vizplan/transforms.hpp"

namespace vizplan {

void EvalStats::add(const EvalStats &o) {
    client_rows += o.client_rows;
    transfer_rows += o.transfer_rows;
    scanned_rows += o.scanned_rows;
    queries += o.queries;
}

namespace {

const TransformSpec &op_spec(const PipelineGraph &g, const DashboardSpec &spec, int pos) {
    const GraphNode &n = g.op(pos);
    return spec.data[static_cast<size_t>(n.entry)].transforms[static_cast<size_t>(n.tf)];
}

SignalGetter live_signals(const SignalValues &sigs) {
    return [&sigs](const std::string &name) -> Value {
        auto it = sigs.find(name);
        return it == sigs.end() ? Value() : it->second;
    };
}

void recompute_derived(const DashboardSpec &spec, SignalValues &sigs) {
    static const Row no_row;
    static const Schema no_schema;
    auto lookup = [&sigs](const std::string &name) -> std::optional<Value> {
        auto it = sigs.find(name);
        if (it == sigs.end()) return std::nullopt;
        return it->second;
    };
    for (const auto &s : spec.signals)
        if (s.expr) sigs[s.name] = eval_expr(*s.expr, no_row, no_schema, lookup);
}

// Derived signals reading anything in `dirty`, transitively, in document
// order (a derived signal may only reference signals declared before it).
void widen_dirty(const DashboardSpec &spec, std::set<std::string> &dirty) {
    for (const auto &s : spec.signals) {
        if (!s.expr) continue;
        std::vector<std::string> refs;
        collect_signal_refs(*s.expr, refs);
        for (const auto &r : refs)
            if (dirty.count(r)) {
                dirty.insert(s.name);
                break;
            }
    }
}

std::string fetch_all_sql(const std::string &table, const Schema &s) {
    SqlQuery q;
    for (const auto &c : s.columns) q.items.push_back({SqlExpr::column(c.name), ""});
    q.from_table = table;
    return to_sql(q);
}

const Schema &table_schema(const PipelineGraph &g, const std::string &table) {
    return g.nodes[static_cast<size_t>(g.source_node.at(table))].out_schema;
}

double base_table_rows(RuntimeState &st, const std::string &table) {
    auto it = st.table_rows.find(table);
    if (it != st.table_rows.end()) return it->second;
    const double n =
        st.backend->estimate_rows(fetch_all_sql(table, table_schema(*st.graph, table)));
    st.table_rows[table] = n;
    return n;
}

double scanned_by(RuntimeState &st, const SqlQuery &q) {
    const SqlQuery *base = &q;
    while (base->from_sub) base = base->from_sub.get();
    return base_table_rows(st, base->from_table);
}

// Client-side rows of a node, materializing on demand: sources are pulled
// from the backend once, a server extent passes its input through (shared,
// no copy). Anything else unmaterialized is a plan compilation bug.
std::shared_ptr<const DataTable> rows_of(RuntimeState &st, int node) {
    if (st.outputs[static_cast<size_t>(node)]) return st.outputs[static_cast<size_t>(node)];
    const PipelineGraph &g = *st.graph;
    const GraphNode &n = g.nodes[static_cast<size_t>(node)];
    if (n.kind == GraphNode::Kind::Source) {
        const std::string &name = st.spec->tables[static_cast<size_t>(n.table)].name;
        DataTable t = st.backend->execute(fetch_all_sql(name, n.out_schema));
        if (t.schema.columns.size() == n.out_schema.columns.size()) t.schema = n.out_schema;
        st.last_stats.queries += 1;
        st.last_stats.transfer_rows += static_cast<double>(t.rows.size());
        st.last_stats.scanned_rows += base_table_rows(st, name);
        st.outputs[static_cast<size_t>(node)] = std::make_shared<DataTable>(std::move(t));
        st.stamps[static_cast<size_t>(node)] = st.clock;
        return st.outputs[static_cast<size_t>(node)];
    }
    const bool passthrough = st.server[static_cast<size_t>(n.op_pos)] &&
                             op_spec(g, *st.spec, n.op_pos).kind == TransformKind::Extent;
    if (!passthrough) throw ExecError("no client rows for " + n.label);
    st.outputs[static_cast<size_t>(node)] = rows_of(st, n.data_parent);
    st.stamps[static_cast<size_t>(node)] = st.clock;
    return st.outputs[static_cast<size_t>(node)];
}

void publish(RuntimeState &st, const std::string &name, Value v) {
    st.signals[name] = std::move(v);
}

void run_scalar_span(RuntimeState &st, const VdtSpan &span) {
    const SqlQuery filled = fill_builder(span.builder, live_signals(st.signals));
    DataTable r = st.backend->execute(to_sql(filled));
    st.last_stats.queries += 1;
    st.last_stats.transfer_rows += 1;
    st.last_stats.scanned_rows += scanned_by(st, filled);

    const TransformSpec &t = op_spec(*st.graph, *st.spec, span.publisher_pos);
    const int mi = r.schema.find("min"), ma = r.schema.find("max");
    if (mi < 0 || ma < 0 || r.rows.empty())
        throw ExecError("summary query returned no min/max row");
    publish(st, t.signal_out + "_min", r.rows[0][static_cast<size_t>(mi)]);
    publish(st, t.signal_out + "_max", r.rows[0][static_cast<size_t>(ma)]);
    recompute_derived(*st.spec, st.signals);

    const int node = st.graph->op_order[static_cast<size_t>(span.publisher_pos)];
    st.stamps[static_cast<size_t>(node)] = st.clock;
}

void run_table_span(RuntimeState &st, const VdtSpan &span) {
    const SqlQuery filled = fill_builder(span.builder, live_signals(st.signals));
    DataTable r = st.backend->execute(to_sql(filled));
    st.last_stats.queries += 1;
    st.last_stats.transfer_rows += static_cast<double>(r.rows.size());
    st.last_stats.scanned_rows += scanned_by(st, filled);

    if (r.schema.columns.size() != span.builder.produces.columns.size())
        throw ExecError("span result shape mismatch for entry " + span.entry);
    r.schema = span.builder.produces; // compiled kinds and roles are authoritative

    const int node = st.graph->op_order[static_cast<size_t>(span.output_pos)];
    st.outputs[static_cast<size_t>(node)] = std::make_shared<DataTable>(std::move(r));
    st.stamps[static_cast<size_t>(node)] = st.clock;
}

void run_client_op(RuntimeState &st, int pos) {
    const PipelineGraph &g = *st.graph;
    const GraphNode &n = g.op(pos);
    const std::shared_ptr<const DataTable> in = rows_of(st, n.data_parent);
    TransformResult r = apply_transform(op_spec(g, *st.spec, pos), *in, live_signals(st.signals));
    st.last_stats.client_rows += static_cast<double>(r.table.rows.size());
    if (!r.published.empty()) {
        for (auto &kv : r.published) publish(st, kv.first, std::move(kv.second));
        recompute_derived(*st.spec, st.signals);
    }
    const int node = g.op_order[static_cast<size_t>(pos)];
    st.outputs[static_cast<size_t>(node)] = std::make_shared<DataTable>(std::move(r.table));
    st.stamps[static_cast<size_t>(node)] = st.clock;
}

// One evaluation sweep at the current clock. Spans fire at their trigger
// position (the publishing extent, the entry's boundary operator), client
// operators run in memory, and everything else resolves lazily. Outputs of
// `affected` operators must have been cleared by the caller.
void evaluate(RuntimeState &st, const std::set<int> &affected) {
    const PipelineGraph &g = *st.graph;
    st.last_stats = EvalStats{};

    std::map<int, const VdtSpan *> scalar_at, table_at;
    for (const auto &s : st.spans)
        (s.scalar ? scalar_at[s.publisher_pos] : table_at[s.output_pos]) = &s;

    for (int pos = 0; pos < g.op_count(); ++pos) {
        if (!affected.count(pos)) continue;
        if (auto it = scalar_at.find(pos); it != scalar_at.end()) run_scalar_span(st, *it->second);
        if (auto it = table_at.find(pos); it != table_at.end()) run_table_span(st, *it->second);
        if (!st.server[static_cast<size_t>(pos)]) run_client_op(st, pos);
    }

    for (int node : st.held_nodes)
        if (!st.outputs[static_cast<size_t>(node)]) rows_of(st, node);

    st.last_active = affected;
}

} // namespace

SignalValues initial_signals(const DashboardSpec &spec) {
    SignalValues sigs;
    for (const auto &s : spec.signals)
        for (const auto &kv : s.init) sigs[kv.first] = kv.second;
    recompute_derived(spec, sigs);
    return sigs;
}

const DataTable &RuntimeState::entry_rows(const std::string &entry) const {
    auto it = graph->entry_output.find(entry);
    if (it == graph->entry_output.end()) throw ExecError("unknown entry " + entry);
    const auto &out = outputs[static_cast<size_t>(it->second)];
    if (!out) throw ExecError("entry " + entry + " is not materialized client-side");
    return *out;
}

uint64_t RuntimeState::stamp_of(int op_pos) const {
    return stamps[static_cast<size_t>(graph->op_order[static_cast<size_t>(op_pos)])];
}

RuntimeState eval_full(const PipelineGraph &g, const DashboardSpec &spec,
                       const ExecutionPlan &plan, QueryExecutor &backend,
                       const SignalValues &overrides) {
    if (plan.server.size() != static_cast<size_t>(g.op_count()))
        throw ExecError("plan does not fit this graph");

    RuntimeState st;
    st.graph = &g;
    st.spec = &spec;
    st.backend = &backend;
    st.server = plan.server;
    st.spans = compile_plan(g, spec, plan.server);
    st.outputs.assign(g.nodes.size(), nullptr);
    st.stamps.assign(g.nodes.size(), 0);

    st.signals = initial_signals(spec);
    for (const auto &kv : overrides) {
        if (!g.interaction_scalars.count(kv.first))
            throw ValidationError("unknown signal " + kv.first);
        st.signals[kv.first] = kv.second;
    }
    recompute_derived(spec, st.signals);

    for (const auto &v : spec.views) st.held_nodes.insert(g.entry_output.at(v.entry));
    std::map<int, int> child_count;
    for (const auto &e : spec.data)
        if (spec.find_entry(e.source) >= 0) child_count[g.entry_output.at(e.source)]++;
    for (const auto &kv : child_count)
        if (kv.second >= 2) st.held_nodes.insert(kv.first);

    st.clock = 1;
    std::set<int> all;
    for (int pos = 0; pos < g.op_count(); ++pos) all.insert(pos);
    evaluate(st, all);
    return st;
}

void apply_interaction(RuntimeState &st, const std::string &scalar, const Value &value) {
    apply_interaction(st, SignalValues{{scalar, value}});
}

void apply_interaction(RuntimeState &st, const SignalValues &scalars) {
    const PipelineGraph &g = *st.graph;
    if (scalars.empty()) throw ValidationError("interaction with no scalars");
    for (const auto &[name, value] : scalars)
        if (!g.interaction_scalars.count(name)) throw ValidationError("unknown signal " + name);

    ++st.clock;
    std::set<std::string> dirty;
    for (const auto &[name, value] : scalars) {
        st.signals[name] = value;
        dirty.insert(name);
    }
    widen_dirty(*st.spec, dirty);
    recompute_derived(*st.spec, st.signals);

    // Reachability, not value change: an operator re-evaluates when it reads
    // a dirty scalar, its data parent re-evaluates, or a publisher it
    // listens to re-evaluates. One forward pass suffices (edges point to
    // earlier positions only).
    std::set<int> affected;
    for (int pos = 0; pos < g.op_count(); ++pos) {
        const GraphNode &n = g.op(pos);
        bool hit = false;
        for (const auto &s : n.reads_scalars)
            if (dirty.count(s)) {
                hit = true;
                break;
            }
        if (!hit && n.data_parent >= 0) {
            const GraphNode &p = g.nodes[static_cast<size_t>(n.data_parent)];
            if (p.kind == GraphNode::Kind::Operator && affected.count(p.op_pos)) hit = true;
        }
        if (!hit)
            for (int sp : n.signal_parents)
                if (affected.count(g.nodes[static_cast<size_t>(sp)].op_pos)) {
                    hit = true;
                    break;
                }
        if (hit) affected.insert(pos);
    }

    for (int pos : affected)
        st.outputs[static_cast<size_t>(g.op_order[static_cast<size_t>(pos)])] = nullptr;
    evaluate(st, affected);
}

std::map<int, double> measured_cards(const RuntimeState &st) {
    const PipelineGraph &g = *st.graph;
    std::map<int, double> cards;
    for (int pos = 0; pos < g.op_count(); ++pos) {
        const auto &out = st.outputs[static_cast<size_t>(g.op_order[static_cast<size_t>(pos)])];
        if (out) cards[pos] = static_cast<double>(out->rows.size());
    }
    return cards;
}

namespace {

struct Feed {
    int entry = -1;
    std::string table;
};

Feed effective_feed(const DashboardSpec &spec, int e) {
    std::string src = spec.data[static_cast<size_t>(e)].source;
    for (;;) {
        const int up = spec.find_entry(src);
        if (up < 0) return {-1, src};
        if (!spec.data[static_cast<size_t>(up)].transforms.empty()) return {up, ""};
        src = spec.data[static_cast<size_t>(up)].source;
    }
}

size_t plain_ops(const std::vector<TransformSpec> &ts, size_t upto) {
    size_t n = 0;
    for (size_t i = 0; i < upto && i < ts.size(); ++i)
        if (ts[i].kind != TransformKind::Extent) ++n;
    return n;
}

} // namespace

std::map<int, double> annotate_estimates(PipelineGraph &g, const DashboardSpec &spec,
                                         QueryExecutor &backend) {
    SignalValues sigs = initial_signals(spec);

    // Pin field selectors to their current value; estimation queries may use
    // today's field even though a plan's static SQL could not.
    DashboardSpec resolved = spec;
    for (auto &e : resolved.data)
        for (auto &t : e.transforms)
            if (t.field.from_signal()) {
                const Value v = live_signals(sigs)(t.field.signal);
                if (v.kind() != ValueKind::Text)
                    throw ExecError("field selector " + t.field.signal + " holds no field name");
                t.field.field = v.as_text();
                t.field.signal.clear();
            }

    std::set<std::string> published;
    for (const auto &kv : g.scalar_publisher) published.insert(kv.first);

    std::map<int, std::optional<QueryBuilder>> full_memo;
    std::function<std::optional<SpanSource>(int)> feed_source;
    std::function<const std::optional<QueryBuilder> &(int)> full_of =
        [&](int e) -> const std::optional<QueryBuilder> & {
        auto it = full_memo.find(e);
        if (it != full_memo.end()) return it->second;
        std::optional<QueryBuilder> b;
        if (auto src = feed_source(e))
            b = rewrite_span(resolved.data[static_cast<size_t>(e)].transforms, *src, resolved,
                             published);
        return full_memo.emplace(e, std::move(b)).first->second;
    };
    feed_source = [&](int e) -> std::optional<SpanSource> {
        const Feed f = effective_feed(resolved, e);
        if (f.entry < 0) {
            const GraphNode &src = g.nodes[static_cast<size_t>(g.source_node.at(f.table))];
            return SpanSource::base(f.table, src.out_schema);
        }
        const auto &ub = full_of(f.entry);
        if (!ub) return std::nullopt;
        return SpanSource::nested(*ub);
    };

    auto prefix_builder = [&](int e, size_t count) -> std::optional<QueryBuilder> {
        auto src = feed_source(e);
        if (!src) return std::nullopt;
        const auto &ts = resolved.data[static_cast<size_t>(e)].transforms;
        const std::vector<TransformSpec> pre(ts.begin(), ts.begin() + static_cast<long>(count));
        return rewrite_span(pre, *src, resolved, published);
    };

    std::map<int, double> est;
    std::map<std::string, double> trows;
    auto table_n = [&](const std::string &name) {
        auto it = trows.find(name);
        if (it != trows.end()) return it->second;
        return trows[name] = backend.estimate_rows(fetch_all_sql(name, table_schema(g, name)));
    };
    std::map<std::pair<int, int>, int> pos_of; // (entry, tf) -> operator position
    for (int p = 0; p < g.op_count(); ++p) pos_of[{g.op(p).entry, g.op(p).tf}] = p;

    for (size_t e = 0; e < resolved.data.size(); ++e) {
        const auto &ts = resolved.data[e].transforms;
        if (ts.empty()) continue;
        const Feed feed = effective_feed(resolved, static_cast<int>(e));
        double prev;
        if (feed.entry < 0) {
            prev = table_n(feed.table);
        } else {
            const auto &up = resolved.data[static_cast<size_t>(feed.entry)].transforms;
            prev = est.at(pos_of.at({feed.entry, static_cast<int>(up.size()) - 1}));
        }

        for (size_t i = 0; i < ts.size(); ++i) {
            const int pos = pos_of.at({static_cast<int>(e), static_cast<int>(i)});
            const TransformSpec &t = ts[i];

            if (t.kind == TransformKind::Filter || t.kind == TransformKind::Aggregate) {
                double v = prev;
                if (auto b = prefix_builder(static_cast<int>(e), i + 1))
                    v = backend.estimate_rows(to_sql(fill_builder(*b, live_signals(sigs))));
                est[pos] = v;
            } else {
                est[pos] = prev;
                if (t.kind == TransformKind::Extent && !t.signal_out.empty()) {
                    // run the min/max summary so downstream bin holes resolve
                    // against real bounds
                    std::optional<SpanSource> src = feed_source(static_cast<int>(e));
                    if (src && plain_ops(ts, i) > 0) {
                        if (auto pre = prefix_builder(static_cast<int>(e), i))
                            src = SpanSource::nested(*pre);
                        else
                            src = std::nullopt;
                    }
                    if (src) {
                        if (auto sb = rewrite_span({t}, *src, resolved, published)) {
                            DataTable r =
                                backend.execute(to_sql(fill_builder(*sb, live_signals(sigs))));
                            const int mi = r.schema.find("min"), ma = r.schema.find("max");
                            if (mi >= 0 && ma >= 0 && !r.rows.empty()) {
                                sigs[t.signal_out + "_min"] = r.rows[0][static_cast<size_t>(mi)];
                                sigs[t.signal_out + "_max"] = r.rows[0][static_cast<size_t>(ma)];
                            }
                        }
                    }
                }
            }
            prev = est[pos];
            g.op(pos).out_rows = est[pos];
        }
    }
    return est;
}

} // namespace vizplan
