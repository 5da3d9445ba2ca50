#include "vizplan/plan.hpp"

#include <algorithm>
#include <functional>

#include "vizplan/errors.hpp"

namespace vizplan {

size_t kind_slot(TransformKind k) {
    switch (k) {
    case TransformKind::Extent: return 0;
    case TransformKind::Bin: return 1;
    case TransformKind::Aggregate: return 2;
    case TransformKind::Filter: return 3;
    case TransformKind::Collect: return 4;
    case TransformKind::Project: return 5;
    case TransformKind::Stack: return 6;
    case TransformKind::TimeUnit: return 7;
    }
    throw ExecError("unexpected transform kind");
}

namespace {

const TransformSpec &op_spec(const PipelineGraph &g, const DashboardSpec &spec, int pos) {
    const GraphNode &n = g.op(pos);
    return spec.data[static_cast<size_t>(n.entry)].transforms[static_cast<size_t>(n.tf)];
}

// entry index -> operator positions in chain order
std::vector<std::vector<int>> entry_ops(const PipelineGraph &g, const DashboardSpec &spec) {
    std::vector<std::vector<int>> ops(spec.data.size());
    for (int pos = 0; pos < g.op_count(); ++pos)
        ops[static_cast<size_t>(g.op(pos).entry)].push_back(pos);
    return ops;
}

} // namespace

bool op_rewritable(const PipelineGraph &g, const DashboardSpec &spec, int pos) {
    const TransformSpec &t = op_spec(g, spec, pos);
    if (t.field.from_signal()) return false;
    if (t.kind == TransformKind::Stack && t.sort.fields.empty()) return false;
    return true;
}

bool plan_valid(const PipelineGraph &g, const DashboardSpec &spec,
                const std::vector<bool> &server) {
    for (int pos = 0; pos < g.op_count(); ++pos) {
        if (!server[static_cast<size_t>(pos)]) continue;
        if (!op_rewritable(g, spec, pos)) return false;
        for (int parent : g.op_parent_positions(pos))
            if (!server[static_cast<size_t>(parent)]) return false;
    }
    return true;
}

std::vector<ExecutionPlan> enumerate_plans(const PipelineGraph &g, const DashboardSpec &spec,
                                           bool boundary_only) {
    const size_t n = static_cast<size_t>(g.op_count());
    std::vector<ExecutionPlan> plans;
    auto keep = [&](std::vector<bool> server) {
        if (!plan_valid(g, spec, server)) return;
        ExecutionPlan p;
        p.server = std::move(server);
        p.plan_id = plans.size();
        plans.push_back(std::move(p));
    };

    if (boundary_only) {
        for (size_t t = 0; t <= n; ++t) {
            std::vector<bool> server(n, false);
            for (size_t i = 0; i < t; ++i) server[i] = true;
            keep(std::move(server));
        }
        return plans;
    }

    const auto ops = entry_ops(g, spec);
    // a server prefix cannot extend past the first operator that has no
    // query form, so cap the odometer digit there
    std::vector<size_t> max_k(ops.size());
    for (size_t e = 0; e < ops.size(); ++e) {
        size_t cap = ops[e].size();
        for (size_t i = 0; i < ops[e].size(); ++i)
            if (!op_rewritable(g, spec, ops[e][i])) {
                cap = i;
                break;
            }
        max_k[e] = cap;
    }

    std::vector<size_t> ks(ops.size(), 0);
    for (;;) {
        std::vector<bool> server(n, false);
        for (size_t e = 0; e < ops.size(); ++e)
            for (size_t i = 0; i < ks[e]; ++i) server[static_cast<size_t>(ops[e][i])] = true;
        keep(std::move(server));

        size_t e = ops.size();
        while (e > 0 && ks[e - 1] == max_k[e - 1]) --e;
        if (e == 0) break;
        ++ks[e - 1];
        std::fill(ks.begin() + static_cast<long>(e), ks.end(), 0);
    }
    return plans;
}

namespace {

struct PlanShape {
    std::vector<std::vector<int>> ops; // operator positions by entry
    std::vector<size_t> prefix;        // server prefix length by entry
};

PlanShape plan_shape(const PipelineGraph &g, const DashboardSpec &spec,
                     const std::vector<bool> &server) {
    PlanShape s;
    s.ops = entry_ops(g, spec);
    s.prefix.assign(s.ops.size(), 0);
    for (size_t e = 0; e < s.ops.size(); ++e) {
        size_t k = 0;
        while (k < s.ops[e].size() && server[static_cast<size_t>(s.ops[e][k])]) ++k;
        s.prefix[e] = k;
    }
    return s;
}

size_t plain_ops(const std::vector<TransformSpec> &ts, size_t upto) {
    size_t n = 0;
    for (size_t i = 0; i < upto; ++i)
        if (ts[i].kind != TransformKind::Extent) ++n;
    return n;
}

// the table or transform-bearing entry feeding `e`, read through entries
// with no transforms of their own
struct Feed {
    int entry = -1;    // spec.data index when >= 0, else a base table
    std::string table;
};

Feed effective_feed(const DashboardSpec &spec, int e) {
    std::string src = spec.data[static_cast<size_t>(e)].source;
    for (;;) {
        const int idx = spec.find_entry(src);
        if (idx < 0) return Feed{-1, src};
        if (!spec.data[static_cast<size_t>(idx)].transforms.empty()) return Feed{idx, ""};
        src = spec.data[static_cast<size_t>(idx)].source;
    }
}

bool needs_client_rows(const DashboardSpec &spec, const PlanShape &shape, int e);

// does the child's evaluation pull its input rows onto the client?
bool child_pulls(const DashboardSpec &spec, const PlanShape &shape, int child) {
    const auto &entry = spec.data[static_cast<size_t>(child)];
    if (entry.transforms.empty()) return needs_client_rows(spec, shape, child);
    const size_t k = shape.prefix[static_cast<size_t>(child)];
    if (k == 0) return true; // first operator runs natively
    if (plain_ops(entry.transforms, k) > 0) return false; // consumed by the child's query
    // the server prefix is extents only, a passthrough: the first client
    // operator (or, fully server, whoever reads the output) sees the input rows
    if (k < entry.transforms.size()) return true;
    return needs_client_rows(spec, shape, child);
}

bool needs_client_rows(const DashboardSpec &spec, const PlanShape &shape, int e) {
    const std::string &name = spec.data[static_cast<size_t>(e)].name;
    for (const auto &v : spec.views)
        if (v.entry == name) return true;
    std::vector<int> children;
    for (size_t i = 0; i < spec.data.size(); ++i)
        if (spec.data[i].source == name) children.push_back(static_cast<int>(i));
    if (children.size() >= 2) return true; // shared intermediate stays client-visible
    for (int c : children)
        if (child_pulls(spec, shape, c)) return true;
    return false;
}

} // namespace

std::vector<VdtSpan> compile_plan(const PipelineGraph &g, const DashboardSpec &spec,
                                  const std::vector<bool> &server) {
    const PlanShape shape = plan_shape(g, spec, server);
    std::set<std::string> published;
    for (const auto &[scalar, node] : g.scalar_publisher) {
        (void)node;
        published.insert(scalar);
    }

    std::vector<VdtSpan> spans;

    // Builders over each entry's server prefix, built on demand. Under a
    // valid plan any entry nested as a source is fully server, so the same
    // builder serves both nesting and the entry's own span.
    std::map<int, QueryBuilder> table_builder;
    std::map<int, std::vector<int>> covered; // non-extent positions a builder embodies

    std::function<const QueryBuilder &(int)> builder_for;
    auto feed_source = [&](int e) -> SpanSource {
        const Feed f = effective_feed(spec, e);
        if (f.entry < 0) {
            const GraphNode &src = g.nodes[static_cast<size_t>(g.source_node.at(f.table))];
            return SpanSource::base(f.table, src.out_schema);
        }
        return SpanSource::nested(builder_for(f.entry));
    };
    builder_for = [&](int e) -> const QueryBuilder & {
        auto it = table_builder.find(e);
        if (it != table_builder.end()) return it->second;
        const auto &entry = spec.data[static_cast<size_t>(e)];
        const size_t k = shape.prefix[static_cast<size_t>(e)];
        const SpanSource src = feed_source(e);
        std::vector<TransformSpec> pre(entry.transforms.begin(),
                                       entry.transforms.begin() + static_cast<long>(k));
        auto b = rewrite_span(pre, src, spec, published);
        if (!b) throw ExecError("server prefix of '" + entry.name + "' has no query form");
        std::vector<int> ops;
        for (size_t i = 0; i < k; ++i)
            if (entry.transforms[i].kind != TransformKind::Extent)
                ops.push_back(shape.ops[static_cast<size_t>(e)][i]);
        const Feed f = effective_feed(spec, e);
        if (f.entry >= 0) {
            const auto &up = covered.at(f.entry);
            ops.insert(ops.end(), up.begin(), up.end());
            std::sort(ops.begin(), ops.end());
        }
        covered[e] = std::move(ops);
        return table_builder.emplace(e, std::move(*b)).first->second;
    };

    for (size_t e = 0; e < spec.data.size(); ++e) {
        const auto &entry = spec.data[e];
        const size_t k = shape.prefix[e];
        if (k == 0) continue;

        // every server extent feeds its published scalars through its own
        // min/max summary over the pipeline point it reads
        for (size_t i = 0; i < k; ++i) {
            const TransformSpec &t = entry.transforms[i];
            if (t.kind != TransformKind::Extent || t.signal_out.empty()) continue;
            SpanSource src = feed_source(static_cast<int>(e));
            if (plain_ops(entry.transforms, i) > 0) {
                std::vector<TransformSpec> before(entry.transforms.begin(),
                                                  entry.transforms.begin() +
                                                      static_cast<long>(i));
                auto pb = rewrite_span(before, src, spec, published);
                if (!pb)
                    throw ExecError("server prefix of '" + entry.name + "' has no query form");
                src = SpanSource::nested(*pb);
            }
            auto sb = rewrite_span({t}, src, spec, published);
            if (!sb) throw ExecError("extent in '" + entry.name + "' has no query form");
            VdtSpan vs;
            vs.entry = entry.name;
            vs.scalar = true;
            vs.publisher_pos = shape.ops[e][i];
            vs.builder = std::move(*sb);
            spans.push_back(std::move(vs));
        }

        // the table form, when something client-side reads these rows. An
        // all-extent prefix contributes none: extents pass rows through, so
        // the client resolves reads against the entry's input instead.
        if (plain_ops(entry.transforms, k) == 0) continue;
        const bool full = k == entry.transforms.size();
        if (full && !needs_client_rows(spec, shape, static_cast<int>(e))) continue;
        VdtSpan vs;
        vs.entry = entry.name;
        vs.builder = builder_for(static_cast<int>(e));
        vs.ops = covered.at(static_cast<int>(e));
        vs.output_pos = shape.ops[e][k - 1];
        spans.push_back(std::move(vs));
    }

    return spans;
}

std::array<double, 2 * kPlanKinds> PlanVector::features() const {
    std::array<double, 2 * kPlanKinds> f{};
    for (size_t i = 0; i < kPlanKinds; ++i) {
        f[i] = counts[i];
        f[kPlanKinds + i] = normalized[i];
    }
    return f;
}

Normalizer Normalizer::fit(const std::vector<PlanVector> &candidates) {
    Normalizer n;
    for (size_t i = 0; i < kPlanKinds; ++i) {
        double lo = 0, hi = 0;
        bool first = true;
        for (const auto &v : candidates) {
            if (first) {
                lo = hi = v.card_sums[i];
                first = false;
            } else {
                lo = std::min(lo, v.card_sums[i]);
                hi = std::max(hi, v.card_sums[i]);
            }
        }
        n.range[i] = {lo, hi};
    }
    return n;
}

void Normalizer::apply(PlanVector &v) const {
    for (size_t i = 0; i < kPlanKinds; ++i) {
        const auto [lo, hi] = range[i];
        if (hi <= lo) {
            v.normalized[i] = 0;
            continue;
        }
        v.normalized[i] = std::clamp((v.card_sums[i] - lo) / (hi - lo), 0.0, 1.0);
    }
}

PlanVector encode_plan(const PipelineGraph &g, const DashboardSpec &spec,
                       const std::vector<bool> &server,
                       const std::map<int, double> &cards,
                       const std::set<int> *active) {
    const auto spans = compile_plan(g, spec, server);
    auto is_active = [&](int pos) { return !active || active->count(pos) > 0; };
    auto card_at = [&](int pos) {
        auto it = cards.find(pos);
        if (it == cards.end())
            throw ExecError("no cardinality for operator " + g.op(pos).label);
        return it->second;
    };

    PlanVector v;
    for (int pos = 0; pos < g.op_count(); ++pos) {
        if (server[static_cast<size_t>(pos)] || !is_active(pos)) continue;
        const size_t slot = kind_slot(op_spec(g, spec, pos).kind);
        v.counts[slot] += 1;
        v.card_sums[slot] += card_at(pos);
    }
    for (const auto &s : spans) {
        bool hit = s.scalar && is_active(s.publisher_pos);
        for (int pos : s.ops)
            if (is_active(pos)) hit = true;
        if (!hit) continue;
        v.counts[kSpanSlot] += 1;
        v.card_sums[kSpanSlot] += s.scalar ? 1.0 : card_at(s.output_pos);
    }
    return v;
}

std::string plan_to_text(const PipelineGraph &g, const DashboardSpec &spec,
                         const ExecutionPlan &p) {
    std::string out = "plan " + std::to_string(p.plan_id) + "\n";
    for (int pos = 0; pos < g.op_count(); ++pos) {
        out += "  " + g.op(pos).label;
        out += p.server[static_cast<size_t>(pos)] ? " SERVER\n" : " CLIENT\n";
    }
    for (const auto &s : compile_plan(g, spec, p.server)) {
        if (s.scalar) {
            out += "  span scalar " + s.entry + " op " + std::to_string(s.publisher_pos);
        } else {
            out += "  span table " + s.entry + " ops ";
            for (size_t i = 0; i < s.ops.size(); ++i) {
                if (i) out += ",";
                out += std::to_string(s.ops[i]);
            }
            out += " out " + std::to_string(s.output_pos);
        }
        out += ": " + s.builder.text() + "\n";
    }
    return out;
}

} // namespace vizplan
