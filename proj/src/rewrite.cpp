#include "vizplan/rewrite.hpp"

#include <algorithm>

#include "vizplan/errors.hpp"
#include "vizplan/expr.hpp"

namespace vizplan {

namespace {

using Kind = SqlExpr::Kind;

SqlExpr predicate_to_sql(const ExprAst &a) {
    switch (a.kind) {
    case ExprAst::Kind::Literal:
        return SqlExpr::lit(a.literal);
    case ExprAst::Kind::FieldRef:
        return SqlExpr::column(a.name);
    case ExprAst::Kind::SignalRef:
        return SqlExpr::hole(a.name);
    case ExprAst::Kind::Unary:
        return SqlExpr::unary(a.un_op == ExprAst::UnOp::Not ? SqlExpr::UnOp::Not
                                                            : SqlExpr::UnOp::Neg,
                              predicate_to_sql(*a.lhs));
    case ExprAst::Kind::Binary: {
        if (a.bin_op == ExprAst::BinOp::Mod)
            return SqlExpr::call(SqlExpr::Func::Mod,
                                 {predicate_to_sql(*a.lhs), predicate_to_sql(*a.rhs)});
        SqlExpr::BinOp op;
        switch (a.bin_op) {
        case ExprAst::BinOp::Mul: op = SqlExpr::BinOp::Mul; break;
        case ExprAst::BinOp::Div: op = SqlExpr::BinOp::Div; break;
        case ExprAst::BinOp::Add: op = SqlExpr::BinOp::Add; break;
        case ExprAst::BinOp::Sub: op = SqlExpr::BinOp::Sub; break;
        case ExprAst::BinOp::Lt: op = SqlExpr::BinOp::Lt; break;
        case ExprAst::BinOp::Le: op = SqlExpr::BinOp::Le; break;
        case ExprAst::BinOp::Gt: op = SqlExpr::BinOp::Gt; break;
        case ExprAst::BinOp::Ge: op = SqlExpr::BinOp::Ge; break;
        case ExprAst::BinOp::Eq: op = SqlExpr::BinOp::Eq; break;
        case ExprAst::BinOp::Ne: op = SqlExpr::BinOp::Ne; break;
        case ExprAst::BinOp::And: op = SqlExpr::BinOp::And; break;
        case ExprAst::BinOp::Or: op = SqlExpr::BinOp::Or; break;
        default: throw TransformError("unexpected operator in predicate");
        }
        return SqlExpr::binary(op, predicate_to_sql(*a.lhs), predicate_to_sql(*a.rhs));
    }
    }
    throw TransformError("unexpected predicate node");
}

std::vector<SelectItem> passthrough_items(const Schema &s) {
    std::vector<SelectItem> items;
    items.reserve(s.columns.size());
    for (const auto &c : s.columns) items.push_back({SqlExpr::column(c.name), ""});
    return items;
}

SqlExpr agg_call(SqlExpr::AggOp op, const std::string &field) {
    if (op == SqlExpr::AggOp::Count) return SqlExpr::aggregate(op, {});
    return SqlExpr::aggregate(op, {SqlExpr::column(field)});
}

SqlExpr::AggOp to_sql_agg(AggOp op) {
    switch (op) {
    case AggOp::Count: return SqlExpr::AggOp::Count;
    case AggOp::Sum: return SqlExpr::AggOp::Sum;
    case AggOp::Min: return SqlExpr::AggOp::Min;
    case AggOp::Max: return SqlExpr::AggOp::Max;
    case AggOp::Avg: return SqlExpr::AggOp::Avg;
    }
    throw TransformError("unexpected aggregate op");
}

// Hole names must not collide with other holes or with signal scalars the
// span references; suffix until free.
std::string alloc_hole(const std::string &base, const std::map<std::string, HoleSpec> &taken,
                       const std::set<std::string> &reserved) {
    std::string name = base;
    for (int n = 2; taken.count(name) || reserved.count(name); ++n)
        name = base + "_" + std::to_string(n);
    return name;
}

} // namespace

SpanSource SpanSource::base(std::string name, Schema s) {
    SpanSource src;
    src.table = std::move(name);
    src.schema = std::move(s);
    return src;
}

SpanSource SpanSource::nested(const QueryBuilder &upstream) {
    SpanSource src;
    src.sub = std::make_shared<const SqlQuery>(upstream.query);
    src.schema = upstream.produces;
    src.holes = upstream.holes;
    return src;
}

SqlQuery fill_builder(const QueryBuilder &b, const SignalGetter &signals) {
    std::map<std::string, Value> vals;
    for (const auto &[name, h] : b.holes) {
        if (h.bin) {
            const BinParams p = resolve_bin_params(*h.bin, signals);
            vals[name] = Value::number(h.part == HoleSpec::Part::Min ? p.lo : p.step);
        } else {
            vals[name] = signals(h.signal);
        }
    }
    return fill_holes(b.query, vals);
}

std::optional<QueryBuilder> rewrite_span(const std::vector<TransformSpec> &span,
                                         const SpanSource &source,
                                         const DashboardSpec &spec,
                                         const std::set<std::string> &published) {
    // Fields chosen through signals are only known at evaluation time; such
    // spans run natively. A stack without sort keys has no ORDER BY to put
    // in the window form, so it stays native too.
    for (const auto &t : span) {
        if (t.field.from_signal()) return std::nullopt;
        if (t.kind == TransformKind::Stack && t.sort.fields.empty()) return std::nullopt;
    }

    // Signal scalar names the span's predicates will claim as hole names.
    std::set<std::string> reserved;
    for (const auto &t : span)
        if (t.kind == TransformKind::Filter && t.expr) {
            std::vector<std::string> refs;
            collect_signal_refs(*t.expr, refs);
            reserved.insert(refs.begin(), refs.end());
        }

    QueryBuilder b;
    b.holes = source.holes;
    Schema cur = source.schema;

    auto attach_source = [&](SqlQuery &q) {
        if (source.sub)
            q.from_sub = std::make_shared<SqlQuery>(*source.sub);
        else
            q.from_table = source.table;
    };

    auto signal_hole = [&](const std::string &name) {
        HoleSpec h;
        h.origin = published.count(name) ? HoleSpec::Origin::UpstreamScalar
                                         : HoleSpec::Origin::Signal;
        h.signal = name;
        b.holes[name] = h;
    };

    if (span.size() == 1 && span[0].kind == TransformKind::Extent) {
        cur = infer_transform_schema(span[0], cur, spec, "rewrite");
        SqlQuery q;
        const std::string &f = span[0].field.field;
        q.items.push_back({agg_call(SqlExpr::AggOp::Min, f), "min"});
        q.items.push_back({agg_call(SqlExpr::AggOp::Max, f), "max"});
        attach_source(q);
        const ValueKind vk = cur.columns[cur.require(f)].kind;
        const FieldRole role = cur.columns[cur.require(f)].role;
        b.query = std::move(q);
        b.scalar = true;
        b.produces.columns = {{"min", vk, role}, {"max", vk, role}};
        return b;
    }

    std::optional<SqlQuery> built;
    auto new_layer = [&]() {
        SqlQuery q;
        if (built)
            q.from_sub = std::make_shared<SqlQuery>(std::move(*built));
        else
            attach_source(q);
        return q;
    };

    for (const auto &t : span) {
        const Schema next = infer_transform_schema(t, cur, spec, "rewrite");
        switch (t.kind) {
        case TransformKind::Extent:
            break; // table output is the input; offloaded separately as min/max
        case TransformKind::Filter: {
            SqlQuery q = new_layer();
            q.items = passthrough_items(cur);
            q.where = predicate_to_sql(*t.expr);
            std::vector<std::string> refs;
            collect_signal_refs(*t.expr, refs);
            for (const auto &r : refs) signal_hole(r);
            built = std::move(q);
            break;
        }
        case TransformKind::Bin: {
            const std::string hmin = alloc_hole("min", b.holes, reserved);
            HoleSpec hs;
            hs.origin = HoleSpec::Origin::UpstreamScalar;
            hs.bin = std::make_shared<const TransformSpec>(t);
            hs.part = HoleSpec::Part::Min;
            b.holes[hmin] = hs;
            const std::string hstep = alloc_hole("step", b.holes, reserved);
            hs.part = HoleSpec::Part::Step;
            b.holes[hstep] = hs;

            SqlQuery q = new_layer();
            q.items = passthrough_items(cur);
            const SqlExpr start = SqlExpr::binary(
                SqlExpr::BinOp::Add,
                SqlExpr::binary(
                    SqlExpr::BinOp::Mul,
                    SqlExpr::call(SqlExpr::Func::Floor,
                                  {SqlExpr::binary(
                                      SqlExpr::BinOp::Div,
                                      SqlExpr::binary(SqlExpr::BinOp::Sub,
                                                      SqlExpr::column(t.field.field),
                                                      SqlExpr::hole(hmin)),
                                      SqlExpr::hole(hstep))}),
                    SqlExpr::hole(hstep)),
                SqlExpr::hole(hmin));
            q.items.push_back({start, t.as[0]});
            q.items.push_back(
                {SqlExpr::binary(SqlExpr::BinOp::Add, start, SqlExpr::hole(hstep)), t.as[1]});
            built = std::move(q);
            break;
        }
        case TransformKind::Aggregate: {
            SqlQuery q = new_layer();
            for (const auto &g : t.groupby) q.items.push_back({SqlExpr::column(g), ""});
            for (size_t i = 0; i < t.agg_ops.size(); ++i)
                q.items.push_back({agg_call(to_sql_agg(t.agg_ops[i]), t.agg_fields[i]), t.as[i]});
            q.group_by = t.groupby;
            built = std::move(q);
            break;
        }
        case TransformKind::Collect: {
            SqlQuery q = new_layer();
            q.items = passthrough_items(cur);
            for (size_t i = 0; i < t.sort.fields.size(); ++i)
                q.order_by.push_back({t.sort.fields[i], t.sort.descending[i]});
            built = std::move(q);
            break;
        }
        case TransformKind::Project: {
            SqlQuery q = new_layer();
            for (size_t i = 0; i < t.fields.size(); ++i) {
                const std::string out =
                    i < t.rename_as.size() ? t.rename_as[i] : t.fields[i];
                q.items.push_back(
                    {SqlExpr::column(t.fields[i]), out == t.fields[i] ? "" : out});
            }
            built = std::move(q);
            break;
        }
        case TransformKind::Stack: {
            SqlQuery q = new_layer();
            q.items = passthrough_items(cur);
            SqlExpr win;
            win.kind = Kind::WindowSum;
            win.args.push_back(SqlExpr::column(t.field.field));
            for (const auto &g : t.groupby) win.partition_by.push_back(SqlExpr::column(g));
            for (size_t i = 0; i < t.sort.fields.size(); ++i)
                win.window_order.emplace_back(SqlExpr::column(t.sort.fields[i]),
                                              t.sort.descending[i]);
            q.items.push_back({SqlExpr::binary(SqlExpr::BinOp::Sub, win,
                                               SqlExpr::column(t.field.field)),
                               t.as[0]});
            q.items.push_back({win, t.as[1]});
            built = std::move(q);
            break;
        }
        case TransformKind::TimeUnit: {
            SqlQuery q = new_layer();
            q.items = passthrough_items(cur);
            q.items.push_back(
                {SqlExpr::date_trunc(t.unit, SqlExpr::column(t.field.field)), t.as[0]});
            built = std::move(q);
            break;
        }
        }
        cur = next;
    }

    if (!built) { // nothing but extents: the table side is a passthrough read
        SqlQuery q;
        q.items = passthrough_items(cur);
        attach_source(q);
        built = std::move(q);
    }
    b.query = std::move(*built);
    b.produces = cur;
    return b;
}

namespace {

std::string output_name(const SelectItem &it) {
    if (!it.alias.empty()) return it.alias;
    return it.expr.kind == Kind::Column ? it.expr.name : std::string();
}

bool expr_contains(const SqlExpr &e, Kind k) {
    if (e.kind == k) return true;
    for (const auto &a : e.args)
        if (expr_contains(a, k)) return true;
    for (const auto &a : e.partition_by)
        if (expr_contains(a, k)) return true;
    for (const auto &[oe, desc] : e.window_order) {
        (void)desc;
        if (expr_contains(oe, k)) return true;
    }
    return false;
}

bool items_have(const std::vector<SelectItem> &items, Kind k) {
    return std::any_of(items.begin(), items.end(),
                       [&](const SelectItem &it) { return expr_contains(it.expr, k); });
}

// Replace column references with the expressions that define them one level
// down. False when a name has no definition; the caller then keeps the nest.
bool inline_expr(const SqlExpr &e, const std::map<std::string, const SqlExpr *> &defs,
                 SqlExpr &out) {
    if (e.kind == Kind::Column) {
        auto it = defs.find(e.name);
        if (it == defs.end()) return false;
        out = *it->second;
        return true;
    }
    out = e;
    out.args.clear();
    out.partition_by.clear();
    out.window_order.clear();
    for (const auto &a : e.args) {
        SqlExpr x;
        if (!inline_expr(a, defs, x)) return false;
        out.args.push_back(std::move(x));
    }
    for (const auto &a : e.partition_by) {
        SqlExpr x;
        if (!inline_expr(a, defs, x)) return false;
        out.partition_by.push_back(std::move(x));
    }
    for (const auto &[oe, desc] : e.window_order) {
        SqlExpr x;
        if (!inline_expr(oe, defs, x)) return false;
        out.window_order.emplace_back(std::move(x), desc);
    }
    return true;
}

bool inline_items(const std::vector<SelectItem> &items,
                  const std::map<std::string, const SqlExpr *> &defs,
                  std::vector<SelectItem> &out) {
    out.clear();
    for (const auto &it : items) {
        SqlExpr e;
        if (!inline_expr(it.expr, defs, e)) return false;
        std::string alias = it.alias;
        // an inlined bare column may stop being bare; keep its output name
        if (alias.empty() && !(e.kind == Kind::Column && e.name == it.expr.name))
            alias = output_name(it);
        out.push_back({std::move(e), std::move(alias)});
    }
    return true;
}

std::optional<SqlQuery> try_merge(const SqlQuery &q) {
    if (!q.from_sub) return std::nullopt;
    const SqlQuery &s = *q.from_sub;

    const bool parent_plain = q.group_by.empty() && !q.limit && q.order_by.empty() &&
                              !items_have(q.items, Kind::Agg) &&
                              !items_have(q.items, Kind::WindowSum);
    if (!parent_plain) return std::nullopt;

    std::map<std::string, const SqlExpr *> defs;
    for (const auto &it : s.items) {
        const std::string name = output_name(it);
        if (!name.empty()) defs[name] = &it.expr;
    }

    // ordered columns must survive as bare passthroughs or the nest stays
    for (const auto &o : s.order_by) {
        const bool kept = std::any_of(q.items.begin(), q.items.end(), [&](const SelectItem &it) {
            return it.expr.kind == Kind::Column && it.expr.name == o.column &&
                   output_name(it) == o.column;
        });
        if (!kept) return std::nullopt;
    }

    const bool sub_plain = s.group_by.empty() && !s.limit && !items_have(s.items, Kind::Agg) &&
                           !items_have(s.items, Kind::WindowSum);

    if (sub_plain) { // parent only filters or projects over a plain subquery
        SqlQuery merged;
        if (!inline_items(q.items, defs, merged.items)) return std::nullopt;
        if (q.where) {
            SqlExpr w;
            if (!inline_expr(*q.where, defs, w)) return std::nullopt;
            merged.where = s.where ? SqlExpr::binary(SqlExpr::BinOp::And, *s.where, w) : w;
        } else {
            merged.where = s.where;
        }
        merged.from_table = s.from_table;
        merged.from_sub = s.from_sub;
        merged.order_by = s.order_by;
        return merged;
    }

    if (!q.where) { // pure projection collapses into the select list below
        SqlQuery merged = s;
        if (!inline_items(q.items, defs, merged.items)) return std::nullopt;
        return merged;
    }
    return std::nullopt;
}

} // namespace

SqlQuery flatten(const SqlQuery &q) {
    SqlQuery cur = q;
    if (cur.from_sub) cur.from_sub = std::make_shared<SqlQuery>(flatten(*cur.from_sub));
    while (auto merged = try_merge(cur)) cur = std::move(*merged);
    return cur;
}

std::string flatten_sql(const std::string &text) { return to_sql(flatten(parse_sql(text))); }

} // namespace vizplan
