#include "vizplan/engine.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "vizplan/errors.hpp"
#include "vizplan/timeutil.hpp"

namespace vizplan {

namespace {

using WindowLookup = std::function<Value(const SqlExpr &, size_t)>;

bool truthy(const Value &v) {
    if (v.kind() == ValueKind::Bool) return v.as_bool();
    if (v.is_null()) return false;
    throw ExecError("value of kind " + std::string(value_kind_name(v.kind())) +
                    " in boolean position");
}

Value eval_scalar(const SqlExpr &e, const Row &row, const Schema &schema,
                  const WindowLookup *window, size_t row_index) {
    using K = SqlExpr::Kind;
    switch (e.kind) {
    case K::Literal: return e.literal;
    case K::Column: return row[schema.require(e.name)];
    case K::Hole: throw ExecError("unresolved placeholder :" + e.name);
    case K::Star: throw ExecError("'*' outside COUNT(*)");
    case K::Unary: {
        const Value v = eval_scalar(e.args[0], row, schema, window, row_index);
        if (e.un_op == SqlExpr::UnOp::Not) return Value::boolean(!truthy(v));
        if (v.is_null()) return Value::null();
        if (v.kind() != ValueKind::Number) throw ExecError("unary '-' needs a number");
        return Value::number(-v.as_number());
    }
    case K::Binary: {
        using B = SqlExpr::BinOp;
        const B op = e.bin_op;
        if (op == B::And) {
            if (!truthy(eval_scalar(e.args[0], row, schema, window, row_index)))
                return Value::boolean(false);
            return Value::boolean(
                truthy(eval_scalar(e.args[1], row, schema, window, row_index)));
        }
        if (op == B::Or) {
            if (truthy(eval_scalar(e.args[0], row, schema, window, row_index)))
                return Value::boolean(true);
            return Value::boolean(
                truthy(eval_scalar(e.args[1], row, schema, window, row_index)));
        }
        const Value l = eval_scalar(e.args[0], row, schema, window, row_index);
        const Value r = eval_scalar(e.args[1], row, schema, window, row_index);
        switch (op) {
        case B::Mul:
        case B::Div:
        case B::Add:
        case B::Sub: {
            if (l.is_null() || r.is_null()) return Value::null();
            if (l.kind() != ValueKind::Number || r.kind() != ValueKind::Number)
                throw ExecError("arithmetic needs numbers");
            const double a = l.as_number(), b = r.as_number();
            switch (op) {
            case B::Mul: return Value::number(a * b);
            case B::Div: return b == 0 ? Value::null() : Value::number(a / b);
            case B::Add: return Value::number(a + b);
            default: return Value::number(a - b);
            }
        }
        case B::Eq:
        case B::Ne: {
            if (l.is_null() || r.is_null()) return Value::boolean(false);
            const bool eq = l.kind() == r.kind() && Value::compare(l, r) == 0;
            return Value::boolean(op == B::Eq ? eq : !eq);
        }
        case B::Lt:
        case B::Le:
        case B::Gt:
        case B::Ge: {
            if (l.is_null() || r.is_null()) return Value::boolean(false);
            const bool numbers =
                l.kind() == ValueKind::Number && r.kind() == ValueKind::Number;
            const bool times =
                l.kind() == ValueKind::Timestamp && r.kind() == ValueKind::Timestamp;
            if (!numbers && !times) throw ExecError("ordering needs numbers or timestamps");
            const int c = Value::compare(l, r);
            switch (op) {
            case B::Lt: return Value::boolean(c < 0);
            case B::Le: return Value::boolean(c <= 0);
            case B::Gt: return Value::boolean(c > 0);
            default: return Value::boolean(c >= 0);
            }
        }
        default: throw ExecError("unhandled operator");
        }
    }
    case K::Func: {
        if (e.func == SqlExpr::Func::Floor) {
            const Value v = eval_scalar(e.args[0], row, schema, window, row_index);
            if (v.is_null()) return Value::null();
            if (v.kind() != ValueKind::Number) throw ExecError("floor() needs a number");
            return Value::number(std::floor(v.as_number()));
        }
        if (e.func == SqlExpr::Func::Mod) {
            const Value a = eval_scalar(e.args[0], row, schema, window, row_index);
            const Value b = eval_scalar(e.args[1], row, schema, window, row_index);
            if (a.is_null() || b.is_null()) return Value::null();
            if (a.kind() != ValueKind::Number || b.kind() != ValueKind::Number)
                throw ExecError("mod() needs numbers");
            if (b.as_number() == 0) return Value::null();
            return Value::number(std::fmod(a.as_number(), b.as_number()));
        }
        const Value v = eval_scalar(e.args[0], row, schema, window, row_index);
        if (v.is_null()) return Value::null();
        if (v.kind() != ValueKind::Timestamp) throw ExecError("date_trunc() needs a timestamp");
        return Value::timestamp(truncate_ms(v.as_timestamp(), e.trunc_unit));
    }
    case K::Agg: throw ExecError("aggregate outside a grouping query");
    case K::WindowSum:
        if (!window) throw ExecError("window function outside a window query");
        return (*window)(e, row_index);
    }
    throw ExecError("unreachable expression kind");
}

bool contains_kind(const SqlExpr &e, SqlExpr::Kind kind) {
    if (e.kind == kind) return true;
    for (const auto &a : e.args)
        if (contains_kind(a, kind)) return true;
    for (const auto &p : e.partition_by)
        if (contains_kind(p, kind)) return true;
    for (const auto &o : e.window_order)
        if (contains_kind(o.first, kind)) return true;
    return false;
}

//! Evaluate a select item of a grouped query over one group. Aggregate
//! nodes summarize the member rows; everything else reads the first row,
//! which is well-defined because grouped items are group keys.
Value eval_grouped(const SqlExpr &e, const std::vector<size_t> &members,
                   const std::vector<Row> &rows, const Schema &schema) {
    if (e.kind == SqlExpr::Kind::Agg) {
        if (e.agg == SqlExpr::AggOp::Count)
            return Value::number(static_cast<double>(members.size()));
        double sum = 0;
        long long n = 0;
        Value lo = Value::null(), hi = Value::null();
        for (size_t i : members) {
            const Value v = eval_scalar(e.args[0], rows[i], schema, nullptr, i);
            if (v.is_null()) continue;
            ++n;
            if (v.kind() == ValueKind::Number) sum += v.as_number();
            if (lo.is_null() || Value::compare(v, lo) < 0) lo = v;
            if (hi.is_null() || Value::compare(v, hi) > 0) hi = v;
        }
        switch (e.agg) {
        case SqlExpr::AggOp::Sum: return n ? Value::number(sum) : Value::null();
        case SqlExpr::AggOp::Avg:
            return n ? Value::number(sum / static_cast<double>(n)) : Value::null();
        case SqlExpr::AggOp::Min: return lo;
        case SqlExpr::AggOp::Max: return hi;
        default: break;
        }
        throw ExecError("unhandled aggregate");
    }
    if (!contains_kind(e, SqlExpr::Kind::Agg)) {
        if (members.empty()) return Value::null(); // zero-row summary, non-key item
        return eval_scalar(e, rows[members[0]], schema, nullptr, members[0]);
    }
    // operators above aggregates (e.g. SUM(x) / COUNT(*)) combine recursively
    SqlExpr shallow = e;
    if (e.kind == SqlExpr::Kind::Unary || e.kind == SqlExpr::Kind::Binary ||
        e.kind == SqlExpr::Kind::Func) {
        shallow.args.clear();
        Row empty;
        for (const auto &a : e.args)
            shallow.args.push_back(SqlExpr::lit(eval_grouped(a, members, rows, schema)));
        return eval_scalar(shallow, empty, schema, nullptr, 0);
    }
    throw ExecError("unsupported aggregate item shape");
}

ValueKind expr_kind(const SqlExpr &e, const Schema &in);

FieldRole expr_role(const SqlExpr &e, const Schema &in) {
    if (e.kind == SqlExpr::Kind::Column) {
        const int i = in.find(e.name);
        if (i >= 0) return in.columns[static_cast<size_t>(i)].role;
    }
    if (e.kind == SqlExpr::Kind::Agg && e.agg != SqlExpr::AggOp::Count &&
        (e.agg == SqlExpr::AggOp::Min || e.agg == SqlExpr::AggOp::Max))
        return expr_role(e.args[0], in);
    return default_role(expr_kind(e, in));
}

ValueKind expr_kind(const SqlExpr &e, const Schema &in) {
    using K = SqlExpr::Kind;
    switch (e.kind) {
    case K::Literal:
        return e.literal.is_null() ? ValueKind::Text : e.literal.kind();
    case K::Column: {
        const int i = in.find(e.name);
        if (i < 0) throw ExecError("unknown column \"" + e.name + "\"");
        return in.columns[static_cast<size_t>(i)].kind;
    }
    case K::Hole: throw ExecError("unresolved placeholder :" + e.name);
    case K::Star: return ValueKind::Number;
    case K::Unary: return e.un_op == SqlExpr::UnOp::Not ? ValueKind::Bool : ValueKind::Number;
    case K::Binary:
        switch (e.bin_op) {
        case SqlExpr::BinOp::Mul:
        case SqlExpr::BinOp::Div:
        case SqlExpr::BinOp::Add:
        case SqlExpr::BinOp::Sub: return ValueKind::Number;
        default: return ValueKind::Bool;
        }
    case K::Func:
        return e.func == SqlExpr::Func::DateTrunc ? ValueKind::Timestamp : ValueKind::Number;
    case K::Agg:
        if (e.agg == SqlExpr::AggOp::Min || e.agg == SqlExpr::AggOp::Max)
            return expr_kind(e.args[0], in);
        return ValueKind::Number;
    case K::WindowSum: return ValueKind::Number;
    }
    return ValueKind::Text;
}

struct OrderCmp {
    const std::vector<Row> &rows;
    const std::vector<size_t> &cols;
    const std::vector<bool> &desc;

    bool operator()(size_t a, size_t b) const {
        for (size_t i = 0; i < cols.size(); ++i) {
            const int c = Value::compare(rows[a][cols[i]], rows[b][cols[i]]);
            if (c != 0) return desc[i] ? c > 0 : c < 0;
        }
        return false;
    }
};

} // namespace

DataTable reference_execute(const SqlQuery &q, const Catalog &catalog) {
    DataTable input;
    if (q.from_sub) {
        input = reference_execute(*q.from_sub, catalog);
    } else {
        auto it = catalog.find(q.from_table);
        if (it == catalog.end() || !it->second)
            throw ExecError("unknown table \"" + q.from_table + "\"");
        input = *it->second;
    }
    const Schema &schema = input.schema;

    std::vector<size_t> live;
    live.reserve(input.rows.size());
    for (size_t i = 0; i < input.rows.size(); ++i) {
        if (!q.where || truthy(eval_scalar(*q.where, input.rows[i], schema, nullptr, i)))
            live.push_back(i);
    }

    bool has_agg = !q.group_by.empty();
    bool has_window = false;
    for (const auto &it : q.items) {
        has_agg |= contains_kind(it.expr, SqlExpr::Kind::Agg);
        has_window |= contains_kind(it.expr, SqlExpr::Kind::WindowSum);
    }
    if (has_agg && has_window) throw ExecError("window and aggregate in one block");

    DataTable out;
    for (size_t i = 0; i < q.items.size(); ++i) {
        const SelectItem &item = q.items[i];
        std::string name = item.alias;
        if (name.empty())
            name = item.expr.kind == SqlExpr::Kind::Column ? item.expr.name
                                                           : "col" + std::to_string(i);
        out.schema.columns.push_back(
            {name, expr_kind(item.expr, schema), expr_role(item.expr, schema)});
    }

    if (has_agg) {
        std::vector<size_t> gcols;
        for (const auto &g : q.group_by) gcols.push_back(schema.require(g));
        auto key_less = [](const Row &a, const Row &b) {
            for (size_t i = 0; i < a.size(); ++i) {
                const int c = Value::compare(a[i], b[i]);
                if (c != 0) return c < 0;
            }
            return false;
        };
        std::map<Row, size_t, decltype(key_less)> group_of(key_less);
        std::vector<std::vector<size_t>> members;
        for (size_t i : live) {
            Row key;
            key.reserve(gcols.size());
            for (size_t c : gcols) key.push_back(input.rows[i][c]);
            auto it = group_of.find(key);
            if (it == group_of.end()) {
                it = group_of.emplace(std::move(key), members.size()).first;
                members.emplace_back();
            }
            members[it->second].push_back(i);
        }
        if (members.empty() && q.group_by.empty()) members.emplace_back();
        for (const auto &group : members) {
            Row r;
            r.reserve(q.items.size());
            for (const auto &item : q.items) {
                if (group.empty() && item.expr.kind == SqlExpr::Kind::Agg &&
                    item.expr.agg == SqlExpr::AggOp::Count) {
                    r.push_back(Value::number(0));
                } else {
                    r.push_back(eval_grouped(item.expr, group, input.rows, schema));
                }
            }
            out.rows.push_back(std::move(r));
        }
    } else if (has_window) {
        // Each distinct window node gets one pass: partition, stable-sort,
        // then a sequential running sum. Null contributions count as zero.
        std::map<const SqlExpr *, std::vector<Value>> computed;
        std::function<void(const SqlExpr &)> prepare = [&](const SqlExpr &e) {
            for (const auto &a : e.args) prepare(a);
            if (e.kind != SqlExpr::Kind::WindowSum) return;
            auto key_less = [](const Row &a, const Row &b) {
                for (size_t i = 0; i < a.size(); ++i) {
                    const int c = Value::compare(a[i], b[i]);
                    if (c != 0) return c < 0;
                }
                return false;
            };
            std::map<Row, std::vector<size_t>, decltype(key_less)> parts(key_less);
            for (size_t i : live) {
                Row key;
                for (const auto &p : e.partition_by)
                    key.push_back(eval_scalar(p, input.rows[i], schema, nullptr, i));
                parts[key].push_back(i);
            }
            std::vector<Value> vals(input.rows.size(), Value::null());
            for (auto &[key, idxs] : parts) {
                std::stable_sort(idxs.begin(), idxs.end(), [&](size_t a, size_t b) {
                    for (const auto &[oe, desc] : e.window_order) {
                        const int c =
                            Value::compare(eval_scalar(oe, input.rows[a], schema, nullptr, a),
                                           eval_scalar(oe, input.rows[b], schema, nullptr, b));
                        if (c != 0) return desc ? c > 0 : c < 0;
                    }
                    return false;
                });
                double cum = 0;
                for (size_t i : idxs) {
                    const Value v = eval_scalar(e.args[0], input.rows[i], schema, nullptr, i);
                    if (v.kind() == ValueKind::Number) cum += v.as_number();
                    else if (!v.is_null()) throw ExecError("window SUM needs numbers");
                    vals[i] = Value::number(cum);
                }
            }
            computed.emplace(&e, std::move(vals));
        };
        for (const auto &item : q.items) prepare(item.expr);

        WindowLookup lookup = [&](const SqlExpr &node, size_t row_index) {
            return computed.at(&node)[row_index];
        };
        for (size_t i : live) {
            Row r;
            r.reserve(q.items.size());
            for (const auto &item : q.items)
                r.push_back(eval_scalar(item.expr, input.rows[i], schema, &lookup, i));
            out.rows.push_back(std::move(r));
        }
    } else {
        for (size_t i : live) {
            Row r;
            r.reserve(q.items.size());
            for (const auto &item : q.items)
                r.push_back(eval_scalar(item.expr, input.rows[i], schema, nullptr, i));
            out.rows.push_back(std::move(r));
        }
    }

    if (!q.order_by.empty()) {
        std::vector<size_t> cols;
        std::vector<bool> desc;
        for (const auto &o : q.order_by) {
            cols.push_back(out.schema.require(o.column));
            desc.push_back(o.descending);
        }
        std::vector<size_t> idx(out.rows.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), OrderCmp{out.rows, cols, desc});
        std::vector<Row> sorted;
        sorted.reserve(out.rows.size());
        for (size_t i : idx) sorted.push_back(std::move(out.rows[i]));
        out.rows = std::move(sorted);
    }

    if (q.limit && out.rows.size() > static_cast<size_t>(*q.limit))
        out.rows.resize(static_cast<size_t>(*q.limit));
    return out;
}

DataTable reference_execute(const std::string &sql, const Catalog &catalog) {
    return reference_execute(parse_sql(sql), catalog);
}

double estimate_cardinality(const SqlQuery &q, const Catalog &catalog, uint64_t seed) {
    const SqlQuery *base = &q;
    while (base->from_sub) base = base->from_sub.get();
    auto it = catalog.find(base->from_table);
    if (it == catalog.end() || !it->second)
        throw ExecError("unknown table \"" + base->from_table + "\"");
    const DataTable &full = *it->second;
    const size_t n = full.rows.size();

    DataTable sample;
    double factor = 1.0;
    const DataTable *probe = &full;
    if (n > 1000) {
        const size_t sample_n =
            std::max<size_t>(1000, static_cast<size_t>(std::llround(0.01 * static_cast<double>(n))));
        sample = scale_table(full, sample_n, seed);
        factor = static_cast<double>(n) / static_cast<double>(sample_n);
        probe = &sample;
    }

    Catalog patched = catalog;
    patched[base->from_table] = probe;
    const size_t observed = reference_execute(q, patched).num_rows();

    const bool grouped = !q.group_by.empty();
    if (grouped) return static_cast<double>(observed);
    bool has_agg = false;
    for (const auto &item : q.items) has_agg |= contains_kind(item.expr, SqlExpr::Kind::Agg);
    if (has_agg) return static_cast<double>(observed); // single summary row
    return static_cast<double>(observed) * factor;
}

void LocalExecutor::register_table(const std::string &name, DataTable rows) {
    tables_[name] = std::move(rows);
}

Catalog LocalExecutor::catalog() const {
    Catalog cat;
    for (const auto &kv : tables_) cat[kv.first] = &kv.second;
    return cat;
}

const DataTable *LocalExecutor::table(const std::string &name) const {
    auto it = tables_.find(name);
    return it == tables_.end() ? nullptr : &it->second;
}

DataTable LocalExecutor::execute(const std::string &sql) {
    return reference_execute(parse_sql(sql), catalog());
}

double LocalExecutor::estimate_rows(const std::string &sql) {
    const SqlQuery q = parse_sql(sql);
    try {
        return estimate_cardinality(q, catalog(), sample_seed_);
    } catch (const Error &) {
        return 0.0;
    }
}

} // namespace vizplan
