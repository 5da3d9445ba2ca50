#include "vizplan/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "vizplan/errors.hpp"

namespace vizplan {

double nice_step(double lo, double hi, double maxbins) {
    const double span = hi - lo;
    if (!(span > 0) || !std::isfinite(span) || !(maxbins >= 1)) return 1.0;
    const double raw = span / maxbins;
    const double pow10 = std::pow(10.0, std::floor(std::log10(raw)));
    const double err = raw / pow10;
    double mult = 1;
    if (err >= 7.5) mult = 10;
    else if (err >= 3.5) mult = 5;
    else if (err >= 1.5) mult = 2;
    return mult * pow10;
}

double bin_start(double v, double lo, double step) {
    return std::floor((v - lo) / step) * step + lo;
}

std::string resolve_field(const FieldParam &p, const SignalGetter &signals) {
    if (!p.from_signal()) return p.field;
    Value v = signals(p.signal);
    if (v.kind() != ValueKind::Text)
        throw TransformError("field selector signal '" + p.signal + "' is not text");
    return v.as_text();
}

namespace {

[[noreturn]] void bad(const std::string &where, const std::string &msg) {
    throw ValidationError(where + ": " + msg);
}

const Column &need_column(const Schema &s, const std::string &name, const std::string &where) {
    int i = s.find(name);
    if (i < 0) bad(where, "unknown field '" + name + "'");
    return s.columns[static_cast<size_t>(i)];
}

//! Static kinds of a field slot: the fixed field's kind, or the common kind
//! of every candidate behind a field-selector signal.
ValueKind field_param_kind(const FieldParam &p, const Schema &in, const DashboardSpec &spec,
                           const std::string &where) {
    if (!p.from_signal()) return need_column(in, p.field, where).kind;
    const SignalSpec *sig = nullptr;
    for (const auto &s : spec.signals)
        if (s.name == p.signal) sig = &s;
    if (!sig || !sig->bind || sig->bind->kind != BindKind::Dropdown ||
        !sig->bind->options_are_field_names)
        bad(where, "field selector '" + p.signal + "' must be a field-name dropdown");
    ValueKind kind = ValueKind::Null;
    for (const auto &cand : sig->bind->candidates) {
        const Column &c = need_column(in, cand, where);
        if (kind == ValueKind::Null) kind = c.kind;
        else if (kind != c.kind)
            bad(where, "field selector '" + p.signal + "' mixes column kinds");
    }
    return kind;
}

void check_unique_addition(const Schema &in, const std::string &name, const std::string &where) {
    if (in.has(name)) bad(where, "output column '" + name + "' already exists");
}

} // namespace

Schema infer_transform_schema(const TransformSpec &t, const Schema &in,
                              const DashboardSpec &spec, const std::string &where) {
    switch (t.kind) {
    case TransformKind::Extent: {
        if (field_param_kind(t.field, in, spec, where) != ValueKind::Number)
            bad(where, "extent field must be numeric");
        return in;
    }
    case TransformKind::Bin: {
        if (field_param_kind(t.field, in, spec, where) != ValueKind::Number)
            bad(where, "bin field must be numeric");
        Schema out = in;
        for (const auto &name : t.as) {
            check_unique_addition(out, name, where);
            out.columns.push_back({name, ValueKind::Number, FieldRole::Quantitative});
        }
        return out;
    }
    case TransformKind::Aggregate: {
        Schema out;
        for (const auto &g : t.groupby) out.columns.push_back(need_column(in, g, where));
        for (size_t i = 0; i < t.agg_ops.size(); ++i) {
            Column c{t.as[i], ValueKind::Number, FieldRole::Quantitative};
            if (t.agg_ops[i] != AggOp::Count) {
                const Column &src = need_column(in, t.agg_fields[i], where);
                if (t.agg_ops[i] == AggOp::Sum || t.agg_ops[i] == AggOp::Avg) {
                    if (src.kind != ValueKind::Number)
                        bad(where, "sum/avg field must be numeric");
                } else {
                    if (src.kind != ValueKind::Number && src.kind != ValueKind::Timestamp)
                        bad(where, "min/max field must be numeric or temporal");
                    c.kind = src.kind;
                    c.role = src.role;
                }
            }
            check_unique_addition(out, c.name, where);
            out.columns.push_back(c);
        }
        return out;
    }
    case TransformKind::Filter: {
        std::vector<std::string> refs;
        collect_field_refs(*t.expr, refs);
        for (const auto &r : refs) need_column(in, r, where);
        return in;
    }
    case TransformKind::Collect: {
        for (const auto &f : t.sort.fields) need_column(in, f, where);
        return in;
    }
    case TransformKind::Project: {
        Schema out;
        for (size_t i = 0; i < t.fields.size(); ++i) {
            Column c = need_column(in, t.fields[i], where);
            c.name = t.rename_as[i];
            check_unique_addition(out, c.name, where);
            out.columns.push_back(c);
        }
        return out;
    }
    case TransformKind::Stack: {
        if (need_column(in, t.field.field, where).kind != ValueKind::Number)
            bad(where, "stack field must be numeric");
        for (const auto &g : t.groupby) need_column(in, g, where);
        for (const auto &f : t.sort.fields) need_column(in, f, where);
        Schema out = in;
        for (const auto &name : t.as) {
            check_unique_addition(out, name, where);
            out.columns.push_back({name, ValueKind::Number, FieldRole::Quantitative});
        }
        return out;
    }
    case TransformKind::TimeUnit: {
        if (need_column(in, t.field.field, where).kind != ValueKind::Timestamp)
            bad(where, "timeunit field must be temporal");
        Schema out = in;
        check_unique_addition(out, t.as[0], where);
        out.columns.push_back({t.as[0], ValueKind::Timestamp, FieldRole::Temporal});
        return out;
    }
    }
    bad(where, "unreachable transform kind");
}

namespace {

double signal_number(const SignalGetter &signals, const std::string &name) {
    Value v = signals(name);
    if (v.kind() != ValueKind::Number)
        throw TransformError("signal '" + name + "' is not a number");
    return v.as_number();
}

// Extent bounds published over an empty table are Null; bin then sees no
// rows, so any finite bound works. Zero keeps both execution paths aligned.
double extent_bound(const SignalGetter &signals, const std::string &name) {
    Value v = signals(name);
    if (v.is_null()) return 0.0;
    if (v.kind() != ValueKind::Number)
        throw TransformError("signal '" + name + "' is not a number");
    return v.as_number();
}

struct RowOrderCmp {
    const DataTable &in;
    const std::vector<int> &cols;
    const std::vector<bool> &desc;

    bool operator()(size_t a, size_t b) const {
        for (size_t i = 0; i < cols.size(); ++i) {
            int c = Value::compare(in.rows[a][static_cast<size_t>(cols[i])],
                                   in.rows[b][static_cast<size_t>(cols[i])]);
            if (c != 0) return desc[i] ? c > 0 : c < 0;
        }
        return false;
    }
};

std::vector<int> sort_columns(const DataTable &in, const std::vector<std::string> &fields) {
    std::vector<int> cols;
    for (const auto &f : fields) cols.push_back(in.schema.require(f));
    return cols;
}

} // namespace

BinParams resolve_bin_params(const TransformSpec &t, const SignalGetter &signals) {
    BinParams p;
    if (t.extent_from == TransformSpec::ExtentFrom::Literal) {
        p.lo = t.extent_lo;
        p.hi = t.extent_hi;
    } else {
        p.lo = extent_bound(signals, t.extent_lo_signal);
        p.hi = extent_bound(signals, t.extent_hi_signal);
    }
    p.maxbins = t.maxbins_signal.empty() ? t.maxbins : signal_number(signals, t.maxbins_signal);
    p.step = nice_step(p.lo, p.hi, p.maxbins);
    return p;
}

TransformResult apply_transform(const TransformSpec &t, const DataTable &in,
                                const SignalGetter &signals) {
    TransformResult out;
    switch (t.kind) {
    case TransformKind::Extent: {
        const int col = in.schema.require(resolve_field(t.field, signals));
        Value lo = Value::null(), hi = Value::null();
        for (const auto &row : in.rows) {
            const Value &v = row[static_cast<size_t>(col)];
            if (v.kind() != ValueKind::Number) continue;
            if (lo.is_null() || v.as_number() < lo.as_number()) lo = v;
            if (hi.is_null() || v.as_number() > hi.as_number()) hi = v;
        }
        out.table = in;
        if (!t.signal_out.empty()) {
            out.published.emplace_back(t.signal_out + "_min", lo);
            out.published.emplace_back(t.signal_out + "_max", hi);
        }
        return out;
    }
    case TransformKind::Bin: {
        const int col = in.schema.require(resolve_field(t.field, signals));
        const BinParams bp = resolve_bin_params(t, signals);
        const double lo = bp.lo, step = bp.step;

        out.table.schema = in.schema;
        out.table.schema.columns.push_back({t.as[0], ValueKind::Number, FieldRole::Quantitative});
        out.table.schema.columns.push_back({t.as[1], ValueKind::Number, FieldRole::Quantitative});
        out.table.rows.reserve(in.rows.size());
        for (const auto &row : in.rows) {
            Row r = row;
            const Value &v = row[static_cast<size_t>(col)];
            if (v.kind() == ValueKind::Number) {
                const double b0 = bin_start(v.as_number(), lo, step);
                r.push_back(Value::number(b0));
                r.push_back(Value::number(b0 + step));
            } else {
                r.push_back(Value::null());
                r.push_back(Value::null());
            }
            out.table.rows.push_back(std::move(r));
        }
        return out;
    }
    case TransformKind::Aggregate: {
        std::vector<int> gcols = sort_columns(in, t.groupby);
        std::vector<int> fcols;
        for (const auto &f : t.agg_fields)
            fcols.push_back(f.empty() ? -1 : in.schema.require(f));

        struct Acc {
            size_t order;
            Row key;
            long long rows = 0;
            std::vector<double> sum;
            std::vector<long long> nonnull;
            std::vector<Value> minv, maxv;
        };
        auto key_less = [](const Row &a, const Row &b) {
            for (size_t i = 0; i < a.size(); ++i) {
                int c = Value::compare(a[i], b[i]);
                if (c != 0) return c < 0;
            }
            return false;
        };
        std::map<Row, Acc, decltype(key_less)> groups(key_less);

        const size_t nops = t.agg_ops.size();
        for (const auto &row : in.rows) {
            Row key;
            key.reserve(gcols.size());
            for (int c : gcols) key.push_back(row[static_cast<size_t>(c)]);
            auto it = groups.find(key);
            if (it == groups.end()) {
                Acc acc;
                acc.order = groups.size();
                acc.key = key;
                acc.sum.assign(nops, 0.0);
                acc.nonnull.assign(nops, 0);
                acc.minv.assign(nops, Value::null());
                acc.maxv.assign(nops, Value::null());
                it = groups.emplace(std::move(key), std::move(acc)).first;
            }
            Acc &acc = it->second;
            acc.rows++;
            for (size_t i = 0; i < nops; ++i) {
                if (fcols[i] < 0) continue;
                const Value &v = row[static_cast<size_t>(fcols[i])];
                if (v.is_null()) continue;
                acc.nonnull[i]++;
                if (v.kind() == ValueKind::Number) acc.sum[i] += v.as_number();
                if (acc.minv[i].is_null() || Value::compare(v, acc.minv[i]) < 0) acc.minv[i] = v;
                if (acc.maxv[i].is_null() || Value::compare(v, acc.maxv[i]) > 0) acc.maxv[i] = v;
            }
        }

        std::vector<const Acc *> ordered(groups.size());
        for (const auto &[key, acc] : groups) ordered[acc.order] = &acc;

        out.table.schema = infer_transform_schema(t, in.schema, DashboardSpec{}, "aggregate");
        auto emit = [&](const Acc &acc) {
            Row r = acc.key;
            for (size_t i = 0; i < nops; ++i) {
                switch (t.agg_ops[i]) {
                case AggOp::Count:
                    r.push_back(Value::number(static_cast<double>(acc.rows)));
                    break;
                case AggOp::Sum:
                    r.push_back(acc.nonnull[i] ? Value::number(acc.sum[i]) : Value::null());
                    break;
                case AggOp::Avg:
                    r.push_back(acc.nonnull[i]
                                    ? Value::number(acc.sum[i] / static_cast<double>(acc.nonnull[i]))
                                    : Value::null());
                    break;
                case AggOp::Min: r.push_back(acc.minv[i]); break;
                case AggOp::Max: r.push_back(acc.maxv[i]); break;
                }
            }
            out.table.rows.push_back(std::move(r));
        };
        for (const Acc *acc : ordered) emit(*acc);
        if (out.table.rows.empty() && t.groupby.empty()) {
            Acc zero;
            zero.sum.assign(nops, 0.0);
            zero.nonnull.assign(nops, 0);
            zero.minv.assign(nops, Value::null());
            zero.maxv.assign(nops, Value::null());
            emit(zero);
        }
        return out;
    }
    case TransformKind::Filter: {
        out.table.schema = in.schema;
        auto lookup = [&](const std::string &name) -> std::optional<Value> {
            return signals(name);
        };
        for (const auto &row : in.rows) {
            Value v = eval_expr(*t.expr, row, in.schema, lookup);
            if (v.kind() == ValueKind::Bool && v.as_bool()) out.table.rows.push_back(row);
        }
        return out;
    }
    case TransformKind::Collect: {
        std::vector<int> cols = sort_columns(in, t.sort.fields);
        std::vector<size_t> idx(in.rows.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), RowOrderCmp{in, cols, t.sort.descending});
        out.table.schema = in.schema;
        out.table.rows.reserve(in.rows.size());
        for (size_t i : idx) out.table.rows.push_back(in.rows[i]);
        return out;
    }
    case TransformKind::Project: {
        std::vector<int> cols = sort_columns(in, t.fields);
        out.table.schema = infer_transform_schema(t, in.schema, DashboardSpec{}, "project");
        out.table.rows.reserve(in.rows.size());
        for (const auto &row : in.rows) {
            Row r;
            r.reserve(cols.size());
            for (int c : cols) r.push_back(row[static_cast<size_t>(c)]);
            out.table.rows.push_back(std::move(r));
        }
        return out;
    }
    case TransformKind::Stack: {
        const int vcol = in.schema.require(t.field.field);
        std::vector<int> gcols = sort_columns(in, t.groupby);
        std::vector<int> scols = sort_columns(in, t.sort.fields);

        auto key_less = [](const Row &a, const Row &b) {
            for (size_t i = 0; i < a.size(); ++i) {
                int c = Value::compare(a[i], b[i]);
                if (c != 0) return c < 0;
            }
            return false;
        };
        std::map<Row, std::vector<size_t>, decltype(key_less)> partitions(key_less);
        for (size_t i = 0; i < in.rows.size(); ++i) {
            Row key;
            for (int c : gcols) key.push_back(in.rows[i][static_cast<size_t>(c)]);
            partitions[key].push_back(i);
        }

        // Null values leave the running sum unchanged and get a Null start;
        // the end stays at the current sum. Keeps parity with the window-sum
        // form `SUM(v) OVER (...)` / `... - v` this can be rewritten into.
        std::vector<std::pair<Value, Value>> span(in.rows.size());
        for (auto &[key, members] : partitions) {
            std::stable_sort(members.begin(), members.end(),
                             RowOrderCmp{in, scols, t.sort.descending});
            double cum = 0;
            for (size_t i : members) {
                const Value &v = in.rows[i][static_cast<size_t>(vcol)];
                if (v.kind() == ValueKind::Number) {
                    cum += v.as_number();
                    span[i] = {Value::number(cum - v.as_number()), Value::number(cum)};
                } else {
                    span[i] = {Value::null(), Value::number(cum)};
                }
            }
        }

        out.table.schema = in.schema;
        out.table.schema.columns.push_back({t.as[0], ValueKind::Number, FieldRole::Quantitative});
        out.table.schema.columns.push_back({t.as[1], ValueKind::Number, FieldRole::Quantitative});
        out.table.rows.reserve(in.rows.size());
        for (size_t i = 0; i < in.rows.size(); ++i) {
            Row r = in.rows[i];
            r.push_back(span[i].first);
            r.push_back(span[i].second);
            out.table.rows.push_back(std::move(r));
        }
        return out;
    }
    case TransformKind::TimeUnit: {
        const int col = in.schema.require(t.field.field);
        out.table.schema = in.schema;
        out.table.schema.columns.push_back({t.as[0], ValueKind::Timestamp, FieldRole::Temporal});
        out.table.rows.reserve(in.rows.size());
        for (const auto &row : in.rows) {
            Row r = row;
            const Value &v = row[static_cast<size_t>(col)];
            if (v.kind() == ValueKind::Timestamp)
                r.push_back(Value::timestamp(truncate_ms(v.as_timestamp(), t.unit)));
            else
                r.push_back(Value::null());
            out.table.rows.push_back(std::move(r));
        }
        return out;
    }
    }
    throw TransformError("unreachable transform kind");
}

} // namespace vizplan
