#include "vizplan/table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>

#include "vizplan/timeutil.hpp"

namespace vizplan {

const char *value_kind_name(ValueKind k) {
    switch (k) {
    case ValueKind::Null: return "null";
    case ValueKind::Bool: return "bool";
    case ValueKind::Number: return "number";
    case ValueKind::Timestamp: return "timestamp";
    case ValueKind::Text: return "text";
    }
    return "?";
}

const char *field_role_name(FieldRole r) {
    switch (r) {
    case FieldRole::Quantitative: return "quantitative";
    case FieldRole::Temporal: return "temporal";
    case FieldRole::Categorical: return "categorical";
    }
    return "?";
}

FieldRole default_role(ValueKind k) {
    switch (k) {
    case ValueKind::Number: return FieldRole::Quantitative;
    case ValueKind::Timestamp: return FieldRole::Temporal;
    default: return FieldRole::Categorical;
    }
}

int Value::compare(const Value &a, const Value &b) {
    const int ka = static_cast<int>(a.kind()), kb = static_cast<int>(b.kind());
    if (ka != kb) return ka < kb ? -1 : 1;
    switch (a.kind()) {
    case ValueKind::Null: return 0;
    case ValueKind::Bool: {
        const int x = a.as_bool(), y = b.as_bool();
        return x == y ? 0 : (x < y ? -1 : 1);
    }
    case ValueKind::Number: {
        const double x = a.as_number(), y = b.as_number();
        return x == y ? 0 : (x < y ? -1 : 1);
    }
    case ValueKind::Timestamp: {
        const int64_t x = a.as_timestamp(), y = b.as_timestamp();
        return x == y ? 0 : (x < y ? -1 : 1);
    }
    case ValueKind::Text: {
        const int c = a.as_text().compare(b.as_text());
        return c == 0 ? 0 : (c < 0 ? -1 : 1);
    }
    }
    return 0;
}

int Schema::find(const std::string &name) const {
    for (size_t i = 0; i < columns.size(); ++i)
        if (columns[i].name == name) return static_cast<int>(i);
    return -1;
}

size_t Schema::require(const std::string &name) const {
    const int i = find(name);
    if (i < 0) throw SchemaError("no column named '" + name + "'");
    return static_cast<size_t>(i);
}

std::string format_number(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string format_value(const Value &v) {
    switch (v.kind()) {
    case ValueKind::Null: return "";
    case ValueKind::Bool: return v.as_bool() ? "true" : "false";
    case ValueKind::Number: return format_number(v.as_number());
    case ValueKind::Timestamp: return format_iso8601(v.as_timestamp());
    case ValueKind::Text: return v.as_text();
    }
    return "";
}

static bool rows_less(const Row &a, const Row &b) {
    for (size_t i = 0; i < a.size() && i < b.size(); ++i) {
        const int c = Value::compare(a[i], b[i]);
        if (c != 0) return c < 0;
    }
    return a.size() < b.size();
}

bool multiset_equal(const DataTable &a, const DataTable &b, double tol) {
    if (a.num_cols() != b.num_cols() || a.num_rows() != b.num_rows()) return false;
    // Match b's columns to a's by name.
    std::vector<size_t> perm(a.num_cols());
    for (size_t i = 0; i < a.num_cols(); ++i) {
        const Column &col = a.schema.columns[i];
        const int j = b.schema.find(col.name);
        if (j < 0 || b.schema.columns[j].kind != col.kind) return false;
        perm[i] = static_cast<size_t>(j);
    }
    std::vector<Row> left = a.rows;
    std::vector<Row> right;
    right.reserve(b.num_rows());
    for (const Row &r : b.rows) {
        Row nr(perm.size());
        for (size_t i = 0; i < perm.size(); ++i) nr[i] = r[perm[i]];
        right.push_back(std::move(nr));
    }
    std::sort(left.begin(), left.end(), rows_less);
    std::sort(right.begin(), right.end(), rows_less);
    for (size_t r = 0; r < left.size(); ++r) {
        for (size_t c = 0; c < perm.size(); ++c) {
            const Value &x = left[r][c], &y = right[r][c];
            if (x.kind() != y.kind()) return false;
            if (x.kind() == ValueKind::Number) {
                if (std::fabs(x.as_number() - y.as_number()) > tol) return false;
            } else if (Value::compare(x, y) != 0) {
                return false;
            }
        }
    }
    return true;
}

DataTable scale_table(const DataTable &in, size_t target_rows, uint64_t seed) {
    DataTable out;
    out.schema = in.schema;
    const size_t n = in.num_rows();
    if (target_rows == n) {
        out.rows = in.rows;
        return out;
    }
    std::mt19937_64 rng(seed);
    if (target_rows < n) {
        // Partial Fisher-Yates, then restore original relative order.
        std::vector<size_t> idx(n);
        for (size_t i = 0; i < n; ++i) idx[i] = i;
        for (size_t i = 0; i < target_rows; ++i) {
            std::uniform_int_distribution<size_t> pick(i, n - 1);
            std::swap(idx[i], idx[pick(rng)]);
        }
        idx.resize(target_rows);
        std::sort(idx.begin(), idx.end());
        out.rows.reserve(target_rows);
        for (size_t i : idx) out.rows.push_back(in.rows[i]);
        return out;
    }
    if (n == 0) throw TransformError("cannot grow an empty table");
    // Per-column jitter magnitude: 1% of the observed value range.
    std::vector<double> jitter(in.num_cols(), 0.0);
    std::vector<bool> is_quant(in.num_cols(), false);
    for (size_t c = 0; c < in.num_cols(); ++c) {
        const Column &col = in.schema.columns[c];
        if (col.role != FieldRole::Quantitative || col.kind != ValueKind::Number) continue;
        is_quant[c] = true;
        bool seen = false;
        double lo = 0, hi = 0;
        for (const Row &r : in.rows) {
            if (r[c].is_null()) continue;
            const double v = r[c].as_number();
            if (!seen) {
                lo = hi = v;
                seen = true;
            } else {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        if (seen) jitter[c] = 0.01 * (hi - lo);
    }
    out.rows.reserve(target_rows);
    size_t copy = 0;
    while (out.rows.size() < target_rows) {
        for (size_t r = 0; r < n && out.rows.size() < target_rows; ++r) {
            Row row = in.rows[r];
            if (copy > 0) {
                for (size_t c = 0; c < row.size(); ++c) {
                    if (!is_quant[c]) continue;
                    std::uniform_real_distribution<double> noise(-jitter[c], jitter[c]);
                    const double delta = noise(rng);
                    if (!row[c].is_null())
                        row[c] = Value::number(row[c].as_number() + delta);
                }
            }
            out.rows.push_back(std::move(row));
        }
        ++copy;
    }
    return out;
}

} // namespace vizplan
