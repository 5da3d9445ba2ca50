#ifndef VIZPLAN_TABLE_HPP
#define VIZPLAN_TABLE_HPP

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "vizplan/errors.hpp"

namespace vizplan {

enum class ValueKind { Null, Bool, Number, Timestamp, Text };

//! How a column is used by visualizations; drives template slot filling
//! and which columns receive jitter when a table is rescaled.
enum class FieldRole { Quantitative, Temporal, Categorical };

const char *value_kind_name(ValueKind k);
const char *field_role_name(FieldRole r);

//! One cell. Timestamp is UTC epoch milliseconds, kept distinct from Number.
//! Number is never NaN or infinite; ingestion rejects such inputs.
class Value {
public:
    Value() : data_(std::monostate{}) {}
    static Value null() { return Value(); }
    static Value boolean(bool b) { return Value(Rep(b)); }
    static Value number(double d) { return Value(Rep(d)); }
    static Value timestamp(int64_t ms) { return Value(Rep(ms)); }
    static Value text(std::string s) { return Value(Rep(std::move(s))); }

    ValueKind kind() const { return static_cast<ValueKind>(data_.index()); }
    bool is_null() const { return kind() == ValueKind::Null; }

    bool as_bool() const { return std::get<bool>(data_); }
    double as_number() const { return std::get<double>(data_); }
    int64_t as_timestamp() const { return std::get<int64_t>(data_); }
    const std::string &as_text() const { return std::get<std::string>(data_); }

    //! Total order used for sorting and canonicalization:
    //! Null < Bool < Number < Timestamp < Text, natural order within a kind.
    static int compare(const Value &a, const Value &b);

    bool operator==(const Value &o) const { return compare(*this, o) == 0; }

private:
    using Rep = std::variant<std::monostate, bool, double, int64_t, std::string>;
    explicit Value(Rep r) : data_(std::move(r)) {}
    Rep data_;
};

struct Column {
    std::string name;
    ValueKind kind = ValueKind::Text;
    FieldRole role = FieldRole::Categorical;
};

//! Default role for a value kind: Number -> Quantitative,
//! Timestamp -> Temporal, everything else Categorical.
FieldRole default_role(ValueKind k);

struct Schema {
    std::vector<Column> columns;

    int find(const std::string &name) const;
    //! Index of `name`, or SchemaError if absent.
    size_t require(const std::string &name) const;
    bool has(const std::string &name) const { return find(name) >= 0; }
};

using Row = std::vector<Value>;

struct DataTable {
    Schema schema;
    std::vector<Row> rows;

    size_t num_rows() const { return rows.size(); }
    size_t num_cols() const { return schema.columns.size(); }
};

//! Shortest decimal text that parses back to exactly the same double.
std::string format_number(double v);

//! Human/CSV rendering of one value. Null renders as the empty string.
std::string format_value(const Value &v);

//! Multiset row equality, column order-insensitive (columns matched by
//! name, kinds must agree; roles are not compared). Numbers compare with
//! absolute tolerance `tol`; all other kinds compare exactly.
bool multiset_equal(const DataTable &a, const DataTable &b, double tol = 1e-9);

//! Deterministically resize a table to `target_rows`.
//! Shrinking draws a uniform sample without replacement and keeps the
//! original relative row order. Growing replicates the table cyclically;
//! every copy after the first gets uniform jitter of 1% of the column range
//! added to each Quantitative Number cell. Categorical and temporal columns
//! are never altered, so their value sets are preserved.
DataTable scale_table(const DataTable &in, size_t target_rows, uint64_t seed);

} // namespace vizplan

#endif
