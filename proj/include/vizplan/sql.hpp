#ifndef VIZPLAN_SQL_HPP
#define VIZPLAN_SQL_HPP

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vizplan/table.hpp"
#include "vizplan/timeutil.hpp"

namespace vizplan {

//! Query expression tree. The dialect is deliberately small: arithmetic,
//! comparisons (= <> < <= > >=), AND/OR/NOT, floor(), mod(), date_trunc(),
//! the aggregates COUNT(*) / SUM / MIN / MAX / AVG, and one window form,
//! SUM(x) OVER (PARTITION BY ... ORDER BY ...), a per-partition running sum.
//! `:name` placeholders stand for values spliced in before execution.
struct SqlExpr {
    enum class Kind { Literal, Column, Hole, Unary, Binary, Func, Agg, WindowSum, Star };
    enum class UnOp { Neg, Not };
    enum class BinOp { Mul, Div, Add, Sub, Lt, Le, Gt, Ge, Eq, Ne, And, Or };
    enum class Func { Floor, Mod, DateTrunc };
    enum class AggOp { Count, Sum, Min, Max, Avg };

    Kind kind = Kind::Literal;
    Value literal;                 // Literal
    std::string name;              // Column / Hole
    UnOp un_op = UnOp::Neg;        // Unary (args[0])
    BinOp bin_op = BinOp::And;     // Binary (args[0], args[1])
    Func func = Func::Floor;       // Func (args)
    AggOp agg = AggOp::Count;      // Agg (args[0] unless Count)
    TimeUnit trunc_unit = TimeUnit::Day; // Func::DateTrunc
    std::vector<SqlExpr> args;

    // WindowSum only: SUM(args[0]) OVER (...)
    std::vector<SqlExpr> partition_by;
    std::vector<std::pair<SqlExpr, bool>> window_order; // expr, descending

    static SqlExpr lit(Value v);
    static SqlExpr column(std::string name);
    static SqlExpr hole(std::string name);
    static SqlExpr star();
    static SqlExpr unary(UnOp op, SqlExpr arg);
    static SqlExpr binary(BinOp op, SqlExpr l, SqlExpr r);
    static SqlExpr call(Func f, std::vector<SqlExpr> args);
    static SqlExpr date_trunc(TimeUnit unit, SqlExpr arg);
    static SqlExpr aggregate(AggOp op, std::vector<SqlExpr> args);
};

struct SelectItem {
    SqlExpr expr;
    std::string alias; // empty keeps a bare column's own name
};

struct OrderItem {
    std::string column; // output column name
    bool descending = false;
};

//! One SELECT block. FROM is a base table or exactly one subquery; ORDER BY
//! and GROUP BY reference output / input column names respectively.
struct SqlQuery {
    std::vector<SelectItem> items;
    std::string from_table;
    std::shared_ptr<SqlQuery> from_sub;
    std::optional<SqlExpr> where;
    std::vector<std::string> group_by;
    std::vector<OrderItem> order_by;
    std::optional<int64_t> limit;
};

//! Canonical rendering: uppercase keywords, lowercase functions, every
//! identifier double-quoted, binary expressions fully parenthesized.
//! Equal queries render to equal text, which is what result caching keys on.
std::string to_sql(const SqlQuery &q);
std::string to_sql(const SqlExpr &e);

//! Parse the dialect back into a tree; inverse of to_sql on canonical text.
//! Throws ParseError with a byte offset on malformed input.
SqlQuery parse_sql(const std::string &text);

//! Names of unresolved :holes, in first-appearance order, duplicates removed.
std::vector<std::string> collect_holes(const SqlQuery &q);

//! Replace :holes with literal values. Holes missing from the map stay.
SqlQuery fill_holes(const SqlQuery &q, const std::map<std::string, Value> &values);

} // namespace vizplan

#endif
