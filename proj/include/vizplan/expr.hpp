#ifndef VIZPLAN_EXPR_HPP
#define VIZPLAN_EXPR_HPP

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vizplan/table.hpp"

namespace vizplan {

//! Row-predicate / arithmetic expression AST. Grammar (binding tightest
//! first): unary ! -, then * / %, then + -, then < <= > >= == !=, then &&,
//! then ||. `datum.name` reads a field of the current row; a bare
//! identifier reads a signal.
struct ExprAst {
    enum class Kind { Literal, FieldRef, SignalRef, Unary, Binary };
    enum class UnOp { Not, Neg };
    enum class BinOp { Mul, Div, Mod, Add, Sub, Lt, Le, Gt, Ge, Eq, Ne, And, Or };

    Kind kind = Kind::Literal;
    Value literal;               // Literal
    std::string name;            // FieldRef / SignalRef
    UnOp un_op = UnOp::Not;      // Unary
    BinOp bin_op = BinOp::And;   // Binary
    std::unique_ptr<ExprAst> lhs, rhs;
    size_t offset = 0;           // byte position in the source text
};

using ExprPtr = std::unique_ptr<ExprAst>;

//! Parse expression text. Throws ParseError with the byte offset of the
//! first character that cannot be consumed.
ExprPtr parse_expr(const std::string &text);

//! Resolves a signal name to its current value, or nothing if undefined.
using SignalLookup = std::function<std::optional<Value>(const std::string &)>;

//! Evaluate against one row. Pinned semantics shared with the query engine:
//! comparisons involving Null are false (never unknown); arithmetic with a
//! Null operand is Null; division or modulo by zero is Null; a Null in
//! boolean position coerces to false. Type violations throw TransformError.
Value eval_expr(const ExprAst &ast, const Row &row, const Schema &schema,
                const SignalLookup &signals);

//! Render as SQL: && -> AND, || -> OR, ! -> NOT, == -> =, != -> <>,
//! % -> mod(,), field refs "quoted", signal refs become :name holes.
//! Returns nothing for a construct outside the mapping.
std::optional<std::string> to_sql_predicate(const ExprAst &ast);

//! Canonical fully parenthesized rendering, for diagnostics and goldens.
std::string pretty_print(const ExprAst &ast);

void collect_field_refs(const ExprAst &ast, std::vector<std::string> &out);
void collect_signal_refs(const ExprAst &ast, std::vector<std::string> &out);

} // namespace vizplan

#endif
