#include "vizplan/expr.hpp"

#include <cmath>

#include "vizplan/csv.hpp"

namespace vizplan {

namespace {

struct Parser {
    const std::string &src;
    size_t pos = 0;

    explicit Parser(const std::string &s) : src(s) {}

    void skip_ws() {
        while (pos < src.size() && (src[pos] == ' ' || src[pos] == '\t' || src[pos] == '\n' ||
                                    src[pos] == '\r'))
            ++pos;
    }

    bool eat(const char *tok) {
        skip_ws();
        const size_t len = std::char_traits<char>::length(tok);
        if (src.compare(pos, len, tok) != 0) return false;
        pos += len;
        return true;
    }

    char peek() {
        skip_ws();
        return pos < src.size() ? src[pos] : '\0';
    }

    [[noreturn]] void fail(const std::string &msg) { throw ParseError(msg, pos); }

    static ExprPtr make(ExprAst::Kind kind, size_t off) {
        auto e = std::make_unique<ExprAst>();
        e->kind = kind;
        e->offset = off;
        return e;
    }

    ExprPtr binary(ExprAst::BinOp op, ExprPtr l, ExprPtr r) {
        auto e = make(ExprAst::Kind::Binary, l->offset);
        e->bin_op = op;
        e->lhs = std::move(l);
        e->rhs = std::move(r);
        return e;
    }

    ExprPtr parse_or() {
        auto l = parse_and();
        while (eat("||")) l = binary(ExprAst::BinOp::Or, std::move(l), parse_and());
        return l;
    }

    ExprPtr parse_and() {
        auto l = parse_cmp();
        while (eat("&&")) l = binary(ExprAst::BinOp::And, std::move(l), parse_cmp());
        return l;
    }

    ExprPtr parse_cmp() {
        auto l = parse_add();
        for (;;) {
            skip_ws();
            ExprAst::BinOp op;
            if (eat("<=")) op = ExprAst::BinOp::Le;
            else if (eat(">=")) op = ExprAst::BinOp::Ge;
            else if (eat("==")) op = ExprAst::BinOp::Eq;
            else if (eat("!=")) op = ExprAst::BinOp::Ne;
            else if (peek() == '<' && (pos + 1 >= src.size() || src[pos + 1] != '<')) {
                ++pos;
                op = ExprAst::BinOp::Lt;
            } else if (peek() == '>') {
                ++pos;
                op = ExprAst::BinOp::Gt;
            } else {
                return l;
            }
            l = binary(op, std::move(l), parse_add());
        }
    }

    ExprPtr parse_add() {
        auto l = parse_mul();
        for (;;) {
            skip_ws();
            if (eat("+")) l = binary(ExprAst::BinOp::Add, std::move(l), parse_mul());
            else if (peek() == '-') {
                ++pos;
                l = binary(ExprAst::BinOp::Sub, std::move(l), parse_mul());
            } else {
                return l;
            }
        }
    }

    ExprPtr parse_mul() {
        auto l = parse_unary();
        for (;;) {
            skip_ws();
            if (eat("*")) l = binary(ExprAst::BinOp::Mul, std::move(l), parse_unary());
            else if (eat("/")) l = binary(ExprAst::BinOp::Div, std::move(l), parse_unary());
            else if (eat("%")) l = binary(ExprAst::BinOp::Mod, std::move(l), parse_unary());
            else return l;
        }
    }

    ExprPtr parse_unary() {
        skip_ws();
        const size_t off = pos;
        if (pos < src.size() && src[pos] == '!' &&
            (pos + 1 >= src.size() || src[pos + 1] != '=')) {
            ++pos;
            auto e = make(ExprAst::Kind::Unary, off);
            e->un_op = ExprAst::UnOp::Not;
            e->lhs = parse_unary();
            return e;
        }
        if (pos < src.size() && src[pos] == '-') {
            ++pos;
            auto e = make(ExprAst::Kind::Unary, off);
            e->un_op = ExprAst::UnOp::Neg;
            e->lhs = parse_unary();
            return e;
        }
        return parse_atom();
    }

    ExprPtr parse_atom() {
        skip_ws();
        if (pos >= src.size()) fail("unexpected end of expression");
        const char c = src[pos];
        if (c == '(') {
            ++pos;
            auto e = parse_or();
            skip_ws();
            if (pos >= src.size() || src[pos] != ')') fail("expected ')'");
            ++pos;
            return e;
        }
        if (c == '\'' || c == '"') return parse_string(c);
        if ((c >= '0' && c <= '9') || c == '.') return parse_number();
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_') return parse_ident();
        fail("unexpected character");
    }

    ExprPtr parse_string(char quote) {
        const size_t off = pos;
        ++pos;
        std::string out;
        for (;;) {
            if (pos >= src.size()) {
                pos = off;
                fail("unterminated string literal");
            }
            if (src[pos] == quote) {
                // doubled quote embeds one quote character
                if (pos + 1 < src.size() && src[pos + 1] == quote) {
                    out += quote;
                    pos += 2;
                    continue;
                }
                ++pos;
                break;
            }
            out += src[pos];
            ++pos;
        }
        auto e = make(ExprAst::Kind::Literal, off);
        e->literal = Value::text(std::move(out));
        return e;
    }

    ExprPtr parse_number() {
        const size_t off = pos;
        size_t end = pos;
        while (end < src.size() &&
               ((src[end] >= '0' && src[end] <= '9') || src[end] == '.' || src[end] == 'e' ||
                src[end] == 'E' ||
                ((src[end] == '+' || src[end] == '-') && end > pos &&
                 (src[end - 1] == 'e' || src[end - 1] == 'E'))))
            ++end;
        auto v = parse_strict_number(src.substr(pos, end - pos));
        if (!v) fail("malformed number literal");
        pos = end;
        auto e = make(ExprAst::Kind::Literal, off);
        e->literal = Value::number(*v);
        return e;
    }

    ExprPtr parse_ident() {
        const size_t off = pos;
        size_t end = pos;
        auto ident_char = [&](char ch) {
            return (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                   (ch >= '0' && ch <= '9') || ch == '_';
        };
        while (end < src.size() && ident_char(src[end])) ++end;
        std::string word = src.substr(pos, end - pos);
        pos = end;
        if (word == "true" || word == "false") {
            auto e = make(ExprAst::Kind::Literal, off);
            e->literal = Value::boolean(word == "true");
            return e;
        }
        if (word == "null") return make(ExprAst::Kind::Literal, off);
        if (word == "datum") {
            skip_ws();
            if (pos >= src.size() || src[pos] != '.') fail("expected '.' after datum");
            ++pos;
            skip_ws();
            const size_t fstart = pos;
            size_t fend = pos;
            while (fend < src.size() && ident_char(src[fend])) ++fend;
            if (fend == fstart) fail("expected field name after datum.");
            auto e = make(ExprAst::Kind::FieldRef, off);
            e->name = src.substr(fstart, fend - fstart);
            pos = fend;
            return e;
        }
        auto e = make(ExprAst::Kind::SignalRef, off);
        e->name = std::move(word);
        return e;
    }
};

bool truthy(const Value &v, size_t offset) {
    switch (v.kind()) {
    case ValueKind::Bool: return v.as_bool();
    case ValueKind::Null: return false;
    default:
        throw TransformError("value of kind " + std::string(value_kind_name(v.kind())) +
                             " used in boolean position (offset " + std::to_string(offset) +
                             ")");
    }
}

} // namespace

ExprPtr parse_expr(const std::string &text) {
    Parser p(text);
    auto e = p.parse_or();
    p.skip_ws();
    if (p.pos != text.size()) p.fail("trailing input after expression");
    return e;
}

Value eval_expr(const ExprAst &ast, const Row &row, const Schema &schema,
                const SignalLookup &signals) {
    switch (ast.kind) {
    case ExprAst::Kind::Literal:
        return ast.literal;
    case ExprAst::Kind::FieldRef: {
        const size_t i = schema.require(ast.name);
        return row.at(i);
    }
    case ExprAst::Kind::SignalRef: {
        auto v = signals ? signals(ast.name) : std::nullopt;
        if (!v) throw TransformError("unknown signal '" + ast.name + "'");
        return *v;
    }
    case ExprAst::Kind::Unary: {
        const Value v = eval_expr(*ast.lhs, row, schema, signals);
        if (ast.un_op == ExprAst::UnOp::Not) return Value::boolean(!truthy(v, ast.offset));
        if (v.is_null()) return Value::null();
        if (v.kind() != ValueKind::Number)
            throw TransformError("unary '-' needs a Number operand");
        return Value::number(-v.as_number());
    }
    case ExprAst::Kind::Binary:
        break;
    }

    using B = ExprAst::BinOp;
    const B op = ast.bin_op;
    if (op == B::And) {
        // Short-circuit; Null in boolean position coerces to false.
        const Value l = eval_expr(*ast.lhs, row, schema, signals);
        if (!truthy(l, ast.offset)) return Value::boolean(false);
        return Value::boolean(truthy(eval_expr(*ast.rhs, row, schema, signals), ast.offset));
    }
    if (op == B::Or) {
        const Value l = eval_expr(*ast.lhs, row, schema, signals);
        if (truthy(l, ast.offset)) return Value::boolean(true);
        return Value::boolean(truthy(eval_expr(*ast.rhs, row, schema, signals), ast.offset));
    }

    const Value l = eval_expr(*ast.lhs, row, schema, signals);
    const Value r = eval_expr(*ast.rhs, row, schema, signals);

    switch (op) {
    case B::Mul:
    case B::Div:
    case B::Mod:
    case B::Add:
    case B::Sub: {
        if (l.is_null() || r.is_null()) return Value::null();
        if (l.kind() != ValueKind::Number || r.kind() != ValueKind::Number)
            throw TransformError("arithmetic needs Number operands");
        const double a = l.as_number(), b = r.as_number();
        switch (op) {
        case B::Mul: return Value::number(a * b);
        case B::Div: return b == 0 ? Value::null() : Value::number(a / b);
        case B::Mod: return b == 0 ? Value::null() : Value::number(std::fmod(a, b));
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
        const bool numbers = l.kind() == ValueKind::Number && r.kind() == ValueKind::Number;
        const bool times = l.kind() == ValueKind::Timestamp && r.kind() == ValueKind::Timestamp;
        if (!numbers && !times)
            throw TransformError("ordering needs two Numbers or two Timestamps");
        const int c = Value::compare(l, r);
        switch (op) {
        case B::Lt: return Value::boolean(c < 0);
        case B::Le: return Value::boolean(c <= 0);
        case B::Gt: return Value::boolean(c > 0);
        default: return Value::boolean(c >= 0);
        }
    }
    default:
        throw TransformError("unhandled operator");
    }
}

namespace {

std::string sql_string_literal(const std::string &s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += '\'';
        out += c;
    }
    out += '\'';
    return out;
}

const char *sql_op(ExprAst::BinOp op) {
    using B = ExprAst::BinOp;
    switch (op) {
    case B::Mul: return "*";
    case B::Div: return "/";
    case B::Add: return "+";
    case B::Sub: return "-";
    case B::Lt: return "<";
    case B::Le: return "<=";
    case B::Gt: return ">";
    case B::Ge: return ">=";
    case B::Eq: return "=";
    case B::Ne: return "<>";
    case B::And: return "AND";
    case B::Or: return "OR";
    default: return nullptr;
    }
}

} // namespace

std::optional<std::string> to_sql_predicate(const ExprAst &ast) {
    switch (ast.kind) {
    case ExprAst::Kind::Literal:
        switch (ast.literal.kind()) {
        case ValueKind::Null: return "NULL";
        case ValueKind::Bool: return ast.literal.as_bool() ? "TRUE" : "FALSE";
        case ValueKind::Number: return format_number(ast.literal.as_number());
        case ValueKind::Text: return sql_string_literal(ast.literal.as_text());
        case ValueKind::Timestamp:
            return "TIMESTAMP '" + std::to_string(ast.literal.as_timestamp()) + "'";
        }
        return std::nullopt;
    case ExprAst::Kind::FieldRef:
        return "\"" + ast.name + "\"";
    case ExprAst::Kind::SignalRef:
        return ":" + ast.name;
    case ExprAst::Kind::Unary: {
        auto inner = to_sql_predicate(*ast.lhs);
        if (!inner) return std::nullopt;
        if (ast.un_op == ExprAst::UnOp::Not) return "(NOT " + *inner + ")";
        return "(-" + *inner + ")";
    }
    case ExprAst::Kind::Binary: {
        auto l = to_sql_predicate(*ast.lhs);
        auto r = to_sql_predicate(*ast.rhs);
        if (!l || !r) return std::nullopt;
        if (ast.bin_op == ExprAst::BinOp::Mod) return "mod(" + *l + ", " + *r + ")";
        const char *op = sql_op(ast.bin_op);
        if (!op) return std::nullopt;
        return "(" + *l + " " + op + " " + *r + ")";
    }
    }
    return std::nullopt;
}

std::string pretty_print(const ExprAst &ast) {
    switch (ast.kind) {
    case ExprAst::Kind::Literal:
        if (ast.literal.kind() == ValueKind::Text) {
            std::string out = "'";
            for (char c : ast.literal.as_text()) {
                if (c == '\'') out += '\'';
                out += c;
            }
            return out + "'";
        }
        if (ast.literal.is_null()) return "null";
        return format_value(ast.literal);
    case ExprAst::Kind::FieldRef:
        return "datum." + ast.name;
    case ExprAst::Kind::SignalRef:
        return ast.name;
    case ExprAst::Kind::Unary:
        return "(" + std::string(ast.un_op == ExprAst::UnOp::Not ? "!" : "-") +
               pretty_print(*ast.lhs) + ")";
    case ExprAst::Kind::Binary: {
        using B = ExprAst::BinOp;
        const char *op = nullptr;
        switch (ast.bin_op) {
        case B::Mul: op = "*"; break;
        case B::Div: op = "/"; break;
        case B::Mod: op = "%"; break;
        case B::Add: op = "+"; break;
        case B::Sub: op = "-"; break;
        case B::Lt: op = "<"; break;
        case B::Le: op = "<="; break;
        case B::Gt: op = ">"; break;
        case B::Ge: op = ">="; break;
        case B::Eq: op = "=="; break;
        case B::Ne: op = "!="; break;
        case B::And: op = "&&"; break;
        case B::Or: op = "||"; break;
        }
        return "(" + pretty_print(*ast.lhs) + " " + op + " " + pretty_print(*ast.rhs) + ")";
    }
    }
    return "?";
}

void collect_field_refs(const ExprAst &ast, std::vector<std::string> &out) {
    if (ast.kind == ExprAst::Kind::FieldRef) out.push_back(ast.name);
    if (ast.lhs) collect_field_refs(*ast.lhs, out);
    if (ast.rhs) collect_field_refs(*ast.rhs, out);
}

void collect_signal_refs(const ExprAst &ast, std::vector<std::string> &out) {
    if (ast.kind == ExprAst::Kind::SignalRef) out.push_back(ast.name);
    if (ast.lhs) collect_signal_refs(*ast.lhs, out);
    if (ast.rhs) collect_signal_refs(*ast.rhs, out);
}

} // namespace vizplan
