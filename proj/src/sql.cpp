#include "vizplan/sql.hpp"

#include <algorithm>
#include <cctype>

#include "vizplan/csv.hpp"
#include "vizplan/errors.hpp"

namespace vizplan {

SqlExpr SqlExpr::lit(Value v) {
    SqlExpr e;
    e.kind = Kind::Literal;
    e.literal = std::move(v);
    return e;
}
SqlExpr SqlExpr::column(std::string name) {
    SqlExpr e;
    e.kind = Kind::Column;
    e.name = std::move(name);
    return e;
}
SqlExpr SqlExpr::hole(std::string name) {
    SqlExpr e;
    e.kind = Kind::Hole;
    e.name = std::move(name);
    return e;
}
SqlExpr SqlExpr::star() {
    SqlExpr e;
    e.kind = Kind::Star;
    return e;
}
SqlExpr SqlExpr::unary(UnOp op, SqlExpr arg) {
    SqlExpr e;
    e.kind = Kind::Unary;
    e.un_op = op;
    e.args.push_back(std::move(arg));
    return e;
}
SqlExpr SqlExpr::binary(BinOp op, SqlExpr l, SqlExpr r) {
    SqlExpr e;
    e.kind = Kind::Binary;
    e.bin_op = op;
    e.args.push_back(std::move(l));
    e.args.push_back(std::move(r));
    return e;
}
SqlExpr SqlExpr::call(Func f, std::vector<SqlExpr> args) {
    SqlExpr e;
    e.kind = Kind::Func;
    e.func = f;
    e.args = std::move(args);
    return e;
}
SqlExpr SqlExpr::date_trunc(TimeUnit unit, SqlExpr arg) {
    SqlExpr e;
    e.kind = Kind::Func;
    e.func = Func::DateTrunc;
    e.trunc_unit = unit;
    e.args.push_back(std::move(arg));
    return e;
}
SqlExpr SqlExpr::aggregate(AggOp op, std::vector<SqlExpr> args) {
    SqlExpr e;
    e.kind = Kind::Agg;
    e.agg = op;
    e.args = std::move(args);
    return e;
}

namespace {

std::string quote_ident(const std::string &s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string quote_string(const std::string &s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += '\'';
        out += c;
    }
    return out + "'";
}

const char *bin_op_text(SqlExpr::BinOp op) {
    using B = SqlExpr::BinOp;
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
    }
    return "?";
}

const char *agg_text(SqlExpr::AggOp op) {
    using A = SqlExpr::AggOp;
    switch (op) {
    case A::Count: return "COUNT";
    case A::Sum: return "SUM";
    case A::Min: return "MIN";
    case A::Max: return "MAX";
    case A::Avg: return "AVG";
    }
    return "?";
}

} // namespace

std::string to_sql(const SqlExpr &e) {
    using K = SqlExpr::Kind;
    switch (e.kind) {
    case K::Literal:
        switch (e.literal.kind()) {
        case ValueKind::Null: return "NULL";
        case ValueKind::Bool: return e.literal.as_bool() ? "TRUE" : "FALSE";
        case ValueKind::Number: return format_number(e.literal.as_number());
        case ValueKind::Timestamp:
            return "TIMESTAMP '" + std::to_string(e.literal.as_timestamp()) + "'";
        case ValueKind::Text: return quote_string(e.literal.as_text());
        }
        return "NULL";
    case K::Column: return quote_ident(e.name);
    case K::Hole: return ":" + e.name;
    case K::Star: return "*";
    case K::Unary:
        return e.un_op == SqlExpr::UnOp::Not ? "(NOT " + to_sql(e.args[0]) + ")"
                                             : "(-" + to_sql(e.args[0]) + ")";
    case K::Binary:
        return "(" + to_sql(e.args[0]) + " " + bin_op_text(e.bin_op) + " " +
               to_sql(e.args[1]) + ")";
    case K::Func:
        switch (e.func) {
        case SqlExpr::Func::Floor: return "floor(" + to_sql(e.args[0]) + ")";
        case SqlExpr::Func::Mod:
            return "mod(" + to_sql(e.args[0]) + ", " + to_sql(e.args[1]) + ")";
        case SqlExpr::Func::DateTrunc:
            return std::string("date_trunc('") + time_unit_name(e.trunc_unit) + "', " +
                   to_sql(e.args[0]) + ")";
        }
        return "?";
    case K::Agg:
        if (e.agg == SqlExpr::AggOp::Count) return "COUNT(*)";
        return std::string(agg_text(e.agg)) + "(" + to_sql(e.args[0]) + ")";
    case K::WindowSum: {
        std::string out = "SUM(" + to_sql(e.args[0]) + ") OVER (";
        if (!e.partition_by.empty()) {
            out += "PARTITION BY ";
            for (size_t i = 0; i < e.partition_by.size(); ++i) {
                if (i) out += ", ";
                out += to_sql(e.partition_by[i]);
            }
            out += " ";
        }
        out += "ORDER BY ";
        for (size_t i = 0; i < e.window_order.size(); ++i) {
            if (i) out += ", ";
            out += to_sql(e.window_order[i].first);
            if (e.window_order[i].second) out += " DESC";
        }
        return out + ")";
    }
    }
    return "?";
}

std::string to_sql(const SqlQuery &q) {
    std::string out = "SELECT ";
    for (size_t i = 0; i < q.items.size(); ++i) {
        if (i) out += ", ";
        const SelectItem &it = q.items[i];
        out += to_sql(it.expr);
        const bool bare_same = it.expr.kind == SqlExpr::Kind::Column &&
                               (it.alias.empty() || it.alias == it.expr.name);
        if (!bare_same && !it.alias.empty()) out += " AS " + quote_ident(it.alias);
    }
    out += " FROM ";
    if (q.from_sub) out += "(" + to_sql(*q.from_sub) + ")";
    else out += quote_ident(q.from_table);
    if (q.where) out += " WHERE " + to_sql(*q.where);
    if (!q.group_by.empty()) {
        out += " GROUP BY ";
        for (size_t i = 0; i < q.group_by.size(); ++i) {
            if (i) out += ", ";
            out += quote_ident(q.group_by[i]);
        }
    }
    if (!q.order_by.empty()) {
        out += " ORDER BY ";
        for (size_t i = 0; i < q.order_by.size(); ++i) {
            if (i) out += ", ";
            out += quote_ident(q.order_by[i].column);
            if (q.order_by[i].descending) out += " DESC";
        }
    }
    if (q.limit) out += " LIMIT " + std::to_string(*q.limit);
    return out;
}

namespace {

struct SqlParser {
    const std::string &src;
    size_t pos = 0;

    explicit SqlParser(const std::string &s) : src(s) {}

    [[noreturn]] void fail(const std::string &msg) { throw ParseError(msg, pos); }

    void skip_ws() {
        while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    }

    char peek() {
        skip_ws();
        return pos < src.size() ? src[pos] : '\0';
    }

    bool eat_punct(const char *tok) {
        skip_ws();
        const size_t len = std::char_traits<char>::length(tok);
        if (src.compare(pos, len, tok) != 0) return false;
        pos += len;
        return true;
    }

    //! Case-insensitive keyword match; must end at a word boundary.
    bool eat_kw(const char *kw) {
        skip_ws();
        size_t i = 0, p = pos;
        for (; kw[i]; ++i, ++p) {
            if (p >= src.size()) return false;
            if (std::toupper(static_cast<unsigned char>(src[p])) != kw[i]) return false;
        }
        if (p < src.size()) {
            const char c = src[p];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') return false;
        }
        pos = p;
        return true;
    }

    void expect_kw(const char *kw) {
        if (!eat_kw(kw)) fail(std::string("expected ") + kw);
    }

    std::string quoted_ident() {
        skip_ws();
        if (pos >= src.size() || src[pos] != '"') fail("expected quoted identifier");
        ++pos;
        std::string out;
        for (;;) {
            if (pos >= src.size()) fail("unterminated identifier");
            if (src[pos] == '"') {
                if (pos + 1 < src.size() && src[pos + 1] == '"') {
                    out += '"';
                    pos += 2;
                    continue;
                }
                ++pos;
                break;
            }
            out += src[pos++];
        }
        if (out.empty()) fail("empty identifier");
        return out;
    }

    std::string string_literal() {
        skip_ws();
        if (pos >= src.size() || src[pos] != '\'') fail("expected string literal");
        ++pos;
        std::string out;
        for (;;) {
            if (pos >= src.size()) fail("unterminated string literal");
            if (src[pos] == '\'') {
                if (pos + 1 < src.size() && src[pos + 1] == '\'') {
                    out += '\'';
                    pos += 2;
                    continue;
                }
                ++pos;
                break;
            }
            out += src[pos++];
        }
        return out;
    }

    SqlExpr parse_or() {
        SqlExpr l = parse_and();
        while (eat_kw("OR")) l = SqlExpr::binary(SqlExpr::BinOp::Or, std::move(l), parse_and());
        return l;
    }

    SqlExpr parse_and() {
        SqlExpr l = parse_not();
        while (eat_kw("AND")) l = SqlExpr::binary(SqlExpr::BinOp::And, std::move(l), parse_not());
        return l;
    }

    SqlExpr parse_not() {
        if (eat_kw("NOT")) return SqlExpr::unary(SqlExpr::UnOp::Not, parse_not());
        return parse_cmp();
    }

    SqlExpr parse_cmp() {
        SqlExpr l = parse_add();
        for (;;) {
            SqlExpr::BinOp op;
            if (eat_punct("<=")) op = SqlExpr::BinOp::Le;
            else if (eat_punct(">=")) op = SqlExpr::BinOp::Ge;
            else if (eat_punct("<>")) op = SqlExpr::BinOp::Ne;
            else if (eat_punct("<")) op = SqlExpr::BinOp::Lt;
            else if (eat_punct(">")) op = SqlExpr::BinOp::Gt;
            else if (eat_punct("=")) op = SqlExpr::BinOp::Eq;
            else return l;
            l = SqlExpr::binary(op, std::move(l), parse_add());
        }
    }

    SqlExpr parse_add() {
        SqlExpr l = parse_mul();
        for (;;) {
            if (eat_punct("+")) l = SqlExpr::binary(SqlExpr::BinOp::Add, std::move(l), parse_mul());
            else if (eat_punct("-")) l = SqlExpr::binary(SqlExpr::BinOp::Sub, std::move(l), parse_mul());
            else return l;
        }
    }

    SqlExpr parse_mul() {
        SqlExpr l = parse_unary();
        for (;;) {
            if (eat_punct("*")) l = SqlExpr::binary(SqlExpr::BinOp::Mul, std::move(l), parse_unary());
            else if (eat_punct("/")) l = SqlExpr::binary(SqlExpr::BinOp::Div, std::move(l), parse_unary());
            else return l;
        }
    }

    SqlExpr parse_unary() {
        if (eat_punct("-")) return SqlExpr::unary(SqlExpr::UnOp::Neg, parse_unary());
        return parse_atom();
    }

    SqlExpr parse_window_tail(SqlExpr arg) {
        // after: SUM ( expr ) OVER
        if (!eat_punct("(")) fail("expected '(' after OVER");
        SqlExpr w;
        w.kind = SqlExpr::Kind::WindowSum;
        w.args.push_back(std::move(arg));
        if (eat_kw("PARTITION")) {
            expect_kw("BY");
            do w.partition_by.push_back(parse_or());
            while (eat_punct(","));
        }
        expect_kw("ORDER");
        expect_kw("BY");
        do {
            SqlExpr e = parse_or();
            bool desc = false;
            if (eat_kw("DESC")) desc = true;
            else eat_kw("ASC");
            w.window_order.emplace_back(std::move(e), desc);
        } while (eat_punct(","));
        if (!eat_punct(")")) fail("expected ')' closing window");
        return w;
    }

    SqlExpr parse_atom() {
        skip_ws();
        if (pos >= src.size()) fail("unexpected end of query");
        const char c = src[pos];
        if (c == '(') {
            ++pos;
            SqlExpr e = parse_or();
            if (!eat_punct(")")) fail("expected ')'");
            return e;
        }
        if (c == '"') return SqlExpr::column(quoted_ident());
        if (c == '\'') return SqlExpr::lit(Value::text(string_literal()));
        if (c == ':') {
            ++pos;
            std::string name;
            while (pos < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
                name += src[pos++];
            if (name.empty()) fail("expected placeholder name after ':'");
            return SqlExpr::hole(std::move(name));
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            size_t end = pos;
            while (end < src.size() &&
                   (std::isdigit(static_cast<unsigned char>(src[end])) || src[end] == '.' ||
                    src[end] == 'e' || src[end] == 'E' ||
                    ((src[end] == '+' || src[end] == '-') && end > pos &&
                     (src[end - 1] == 'e' || src[end - 1] == 'E'))))
                ++end;
            auto v = parse_strict_number(src.substr(pos, end - pos));
            if (!v) fail("malformed number");
            pos = end;
            return SqlExpr::lit(Value::number(*v));
        }

        if (eat_kw("TRUE")) return SqlExpr::lit(Value::boolean(true));
        if (eat_kw("FALSE")) return SqlExpr::lit(Value::boolean(false));
        if (eat_kw("NULL")) return SqlExpr::lit(Value::null());
        if (eat_kw("TIMESTAMP")) {
            std::string body = string_literal();
            try {
                size_t used = 0;
                int64_t ms = std::stoll(body, &used);
                if (used != body.size()) throw std::invalid_argument(body);
                return SqlExpr::lit(Value::timestamp(ms));
            } catch (const std::exception &) {
                fail("malformed TIMESTAMP literal");
            }
        }
        if (eat_kw("COUNT")) {
            if (!eat_punct("(") || !eat_punct("*") || !eat_punct(")"))
                fail("expected COUNT(*)");
            return SqlExpr::aggregate(SqlExpr::AggOp::Count, {});
        }
        if (eat_kw("SUM")) {
            if (!eat_punct("(")) fail("expected '('");
            SqlExpr arg = parse_or();
            if (!eat_punct(")")) fail("expected ')'");
            if (eat_kw("OVER")) return parse_window_tail(std::move(arg));
            return SqlExpr::aggregate(SqlExpr::AggOp::Sum, {std::move(arg)});
        }
        for (auto [kw, op] : {std::pair{"MIN", SqlExpr::AggOp::Min},
                              std::pair{"MAX", SqlExpr::AggOp::Max},
                              std::pair{"AVG", SqlExpr::AggOp::Avg}}) {
            if (eat_kw(kw)) {
                if (!eat_punct("(")) fail("expected '('");
                SqlExpr arg = parse_or();
                if (!eat_punct(")")) fail("expected ')'");
                return SqlExpr::aggregate(op, {std::move(arg)});
            }
        }
        if (eat_kw("FLOOR")) {
            if (!eat_punct("(")) fail("expected '('");
            SqlExpr arg = parse_or();
            if (!eat_punct(")")) fail("expected ')'");
            return SqlExpr::call(SqlExpr::Func::Floor, {std::move(arg)});
        }
        if (eat_kw("MOD")) {
            if (!eat_punct("(")) fail("expected '('");
            SqlExpr a = parse_or();
            if (!eat_punct(",")) fail("expected ','");
            SqlExpr b = parse_or();
            if (!eat_punct(")")) fail("expected ')'");
            return SqlExpr::call(SqlExpr::Func::Mod, {std::move(a), std::move(b)});
        }
        if (eat_kw("DATE_TRUNC")) {
            if (!eat_punct("(")) fail("expected '('");
            std::string unit = string_literal();
            auto u = time_unit_from_string(unit);
            if (!u) fail("unknown date_trunc unit '" + unit + "'");
            if (!eat_punct(",")) fail("expected ','");
            SqlExpr arg = parse_or();
            if (!eat_punct(")")) fail("expected ')'");
            return SqlExpr::date_trunc(*u, std::move(arg));
        }
        fail("unexpected token");
    }

    SqlQuery parse_query() {
        expect_kw("SELECT");
        SqlQuery q;
        do {
            SelectItem item;
            item.expr = parse_or();
            if (eat_kw("AS")) item.alias = quoted_ident();
            else if (item.expr.kind == SqlExpr::Kind::Column) item.alias = item.expr.name;
            q.items.push_back(std::move(item));
        } while (eat_punct(","));
        expect_kw("FROM");
        if (peek() == '(') {
            ++pos;
            q.from_sub = std::make_shared<SqlQuery>(parse_query());
            if (!eat_punct(")")) fail("expected ')' closing subquery");
        } else {
            q.from_table = quoted_ident();
        }
        if (eat_kw("WHERE")) q.where = parse_or();
        if (eat_kw("GROUP")) {
            expect_kw("BY");
            do q.group_by.push_back(quoted_ident());
            while (eat_punct(","));
        }
        if (eat_kw("ORDER")) {
            expect_kw("BY");
            do {
                OrderItem o;
                o.column = quoted_ident();
                if (eat_kw("DESC")) o.descending = true;
                else eat_kw("ASC");
                q.order_by.push_back(std::move(o));
            } while (eat_punct(","));
        }
        if (eat_kw("LIMIT")) {
            skip_ws();
            size_t end = pos;
            while (end < src.size() && std::isdigit(static_cast<unsigned char>(src[end]))) ++end;
            if (end == pos) fail("expected LIMIT count");
            q.limit = std::stoll(src.substr(pos, end - pos));
            pos = end;
        }
        return q;
    }
};

} // namespace

SqlQuery parse_sql(const std::string &text) {
    SqlParser p(text);
    SqlQuery q = p.parse_query();
    p.skip_ws();
    if (p.pos != text.size()) p.fail("trailing input after query");
    return q;
}

namespace {

void collect_holes_expr(const SqlExpr &e, std::vector<std::string> &out) {
    if (e.kind == SqlExpr::Kind::Hole) out.push_back(e.name);
    for (const auto &a : e.args) collect_holes_expr(a, out);
    for (const auto &p : e.partition_by) collect_holes_expr(p, out);
    for (const auto &[o, desc] : e.window_order) collect_holes_expr(o, out);
}

void collect_holes_query(const SqlQuery &q, std::vector<std::string> &out) {
    if (q.from_sub) collect_holes_query(*q.from_sub, out);
    for (const auto &it : q.items) collect_holes_expr(it.expr, out);
    if (q.where) collect_holes_expr(*q.where, out);
}

SqlExpr fill_expr(const SqlExpr &e, const std::map<std::string, Value> &values) {
    if (e.kind == SqlExpr::Kind::Hole) {
        auto it = values.find(e.name);
        if (it != values.end()) return SqlExpr::lit(it->second);
        return e;
    }
    SqlExpr out = e;
    out.args.clear();
    for (const auto &a : e.args) out.args.push_back(fill_expr(a, values));
    out.partition_by.clear();
    for (const auto &p : e.partition_by) out.partition_by.push_back(fill_expr(p, values));
    out.window_order.clear();
    for (const auto &[o, desc] : e.window_order)
        out.window_order.emplace_back(fill_expr(o, values), desc);
    return out;
}

} // namespace

std::vector<std::string> collect_holes(const SqlQuery &q) {
    std::vector<std::string> all;
    collect_holes_query(q, all);
    std::vector<std::string> out;
    for (auto &name : all)
        if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
    return out;
}

SqlQuery fill_holes(const SqlQuery &q, const std::map<std::string, Value> &values) {
    SqlQuery out = q;
    if (q.from_sub) out.from_sub = std::make_shared<SqlQuery>(fill_holes(*q.from_sub, values));
    out.items.clear();
    for (const auto &it : q.items) out.items.push_back({fill_expr(it.expr, values), it.alias});
    if (q.where) out.where = fill_expr(*q.where, values);
    return out;
}

} // namespace vizplan
