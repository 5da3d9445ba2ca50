#include <doctest.h>

#include "vizplan/csv.hpp"

using namespace vizplan;

TEST_CASE("csv quoting, escapes and line endings") {
    DataTable t = parse_csv("name,note\r\n\"a,b\",\"say \"\"hi\"\"\"\nplain,\"multi\nline\"\n");
    REQUIRE(t.num_cols() == 2);
    REQUIRE(t.num_rows() == 2);
    CHECK(t.rows[0][0].as_text() == "a,b");
    CHECK(t.rows[0][1].as_text() == "say \"hi\"");
    CHECK(t.rows[1][0].as_text() == "plain");
    CHECK(t.rows[1][1].as_text() == "multi\nline");
}

TEST_CASE("csv kind inference per column") {
    DataTable t = parse_csv("n,ts,mixed,empty\n"
                            "1,2007-01-02,5,\n"
                            "-2.5e1,2008-03-04T05:06:07Z,x,\n"
                            ",2009-05-06,7,\n");
    CHECK(t.schema.columns[0].kind == ValueKind::Number);
    CHECK(t.schema.columns[0].role == FieldRole::Quantitative);
    CHECK(t.schema.columns[1].kind == ValueKind::Timestamp);
    CHECK(t.schema.columns[1].role == FieldRole::Temporal);
    CHECK(t.schema.columns[2].kind == ValueKind::Text);
    CHECK(t.schema.columns[2].role == FieldRole::Categorical);
    CHECK(t.schema.columns[3].kind == ValueKind::Text); // all empty -> Text
    CHECK(t.rows[0][0].as_number() == 1);
    CHECK(t.rows[1][0].as_number() == -25);
    CHECK(t.rows[2][0].is_null());
    CHECK(t.rows[0][1].kind() == ValueKind::Timestamp);
    CHECK(t.rows[0][2].as_text() == "5"); // mixed column stays text
    CHECK(t.rows[0][3].is_null());
}

TEST_CASE("csv inference rejects nan/inf/hex spellings") {
    DataTable t = parse_csv("a\nNaN\ninf\n0x10\n");
    CHECK(t.schema.columns[0].kind == ValueKind::Text);
    CHECK_FALSE(parse_strict_number("nan").has_value());
    CHECK_FALSE(parse_strict_number("0x10").has_value());
    CHECK_FALSE(parse_strict_number("1e999").has_value()); // overflows to inf
    CHECK_FALSE(parse_strict_number("1.2.3").has_value());
    CHECK_FALSE(parse_strict_number("5 ").has_value());
    CHECK(parse_strict_number("-1.25e2") == -125.0);
    CHECK(parse_strict_number(".5") == 0.5);
}

TEST_CASE("csv schema hint pins kinds and validates cells") {
    Schema hint;
    hint.columns = {{"code", ValueKind::Text, FieldRole::Categorical}};
    DataTable t = parse_csv("code,v\n1,2\n2,3\n", hint);
    CHECK(t.schema.columns[0].kind == ValueKind::Text);
    CHECK(t.rows[0][0].as_text() == "1");
    CHECK(t.schema.columns[1].kind == ValueKind::Number);

    Schema bad;
    bad.columns = {{"v", ValueKind::Number, FieldRole::Quantitative}};
    CHECK_THROWS_AS(parse_csv("v\nx\n", bad), SchemaError);
}

TEST_CASE("csv structural errors carry positions") {
    CHECK_THROWS_AS(parse_csv(""), SchemaError);
    CHECK_THROWS_AS(parse_csv("a,a\n1,2\n"), SchemaError); // duplicate header
    CHECK_THROWS_AS(parse_csv("a,\n1,2\n"), SchemaError);  // empty header name
    CHECK_THROWS_AS(parse_csv("a,b\n1\n"), SchemaError);   // arity mismatch
    CHECK_THROWS_AS(parse_csv("a\n\"unterminated\n"), SchemaError);
    try {
        parse_csv("a,b\n1,2\n3\n");
        FAIL("expected throw");
    } catch (const SchemaError &e) {
        CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
}

TEST_CASE("csv writes and reparses to the same table") {
    DataTable t = parse_csv("n,s,ts\n1.5,\"a,\"\"b\",2007-01-02T03:04:05Z\n,plain,\n");
    DataTable back = parse_csv(to_csv(t));
    REQUIRE(back.num_rows() == t.num_rows());
    CHECK(multiset_equal(t, back, 0.0));
    CHECK(back.schema.columns[2].kind == ValueKind::Timestamp);
}
