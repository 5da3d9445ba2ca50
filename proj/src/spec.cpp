#include "vizplan/spec.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

namespace vizplan {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

const char *transform_kind_name(TransformKind k) {
    switch (k) {
    case TransformKind::Extent: return "extent";
    case TransformKind::Bin: return "bin";
    case TransformKind::Aggregate: return "aggregate";
    case TransformKind::Filter: return "filter";
    case TransformKind::Collect: return "collect";
    case TransformKind::Project: return "project";
    case TransformKind::Stack: return "stack";
    case TransformKind::TimeUnit: return "timeunit";
    }
    return "?";
}

std::optional<TransformKind> transform_kind_from_string(const std::string &s) {
    static const std::pair<const char *, TransformKind> table[] = {
        {"extent", TransformKind::Extent},     {"bin", TransformKind::Bin},
        {"aggregate", TransformKind::Aggregate}, {"filter", TransformKind::Filter},
        {"collect", TransformKind::Collect},   {"project", TransformKind::Project},
        {"stack", TransformKind::Stack},       {"timeunit", TransformKind::TimeUnit},
    };
    for (auto &[name, kind] : table)
        if (s == name) return kind;
    return std::nullopt;
}

const char *agg_op_name(AggOp op) {
    switch (op) {
    case AggOp::Count: return "count";
    case AggOp::Sum: return "sum";
    case AggOp::Min: return "min";
    case AggOp::Max: return "max";
    case AggOp::Avg: return "avg";
    }
    return "?";
}

std::optional<AggOp> agg_op_from_string(const std::string &s) {
    if (s == "count") return AggOp::Count;
    if (s == "sum") return AggOp::Sum;
    if (s == "min") return AggOp::Min;
    if (s == "max") return AggOp::Max;
    if (s == "avg") return AggOp::Avg;
    return std::nullopt;
}

std::vector<std::string> SignalSpec::scalar_names() const {
    if (!bind) return {name};
    switch (bind->kind) {
    case BindKind::Brush: return {name + "_lo", name + "_hi"};
    case BindKind::PanZoom:
        return {name + "_x_lo", name + "_x_hi", name + "_y_lo", name + "_y_hi"};
    default: return {name};
    }
}

int DashboardSpec::find_entry(const std::string &name) const {
    for (size_t i = 0; i < data.size(); ++i)
        if (data[i].name == name) return static_cast<int>(i);
    return -1;
}

int DashboardSpec::find_table(const std::string &name) const {
    for (size_t i = 0; i < tables.size(); ++i)
        if (tables[i].name == name) return static_cast<int>(i);
    return -1;
}

namespace {

[[noreturn]] void invalid(const std::string &msg) { throw ValidationError(msg); }

Value value_from_json(const json &j, const std::string &where) {
    if (j.is_null()) return Value::null();
    if (j.is_boolean()) return Value::boolean(j.get<bool>());
    if (j.is_number()) return Value::number(j.get<double>());
    if (j.is_string()) return Value::text(j.get<std::string>());
    if (j.is_object() && j.contains("timestamp") && j["timestamp"].is_string()) {
        auto ts = parse_iso8601(j["timestamp"].get<std::string>());
        if (!ts) invalid(where + ": bad timestamp literal '" +
                         j["timestamp"].get<std::string>() + "'");
        return Value::timestamp(*ts);
    }
    invalid(where + ": unsupported value shape");
}

ordered_json value_to_json(const Value &v) {
    switch (v.kind()) {
    case ValueKind::Null: return nullptr;
    case ValueKind::Bool: return v.as_bool();
    case ValueKind::Number: return v.as_number();
    case ValueKind::Text: return v.as_text();
    case ValueKind::Timestamp: return ordered_json{{"timestamp", format_iso8601(v.as_timestamp())}};
    }
    return nullptr;
}

std::string require_string(const json &j, const char *key, const std::string &where) {
    if (!j.contains(key) || !j[key].is_string() || j[key].get<std::string>().empty())
        invalid(where + ": missing or empty '" + std::string(key) + "'");
    return j[key].get<std::string>();
}

std::vector<std::string> string_array(const json &j, const char *key, const std::string &where) {
    if (!j.contains(key) || !j[key].is_array()) invalid(where + ": '" + key + "' must be an array");
    std::vector<std::string> out;
    for (const auto &e : j[key]) {
        if (!e.is_string()) invalid(where + ": '" + key + "' entries must be strings");
        out.push_back(e.get<std::string>());
    }
    return out;
}

//! A field slot is either "name" or {"signal": "sig"}.
FieldParam field_param(const json &j, const std::string &where) {
    FieldParam p;
    if (j.is_string()) {
        p.field = j.get<std::string>();
        if (p.field.empty()) invalid(where + ": empty field name");
        return p;
    }
    if (j.is_object() && j.contains("signal") && j["signal"].is_string()) {
        p.signal = j["signal"].get<std::string>();
        return p;
    }
    invalid(where + ": field must be a name or {\"signal\": ...}");
}

SortSpec parse_sort(const json &j, const std::string &where) {
    SortSpec s;
    s.fields = string_array(j, "field", where);
    if (s.fields.empty()) invalid(where + ": sort needs at least one field");
    if (j.contains("order")) {
        auto orders = string_array(j, "order", where);
        if (orders.size() != s.fields.size())
            invalid(where + ": sort order list must match field list");
        for (const auto &o : orders) {
            if (o != "ascending" && o != "descending")
                invalid(where + ": sort order must be ascending or descending");
            s.descending.push_back(o == "descending");
        }
    } else {
        s.descending.assign(s.fields.size(), false);
    }
    return s;
}

struct ScalarRegistry {
    std::set<std::string> names;

    void declare(const std::string &n, const std::string &where) {
        if (!names.insert(n).second) invalid(where + ": duplicate signal scalar '" + n + "'");
    }
    void check(const std::string &n, const std::string &where) const {
        if (!names.count(n))
            invalid(where + ": reference to undeclared signal '" + n + "'");
    }
};

TransformSpec parse_transform(const json &j, const std::string &where, ScalarRegistry &scalars) {
    if (!j.is_object()) invalid(where + ": transform must be an object");
    const std::string type = require_string(j, "type", where);
    auto kind = transform_kind_from_string(type);
    if (!kind) invalid(where + ": unknown transform type '" + type + "'");

    TransformSpec t;
    t.kind = *kind;
    auto check_field_param = [&](const FieldParam &p) {
        if (p.from_signal()) scalars.check(p.signal, where);
    };

    switch (t.kind) {
    case TransformKind::Extent: {
        if (!j.contains("field")) invalid(where + ": extent needs 'field'");
        t.field = field_param(j["field"], where);
        check_field_param(t.field);
        if (j.contains("signal")) {
            t.signal_out = require_string(j, "signal", where);
            scalars.declare(t.signal_out + "_min", where);
            scalars.declare(t.signal_out + "_max", where);
        }
        break;
    }
    case TransformKind::Bin: {
        if (!j.contains("field")) invalid(where + ": bin needs 'field'");
        t.field = field_param(j["field"], where);
        check_field_param(t.field);
        if (j.contains("maxbins")) {
            const auto &mb = j["maxbins"];
            if (mb.is_number()) {
                t.maxbins = mb.get<double>();
                if (t.maxbins < 1) invalid(where + ": maxbins must be >= 1");
            } else if (mb.is_object() && mb.contains("signal")) {
                t.maxbins_signal = mb["signal"].get<std::string>();
                scalars.check(t.maxbins_signal, where);
            } else {
                invalid(where + ": maxbins must be a number or {\"signal\": ...}");
            }
        }
        if (!j.contains("extent")) invalid(where + ": bin needs 'extent'");
        const auto &ex = j["extent"];
        if (ex.is_array() && ex.size() == 2 && ex[0].is_number() && ex[1].is_number()) {
            t.extent_from = TransformSpec::ExtentFrom::Literal;
            t.extent_lo = ex[0].get<double>();
            t.extent_hi = ex[1].get<double>();
        } else if (ex.is_object() && ex.contains("signal") && ex["signal"].is_string()) {
            t.extent_from = TransformSpec::ExtentFrom::Signals;
            const std::string base = ex["signal"].get<std::string>();
            t.extent_lo_signal = base + "_min";
            t.extent_hi_signal = base + "_max";
            scalars.check(t.extent_lo_signal, where);
            scalars.check(t.extent_hi_signal, where);
        } else if (ex.is_object() && ex.contains("signals") && ex["signals"].is_array() &&
                   ex["signals"].size() == 2) {
            t.extent_from = TransformSpec::ExtentFrom::Signals;
            t.extent_lo_signal = ex["signals"][0].get<std::string>();
            t.extent_hi_signal = ex["signals"][1].get<std::string>();
            scalars.check(t.extent_lo_signal, where);
            scalars.check(t.extent_hi_signal, where);
        } else {
            invalid(where + ": bin extent must be [lo, hi], {\"signal\"} or {\"signals\"}");
        }
        t.as = j.contains("as") ? string_array(j, "as", where)
                                : std::vector<std::string>{"bin0", "bin1"};
        if (t.as.size() != 2) invalid(where + ": bin 'as' needs exactly two names");
        break;
    }
    case TransformKind::Aggregate: {
        t.groupby = j.contains("groupby") ? string_array(j, "groupby", where)
                                          : std::vector<std::string>{};
        auto ops = string_array(j, "ops", where);
        if (ops.empty()) invalid(where + ": aggregate needs at least one op");
        std::vector<std::string> fields;
        if (j.contains("fields")) {
            if (!j["fields"].is_array() || j["fields"].size() != ops.size())
                invalid(where + ": aggregate 'fields' must match 'ops'");
            for (const auto &f : j["fields"]) {
                if (f.is_null()) fields.emplace_back();
                else if (f.is_string()) fields.push_back(f.get<std::string>());
                else invalid(where + ": aggregate field must be a name or null");
            }
        } else {
            fields.assign(ops.size(), std::string());
        }
        for (size_t i = 0; i < ops.size(); ++i) {
            auto op = agg_op_from_string(ops[i]);
            if (!op) invalid(where + ": unknown aggregate op '" + ops[i] + "'");
            if (*op == AggOp::Count && !fields[i].empty())
                invalid(where + ": count takes no field");
            if (*op != AggOp::Count && fields[i].empty())
                invalid(where + ": op '" + ops[i] + "' needs a field");
            t.agg_ops.push_back(*op);
        }
        t.agg_fields = std::move(fields);
        if (j.contains("as")) {
            t.as = string_array(j, "as", where);
            if (t.as.size() != t.agg_ops.size())
                invalid(where + ": aggregate 'as' must match 'ops'");
        } else {
            for (size_t i = 0; i < t.agg_ops.size(); ++i)
                t.as.push_back(t.agg_ops[i] == AggOp::Count
                                   ? "count"
                                   : std::string(agg_op_name(t.agg_ops[i])) + "_" +
                                         t.agg_fields[i]);
        }
        break;
    }
    case TransformKind::Filter: {
        t.expr_text = require_string(j, "expr", where);
        try {
            t.expr = std::shared_ptr<const ExprAst>(parse_expr(t.expr_text).release());
        } catch (const ParseError &e) {
            invalid(where + ": bad filter expression: " + e.what());
        }
        std::vector<std::string> sigs;
        collect_signal_refs(*t.expr, sigs);
        for (const auto &s : sigs) scalars.check(s, where);
        break;
    }
    case TransformKind::Collect: {
        if (!j.contains("sort")) invalid(where + ": collect needs 'sort'");
        t.sort = parse_sort(j["sort"], where);
        break;
    }
    case TransformKind::Project: {
        t.fields = string_array(j, "fields", where);
        if (t.fields.empty()) invalid(where + ": project needs at least one field");
        if (j.contains("as")) {
            t.rename_as = string_array(j, "as", where);
            if (t.rename_as.size() != t.fields.size())
                invalid(where + ": project 'as' must match 'fields'");
        } else {
            t.rename_as = t.fields;
        }
        break;
    }
    case TransformKind::Stack: {
        if (!j.contains("field")) invalid(where + ": stack needs 'field'");
        t.field = field_param(j["field"], where);
        if (t.field.from_signal()) invalid(where + ": stack field cannot come from a signal");
        t.groupby = j.contains("groupby") ? string_array(j, "groupby", where)
                                          : std::vector<std::string>{};
        if (!j.contains("sort")) invalid(where + ": stack needs 'sort'");
        t.sort = parse_sort(j["sort"], where);
        t.as = j.contains("as") ? string_array(j, "as", where)
                                : std::vector<std::string>{"y0", "y1"};
        if (t.as.size() != 2) invalid(where + ": stack 'as' needs exactly two names");
        break;
    }
    case TransformKind::TimeUnit: {
        if (!j.contains("field")) invalid(where + ": timeunit needs 'field'");
        t.field = field_param(j["field"], where);
        if (t.field.from_signal()) invalid(where + ": timeunit field cannot come from a signal");
        std::string unit = require_string(j, "unit", where);
        auto u = time_unit_from_string(unit);
        if (!u) invalid(where + ": unknown time unit '" + unit + "'");
        t.unit = *u;
        t.as = j.contains("as") ? string_array(j, "as", where)
                                : std::vector<std::string>{"unit0"};
        if (t.as.size() != 1) invalid(where + ": timeunit 'as' needs exactly one name");
        break;
    }
    }
    return t;
}

SignalSpec parse_signal(const json &j, ScalarRegistry &scalars) {
    SignalSpec s;
    s.name = require_string(j, "name", "signal");
    const std::string where = "signal '" + s.name + "'";
    const bool has_bind = j.contains("bind"), has_expr = j.contains("expr");
    if (has_bind == has_expr) invalid(where + ": exactly one of 'bind' or 'expr' required");

    if (has_expr) {
        s.expr_text = require_string(j, "expr", where);
        try {
            s.expr = std::shared_ptr<const ExprAst>(parse_expr(s.expr_text).release());
        } catch (const ParseError &e) {
            invalid(where + ": bad expression: " + e.what());
        }
        std::vector<std::string> fields;
        collect_field_refs(*s.expr, fields);
        if (!fields.empty()) invalid(where + ": derived signals cannot read datum fields");
        std::vector<std::string> refs;
        collect_signal_refs(*s.expr, refs);
        for (const auto &r : refs) scalars.check(r, where);
        scalars.declare(s.name, where);
        return s;
    }

    const auto &b = j["bind"];
    if (!b.is_object()) invalid(where + ": 'bind' must be an object");
    const std::string kind = require_string(b, "kind", where);
    SignalBind bind;
    if (kind == "slider") {
        bind.kind = BindKind::Slider;
        if (!b.contains("min") || !b.contains("max") || !b.contains("step"))
            invalid(where + ": slider needs min/max/step");
        bind.min = b["min"].get<double>();
        bind.max = b["max"].get<double>();
        bind.step = b["step"].get<double>();
        if (!(bind.min <= bind.max) || bind.step <= 0)
            invalid(where + ": slider range must be ordered with positive step");
    } else if (kind == "dropdown") {
        bind.kind = BindKind::Dropdown;
        if (b.contains("options_field")) {
            bind.options_field = require_string(b, "options_field", where);
        } else if (b.contains("field_name_candidates")) {
            bind.options_are_field_names = true;
            bind.candidates = string_array(b, "field_name_candidates", where);
            if (bind.candidates.empty()) invalid(where + ": empty candidate list");
        } else {
            invalid(where + ": dropdown needs options_field or field_name_candidates");
        }
    } else if (kind == "click") {
        bind.kind = BindKind::Click;
        bind.options_field = require_string(b, "field", where);
        if (b.contains("view")) bind.view = b["view"].get<std::string>();
    } else if (kind == "brush") {
        bind.kind = BindKind::Brush;
        bind.view = require_string(b, "view", where);
        bind.field = require_string(b, "field", where);
    } else if (kind == "panzoom") {
        bind.kind = BindKind::PanZoom;
        bind.view = require_string(b, "view", where);
        bind.x_field = require_string(b, "x_field", where);
        bind.y_field = require_string(b, "y_field", where);
    } else {
        invalid(where + ": unknown bind kind '" + kind + "'");
    }
    s.bind = bind;
    for (const auto &scalar : s.scalar_names()) scalars.declare(scalar, where);

    if (j.contains("init")) {
        const auto &init = j["init"];
        if (s.scalar_names().size() == 1) {
            s.init[s.name] = value_from_json(init, where);
        } else {
            if (!init.is_object()) invalid(where + ": init must map scalar suffixes");
            for (const auto &[k, v] : init.items())
                s.init[s.name + "_" + k] = value_from_json(v, where);
        }
    }
    for (const auto &[k, v] : s.init) {
        const auto names = s.scalar_names();
        if (std::find(names.begin(), names.end(), k) == names.end())
            invalid(where + ": init key '" + k + "' does not match a scalar");
        (void)v;
    }
    return s;
}

} // namespace

DashboardSpec parse_spec(const std::string &json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error &e) {
        throw ParseError(std::string("invalid JSON: ") + e.what(), e.byte);
    }
    if (!doc.is_object()) invalid("top level must be an object");

    DashboardSpec spec;
    ScalarRegistry scalars;

    if (!doc.contains("tables") || !doc["tables"].is_object() || doc["tables"].empty())
        invalid("'tables' must be a non-empty object");
    for (const auto &[name, src] : doc["tables"].items()) {
        TableSource t;
        t.name = name;
        if (src.is_object() && src.contains("path")) t.csv_path = src["path"].get<std::string>();
        spec.tables.push_back(std::move(t));
    }

    if (doc.contains("signals")) {
        if (!doc["signals"].is_array()) invalid("'signals' must be an array");
        for (const auto &j : doc["signals"]) {
            SignalSpec s = parse_signal(j, scalars);
            for (const auto &other : spec.signals)
                if (other.name == s.name) invalid("duplicate signal '" + s.name + "'");
            spec.signals.push_back(std::move(s));
        }
    }

    if (!doc.contains("data") || !doc["data"].is_array() || doc["data"].empty())
        invalid("'data' must be a non-empty array");
    for (const auto &j : doc["data"]) {
        DataEntry e;
        e.name = require_string(j, "name", "data entry");
        const std::string where = "entry '" + e.name + "'";
        if (spec.find_table(e.name) >= 0 || spec.find_entry(e.name) >= 0)
            invalid(where + ": name already in use");
        e.source = require_string(j, "source", where);
        if (spec.find_table(e.source) < 0 && spec.find_entry(e.source) < 0)
            invalid(where + ": source '" + e.source +
                    "' is not a table or earlier entry");
        if (j.contains("transform")) {
            if (!j["transform"].is_array()) invalid(where + ": 'transform' must be an array");
            size_t idx = 0;
            for (const auto &tj : j["transform"]) {
                e.transforms.push_back(parse_transform(
                    tj, where + " transform[" + std::to_string(idx) + "]", scalars));
                ++idx;
            }
        }
        spec.data.push_back(std::move(e));
    }

    if (doc.contains("views")) {
        if (!doc["views"].is_array()) invalid("'views' must be an array");
        for (const auto &j : doc["views"]) {
            ViewRef v;
            v.name = require_string(j, "name", "view");
            v.entry = require_string(j, "entry", "view '" + v.name + "'");
            if (spec.find_entry(v.entry) < 0)
                invalid("view '" + v.name + "': unknown entry '" + v.entry + "'");
            for (const auto &other : spec.views)
                if (other.name == v.name) invalid("duplicate view '" + v.name + "'");
            spec.views.push_back(std::move(v));
        }
    }

    // Bind targets can only be checked once views are known.
    for (const auto &s : spec.signals) {
        if (!s.bind || s.bind->view.empty()) continue;
        bool found = false;
        for (const auto &v : spec.views) found |= v.name == s.bind->view;
        if (!found)
            invalid("signal '" + s.name + "': unknown view '" + s.bind->view + "'");
    }
    return spec;
}

namespace {

ordered_json sort_to_json(const SortSpec &s) {
    ordered_json j;
    j["field"] = s.fields;
    ordered_json orders = ordered_json::array();
    for (bool d : s.descending) orders.push_back(d ? "descending" : "ascending");
    j["order"] = orders;
    return j;
}

ordered_json field_param_to_json(const FieldParam &p) {
    if (p.from_signal()) return ordered_json{{"signal", p.signal}};
    return p.field;
}

ordered_json transform_to_json(const TransformSpec &t) {
    ordered_json j;
    j["type"] = transform_kind_name(t.kind);
    switch (t.kind) {
    case TransformKind::Extent:
        j["field"] = field_param_to_json(t.field);
        if (!t.signal_out.empty()) j["signal"] = t.signal_out;
        break;
    case TransformKind::Bin:
        j["field"] = field_param_to_json(t.field);
        if (!t.maxbins_signal.empty()) j["maxbins"] = ordered_json{{"signal", t.maxbins_signal}};
        else j["maxbins"] = t.maxbins;
        if (t.extent_from == TransformSpec::ExtentFrom::Literal)
            j["extent"] = ordered_json::array({t.extent_lo, t.extent_hi});
        else
            j["extent"] =
                ordered_json{{"signals", ordered_json::array({t.extent_lo_signal, t.extent_hi_signal})}};
        j["as"] = t.as;
        break;
    case TransformKind::Aggregate: {
        j["groupby"] = t.groupby;
        ordered_json ops = ordered_json::array(), fields = ordered_json::array();
        for (size_t i = 0; i < t.agg_ops.size(); ++i) {
            ops.push_back(agg_op_name(t.agg_ops[i]));
            if (t.agg_fields[i].empty()) fields.push_back(nullptr);
            else fields.push_back(t.agg_fields[i]);
        }
        j["ops"] = ops;
        j["fields"] = fields;
        j["as"] = t.as;
        break;
    }
    case TransformKind::Filter:
        j["expr"] = t.expr_text;
        break;
    case TransformKind::Collect:
        j["sort"] = sort_to_json(t.sort);
        break;
    case TransformKind::Project:
        j["fields"] = t.fields;
        j["as"] = t.rename_as;
        break;
    case TransformKind::Stack:
        j["field"] = field_param_to_json(t.field);
        j["groupby"] = t.groupby;
        j["sort"] = sort_to_json(t.sort);
        j["as"] = t.as;
        break;
    case TransformKind::TimeUnit:
        j["field"] = field_param_to_json(t.field);
        j["unit"] = time_unit_name(t.unit);
        j["as"] = t.as;
        break;
    }
    return j;
}

} // namespace

std::string spec_to_json(const DashboardSpec &spec) {
    ordered_json doc;
    ordered_json tables = ordered_json::object();
    for (const auto &t : spec.tables) {
        ordered_json src = ordered_json::object();
        if (!t.csv_path.empty()) src["path"] = t.csv_path;
        tables[t.name] = src;
    }
    doc["tables"] = tables;

    ordered_json signals = ordered_json::array();
    for (const auto &s : spec.signals) {
        ordered_json j;
        j["name"] = s.name;
        if (s.expr) {
            j["expr"] = s.expr_text;
        } else if (s.bind) {
            ordered_json b;
            switch (s.bind->kind) {
            case BindKind::Slider:
                b["kind"] = "slider";
                b["min"] = s.bind->min;
                b["max"] = s.bind->max;
                b["step"] = s.bind->step;
                break;
            case BindKind::Dropdown:
                b["kind"] = "dropdown";
                if (s.bind->options_are_field_names)
                    b["field_name_candidates"] = s.bind->candidates;
                else
                    b["options_field"] = s.bind->options_field;
                break;
            case BindKind::Click:
                b["kind"] = "click";
                b["field"] = s.bind->options_field;
                if (!s.bind->view.empty()) b["view"] = s.bind->view;
                break;
            case BindKind::Brush:
                b["kind"] = "brush";
                b["view"] = s.bind->view;
                b["field"] = s.bind->field;
                break;
            case BindKind::PanZoom:
                b["kind"] = "panzoom";
                b["view"] = s.bind->view;
                b["x_field"] = s.bind->x_field;
                b["y_field"] = s.bind->y_field;
                break;
            }
            j["bind"] = b;
        }
        if (!s.init.empty()) {
            if (s.scalar_names().size() == 1) {
                j["init"] = value_to_json(s.init.begin()->second);
            } else {
                ordered_json init = ordered_json::object();
                for (const auto &[k, v] : s.init)
                    init[k.substr(s.name.size() + 1)] = value_to_json(v);
                j["init"] = init;
            }
        }
        signals.push_back(j);
    }
    if (!signals.empty()) doc["signals"] = signals;

    ordered_json data = ordered_json::array();
    for (const auto &e : spec.data) {
        ordered_json j;
        j["name"] = e.name;
        j["source"] = e.source;
        ordered_json ts = ordered_json::array();
        for (const auto &t : e.transforms) ts.push_back(transform_to_json(t));
        j["transform"] = ts;
        data.push_back(j);
    }
    doc["data"] = data;

    ordered_json views = ordered_json::array();
    for (const auto &v : spec.views) views.push_back(ordered_json{{"name", v.name}, {"entry", v.entry}});
    if (!views.empty()) doc["views"] = views;

    return doc.dump(2);
}

} // namespace vizplan
