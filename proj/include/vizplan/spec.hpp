#ifndef VIZPLAN_SPEC_HPP
#define VIZPLAN_SPEC_HPP

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vizplan/expr.hpp"
#include "vizplan/table.hpp"
#include "vizplan/timeutil.hpp"

namespace vizplan {

enum class TransformKind { Extent, Bin, Aggregate, Filter, Collect, Project, Stack, TimeUnit };

const char *transform_kind_name(TransformKind k);
std::optional<TransformKind> transform_kind_from_string(const std::string &s);

//! A parameter that is either a fixed field name or read from a signal
//! whose value is a field name (the histogram's field selector).
struct FieldParam {
    std::string field;
    std::string signal;
    bool from_signal() const { return !signal.empty(); }
};

struct SortSpec {
    std::vector<std::string> fields;
    std::vector<bool> descending; // parallel to fields
};

enum class AggOp { Count, Sum, Min, Max, Avg };
const char *agg_op_name(AggOp op);
std::optional<AggOp> agg_op_from_string(const std::string &s);

struct TransformSpec {
    TransformKind kind = TransformKind::Filter;

    FieldParam field;        // extent, bin, timeunit; stack value field
    std::string signal_out;  // extent: publishes <name>_min / <name>_max

    // bin
    double maxbins = 20;
    std::string maxbins_signal;
    enum class ExtentFrom { Literal, Signals } extent_from = ExtentFrom::Literal;
    double extent_lo = 0, extent_hi = 0;
    std::string extent_lo_signal, extent_hi_signal;

    std::vector<std::string> as; // bin [b0,b1]; stack [y0,y1]; timeunit [unit]; aggregate aliases

    // aggregate
    std::vector<std::string> groupby;
    std::vector<AggOp> agg_ops;
    std::vector<std::string> agg_fields; // empty string for count

    // filter
    std::string expr_text;
    std::shared_ptr<const ExprAst> expr;

    // collect, stack
    SortSpec sort;

    // project
    std::vector<std::string> fields;
    std::vector<std::string> rename_as;

    // timeunit
    TimeUnit unit = TimeUnit::Day;
};

struct DataEntry {
    std::string name;
    std::string source; // a table name or the name of an earlier entry
    std::vector<TransformSpec> transforms;
};

enum class BindKind { Slider, Dropdown, Brush, Click, PanZoom };

struct SignalBind {
    BindKind kind = BindKind::Slider;
    double min = 0, max = 0, step = 0;     // slider
    std::string options_field;             // dropdown over field values; click field
    bool options_are_field_names = false;  // dropdown over field names
    std::vector<std::string> candidates;   // allowed field names for the above
    std::string view;                      // brush / panzoom / click target view
    std::string field, x_field, y_field;   // brush field; panzoom axes
};

//! One declared signal. An interaction signal expands to one or more runtime
//! scalars: plain kinds use the bare name, brush adds _lo/_hi, panzoom adds
//! _x_lo/_x_hi/_y_lo/_y_hi. Derived signals recompute from an expression.
struct SignalSpec {
    std::string name;
    std::optional<SignalBind> bind;
    std::string expr_text; // derived signals only
    std::shared_ptr<const ExprAst> expr;
    std::map<std::string, Value> init; // full scalar name -> initial value

    std::vector<std::string> scalar_names() const;
};

struct TableSource {
    std::string name;
    std::string csv_path; // empty when the table lives in the backend catalog
};

struct ViewRef {
    std::string name;
    std::string entry;
};

struct DashboardSpec {
    std::vector<TableSource> tables;
    std::vector<SignalSpec> signals;
    std::vector<DataEntry> data;
    std::vector<ViewRef> views;

    int find_entry(const std::string &name) const;
    int find_table(const std::string &name) const;
};

//! Parse and structurally validate a dashboard document. Reference targets
//! must precede their uses in document order; duplicate names, unknown
//! transform types, unknown signals and malformed shapes raise
//! ValidationError (ParseError for malformed JSON).
DashboardSpec parse_spec(const std::string &json_text);

//! Serialize back to the document format (used by template instantiation).
std::string spec_to_json(const DashboardSpec &spec);

} // namespace vizplan

#endif
