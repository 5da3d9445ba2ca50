#ifndef VIZPLAN_TRANSFORMS_HPP
#define VIZPLAN_TRANSFORMS_HPP

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "vizplan/spec.hpp"
#include "vizplan/table.hpp"

namespace vizplan {

using SignalGetter = std::function<Value(const std::string &)>;

//! Bin step selection: divide the span into roughly maxbins buckets whose
//! width is 1, 2, 5 or 10 times a power of ten. Degenerate spans get step 1.
double nice_step(double lo, double hi, double maxbins);
double bin_start(double v, double lo, double step);

//! Field-name indirection resolves through a signal holding a Text value.
std::string resolve_field(const FieldParam &p, const SignalGetter &signals);

//! Bin parameters after signal resolution. Null extent bounds (an extent
//! published over an empty table) resolve to 0; the rows they would place
//! don't exist, so any finite anchor works and both execution paths agree.
struct BinParams {
    double lo = 0, hi = 0, maxbins = 0, step = 1;
};
BinParams resolve_bin_params(const TransformSpec &t, const SignalGetter &signals);

//! Output schema of one transform applied to `in`. Field existence and kind
//! requirements are checked here; violations raise ValidationError. The spec
//! is consulted for field-selector signals (their candidate lists pin the
//! column kind statically).
Schema infer_transform_schema(const TransformSpec &t, const Schema &in,
                              const DashboardSpec &spec, const std::string &where);

struct TransformResult {
    DataTable table;
    // extent publishes <signal>_min / <signal>_max
    std::vector<std::pair<std::string, Value>> published;
};

//! One transform evaluated in memory. Semantics the relational path must
//! reproduce exactly: group keys keep first-seen order, sorts are stable with
//! Null ordered lowest, avg/sum/min/max skip Nulls, count counts rows, an
//! ungrouped aggregate over no rows yields a single row (count 0, rest Null),
//! stack accumulates in sort order per partition but emits rows in input
//! order, and a Null stack value contributes zero.
TransformResult apply_transform(const TransformSpec &t, const DataTable &in,
                                const SignalGetter &signals);

} // namespace vizplan

#endif
