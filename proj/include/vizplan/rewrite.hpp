#ifndef VIZPLAN_REWRITE_HPP
#define VIZPLAN_REWRITE_HPP

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vizplan/spec.hpp"
#include "vizplan/sql.hpp"
#include "vizplan/transforms.hpp"

namespace vizplan {

//! How a :hole gets its value before the query runs. Signal holes read one
//! scalar by name. Bin holes carry the binning transform whose extent and
//! maxbins parameters (literal or signal driven) yield the anchor and the
//! nice step; the step is computed on the client and spliced into the text.
struct HoleSpec {
    enum class Origin { Signal, UpstreamScalar };
    enum class Part { Step, Min };

    Origin origin = Origin::Signal;
    std::string signal;                       // Origin::Signal
    Part part = Part::Step;                   // Origin::UpstreamScalar
    std::shared_ptr<const TransformSpec> bin; // Origin::UpstreamScalar
};

//! A query with unfilled :holes plus the recipe for filling each one and the
//! schema the filled query yields. Immutable once built.
struct QueryBuilder {
    SqlQuery query;
    std::map<std::string, HoleSpec> holes;
    Schema produces;
    bool scalar = false; // min/max summary form: one row, columns min, max

    std::string text() const { return to_sql(query); }
};

//! Resolve every hole against current signal values and return the runnable
//! query. Signal holes read their scalar; bin holes resolve the bin's
//! parameters and splice the anchor or step.
SqlQuery fill_builder(const QueryBuilder &b, const SignalGetter &signals);

//! Where a span reads its rows from: a base table, or the query of an
//! already-rewritten upstream span (nested as a subquery). `holes` carries
//! the upstream builder's holes so they stay attached to the nested text.
struct SpanSource {
    std::string table;
    std::shared_ptr<const SqlQuery> sub;
    Schema schema;
    std::map<std::string, HoleSpec> holes;

    static SpanSource base(std::string name, Schema s);
    static SpanSource nested(const QueryBuilder &upstream);
};

//! Translate a prefix of one entry's transform chain into a single nested
//! query. Returns nothing when the span cannot be expressed in the emitted
//! dialect (today: a field chosen through a signal at runtime); the caller
//! falls back to running the span natively.
//!
//! A span holding exactly one extent yields the scalar min/max summary form.
//! In longer spans an extent contributes nothing (its table output is its
//! input); callers split extents into their own scalar queries.
//!
//! `published` names the operator-published scalars, which classifies each
//! signal-driven hole's origin.
std::optional<QueryBuilder> rewrite_span(const std::vector<TransformSpec> &span,
                                         const SpanSource &source,
                                         const DashboardSpec &spec,
                                         const std::set<std::string> &published);

//! Merge subqueries upward where that cannot change results: a parent that
//! only filters or projects absorbs a plain subquery, and a pure projection
//! collapses into the select list below it. Applied bottom-up to a fixpoint.
SqlQuery flatten(const SqlQuery &q);
std::string flatten_sql(const std::string &text);

} // namespace vizplan

#endif
