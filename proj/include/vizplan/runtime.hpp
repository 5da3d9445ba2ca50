#ifndef VIZPLAN_RUNTIME_HPP
#define VIZPLAN_RUNTIME_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "vizplan/engine.hpp"
#include "vizplan/graph.hpp"
#include "vizplan/plan.hpp"

namespace vizplan {

using SignalValues = std::map<std::string, Value>;

//! Work done by the most recent evaluation call. Rows are doubles so that
//! measured counts and estimates flow through the same arithmetic.
struct EvalStats {
    double client_rows = 0;   // rows produced by in-memory operators
    double transfer_rows = 0; // rows pulled across the backend boundary
    double scanned_rows = 0;  // base-table rows each backend query read
    double queries = 0;       // backend round trips

    void add(const EvalStats &o);
};

//! One live dashboard under one plan: per-node results and timestamps,
//! current signal values, and the logical clock. A state is confined to one
//! session; the executor it points at may serve many states concurrently.
//! Operator results on the server prefix stay unmaterialized unless a span
//! returns them or a client-side consumer forces a pull; a server extent
//! resolves to its input when the client does need the rows.
struct RuntimeState {
    const PipelineGraph *graph = nullptr;
    const DashboardSpec *spec = nullptr;
    QueryExecutor *backend = nullptr;

    std::vector<bool> server; // by operator position
    std::vector<VdtSpan> spans;
    SignalValues signals;
    uint64_t clock = 0;

    std::vector<std::shared_ptr<const DataTable>> outputs; // by node id
    std::vector<uint64_t> stamps;                          // by node id

    EvalStats last_stats;      // work done by the last eval_full / interaction
    std::set<int> last_active; // operator positions that call re-evaluated

    std::set<int> held_nodes; // view targets and fanout feeds, kept client-side
    std::map<std::string, double> table_rows; // base-table row counts, memoized

    //! Client-side rows of a view-referenced entry. Throws ExecError when the
    //! entry's output is not materialized.
    const DataTable &entry_rows(const std::string &entry) const;

    uint64_t stamp_of(int op_pos) const;
};

//! Signal store as of the initial render: declared init values, then derived
//! signals evaluated in document order.
SignalValues initial_signals(const DashboardSpec &spec);

//! Evaluate the whole dashboard under `plan` at logical time 1. Spans run
//! as blocking queries in document order: each server extent's min/max query
//! publishes its scalars before anything downstream reads them, table spans
//! materialize at their entry's boundary, and remaining operators run in
//! memory. `overrides` preset interaction signals before the render; an
//! unknown name raises ValidationError.
RuntimeState eval_full(const PipelineGraph &g, const DashboardSpec &spec,
                       const ExecutionPlan &plan, QueryExecutor &backend,
                       const SignalValues &overrides = {});

//! One interaction: advance the clock, set the signal, and re-evaluate
//! exactly the operators reachable from it (through data edges and published
//! scalars). Unknown signal names raise ValidationError. Results and stamps
//! of unreachable nodes are untouched.
void apply_interaction(RuntimeState &st, const std::string &scalar, const Value &value);

//! Same, for gestures that move several scalars at once (a brush sets both
//! ends of its range); one clock tick, one combined re-evaluation.
void apply_interaction(RuntimeState &st, const SignalValues &scalars);

//! Observed output rows per operator position: every materialized result,
//! client side or span returned. Feeds plan encoding when labeling real runs.
std::map<int, double> measured_cards(const RuntimeState &st);

//! Estimated output rows per operator position, without running the plan;
//! fills GraphNode::out_rows and feeds plan encoding at inference time.
//! Filters and aggregates ask the backend to estimate their rewritten
//! prefix; the other six kinds keep their input's row count. Extents inside
//! the walk do run their min/max query so downstream bin parameters resolve
//! against real bounds. Field selectors are pinned to their current signal
//! value first, so estimation prefixes rewrite even where plans cannot.
std::map<int, double> annotate_estimates(PipelineGraph &g, const DashboardSpec &spec,
                                         QueryExecutor &backend);

} // namespace vizplan

#endif
