#ifndef VIZPLAN_PLAN_HPP
#define VIZPLAN_PLAN_HPP

#include <array>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "vizplan/graph.hpp"
#include "vizplan/rewrite.hpp"

namespace vizplan {

//! Feature slots: the eight transform kinds plus the query-span pseudo-kind.
inline constexpr size_t kPlanKinds = 9;
inline constexpr size_t kSpanSlot = kPlanKinds - 1;
size_t kind_slot(TransformKind k);

//! One SERVER/CLIENT assignment over the graph's operators. `plan_id` is the
//! dense index within the enumeration order of one graph; plan 0 is always
//! the all-client assignment.
struct ExecutionPlan {
    std::vector<bool> server;
    size_t plan_id = 0;
};

//! Whether the operator can ever sit inside a query span. Field selectors
//! resolved through signals and stacks without sort keys cannot.
bool op_rewritable(const PipelineGraph &g, const DashboardSpec &spec, int pos);

//! A server set is valid when it is closed over operator ancestry: every
//! server operator's data parent (when an operator) and the publishers of
//! every operator-published scalar it reads are server too, and every server
//! operator is rewritable. Client preservation never constrains validity;
//! preserved results are materialized by the spans the plan compiles to.
bool plan_valid(const PipelineGraph &g, const DashboardSpec &spec,
                const std::vector<bool> &server);

//! Every valid plan exactly once. Order: per-entry server prefix lengths in
//! document order, earlier entries most significant, ascending, so the
//! all-client plan comes first and ids are stable. `boundary_only` keeps
//! only single-boundary cuts along the operator order (a linear-size subset
//! for large graphs; the exhaustive set is the default).
std::vector<ExecutionPlan> enumerate_plans(const PipelineGraph &g, const DashboardSpec &spec,
                                           bool boundary_only = false);

//! One query executed against the backend under a plan: either the min/max
//! summary feeding an extent's published scalars, or the batched rewrite of
//! an entry's server prefix whose rows the client must hold.
struct VdtSpan {
    std::string entry;
    std::vector<int> ops;   // non-extent operator positions the query embodies
    bool scalar = false;
    int publisher_pos = -1; // scalar form: the extent operator position
    int output_pos = -1;    // table form: operator whose table the query returns
    QueryBuilder builder;
};

//! Derive the spans a plan executes. The all-client plan yields none. A
//! fully server entry consumed only by other server prefixes does not
//! materialize; its query nests as a subquery of its consumers. Entries the
//! client must hold (view-referenced, feeding two or more entries, or
//! feeding any client-side operator) get a span of their own, and every
//! server extent gets the scalar form.
std::vector<VdtSpan> compile_plan(const PipelineGraph &g, const DashboardSpec &spec,
                                  const std::vector<bool> &server);

//! Per-kind operator counts and output-cardinality sums for one plan.
//! Operators inside query spans do not count as client kinds; each span
//! counts once under the span slot. `normalized` holds the min-max scaled
//! cardinality sums once a Normalizer ran over the candidate set.
struct PlanVector {
    std::array<double, kPlanKinds> counts{};
    std::array<double, kPlanKinds> card_sums{};
    std::array<double, kPlanKinds> normalized{};

    std::array<double, 2 * kPlanKinds> features() const;
};

//! Min-max ranges fitted over the candidate plans of ONE specification;
//! vectors only separate candidates of the same dashboard. A degenerate
//! feature (min = max) scales to 0; values clamp into [0, 1].
struct Normalizer {
    std::array<std::pair<double, double>, kPlanKinds> range{};

    static Normalizer fit(const std::vector<PlanVector> &candidates);
    void apply(PlanVector &v) const;
};

//! Vectorize a plan. `cards` maps operator position to output rows (estimate
//! or measurement); a missing active operator raises ExecError. `active`
//! restricts the tally to a subset of operators (the ones an interaction
//! re-evaluated); a span counts when any operator it embodies is active.
PlanVector encode_plan(const PipelineGraph &g, const DashboardSpec &spec,
                       const std::vector<bool> &server,
                       const std::map<int, double> &cards,
                       const std::set<int> *active = nullptr);

//! Stable text form: plan id, one operator line per node with its side,
//! then each span's SQL. Used for golden comparisons.
std::string plan_to_text(const PipelineGraph &g, const DashboardSpec &spec,
                         const ExecutionPlan &p);

} // namespace vizplan

#endif
