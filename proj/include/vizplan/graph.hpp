#ifndef VIZPLAN_GRAPH_HPP
#define VIZPLAN_GRAPH_HPP

#include <map>
#include <set>
#include <string>
#include <vector>

#include "vizplan/spec.hpp"
#include "vizplan/table.hpp"

namespace vizplan {

struct GraphNode {
    enum class Kind { Source, Operator };
    Kind kind = Kind::Operator;

    int table = -1;     // Source: index into spec.tables
    int entry = -1;     // Operator: index into spec.data
    int tf = -1;        // Operator: index into the entry's transform array
    int op_pos = -1;    // Operator: position in PipelineGraph::op_order

    int data_parent = -1;              // Operator: upstream node id
    std::vector<int> signal_parents;   // operators whose published scalars feed this one
    std::vector<std::string> reads_scalars;
    std::vector<std::string> publishes;

    Schema out_schema;
    double out_rows = -1; // row estimate or measurement, filled by an annotation pass
    bool preserved = false;
    std::string label; // "<entry>[i]:<kind>" for diagnostics
};

//! The dashboard compiled to a dataflow DAG. Operators appear in document
//! order, which is already topological (entries may only source earlier
//! entries, and published scalars may only be read downstream).
struct PipelineGraph {
    std::vector<GraphNode> nodes;
    std::vector<int> op_order;                   // operator node ids, document order
    std::map<std::string, int> source_node;      // table name -> node id
    std::map<std::string, int> entry_output;     // entry name -> node id
    std::map<std::string, int> scalar_publisher; // published scalar -> operator node id
    std::set<std::string> interaction_scalars;
    std::set<std::string> derived_scalars;

    int op_count() const { return static_cast<int>(op_order.size()); }
    const GraphNode &op(int pos) const { return nodes[static_cast<size_t>(op_order[static_cast<size_t>(pos)])]; }
    GraphNode &op(int pos) { return nodes[static_cast<size_t>(op_order[static_cast<size_t>(pos)])]; }

    //! Operator positions that must not run downstream of op `pos`: its data
    //! parent (when that parent is an operator) plus the publishers of every
    //! operator-published scalar it reads.
    std::vector<int> op_parent_positions(int pos) const;
};

//! Build and validate the graph. `catalog` supplies base table schemas.
//! Schema errors (unknown fields, kind mismatches) raise ValidationError.
PipelineGraph compile_graph(const DashboardSpec &spec,
                            const std::map<std::string, Schema> &catalog);

//! Flag the nodes whose results the client must hold after an evaluation:
//! outputs of view-referenced entries, outputs of entries feeding two or
//! more downstream entries, and every operator publishing a signal.
void mark_preserved(PipelineGraph &g, const DashboardSpec &spec);

} // namespace vizplan

#endif
