#include "vizplan/graph.hpp"

#include <algorithm>

#include "vizplan/errors.hpp"
#include "vizplan/transforms.hpp"

namespace vizplan {

std::vector<int> PipelineGraph::op_parent_positions(int pos) const {
    const GraphNode &n = op(pos);
    std::vector<int> out;
    if (n.data_parent >= 0 && nodes[static_cast<size_t>(n.data_parent)].kind == GraphNode::Kind::Operator)
        out.push_back(nodes[static_cast<size_t>(n.data_parent)].op_pos);
    for (int p : n.signal_parents) out.push_back(nodes[static_cast<size_t>(p)].op_pos);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

void collect_transform_scalars(const TransformSpec &t, std::vector<std::string> &out) {
    if (t.field.from_signal()) out.push_back(t.field.signal);
    if (t.kind == TransformKind::Bin) {
        if (!t.maxbins_signal.empty()) out.push_back(t.maxbins_signal);
        if (t.extent_from == TransformSpec::ExtentFrom::Signals) {
            out.push_back(t.extent_lo_signal);
            out.push_back(t.extent_hi_signal);
        }
    }
    if (t.kind == TransformKind::Filter) collect_signal_refs(*t.expr, out);
}

} // namespace

PipelineGraph compile_graph(const DashboardSpec &spec,
                            const std::map<std::string, Schema> &catalog) {
    PipelineGraph g;

    for (size_t ti = 0; ti < spec.tables.size(); ++ti) {
        auto it = catalog.find(spec.tables[ti].name);
        if (it == catalog.end())
            throw ValidationError("no schema for table '" + spec.tables[ti].name + "'");
        GraphNode n;
        n.kind = GraphNode::Kind::Source;
        n.table = static_cast<int>(ti);
        n.out_schema = it->second;
        n.label = spec.tables[ti].name;
        g.source_node[spec.tables[ti].name] = static_cast<int>(g.nodes.size());
        g.nodes.push_back(std::move(n));
    }

    for (const auto &s : spec.signals) {
        auto names = s.scalar_names();
        if (s.expr) g.derived_scalars.insert(names.begin(), names.end());
        else g.interaction_scalars.insert(names.begin(), names.end());
    }

    for (size_t ei = 0; ei < spec.data.size(); ++ei) {
        const DataEntry &e = spec.data[ei];
        int cur;
        if (auto it = g.source_node.find(e.source); it != g.source_node.end()) cur = it->second;
        else cur = g.entry_output.at(e.source);

        for (size_t ti = 0; ti < e.transforms.size(); ++ti) {
            const TransformSpec &t = e.transforms[ti];
            const std::string where =
                "entry '" + e.name + "' transform[" + std::to_string(ti) + "]";
            GraphNode n;
            n.kind = GraphNode::Kind::Operator;
            n.entry = static_cast<int>(ei);
            n.tf = static_cast<int>(ti);
            n.data_parent = cur;
            n.out_schema = infer_transform_schema(
                t, g.nodes[static_cast<size_t>(cur)].out_schema, spec, where);
            n.label = e.name + "[" + std::to_string(ti) + "]:" + transform_kind_name(t.kind);

            collect_transform_scalars(t, n.reads_scalars);
            std::sort(n.reads_scalars.begin(), n.reads_scalars.end());
            n.reads_scalars.erase(std::unique(n.reads_scalars.begin(), n.reads_scalars.end()),
                                  n.reads_scalars.end());
            for (const auto &scalar : n.reads_scalars) {
                auto pub = g.scalar_publisher.find(scalar);
                if (pub != g.scalar_publisher.end()) n.signal_parents.push_back(pub->second);
                else if (!g.interaction_scalars.count(scalar) && !g.derived_scalars.count(scalar))
                    throw ValidationError(where + ": unknown signal '" + scalar + "'");
            }

            if (t.kind == TransformKind::Extent && !t.signal_out.empty()) {
                n.publishes = {t.signal_out + "_min", t.signal_out + "_max"};
            }

            const int id = static_cast<int>(g.nodes.size());
            n.op_pos = static_cast<int>(g.op_order.size());
            for (const auto &scalar : n.publishes) g.scalar_publisher[scalar] = id;
            g.nodes.push_back(std::move(n));
            g.op_order.push_back(id);
            cur = id;
        }
        g.entry_output[e.name] = cur;
    }

    // Interaction targets exist only once entry schemas are known.
    for (const auto &s : spec.signals) {
        if (!s.bind || s.bind->view.empty()) continue;
        const ViewRef *view = nullptr;
        for (const auto &v : spec.views)
            if (v.name == s.bind->view) view = &v;
        if (!view) throw ValidationError("signal '" + s.name + "': unknown view");
        const Schema &vs = g.nodes[static_cast<size_t>(g.entry_output.at(view->entry))].out_schema;
        auto check = [&](const std::string &f) {
            if (!f.empty() && !vs.has(f))
                throw ValidationError("signal '" + s.name + "': view '" + view->name +
                                      "' has no field '" + f + "'");
        };
        check(s.bind->field);
        check(s.bind->x_field);
        check(s.bind->y_field);
        if (s.bind->kind == BindKind::Click) check(s.bind->options_field);
    }
    return g;
}

void mark_preserved(PipelineGraph &g, const DashboardSpec &spec) {
    for (auto &n : g.nodes) n.preserved = false;

    for (const auto &v : spec.views)
        g.nodes[static_cast<size_t>(g.entry_output.at(v.entry))].preserved = true;

    std::map<std::string, int> fanout;
    for (const auto &e : spec.data) fanout[e.source]++;
    for (const auto &e : spec.data)
        if (fanout[e.name] >= 2)
            g.nodes[static_cast<size_t>(g.entry_output.at(e.name))].preserved = true;

    for (auto &n : g.nodes)
        if (!n.publishes.empty()) n.preserved = true;
}

} // namespace vizplan
