#include "flowkit/render.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "flowkit/validate.hpp"

namespace flowkit {

namespace {

std::string stage_label(Stage s) {
    std::string name = stage_name(s);
    name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
    return name;
}

std::string quoted(const std::string& s) { return '"' + s + '"'; }

struct GraphPrinter {
    const Model& m;
    std::ostringstream out;

    void indent(int depth) {
        for (int i = 0; i < depth; ++i) out << "  ";
    }

    bool needs_gate_node(SphereId id) const {
        for (const auto& t : m.triggers)
            if ((t.effect.kind == EffectKind::open_gate ||
                 t.effect.kind == EffectKind::close_gate) &&
                t.effect.sphere == id)
                return true;
        return false;
    }

    void print_flowsystem(FlowsystemId id, int depth) {
        const Flowsystem& fs = m.flowsystems[id];
        std::string path = m.flowsystem_path(id);
        indent(depth);
        out << "subgraph " << quoted("cluster_" + path) << " {\n";
        indent(depth + 1);
        out << "label=" << quoted(fs.name + " : " + m.kinds[fs.kind].name) << ";\n";
        if (m.kinds[fs.kind].category == KindCategory::state) {
            indent(depth + 1);
            out << "peripheries=2;\n";
        }
        for (Stage s : all_stages) {
            if (!fs.stages.count(s)) continue;
            std::string label = stage_label(s);
            if (fs.receive_sugar && (s == Stage::arrive || s == Stage::accept))
                label += " [receive]";
            indent(depth + 1);
            out << quoted(m.stage_path(id, s)) << " [label=" << quoted(label) << "];\n";
        }
        // intra arcs, sorted for byte determinism
        std::vector<IntraArc> arcs = fs.intra_arcs;
        std::sort(arcs.begin(), arcs.end(), [](const IntraArc& a, const IntraArc& b) {
            if (a.from != b.from) return static_cast<int>(a.from) < static_cast<int>(b.from);
            return static_cast<int>(a.to) < static_cast<int>(b.to);
        });
        for (const auto& arc : arcs) {
            indent(depth + 1);
            out << quoted(m.stage_path(id, arc.from)) << " -> " << quoted(m.stage_path(id, arc.to))
                << ";\n";
        }
        indent(depth);
        out << "}\n";
    }

    void print_sphere(SphereId id, int depth) {
        const Sphere& s = m.spheres[id];
        std::string path = m.sphere_path(id);
        indent(depth);
        out << "subgraph " << quoted("cluster_" + path) << " {\n";
        indent(depth + 1);
        out << "label=" << quoted(s.name) << ";\n";
        if (needs_gate_node(id)) {
            indent(depth + 1);
            out << quoted(path + ".gate") << " [label=\"gate\", shape=circle];\n";
        }
        auto subs = s.subspheres;
        std::stable_sort(subs.begin(), subs.end(), [&](SphereId a, SphereId b) {
            return m.spheres[a].name < m.spheres[b].name;
        });
        for (SphereId sub : subs) print_sphere(sub, depth + 1);
        auto fss = s.flowsystems;
        std::stable_sort(fss.begin(), fss.end(), [&](FlowsystemId a, FlowsystemId b) {
            return m.flowsystems[a].name < m.flowsystems[b].name;
        });
        for (FlowsystemId fs : fss) print_flowsystem(fs, depth + 1);
        // timers owned by this sphere
        std::vector<TimerId> timers;
        for (TimerId t = 0; t < m.timers.size(); ++t)
            if (m.timers[t].owner == id) timers.push_back(t);
        std::stable_sort(timers.begin(), timers.end(), [&](TimerId a, TimerId b) {
            return m.timers[a].name < m.timers[b].name;
        });
        for (TimerId t : timers) {
            indent(depth + 1);
            out << quoted(m.timer_path(t)) << " [label=" << quoted("timer " + m.timers[t].name)
                << ", shape=diamond];\n";
        }
        indent(depth);
        out << "}\n";
    }

    std::string trigger_source_node(const TriggerSource& s) const {
        if (s.kind == TriggerSource::Kind::timer) return m.timer_path(s.timer);
        return m.stage_path(s.fs, s.stage);
    }

    std::string trigger_target_node(const TriggerEffect& e) const {
        switch (e.kind) {
            case EffectKind::inject: return m.stage_path(e.inject_fs, e.inject_stage);
            case EffectKind::start_timer: return m.timer_path(e.timer);
            default: return m.sphere_path(e.sphere) + ".gate";
        }
    }

    std::string result() {
        out << "digraph model {\n";
        out << "  compound=true;\n";
        out << "  node [shape=box];\n";
        auto roots = m.roots;
        std::stable_sort(roots.begin(), roots.end(), [&](SphereId a, SphereId b) {
            return m.spheres[a].name < m.spheres[b].name;
        });
        for (SphereId r : roots) print_sphere(r, 1);

        // solid flow edges across flowsystems, sorted by path
        std::vector<std::pair<std::string, std::string>> flow_edges;
        for (const auto& f : m.flows)
            flow_edges.emplace_back(m.stage_path(f.from, f.from_stage),
                                    m.stage_path(f.to, f.to_stage));
        std::sort(flow_edges.begin(), flow_edges.end());
        for (const auto& [from, to] : flow_edges)
            out << "  " << quoted(from) << " -> " << quoted(to) << ";\n";

        // dashed trigger edges, one per source, sorted by (source, target)
        std::vector<std::pair<std::string, std::string>> dashed;
        for (const auto& t : m.triggers)
            for (const auto& s : t.sources)
                dashed.emplace_back(trigger_source_node(s), trigger_target_node(t.effect));
        std::sort(dashed.begin(), dashed.end());
        for (const auto& [from, to] : dashed)
            out << "  " << quoted(from) << " -> " << quoted(to) << " [style=dashed];\n";

        out << "}\n";
        return out.str();
    }
};

std::string top_segment(const std::string& path) {
    auto dot = path.find('.');
    return dot == std::string::npos ? path : path.substr(0, dot);
}

}  // namespace

std::string render_graph(const Model& model) {
    auto diags = validate(model);
    if (has_errors(diags))
        throw RenderError("model has validation errors; fix them before rendering");
    GraphPrinter p{model};
    return p.result();
}

std::string render_msc(const Trace& trace) {
    std::ostringstream out;
    out << "msc " << trace.scenario << '\n';
    for (const auto& e : trace.events) {
        if (e.kind != EventKind::channel_crossed && e.kind != EventKind::channel_dropped)
            continue;
        std::string from = top_segment(e.from);
        std::string to = top_segment(e.to);
        if (from == to) continue;  // same top-level sphere: not a message
        out << 't' << e.time << ' ' << from << " -> " << to << " : " << e.detail_kind;
        if (!e.attrs.empty()) {
            out << " {";
            bool first = true;
            for (const auto& [k, v] : e.attrs) {
                if (!first) out << ", ";
                out << k << '=' << value_to_string(v);
                first = false;
            }
            out << '}';
        }
        if (e.kind == EventKind::channel_dropped) out << " (lost)";
        out << '\n';
    }
    return out.str();
}

}  // namespace flowkit
