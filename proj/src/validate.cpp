#include "flowkit/validate.hpp"

#include <set>
#include <sstream>

namespace flowkit {

namespace {

struct Checker {
    const Model& m;
    std::vector<Diagnostic> diags;

    void emit(Severity sev, const char* code, const Span& span, std::string msg) {
        diags.push_back({sev, code, std::move(msg), span});
    }
    void error(const char* code, const Span& span, std::string msg) {
        emit(Severity::error, code, span, std::move(msg));
    }
    void warn(const char* code, const Span& span, std::string msg) {
        emit(Severity::warning, code, span, std::move(msg));
    }

    // environment names any declared scenario can supply, plus builtins
    std::set<std::string> env_names() const {
        std::set<std::string> names{"segment_lifetime"};
        for (const auto& sc : m.scenarios)
            for (const auto& [k, v] : sc.environment) names.insert(k);
        return names;
    }

    void check_intra_arcs() {
        for (FlowsystemId i = 0; i < m.flowsystems.size(); ++i) {
            const auto& fs = m.flowsystems[i];
            KindCategory cat = m.kinds[fs.kind].category;
            for (const auto& arc : fs.intra_arcs) {
                if (!fs.stages.count(arc.from) || !fs.stages.count(arc.to)) {
                    error("W1", arc.span,
                          "arc " + stage_name(arc.from) + " -> " + stage_name(arc.to) +
                              " in '" + m.flowsystem_path(i) +
                              "' uses a stage the flowsystem does not declare");
                    continue;
                }
                if (!intra_arc_legal(arc.from, arc.to, cat))
                    error("W1", arc.span,
                          "arc " + stage_name(arc.from) + " -> " + stage_name(arc.to) +
                              " in '" + m.flowsystem_path(i) +
                              "' is not in the canonical intra-arc set");
            }
            // W9: arrived tokens with nowhere to go retire on arrival
            if (fs.stages.count(Stage::arrive)) {
                bool has_out = false;
                for (const auto& arc : fs.intra_arcs)
                    if (arc.from == Stage::arrive) has_out = true;
                if (!has_out)
                    warn("W9", fs.span,
                         "'" + m.flowsystem_path(i) +
                             "' has an arrive stage with no outgoing arc; arriving tokens retire");
            }
        }
    }

    void check_inter_flows() {
        for (const auto& f : m.flows) {
            if (f.from_stage != Stage::transfer || f.to_stage != Stage::transfer) {
                error("W2", f.span,
                      "inter-flowsystem flow must be transfer -> transfer, not " +
                          stage_name(f.from_stage) + " -> " + stage_name(f.to_stage));
                continue;
            }
            if (!m.flowsystems[f.from].stages.count(Stage::transfer))
                error("W2", f.span,
                      "flow source '" + m.flowsystem_path(f.from) + "' has no transfer stage");
            if (!m.flowsystems[f.to].stages.count(Stage::transfer))
                error("W2", f.span,
                      "flow destination '" + m.flowsystem_path(f.to) + "' has no transfer stage");
        }
    }

    void check_state_kinds() {
        for (FlowsystemId i = 0; i < m.flowsystems.size(); ++i) {
            const auto& fs = m.flowsystems[i];
            if (m.kinds[fs.kind].category != KindCategory::state) continue;
            for (Stage s : fs.stages)
                if (s != Stage::create && s != Stage::process)
                    error("W3", fs.span,
                          "state-kind flowsystem '" + m.flowsystem_path(i) +
                              "' declares stage '" + stage_name(s) +
                              "'; states are only created and processed");
        }
    }

    void check_triggers() {
        std::set<std::string> env = env_names();
        for (const auto& t : m.triggers) {
            const auto& e = t.effect;
            if (e.kind == EffectKind::inject) {
                if (e.inject_stage != Stage::create)
                    error("W4", e.span, "inject target must be a create stage");
                else if (!m.flowsystems[e.inject_fs].stages.count(Stage::create))
                    error("W4", e.span,
                          "inject target '" + m.flowsystem_path(e.inject_fs) +
                              "' has no create stage");
                if (m.flowsystems[e.inject_fs].kind != e.inject_kind)
                    error("W4", e.span,
                          "inject kind '" + m.kinds[e.inject_kind].name +
                              "' does not match flowsystem kind '" +
                              m.kinds[m.flowsystems[e.inject_fs].kind].name + "'");
                const auto& target_kind = m.kinds[e.inject_kind];
                for (const auto& a : e.assigns) {
                    if (!target_kind.find_attr(a.attr))
                        error("W4", e.span,
                              "attribute '" + a.attr + "' is not in the schema of kind '" +
                                  target_kind.name + "'");
                    check_template_expr(a.value, t, env);
                }
            }
            for (const auto& s : t.sources) {
                if (s.guard) check_guard_expr(*s.guard, t, env);
            }
        }
    }

    // bare names must be source attributes or environment names (W5)
    void check_name_ref(const std::string& name, const Span& span, const TriggerArc& t,
                        const std::set<std::string>& env) {
        for (const auto& s : t.sources) {
            if (s.kind != TriggerSource::Kind::stage) continue;
            if (m.kinds[m.flowsystems[s.fs].kind].find_attr(name)) return;
        }
        if (env.count(name)) return;
        error("W5", span,
              "'" + name + "' is neither an attribute of a source kind nor an environment name");
    }

    void check_qualified_ref(const Expr& e, const TriggerArc& t) {
        for (const auto& s : t.sources) {
            if (s.kind != TriggerSource::Kind::stage) continue;
            if (m.flowsystems[s.fs].name != e.qualifier) continue;
            if (m.kinds[m.flowsystems[s.fs].kind].find_attr(e.text)) return;
            error("W5", e.span,
                  "source '" + e.qualifier + "' has no attribute '" + e.text + "'");
            return;
        }
        error("W5", e.span, "'" + e.qualifier + "' names no source flowsystem of this trigger");
    }

    void check_template_expr(const Expr& e, const TriggerArc& t, const std::set<std::string>& env) {
        switch (e.op) {
            case Expr::Op::name: check_name_ref(e.text, e.span, t, env); break;
            case Expr::Op::qualified: check_qualified_ref(e, t); break;
            default: break;  // literals
        }
    }

    void check_guard_expr(const Expr& e, const TriggerArc& t, const std::set<std::string>& env) {
        switch (e.op) {
            case Expr::Op::name: check_name_ref(e.text, e.span, t, env); break;
            case Expr::Op::qualified: check_qualified_ref(e, t); break;
            default:
                for (const auto& k : e.kids) check_guard_expr(k, t, env);
                break;
        }
    }

    void check_gates() {
        for (const auto& g : m.gates) {
            if (m.kinds[m.flowsystems[g.controller].kind].category != KindCategory::state)
                error("W6", g.span,
                      "gate controller '" + m.flowsystem_path(g.controller) +
                          "' is not a state-kind flowsystem");
        }
    }

    void check_uniqueness() {
        // sphere children: subspheres, flowsystems and timers share a namespace
        for (SphereId i = 0; i < m.spheres.size(); ++i) {
            std::set<std::string> seen;
            auto claim = [&](const std::string& name, const Span& span) {
                if (!seen.insert(name).second)
                    error("W7", span,
                          "duplicate name '" + name + "' under sphere '" + m.sphere_path(i) + "'");
            };
            for (SphereId c : m.spheres[i].subspheres) claim(m.spheres[c].name, m.spheres[c].span);
            for (FlowsystemId f : m.spheres[i].flowsystems)
                claim(m.flowsystems[f].name, m.flowsystems[f].span);
            for (TimerId t = 0; t < m.timers.size(); ++t)
                if (m.timers[t].owner == i) claim(m.timers[t].name, m.timers[t].span);
        }
        std::set<std::string> roots;
        for (SphereId r : m.roots)
            if (!roots.insert(m.spheres[r].name).second)
                error("W7", m.spheres[r].span, "duplicate root sphere '" + m.spheres[r].name + "'");
        std::set<std::string> kind_names;
        for (const auto& k : m.kinds)
            if (!kind_names.insert(k.name).second)
                error("W7", Span{}, "duplicate kind '" + k.name + "'");
        std::set<std::string> scenario_names;
        for (const auto& sc : m.scenarios)
            if (!scenario_names.insert(sc.name).second)
                error("W7", sc.span, "duplicate scenario '" + sc.name + "'");
    }

    void check_timer_refs() {
        // Timers referenced by triggers must be declared. Resolution happens
        // at load time; a model built by hand could still carry a stale id.
        for (const auto& t : m.triggers) {
            if (t.effect.kind == EffectKind::start_timer && t.effect.timer >= m.timers.size())
                error("W8", t.effect.span,
                      "trigger starts undeclared timer '" + t.effect.timer_name + "'");
            for (const auto& s : t.sources)
                if (s.kind == TriggerSource::Kind::timer && s.timer >= m.timers.size())
                    error("W8", s.span, "trigger source references an undeclared timer");
        }
    }

    void run() {
        check_intra_arcs();
        check_inter_flows();
        check_state_kinds();
        check_triggers();
        check_gates();
        check_uniqueness();
        check_timer_refs();
        sort_diagnostics(diags);
    }
};

}  // namespace

std::vector<Diagnostic> validate(const Model& model) {
    Checker c{model, {}};
    c.run();
    return std::move(c.diags);
}

}  // namespace flowkit
