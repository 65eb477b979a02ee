#include <algorithm>
#include <cctype>
#include <sstream>

#include "flowkit/lang.hpp"

namespace flowkit {

namespace {

bool plain_ident(const std::string& s) {
    if (s.empty()) return false;
    if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    return true;
}

std::string kind_name_text(const std::string& name) {
    return plain_ident(name) ? name : '"' + name + '"';
}

std::string symbol_text(const std::string& s) { return '"' + s + '"'; }

int precedence(Expr::Op op) {
    switch (op) {
        case Expr::Op::or_: return 1;
        case Expr::Op::and_: return 2;
        case Expr::Op::not_: return 3;
        case Expr::Op::eq:
        case Expr::Op::ne:
        case Expr::Op::lt:
        case Expr::Op::le:
        case Expr::Op::gt:
        case Expr::Op::ge: return 4;
        default: return 5;
    }
}

std::string expr_text(const Expr& e, int min_prec = 0) {
    int prec = precedence(e.op);
    std::string out;
    switch (e.op) {
        case Expr::Op::lit_int: out = std::to_string(e.int_value); break;
        case Expr::Op::lit_sym: out = symbol_text(e.text); break;
        case Expr::Op::name: out = e.text; break;
        case Expr::Op::qualified: out = e.qualifier + '.' + e.text; break;
        case Expr::Op::not_: out = "not " + expr_text(e.kids[0], prec); break;
        case Expr::Op::and_:
            out = expr_text(e.kids[0], prec) + " and " + expr_text(e.kids[1], prec + 1);
            break;
        case Expr::Op::or_:
            out = expr_text(e.kids[0], prec) + " or " + expr_text(e.kids[1], prec + 1);
            break;
        default: {
            const char* op = "==";
            if (e.op == Expr::Op::ne) op = "!=";
            else if (e.op == Expr::Op::lt) op = "<";
            else if (e.op == Expr::Op::le) op = "<=";
            else if (e.op == Expr::Op::gt) op = ">";
            else if (e.op == Expr::Op::ge) op = ">=";
            out = expr_text(e.kids[0], prec + 1) + ' ' + op + ' ' + expr_text(e.kids[1], prec + 1);
            break;
        }
    }
    if (prec < min_prec) return '(' + out + ')';
    return out;
}

std::string assigns_text(const std::vector<AttrAssign>& assigns) {
    std::string out;
    for (std::size_t i = 0; i < assigns.size(); ++i) {
        if (i) out += ", ";
        out += assigns[i].attr + " = " + expr_text(assigns[i].value);
    }
    return out;
}

struct Printer {
    const Model& m;
    std::ostringstream out;
    std::vector<std::string> sections;

    void flush_section() {
        std::string text = out.str();
        if (!text.empty()) sections.push_back(std::move(text));
        out.str("");
    }

    template <typename T, typename KeyFn>
    std::vector<const T*> sorted(const std::vector<T>& items, KeyFn key) {
        std::vector<const T*> ptrs;
        for (const auto& item : items) ptrs.push_back(&item);
        std::stable_sort(ptrs.begin(), ptrs.end(),
                         [&](const T* a, const T* b) { return key(*a) < key(*b); });
        return ptrs;
    }

    void print_kinds() {
        for (const auto* k : sorted(m.kinds, [](const FlowthingKind& k) { return k.name; })) {
            out << "kind " << kind_name_text(k->name);
            if (k->category == KindCategory::state) out << " state";
            if (!k->schema.empty()) {
                out << " { ";
                for (std::size_t i = 0; i < k->schema.size(); ++i) {
                    if (i) out << ", ";
                    out << k->schema[i].name << ": "
                        << (k->schema[i].type == AttrType::integer ? "int" : "symbol");
                }
                out << " }";
            }
            out << '\n';
        }
        flush_section();
    }

    void print_flowsystem(FlowsystemId id, int depth) {
        const Flowsystem& fs = m.flowsystems[id];
        std::string pad(2 * depth, ' ');
        out << pad << "flowsystem " << fs.name << ": " << kind_name_text(m.kinds[fs.kind].name)
            << " {\n";
        out << pad << "  stages: ";
        bool first = true;
        for (Stage s : all_stages) {
            if (!fs.stages.count(s)) continue;
            if (!first) out << ", ";
            out << stage_name(s);
            first = false;
        }
        out << '\n';
        if (!fs.intra_arcs.empty()) {
            out << pad << "  arcs: ";
            for (std::size_t i = 0; i < fs.intra_arcs.size(); ++i) {
                if (i) out << ", ";
                out << stage_name(fs.intra_arcs[i].from) << " -> "
                    << stage_name(fs.intra_arcs[i].to);
            }
            out << '\n';
        }
        out << pad << "}\n";
    }

    void print_sphere(SphereId id, int depth) {
        const Sphere& s = m.spheres[id];
        std::string pad(2 * depth, ' ');
        out << pad << "sphere " << s.name << " {\n";
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
        out << pad << "}\n";
    }

    void print_spheres() {
        auto roots = m.roots;
        std::stable_sort(roots.begin(), roots.end(), [&](SphereId a, SphereId b) {
            return m.spheres[a].name < m.spheres[b].name;
        });
        for (std::size_t i = 0; i < roots.size(); ++i) {
            if (i) out << '\n';
            print_sphere(roots[i], 0);
        }
        flush_section();
    }

    void print_flows() {
        for (const auto& f : m.flows) {
            out << "flow " << m.stage_path(f.from, f.from_stage) << " -> "
                << m.stage_path(f.to, f.to_stage);
            if (f.delay) out << " delay " << *f.delay;
            out << '\n';
        }
        flush_section();
    }

    void print_gates() {
        for (const auto* g : sorted(m.gates, [this](const GateBinding& g) {
                 return m.flowsystem_path(g.controller);
             })) {
            out << "gate " << m.flowsystem_path(g->controller) << " controls "
                << m.sphere_path(g->controlled) << " close " << symbol_text(g->close_symbol)
                << " open " << symbol_text(g->open_symbol) << '\n';
        }
        flush_section();
    }

    void print_timers() {
        std::vector<TimerId> ids(m.timers.size());
        for (TimerId i = 0; i < m.timers.size(); ++i) ids[i] = i;
        std::stable_sort(ids.begin(), ids.end(), [&](TimerId a, TimerId b) {
            return m.timer_path(a) < m.timer_path(b);
        });
        for (TimerId id : ids) {
            const auto& t = m.timers[id];
            out << "timer " << m.timer_path(id) << " duration " << t.base;
            if (!t.scale_env.empty()) out << " * " << t.scale_env;
            out << '\n';
        }
        flush_section();
    }

    void print_triggers() {
        for (const auto& t : m.triggers) {
            out << "trigger ";
            for (std::size_t i = 0; i < t.sources.size(); ++i) {
                if (i) out << ", ";
                const auto& s = t.sources[i];
                if (s.kind == TriggerSource::Kind::timer) out << m.timer_path(s.timer);
                else out << m.stage_path(s.fs, s.stage);
                if (s.guard) out << " when " << expr_text(*s.guard);
            }
            out << " => ";
            const auto& e = t.effect;
            switch (e.kind) {
                case EffectKind::inject:
                    out << "inject " << kind_name_text(m.kinds[e.inject_kind].name) << " at "
                        << m.stage_path(e.inject_fs, e.inject_stage);
                    if (!e.assigns.empty()) out << " with " << assigns_text(e.assigns);
                    break;
                case EffectKind::start_timer: out << "start " << m.timer_path(e.timer); break;
                case EffectKind::open_gate: out << "open " << m.sphere_path(e.sphere); break;
                case EffectKind::close_gate: out << "close " << m.sphere_path(e.sphere); break;
            }
            out << '\n';
        }
        flush_section();
    }

    void print_scenarios() {
        auto order = sorted(m.scenarios, [](const Scenario& s) { return s.name; });
        for (std::size_t i = 0; i < order.size(); ++i) {
            const Scenario* sc = order[i];
            if (i) out << '\n';
            out << "scenario " << sc->name << " {\n";
            out << "  seed " << sc->seed << '\n';
            out << "  channel delay " << sc->channel_delay << " drop " << sc->drop.num << '/'
                << sc->drop.den << '\n';
            out << "  max time " << sc->max_time << '\n';
            out << "  max events " << sc->max_events << '\n';
            for (const auto& [k, v] : sc->environment) {
                out << "  env " << k << " = ";
                if (is_int(v)) out << std::get<std::int64_t>(v);
                else out << symbol_text(std::get<std::string>(v));
                out << '\n';
            }
            for (const auto& inj : sc->injections) {
                out << "  at " << inj.time << " inject " << kind_name_text(inj.kind) << " at "
                    << inj.fs_path;
                if (!inj.attrs.empty()) out << " with " << assigns_text(inj.attrs);
                out << '\n';
            }
            out << "}\n";
        }
        flush_section();
    }

    std::string result() {
        print_kinds();
        print_spheres();
        print_flows();
        print_gates();
        print_timers();
        print_triggers();
        print_scenarios();
        std::string text;
        for (std::size_t i = 0; i < sections.size(); ++i) {
            if (i) text += '\n';
            text += sections[i];
        }
        return text;
    }
};

}  // namespace

std::string print_canonical(const Model& model) {
    Printer p{model};
    return p.result();
}

}  // namespace flowkit
