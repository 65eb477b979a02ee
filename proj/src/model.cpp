#include "flowkit/model.hpp"

#include <algorithm>
#include <sstream>

namespace flowkit {

std::string value_to_string(const Value& v) {
    if (is_int(v)) return std::to_string(std::get<std::int64_t>(v));
    return std::get<std::string>(v);
}

const AttrDecl* FlowthingKind::find_attr(const std::string& attr) const {
    for (const auto& a : schema)
        if (a.name == attr) return &a;
    return nullptr;
}

Expr Expr::lit(std::int64_t v) {
    Expr e;
    e.op = Op::lit_int;
    e.int_value = v;
    return e;
}

Expr Expr::sym(std::string s) {
    Expr e;
    e.op = Op::lit_sym;
    e.text = std::move(s);
    return e;
}

Expr Expr::ref(std::string name) {
    Expr e;
    e.op = Op::name;
    e.text = std::move(name);
    return e;
}

Expr Expr::attr_of(std::string source_fs, std::string attr) {
    Expr e;
    e.op = Op::qualified;
    e.qualifier = std::move(source_fs);
    e.text = std::move(attr);
    return e;
}

Expr Expr::binary(Op op, Expr lhs, Expr rhs) {
    Expr e;
    e.op = op;
    e.kids.push_back(std::move(lhs));
    e.kids.push_back(std::move(rhs));
    return e;
}

Expr Expr::negate(Expr inner) {
    Expr e;
    e.op = Op::not_;
    e.kids.push_back(std::move(inner));
    return e;
}

bool Expr::operator==(const Expr& other) const {
    return op == other.op && int_value == other.int_value && text == other.text &&
           qualifier == other.qualifier && kids == other.kids;
}

AttrMap Scenario::effective_environment() const {
    AttrMap env = environment;
    env.try_emplace("segment_lifetime", std::int64_t{10});
    return env;
}

std::string Model::sphere_path(SphereId id) const {
    std::vector<std::string> parts;
    std::optional<SphereId> cur = id;
    while (cur) {
        parts.push_back(spheres[*cur].name);
        cur = spheres[*cur].parent;
    }
    std::string out;
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
        if (!out.empty()) out += '.';
        out += *it;
    }
    return out;
}

std::string Model::flowsystem_path(FlowsystemId id) const {
    return sphere_path(flowsystems[id].owner) + "." + flowsystems[id].name;
}

std::string Model::stage_path(FlowsystemId id, Stage s) const {
    return flowsystem_path(id) + "." + stage_name(s);
}

std::string Model::timer_path(TimerId id) const {
    return sphere_path(timers[id].owner) + "." + timers[id].name;
}

const FlowthingKind* Model::find_kind(const std::string& name) const {
    for (const auto& k : kinds)
        if (k.name == name) return &k;
    return nullptr;
}

std::optional<KindId> Model::kind_id(const std::string& name) const {
    for (KindId i = 0; i < kinds.size(); ++i)
        if (kinds[i].name == name) return i;
    return std::nullopt;
}

const Scenario* Model::find_scenario(const std::string& name) const {
    for (const auto& s : scenarios)
        if (s.name == name) return &s;
    return nullptr;
}

SphereId Model::top_sphere(FlowsystemId id) const {
    SphereId cur = flowsystems[id].owner;
    while (spheres[cur].parent) cur = *spheres[cur].parent;
    return cur;
}

bool Model::sphere_contains(SphereId maybe_ancestor, SphereId s) const {
    std::optional<SphereId> cur = s;
    while (cur) {
        if (*cur == maybe_ancestor) return true;
        cur = spheres[*cur].parent;
    }
    return false;
}

namespace {

// Order-insensitive identity of a model element, keyed by path text so the
// comparison survives index renumbering.
struct Shape {
    std::vector<std::string> lines;

    void add(std::string s) { lines.push_back(std::move(s)); }
    void finish() { std::sort(lines.begin(), lines.end()); }

    friend bool operator==(const Shape&, const Shape&) = default;
};

std::string expr_text(const Expr& e);

std::string expr_list(const std::vector<Expr>& kids, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < kids.size(); ++i) {
        if (i) out += sep;
        out += expr_text(kids[i]);
    }
    return out;
}

std::string expr_text(const Expr& e) {
    using Op = Expr::Op;
    switch (e.op) {
        case Op::lit_int: return "i" + std::to_string(e.int_value);
        case Op::lit_sym: return "s(" + e.text + ")";
        case Op::name: return "n(" + e.text + ")";
        case Op::qualified: return "q(" + e.qualifier + "," + e.text + ")";
        case Op::eq: return "(" + expr_list(e.kids, " == ") + ")";
        case Op::ne: return "(" + expr_list(e.kids, " != ") + ")";
        case Op::lt: return "(" + expr_list(e.kids, " < ") + ")";
        case Op::le: return "(" + expr_list(e.kids, " <= ") + ")";
        case Op::gt: return "(" + expr_list(e.kids, " > ") + ")";
        case Op::ge: return "(" + expr_list(e.kids, " >= ") + ")";
        case Op::and_: return "(" + expr_list(e.kids, " and ") + ")";
        case Op::or_: return "(" + expr_list(e.kids, " or ") + ")";
        case Op::not_: return "(not " + expr_list(e.kids, " ") + ")";
    }
    return "?";
}

std::string assigns_text(const std::vector<AttrAssign>& assigns) {
    std::string out;
    for (const auto& a : assigns) out += a.attr + "=" + expr_text(a.value) + ";";
    return out;
}

Shape model_shape(const Model& m) {
    Shape sh;
    for (const auto& k : m.kinds) {
        std::string line = "kind " + k.name + (k.category == KindCategory::state ? " state" : "");
        for (const auto& a : k.schema)
            line += " " + a.name + ":" + (a.type == AttrType::integer ? "int" : "symbol");
        sh.add(line);
    }
    for (SphereId i = 0; i < m.spheres.size(); ++i) sh.add("sphere " + m.sphere_path(i));
    for (FlowsystemId i = 0; i < m.flowsystems.size(); ++i) {
        const auto& fs = m.flowsystems[i];
        std::string line = "flowsystem " + m.flowsystem_path(i) + ":" + m.kinds[fs.kind].name;
        for (Stage s : all_stages)
            if (fs.stages.count(s)) line += " " + stage_name(s);
        line += " |";
        // intra-arc order is semantics: keep it in the identity
        int idx = 0;
        for (const auto& arc : fs.intra_arcs)
            line += " " + std::to_string(idx++) + ":" + stage_name(arc.from) + ">" +
                    stage_name(arc.to);
        sh.add(line);
    }
    // flow order matters only per source stage; tag each with its rank
    // among flows sharing the source so global reordering stays benign
    std::map<std::string, int> flow_rank;
    for (const auto& f : m.flows) {
        std::string from = m.stage_path(f.from, Stage::transfer);
        int rank = flow_rank[from]++;
        sh.add("flow " + from + " -> " + m.stage_path(f.to, Stage::transfer) + " #" +
               std::to_string(rank) +
               (f.delay ? " delay " + std::to_string(*f.delay) : ""));
    }
    std::map<std::string, int> trig_rank;
    for (const auto& t : m.triggers) {
        std::string line = "trigger";
        std::string first_src;
        for (const auto& s : t.sources) {
            std::string src = s.kind == TriggerSource::Kind::timer
                                  ? m.timer_path(s.timer)
                                  : m.stage_path(s.fs, s.stage);
            if (first_src.empty()) first_src = src;
            line += " " + src;
            if (s.guard) line += " when " + expr_text(*s.guard);
            line += ",";
        }
        line += " #" + std::to_string(trig_rank[first_src]++) + " => ";
        switch (t.effect.kind) {
            case EffectKind::inject:
                line += "inject " + m.kinds[t.effect.inject_kind].name + " at " +
                        m.stage_path(t.effect.inject_fs, t.effect.inject_stage) + " with " +
                        assigns_text(t.effect.assigns);
                break;
            case EffectKind::start_timer: line += "start " + m.timer_path(t.effect.timer); break;
            case EffectKind::open_gate: line += "open " + m.sphere_path(t.effect.sphere); break;
            case EffectKind::close_gate: line += "close " + m.sphere_path(t.effect.sphere); break;
        }
        sh.add(line);
    }
    for (TimerId i = 0; i < m.timers.size(); ++i) {
        const auto& t = m.timers[i];
        sh.add("timer " + m.timer_path(i) + " duration " + std::to_string(t.base) +
               (t.scale_env.empty() ? "" : " * " + t.scale_env));
    }
    for (const auto& g : m.gates)
        sh.add("gate " + m.flowsystem_path(g.controller) + " controls " +
               m.sphere_path(g.controlled) + " close " + g.close_symbol + " open " +
               g.open_symbol);
    for (const auto& sc : m.scenarios) {
        std::string line = "scenario " + sc.name + " seed " + std::to_string(sc.seed) +
                           " delay " + std::to_string(sc.channel_delay) + " drop " +
                           std::to_string(sc.drop.num) + "/" + std::to_string(sc.drop.den) +
                           " time " + std::to_string(sc.max_time) + " events " +
                           std::to_string(sc.max_events);
        for (const auto& [k, v] : sc.environment) line += " env " + k + "=" + value_to_string(v);
        int idx = 0;
        for (const auto& inj : sc.injections)
            line += " @" + std::to_string(idx++) + ":" + std::to_string(inj.time) + " " +
                    inj.kind + " at " + inj.fs_path + " " + assigns_text(inj.attrs);
        sh.add(line);
    }
    sh.finish();
    return sh;
}

}  // namespace

bool Model::equivalent(const Model& other) const {
    return model_shape(*this) == model_shape(other);
}

PathTarget resolve_path(const Model& model, const std::string& path) {
    if (path.empty()) throw PathError("empty path");
    std::vector<std::string> parts;
    std::string cur;
    for (char c : path) {
        if (c == '.') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);

    auto fail = [&](const std::string& seg) -> PathError {
        return PathError("path '" + path + "': unknown segment '" + seg + "'");
    };

    // root sphere
    std::optional<SphereId> sphere;
    for (SphereId r : model.roots)
        if (model.spheres[r].name == parts[0]) sphere = r;
    if (!sphere) throw fail(parts[0]);

    PathTarget out;
    out.kind = PathTarget::Kind::sphere;
    out.sphere = *sphere;

    std::size_t i = 1;
    while (i < parts.size()) {
        const std::string& seg = parts[i];
        const Sphere& s = model.spheres[out.sphere];
        bool found = false;
        for (SphereId child : s.subspheres) {
            if (model.spheres[child].name == seg) {
                out.sphere = child;
                found = true;
                break;
            }
        }
        if (found) {
            ++i;
            continue;
        }
        for (FlowsystemId fsid : s.flowsystems) {
            if (model.flowsystems[fsid].name == seg) {
                out.kind = PathTarget::Kind::flowsystem;
                out.fs = fsid;
                found = true;
                break;
            }
        }
        if (found) {
            ++i;
            if (i < parts.size()) {
                auto st = stage_from_name(parts[i]);
                if (!st) throw fail(parts[i]);
                if (i + 1 != parts.size()) throw fail(parts[i + 1]);
                out.kind = PathTarget::Kind::stage;
                out.stage = *st;
                ++i;
            }
            return out;
        }
        for (TimerId t = 0; t < model.timers.size(); ++t) {
            if (model.timers[t].owner == out.sphere && model.timers[t].name == seg) {
                if (i + 1 != parts.size()) throw fail(parts[i + 1]);
                out.kind = PathTarget::Kind::timer;
                out.timer = t;
                return out;
            }
        }
        throw fail(seg);
    }
    return out;
}

}  // namespace flowkit
