#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "flowkit/diag.hpp"
#include "flowkit/stage.hpp"
#include "flowkit/value.hpp"

namespace flowkit {

using KindId = std::uint32_t;
using SphereId = std::uint32_t;
using FlowsystemId = std::uint32_t;
using TimerId = std::uint32_t;

enum class AttrType { integer, symbol };

struct AttrDecl {
    std::string name;
    AttrType type = AttrType::symbol;

    friend bool operator==(const AttrDecl&, const AttrDecl&) = default;
};

struct FlowthingKind {
    std::string name;
    KindCategory category = KindCategory::normal;
    std::vector<AttrDecl> schema;  // sorted by attribute name

    const AttrDecl* find_attr(const std::string& attr) const;

    friend bool operator==(const FlowthingKind&, const FlowthingKind&) = default;
};

struct Sphere {
    std::string name;
    std::optional<SphereId> parent;
    std::vector<SphereId> subspheres;
    std::vector<FlowsystemId> flowsystems;
    bool gated = false;  // true when a gate binding or open/close effect targets it
    Span span;
};

struct IntraArc {
    Stage from = Stage::create;
    Stage to = Stage::release;
    Span span;

    friend bool operator==(const IntraArc& a, const IntraArc& b) {
        return a.from == b.from && a.to == b.to;
    }
};

struct Flowsystem {
    std::string name;
    SphereId owner = 0;
    KindId kind = 0;
    std::set<Stage> stages;
    std::vector<IntraArc> intra_arcs;  // declaration order (D6 tie-breaking)
    bool receive_sugar = false;        // Arrive/Accept came from `receive`
    Span span;
};

/// Inter-flowsystem flow. Only Transfer -> Transfer is legal (W2); the
/// declared stages are kept so the validator can point at violations. An
/// unset delay falls back to the scenario's channel delay.
struct FlowArc {
    FlowsystemId from = 0;
    FlowsystemId to = 0;
    Stage from_stage = Stage::transfer;
    Stage to_stage = Stage::transfer;
    std::optional<std::int64_t> delay;
    Span span;
};

/// Expression tree shared by guards and inject templates. `name` resolves to
/// a source-token attribute, then the scenario environment; symbol literals
/// are always written quoted.
struct Expr {
    enum class Op {
        lit_int, lit_sym, name, qualified,            // leaves
        eq, ne, lt, le, gt, ge, and_, or_, not_,      // interior
    };
    Op op = Op::lit_int;
    std::int64_t int_value = 0;
    std::string text;       // symbol text, name, or qualified attribute
    std::string qualifier;  // source flowsystem name for Op::qualified
    std::vector<Expr> kids;
    Span span;

    static Expr lit(std::int64_t v);
    static Expr sym(std::string s);
    static Expr ref(std::string name);
    static Expr attr_of(std::string source_fs, std::string attr);
    static Expr binary(Op op, Expr lhs, Expr rhs);
    static Expr negate(Expr inner);

    bool operator==(const Expr& other) const;
};

using GuardExpr = Expr;

struct TriggerSource {
    enum class Kind { stage, timer };
    Kind kind = Kind::stage;
    FlowsystemId fs = 0;
    Stage stage = Stage::create;
    TimerId timer = 0;
    std::optional<GuardExpr> guard;
    Span span;
};

struct AttrAssign {
    std::string attr;
    Expr value;  // leaf ops only

    bool operator==(const AttrAssign& other) const {
        return attr == other.attr && value == other.value;
    }
};

enum class EffectKind { inject, start_timer, open_gate, close_gate };

struct TriggerEffect {
    EffectKind kind = EffectKind::inject;
    // inject
    KindId inject_kind = 0;
    FlowsystemId inject_fs = 0;
    Stage inject_stage = Stage::create;  // W4 requires Create
    std::vector<AttrAssign> assigns;     // sorted by attribute name
    // start_timer; an unresolved name keeps timer == npos for W8
    static constexpr TimerId npos = ~TimerId{0};
    TimerId timer = 0;
    std::string timer_name;
    // open_gate / close_gate
    SphereId sphere = 0;
    Span span;
};

/// A dashed arrow: when every source has latched since the last firing
/// (AND-join, D3), the effect is applied and the latches clear.
struct TriggerArc {
    std::vector<TriggerSource> sources;
    TriggerEffect effect;
    Span span;
};

struct TimerDecl {
    std::string name;
    SphereId owner = 0;
    std::int64_t base = 1;
    std::string scale_env;  // duration = base * env[scale_env]; empty = constant
    Span span;
};

struct GateBinding {
    FlowsystemId controller = 0;  // state-category flowsystem (W6)
    SphereId controlled = 0;
    std::string close_symbol = "STOP";
    std::string open_symbol = "GO";
    Span span;
};

struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    friend bool operator==(const Rational&, const Rational&) = default;
};

struct ScenarioInjection {
    std::int64_t time = 0;
    std::string fs_path;   // resolved at init
    std::string kind;
    std::vector<AttrAssign> attrs;  // literals only, sorted by name
    Span span;
};

struct Scenario {
    std::string name;
    std::uint64_t seed = 0;
    std::int64_t channel_delay = 1;       // D8
    Rational drop{0, 1};
    std::int64_t max_time = 100000;
    std::int64_t max_events = 100000;
    AttrMap environment;                  // includes segment_lifetime (D9)
    std::vector<ScenarioInjection> injections;  // declaration order
    Span span;

    /// Environment with defaults applied (segment_lifetime = 10 when unset).
    AttrMap effective_environment() const;
};

struct Model {
    std::vector<FlowthingKind> kinds;
    std::vector<Sphere> spheres;       // index 0.. ; roots listed below
    std::vector<SphereId> roots;
    std::vector<Flowsystem> flowsystems;
    std::vector<FlowArc> flows;        // declaration order
    std::vector<TriggerArc> triggers;  // declaration order
    std::vector<TimerDecl> timers;
    std::vector<GateBinding> gates;
    std::vector<Scenario> scenarios;

    std::string sphere_path(SphereId id) const;
    std::string flowsystem_path(FlowsystemId id) const;
    std::string stage_path(FlowsystemId id, Stage s) const;
    std::string timer_path(TimerId id) const;

    const FlowthingKind* find_kind(const std::string& name) const;
    std::optional<KindId> kind_id(const std::string& name) const;
    const Scenario* find_scenario(const std::string& name) const;

    /// Top-level sphere containing a flowsystem (first path segment).
    SphereId top_sphere(FlowsystemId id) const;

    /// True when `maybe_ancestor` is `s` or an ancestor of `s`.
    bool sphere_contains(SphereId maybe_ancestor, SphereId s) const;

    /// Structural equality ignoring spans and receive-sugar marks.
    bool equivalent(const Model& other) const;
};

/// Result of resolve_path.
struct PathTarget {
    enum class Kind { sphere, flowsystem, stage, timer };
    Kind kind = Kind::sphere;
    SphereId sphere = 0;
    FlowsystemId fs = 0;
    Stage stage = Stage::create;
    TimerId timer = 0;
};

struct PathError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Resolves a dotted path (e.g. "Local.syn.transfer") to its element.
/// Throws PathError on an unknown segment.
PathTarget resolve_path(const Model& model, const std::string& path);

}  // namespace flowkit
