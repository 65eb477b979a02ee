#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowkit/model.hpp"

namespace flowkit {

using TokenId = std::uint64_t;

/// One flowthing instance. A live token occupies exactly one
/// (flowsystem, stage) at every instant of logical time.
struct Token {
    TokenId id = 0;
    KindId kind = 0;
    FlowsystemId fs = 0;
    Stage stage = Stage::create;
    bool inbound = false;  // entered Transfer from the channel
    AttrMap attrs;
    std::int64_t created_at = 0;
};

enum class EventKind {
    token_created,
    stage_entered,
    stage_exited,
    channel_crossed,
    channel_dropped,
    trigger_fired,
    timer_started,
    timer_expired,
    gate_opened,
    gate_closed,
    token_retired,
};

std::string event_kind_name(EventKind k);
std::optional<EventKind> event_kind_from_name(const std::string& name);

struct EventRecord {
    std::int64_t time = 0;
    std::int64_t seq = 0;  // index in the trace; restarts at 0 per run
    EventKind kind = EventKind::token_created;
    std::string subject;   // "t<id>" or timer/gate path
    std::string place;     // dotted path
    // detail: attribute snapshot plus structural keys where needed
    std::string detail_kind;  // flowthing kind name for token events
    AttrMap attrs;
    std::string from;  // channel events: source stage path
    std::string to;    // channel events: destination stage path
    std::string effect;       // trigger-fired: inject|start-timer|open-gate|close-gate
    std::int64_t duration = 0;  // timer-started
};

enum class Outcome { quiescent, time_limit, event_limit };

std::string outcome_name(Outcome o);

struct Trace {
    std::string scenario;
    std::uint64_t seed = 0;
    bool seed_relevant = false;  // drop probability > 0; seed is serialized
    std::vector<EventRecord> events;
    Outcome outcome = Outcome::quiescent;
};

struct ScenarioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

struct QueueEntry {
    enum class Kind { inject, materialize, advance, timer_expire };
    std::int64_t time = 0;
    std::uint64_t order = 0;  // global FIFO tiebreaker
    Kind kind = Kind::advance;
    TokenId token = 0;          // advance
    std::size_t injection = 0;  // inject: scenario injection index
    KindId mat_kind = 0;        // materialize
    FlowsystemId mat_fs = 0;
    AttrMap mat_attrs;
    TimerId timer = 0;          // timer_expire
    std::uint64_t generation = 0;
};

struct QueueOrder {
    bool operator()(const QueueEntry& a, const QueueEntry& b) const {
        if (a.time != b.time) return a.time > b.time;
        return a.order > b.order;
    }
};

struct Latch {
    bool set = false;
    AttrMap attrs;
    FlowsystemId fs = 0;
};

struct TriggerState {
    std::vector<Latch> latches;
    // per-source latch-set counts and fire count, for the AND-join property
    std::vector<std::uint64_t> latch_sets;
    std::uint64_t fires = 0;
};

struct TimerState {
    bool running = false;
    std::uint64_t generation = 0;
    std::int64_t started_at = 0;
};

}  // namespace detail

struct SimState {
    const Model* model = nullptr;
    Scenario scenario;
    AttrMap environment;  // effective (defaults applied)

    std::priority_queue<detail::QueueEntry, std::vector<detail::QueueEntry>,
                        detail::QueueOrder>
        queue;
    std::map<TokenId, Token> live;
    std::vector<bool> gate_open;                     // per sphere
    std::vector<std::deque<detail::QueueEntry>> deferred;  // per sphere, FIFO
    std::vector<detail::TriggerState> trigger_states;
    std::vector<detail::TimerState> timer_states;
    std::vector<std::int64_t> timer_durations;  // evaluated against the environment at init
    std::mt19937_64 prng;
    Trace trace;
    std::int64_t now = 0;
    std::uint64_t next_order = 0;
    TokenId next_token = 0;
};

/// Prepares a run: one queued creation per injection, PRNG seeded, gates
/// open, no timers running. Throws ScenarioError for unresolvable paths or
/// attributes outside the kind schema.
SimState init(const Model& model, const Scenario& scenario);

/// Applies semantic steps until at least one event record is appended (one
/// queue entry can emit several records, e.g. trigger-fired then
/// token-created). Returns the last record appended, or nothing when the
/// queue is exhausted.
std::optional<EventRecord> step(SimState& state);

/// Drives step() to quiescence or a stop bound. Deterministic for a fixed
/// (model, scenario); with drop probability 0 the PRNG is never consulted.
Trace run(const Model& model, const Scenario& scenario);

/// Total boolean evaluation: symbols compare by identity, integers by
/// value; ordering comparisons are false unless both sides are integers.
/// Names resolve to token attributes first, then the environment.
bool evaluate_guard(const GuardExpr& expr, const Token& token, const AttrMap& environment);

}  // namespace flowkit
