#include "flowkit/engine.hpp"

#include <cassert>

namespace flowkit {

std::string event_kind_name(EventKind k) {
    switch (k) {
        case EventKind::token_created: return "token-created";
        case EventKind::stage_entered: return "stage-entered";
        case EventKind::stage_exited: return "stage-exited";
        case EventKind::channel_crossed: return "channel-crossed";
        case EventKind::channel_dropped: return "channel-dropped";
        case EventKind::trigger_fired: return "trigger-fired";
        case EventKind::timer_started: return "timer-started";
        case EventKind::timer_expired: return "timer-expired";
        case EventKind::gate_opened: return "gate-opened";
        case EventKind::gate_closed: return "gate-closed";
        case EventKind::token_retired: return "token-retired";
    }
    return "?";
}

std::optional<EventKind> event_kind_from_name(const std::string& name) {
    static const EventKind kinds[] = {
        EventKind::token_created,  EventKind::stage_entered, EventKind::stage_exited,
        EventKind::channel_crossed, EventKind::channel_dropped, EventKind::trigger_fired,
        EventKind::timer_started,  EventKind::timer_expired, EventKind::gate_opened,
        EventKind::gate_closed,    EventKind::token_retired,
    };
    for (EventKind k : kinds)
        if (event_kind_name(k) == name) return k;
    return std::nullopt;
}

std::string outcome_name(Outcome o) {
    switch (o) {
        case Outcome::quiescent: return "quiescent";
        case Outcome::time_limit: return "time-limit";
        case Outcome::event_limit: return "event-limit";
    }
    return "?";
}

namespace {

using detail::QueueEntry;

Value default_value(AttrType type) {
    if (type == AttrType::integer) return std::int64_t{0};
    return std::string("nil");
}

std::optional<Value> lookup(const AttrMap& map, const std::string& name) {
    auto it = map.find(name);
    if (it == map.end()) return std::nullopt;
    return it->second;
}

bool values_equal(const Value& a, const Value& b) {
    if (is_int(a) && is_int(b)) return std::get<std::int64_t>(a) == std::get<std::int64_t>(b);
    if (is_symbol(a) && is_symbol(b)) return std::get<std::string>(a) == std::get<std::string>(b);
    return false;  // cross-type equality is false, never an error
}

Value eval_leaf(const Expr& e, const Token& token, const AttrMap& environment) {
    switch (e.op) {
        case Expr::Op::lit_int: return e.int_value;
        case Expr::Op::lit_sym: return e.text;
        case Expr::Op::name:
            if (auto v = lookup(token.attrs, e.text)) return *v;
            if (auto v = lookup(environment, e.text)) return *v;
            return std::string("nil");
        case Expr::Op::qualified:
            if (auto v = lookup(token.attrs, e.text)) return *v;
            return std::string("nil");
        default: break;
    }
    return std::string("nil");
}

}  // namespace

bool evaluate_guard(const GuardExpr& expr, const Token& token, const AttrMap& environment) {
    using Op = Expr::Op;
    switch (expr.op) {
        case Op::and_:
            return evaluate_guard(expr.kids[0], token, environment) &&
                   evaluate_guard(expr.kids[1], token, environment);
        case Op::or_:
            return evaluate_guard(expr.kids[0], token, environment) ||
                   evaluate_guard(expr.kids[1], token, environment);
        case Op::not_: return !evaluate_guard(expr.kids[0], token, environment);
        case Op::eq:
        case Op::ne:
        case Op::lt:
        case Op::le:
        case Op::gt:
        case Op::ge: {
            Value a = eval_leaf(expr.kids[0], token, environment);
            Value b = eval_leaf(expr.kids[1], token, environment);
            if (expr.op == Op::eq) return values_equal(a, b);
            if (expr.op == Op::ne) return !values_equal(a, b);
            if (!is_int(a) || !is_int(b)) return false;  // ordering needs integers
            auto x = std::get<std::int64_t>(a), y = std::get<std::int64_t>(b);
            switch (expr.op) {
                case Op::lt: return x < y;
                case Op::le: return x <= y;
                case Op::gt: return x > y;
                default: return expr.op == Op::ge ? x >= y : x > y;
            }
        }
        default: {
            // a bare value as a guard: nonzero integer is true
            Value v = eval_leaf(expr, token, environment);
            return is_int(v) && std::get<std::int64_t>(v) != 0;
        }
    }
}

namespace {

struct Engine {
    SimState& st;
    const Model& m;

    explicit Engine(SimState& state) : st(state), m(*state.model) {}

    // ------------------------------------------------------------ records

    EventRecord& emit(EventKind kind, std::string subject, std::string place) {
        EventRecord rec;
        rec.time = st.now;
        rec.seq = static_cast<std::int64_t>(st.trace.events.size());
        rec.kind = kind;
        rec.subject = std::move(subject);
        rec.place = std::move(place);
        st.trace.events.push_back(std::move(rec));
        return st.trace.events.back();
    }

    EventRecord& emit_token(EventKind kind, const Token& tok, std::string place) {
        EventRecord& rec = emit(kind, "t" + std::to_string(tok.id), std::move(place));
        rec.detail_kind = m.kinds[tok.kind].name;
        rec.attrs = tok.attrs;
        return rec;
    }

    void schedule(QueueEntry entry) {
        entry.order = st.next_order++;
        st.queue.push(std::move(entry));
    }

    // -------------------------------------------------------------- gates

    // innermost closed ancestor sphere whose gate does not exempt `fs`
    std::optional<SphereId> freezing_sphere(FlowsystemId fs) const {
        std::optional<SphereId> cur = m.flowsystems[fs].owner;
        while (cur) {
            if (!st.gate_open[*cur] && !controls_gate_of(fs, *cur)) return *cur;
            cur = m.spheres[*cur].parent;
        }
        return std::nullopt;
    }

    bool controls_gate_of(FlowsystemId fs, SphereId sphere) const {
        for (const auto& g : m.gates)
            if (g.controlled == sphere && g.controller == fs) return true;
        return false;
    }

    void apply_gate(SphereId sphere, bool want_open) {
        if (want_open == st.gate_open[sphere]) return;  // idempotent, no record
        st.gate_open[sphere] = want_open;
        emit(want_open ? EventKind::gate_opened : EventKind::gate_closed, m.sphere_path(sphere),
             m.sphere_path(sphere));
        if (want_open) {
            // release deferred work in original order at the current time
            auto& list = st.deferred[sphere];
            while (!list.empty()) {
                QueueEntry entry = std::move(list.front());
                list.pop_front();
                entry.time = st.now;
                schedule(std::move(entry));
            }
        }
    }

    void apply_gate_symbol(const Token& tok) {
        for (const auto& g : m.gates) {
            if (g.controller != tok.fs) continue;
            Value v = tok.attrs.count("value") ? tok.attrs.at("value")
                                               : Value{m.kinds[tok.kind].name};
            if (!is_symbol(v)) continue;
            const std::string& sym = std::get<std::string>(v);
            if (sym == g.close_symbol) apply_gate(g.controlled, false);
            else if (sym == g.open_symbol) apply_gate(g.controlled, true);
        }
    }

    // ----------------------------------------------------------- triggers

    void latch_and_fire_stage(const Token& tok) {
        for (std::size_t ti = 0; ti < m.triggers.size(); ++ti) {
            const TriggerArc& trig = m.triggers[ti];
            auto& ts = st.trigger_states[ti];
            bool touched = false;
            for (std::size_t si = 0; si < trig.sources.size(); ++si) {
                const TriggerSource& src = trig.sources[si];
                if (src.kind != TriggerSource::Kind::stage) continue;
                if (src.fs != tok.fs || src.stage != tok.stage) continue;
                if (src.guard && !evaluate_guard(*src.guard, tok, st.environment)) continue;
                ts.latches[si] = {true, tok.attrs, tok.fs};
                ts.latch_sets[si]++;
                touched = true;
            }
            if (touched) maybe_fire(ti, "t" + std::to_string(tok.id));
        }
    }

    void latch_and_fire_timer(TimerId timer) {
        Token dummy;  // timer sources carry no token attributes
        for (std::size_t ti = 0; ti < m.triggers.size(); ++ti) {
            const TriggerArc& trig = m.triggers[ti];
            auto& ts = st.trigger_states[ti];
            bool touched = false;
            for (std::size_t si = 0; si < trig.sources.size(); ++si) {
                const TriggerSource& src = trig.sources[si];
                if (src.kind != TriggerSource::Kind::timer || src.timer != timer) continue;
                if (src.guard && !evaluate_guard(*src.guard, dummy, st.environment)) continue;
                ts.latches[si] = {true, {}, 0};
                ts.latch_sets[si]++;
                touched = true;
            }
            if (touched) maybe_fire(ti, m.timer_path(timer));
        }
    }

    void maybe_fire(std::size_t ti, const std::string& subject) {
        const TriggerArc& trig = m.triggers[ti];
        auto& ts = st.trigger_states[ti];
        for (const auto& latch : ts.latches)
            if (!latch.set) return;
        ts.fires++;
        for (auto& latch : ts.latches) latch.set = false;
        apply_effect(trig, ts, subject);
    }

    Value eval_template(const Expr& e, const detail::TriggerState& ts) {
        switch (e.op) {
            case Expr::Op::lit_int: return e.int_value;
            case Expr::Op::lit_sym: return e.text;
            case Expr::Op::name:
                for (const auto& latch : ts.latches)
                    if (auto v = lookup(latch.attrs, e.text)) return *v;
                if (auto v = lookup(st.environment, e.text)) return *v;
                return e.text;  // unreachable for validated models
            case Expr::Op::qualified:
                for (const auto& latch : ts.latches) {
                    if (m.flowsystems[latch.fs].name != e.qualifier) continue;
                    if (auto v = lookup(latch.attrs, e.text)) return *v;
                }
                return std::string("nil");
            default: return std::string("nil");
        }
    }

    void apply_effect(const TriggerArc& trig, const detail::TriggerState& ts,
                      const std::string& subject) {
        const TriggerEffect& e = trig.effect;
        switch (e.kind) {
            case EffectKind::inject: {
                EventRecord& rec =
                    emit(EventKind::trigger_fired, subject,
                         m.stage_path(e.inject_fs, e.inject_stage));
                rec.effect = "inject";
                rec.detail_kind = m.kinds[e.inject_kind].name;
                AttrMap attrs;
                for (const auto& a : e.assigns) attrs[a.attr] = eval_template(a.value, ts);
                fill_defaults(attrs, e.inject_kind);
                QueueEntry entry;
                entry.kind = QueueEntry::Kind::materialize;
                entry.time = st.now;
                entry.mat_kind = e.inject_kind;
                entry.mat_fs = e.inject_fs;
                entry.mat_attrs = std::move(attrs);
                schedule(std::move(entry));
                break;
            }
            case EffectKind::start_timer: {
                if (e.timer >= m.timers.size()) break;  // unvalidated model
                EventRecord& rec =
                    emit(EventKind::trigger_fired, subject, m.timer_path(e.timer));
                rec.effect = "start-timer";
                start_timer(e.timer);
                break;
            }
            case EffectKind::open_gate:
            case EffectKind::close_gate: {
                EventRecord& rec =
                    emit(EventKind::trigger_fired, subject, m.sphere_path(e.sphere));
                rec.effect = e.kind == EffectKind::open_gate ? "open-gate" : "close-gate";
                apply_gate(e.sphere, e.kind == EffectKind::open_gate);
                break;
            }
        }
    }

    void fill_defaults(AttrMap& attrs, KindId kind) {
        for (const auto& decl : m.kinds[kind].schema)
            attrs.try_emplace(decl.name, default_value(decl.type));
    }

    // ------------------------------------------------------------- timers

    void start_timer(TimerId id) {
        auto& timer = st.timer_states[id];
        timer.generation++;  // supersedes any pending expiry
        timer.running = true;
        timer.started_at = st.now;
        std::int64_t duration = st.timer_durations[id];
        EventRecord& rec = emit(EventKind::timer_started, m.timer_path(id), m.timer_path(id));
        rec.duration = duration;
        QueueEntry entry;
        entry.kind = QueueEntry::Kind::timer_expire;
        entry.time = st.now + duration;
        entry.timer = id;
        entry.generation = timer.generation;
        schedule(std::move(entry));
    }

    // ------------------------------------------------------------- tokens

    void materialize(const QueueEntry& e) {
        Token tok;
        tok.id = st.next_token++;
        tok.kind = e.mat_kind;
        tok.fs = e.mat_fs;
        tok.stage = Stage::create;
        tok.attrs = e.mat_attrs;
        tok.created_at = st.now;
        emit_token(EventKind::token_created, tok, m.stage_path(tok.fs, Stage::create));
        QueueEntry adv;
        adv.kind = QueueEntry::Kind::advance;
        adv.time = st.now;
        adv.token = tok.id;
        st.live.emplace(tok.id, std::move(tok));
        schedule(std::move(adv));
    }

    void retire(Token& tok) {
        emit_token(EventKind::token_retired, tok, m.stage_path(tok.fs, tok.stage));
        st.live.erase(tok.id);
    }

    void advance(Token& tok) {
        // completing a stage: gate binding first, then triggers, then motion
        if (tok.stage == Stage::process) apply_gate_symbol(tok);
        latch_and_fire_stage(tok);
        if (!st.live.count(tok.id)) return;  // defensive; effects never retire

        if (tok.stage == Stage::transfer && !tok.inbound) {
            for (const auto& flow : m.flows) {
                if (flow.from != tok.fs) continue;
                cross(tok, flow);
                return;
            }
            retire(tok);
            return;
        }
        const Flowsystem& fs = m.flowsystems[tok.fs];
        for (const auto& arc : fs.intra_arcs) {
            if (arc.from != tok.stage) continue;
            emit_token(EventKind::stage_exited, tok, m.stage_path(tok.fs, tok.stage));
            tok.stage = arc.to;
            if (arc.to == Stage::transfer) tok.inbound = false;
            emit_token(EventKind::stage_entered, tok, m.stage_path(tok.fs, tok.stage));
            QueueEntry adv;
            adv.kind = QueueEntry::Kind::advance;
            adv.time = st.now;
            adv.token = tok.id;
            schedule(std::move(adv));
            return;
        }
        retire(tok);
    }

    void cross(Token& tok, const FlowArc& flow) {
        std::string from = m.stage_path(flow.from, Stage::transfer);
        std::string to = m.stage_path(flow.to, Stage::transfer);
        std::int64_t delay = flow.delay.value_or(st.scenario.channel_delay);

        if (st.scenario.drop.num > 0) {
            // the PRNG is consulted only when loss is possible (D7)
            std::uint64_t draw = st.prng();
            if (draw % static_cast<std::uint64_t>(st.scenario.drop.den) <
                static_cast<std::uint64_t>(st.scenario.drop.num)) {
                emit_token(EventKind::stage_exited, tok, from);
                EventRecord& rec = emit_token(EventKind::channel_dropped, tok, to);
                rec.from = from;
                rec.to = to;
                retire(tok);
                return;
            }
        }
        emit_token(EventKind::stage_exited, tok, from);
        EventRecord& rec = emit_token(EventKind::channel_crossed, tok, to);
        rec.from = from;
        rec.to = to;
        tok.fs = flow.to;
        tok.stage = Stage::transfer;
        tok.inbound = true;
        emit_token(EventKind::stage_entered, tok, to);
        QueueEntry adv;
        adv.kind = QueueEntry::Kind::advance;
        adv.time = st.now + delay;
        adv.token = tok.id;
        schedule(std::move(adv));
    }

    // ----------------------------------------------------------- dispatch

    bool process_one() {
        if (st.queue.empty()) return false;
        QueueEntry e = st.queue.top();
        st.queue.pop();
        st.now = e.time;
        switch (e.kind) {
            case QueueEntry::Kind::inject:
            case QueueEntry::Kind::materialize: {
                if (auto frozen = freezing_sphere(e.mat_fs)) {
                    st.deferred[*frozen].push_back(std::move(e));
                    return true;
                }
                materialize(e);
                return true;
            }
            case QueueEntry::Kind::advance: {
                auto it = st.live.find(e.token);
                if (it == st.live.end()) return true;
                if (auto frozen = freezing_sphere(it->second.fs)) {
                    st.deferred[*frozen].push_back(std::move(e));
                    return true;
                }
                advance(it->second);
                return true;
            }
            case QueueEntry::Kind::timer_expire: {
                auto& timer = st.timer_states[e.timer];
                if (!timer.running || timer.generation != e.generation) return true;
                timer.running = false;
                emit(EventKind::timer_expired, m.timer_path(e.timer), m.timer_path(e.timer));
                latch_and_fire_timer(e.timer);
                return true;
            }
        }
        return true;
    }
};

Value eval_literal(const Expr& e, const std::string& scenario) {
    if (e.op == Expr::Op::lit_int) return e.int_value;
    if (e.op == Expr::Op::lit_sym) return e.text;
    throw ScenarioError("scenario '" + scenario + "': injection attributes must be literals");
}

}  // namespace

SimState init(const Model& model, const Scenario& scenario) {
    SimState st;
    st.model = &model;
    st.scenario = scenario;
    st.environment = scenario.effective_environment();
    st.gate_open.assign(model.spheres.size(), true);
    st.deferred.resize(model.spheres.size());
    st.trigger_states.resize(model.triggers.size());
    for (std::size_t i = 0; i < model.triggers.size(); ++i) {
        st.trigger_states[i].latches.resize(model.triggers[i].sources.size());
        st.trigger_states[i].latch_sets.assign(model.triggers[i].sources.size(), 0);
    }
    st.timer_states.resize(model.timers.size());
    st.timer_durations.resize(model.timers.size());
    for (TimerId i = 0; i < model.timers.size(); ++i) {
        const TimerDecl& t = model.timers[i];
        std::int64_t duration = t.base;
        if (!t.scale_env.empty()) {
            auto it = st.environment.find(t.scale_env);
            if (it == st.environment.end() || !is_int(it->second))
                throw ScenarioError("scenario '" + scenario.name + "': timer '" +
                                    model.timer_path(i) + "' needs integer environment value '" +
                                    t.scale_env + "'");
            duration *= std::get<std::int64_t>(it->second);
        }
        if (duration <= 0)
            throw ScenarioError("scenario '" + scenario.name + "': timer '" +
                                model.timer_path(i) + "' duration must be positive");
        st.timer_durations[i] = duration;
    }
    st.prng.seed(scenario.seed);
    st.trace.scenario = scenario.name;
    st.trace.seed = scenario.seed;
    st.trace.seed_relevant = scenario.drop.num > 0;

    Engine engine(st);
    for (const auto& inj : scenario.injections) {
        PathTarget target;
        try {
            target = resolve_path(model, inj.fs_path);
        } catch (const PathError& e) {
            throw ScenarioError("scenario '" + scenario.name + "': " + e.what());
        }
        if (target.kind != PathTarget::Kind::flowsystem)
            throw ScenarioError("scenario '" + scenario.name + "': injection path '" +
                                inj.fs_path + "' is not a flowsystem");
        const Flowsystem& fs = model.flowsystems[target.fs];
        auto kind = model.kind_id(inj.kind);
        if (!kind)
            throw ScenarioError("scenario '" + scenario.name + "': unknown kind '" + inj.kind +
                                "'");
        if (fs.kind != *kind)
            throw ScenarioError("scenario '" + scenario.name + "': kind '" + inj.kind +
                                "' does not match flowsystem '" + inj.fs_path + "'");
        if (!fs.stages.count(Stage::create))
            throw ScenarioError("scenario '" + scenario.name + "': flowsystem '" + inj.fs_path +
                                "' has no create stage");
        AttrMap attrs;
        const FlowthingKind& kd = model.kinds[*kind];
        for (const auto& a : inj.attrs) {
            const AttrDecl* decl = kd.find_attr(a.attr);
            if (!decl)
                throw ScenarioError("scenario '" + scenario.name + "': attribute '" + a.attr +
                                    "' is not in the schema of kind '" + kd.name + "'");
            Value v = eval_literal(a.value, scenario.name);
            bool ok = decl->type == AttrType::integer ? is_int(v) : is_symbol(v);
            if (!ok)
                throw ScenarioError("scenario '" + scenario.name + "': attribute '" + a.attr +
                                    "' has the wrong type for kind '" + kd.name + "'");
            attrs[a.attr] = std::move(v);
        }
        for (const auto& decl : kd.schema) attrs.try_emplace(decl.name, default_value(decl.type));

        QueueEntry entry;
        entry.kind = QueueEntry::Kind::inject;
        entry.time = inj.time;
        entry.mat_kind = *kind;
        entry.mat_fs = target.fs;
        entry.mat_attrs = std::move(attrs);
        engine.schedule(std::move(entry));
    }
    return st;
}

std::optional<EventRecord> step(SimState& state) {
    Engine engine(state);
    std::size_t before = state.trace.events.size();
    while (state.trace.events.size() == before)
        if (!engine.process_one()) return std::nullopt;
    return state.trace.events.back();
}

Trace run(const Model& model, const Scenario& scenario) {
    SimState st = init(model, scenario);
    Engine engine(st);
    for (;;) {
        if (static_cast<std::int64_t>(st.trace.events.size()) >= scenario.max_events) {
            st.trace.outcome = Outcome::event_limit;
            break;
        }
        if (st.queue.empty()) {
            st.trace.outcome = Outcome::quiescent;
            break;
        }
        if (st.queue.top().time > scenario.max_time) {
            st.trace.outcome = Outcome::time_limit;
            break;
        }
        engine.process_one();
    }
    return std::move(st.trace);
}

}  // namespace flowkit
