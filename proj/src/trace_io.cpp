#include "flowkit/trace_io.hpp"

#include <sstream>

#include <json.hpp>

namespace flowkit {

namespace {

using Json = nlohmann::ordered_json;

Json value_json(const Value& v) {
    if (is_int(v)) return std::get<std::int64_t>(v);
    return std::get<std::string>(v);
}

Value value_from_json(const Json& j) {
    if (j.is_number_integer()) return j.get<std::int64_t>();
    if (j.is_string()) return j.get<std::string>();
    throw TraceParseError("attribute values must be integers or strings");
}

Json detail_json(const EventRecord& e) {
    Json detail = Json::object();
    switch (e.kind) {
        case EventKind::token_created:
        case EventKind::stage_entered:
        case EventKind::stage_exited:
        case EventKind::token_retired:
            detail["kind"] = e.detail_kind;
            break;
        case EventKind::channel_crossed:
        case EventKind::channel_dropped:
            detail["kind"] = e.detail_kind;
            detail["from"] = e.from;
            detail["to"] = e.to;
            break;
        case EventKind::trigger_fired:
            detail["effect"] = e.effect;
            if (!e.detail_kind.empty()) detail["kind"] = e.detail_kind;
            break;
        case EventKind::timer_started:
            detail["duration"] = e.duration;
            break;
        default:
            break;
    }
    bool token_event = e.kind == EventKind::token_created || e.kind == EventKind::stage_entered ||
                       e.kind == EventKind::stage_exited || e.kind == EventKind::channel_crossed ||
                       e.kind == EventKind::channel_dropped || e.kind == EventKind::token_retired;
    if (token_event) {
        Json attrs = Json::object();
        for (const auto& [k, v] : e.attrs) attrs[k] = value_json(v);
        detail["attrs"] = attrs;
    }
    return detail;
}

}  // namespace

std::string serialize_trace(const Trace& trace) {
    std::ostringstream out;
    Json header = Json::object();
    header["scenario"] = trace.scenario;
    if (trace.seed_relevant) header["seed"] = trace.seed;
    out << header.dump() << '\n';
    for (const auto& e : trace.events) {
        Json rec = Json::object();
        rec["time"] = e.time;
        rec["seq"] = e.seq;
        rec["kind"] = event_kind_name(e.kind);
        rec["subject"] = e.subject;
        rec["place"] = e.place;
        rec["detail"] = detail_json(e);
        out << rec.dump() << '\n';
    }
    Json footer = Json::object();
    footer["outcome"] = outcome_name(trace.outcome);
    out << footer.dump() << '\n';
    return out.str();
}

Trace parse_trace(const std::string& text) {
    Trace trace;
    std::istringstream in(text);
    std::string line;
    bool saw_header = false, saw_footer = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::parse_error& e) {
            throw TraceParseError(std::string("bad trace line: ") + e.what());
        }
        if (!saw_header) {
            if (!j.contains("scenario")) throw TraceParseError("missing trace header");
            trace.scenario = j["scenario"].get<std::string>();
            if (j.contains("seed")) {
                trace.seed = j["seed"].get<std::uint64_t>();
                trace.seed_relevant = true;
            }
            saw_header = true;
            continue;
        }
        if (j.contains("outcome")) {
            std::string name = j["outcome"].get<std::string>();
            if (name == "quiescent") trace.outcome = Outcome::quiescent;
            else if (name == "time-limit") trace.outcome = Outcome::time_limit;
            else if (name == "event-limit") trace.outcome = Outcome::event_limit;
            else throw TraceParseError("unknown outcome '" + name + "'");
            saw_footer = true;
            continue;
        }
        EventRecord e;
        e.time = j.at("time").get<std::int64_t>();
        e.seq = j.at("seq").get<std::int64_t>();
        auto kind = event_kind_from_name(j.at("kind").get<std::string>());
        if (!kind) throw TraceParseError("unknown event kind");
        e.kind = *kind;
        e.subject = j.at("subject").get<std::string>();
        e.place = j.at("place").get<std::string>();
        const Json& detail = j.at("detail");
        if (detail.contains("kind")) e.detail_kind = detail["kind"].get<std::string>();
        if (detail.contains("from")) e.from = detail["from"].get<std::string>();
        if (detail.contains("to")) e.to = detail["to"].get<std::string>();
        if (detail.contains("effect")) e.effect = detail["effect"].get<std::string>();
        if (detail.contains("duration")) e.duration = detail["duration"].get<std::int64_t>();
        if (detail.contains("attrs"))
            for (auto it = detail["attrs"].begin(); it != detail["attrs"].end(); ++it)
                e.attrs[it.key()] = value_from_json(it.value());
        trace.events.push_back(std::move(e));
    }
    if (!saw_header || !saw_footer) throw TraceParseError("truncated trace");
    return trace;
}

}  // namespace flowkit
