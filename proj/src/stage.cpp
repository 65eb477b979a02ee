#include "flowkit/stage.hpp"

namespace flowkit {

std::string stage_name(Stage s) {
    switch (s) {
        case Stage::create: return "create";
        case Stage::release: return "release";
        case Stage::transfer: return "transfer";
        case Stage::arrive: return "arrive";
        case Stage::accept: return "accept";
        case Stage::process: return "process";
    }
    return "?";
}

std::optional<Stage> stage_from_name(const std::string& name) {
    for (Stage s : all_stages)
        if (stage_name(s) == name) return s;
    return std::nullopt;
}

std::set<Stage> legal_successors(Stage from, KindCategory category) {
    std::set<Stage> out;
    switch (from) {
        case Stage::create: out = {Stage::release, Stage::process}; break;
        case Stage::release: out = {Stage::transfer}; break;
        case Stage::transfer: out = {Stage::arrive}; break;
        case Stage::arrive: out = {Stage::accept}; break;
        case Stage::accept: out = {Stage::process, Stage::release}; break;
        case Stage::process: out = {Stage::release}; break;
    }
    if (category == KindCategory::state) {
        std::set<Stage> restricted;
        if (from == Stage::create || from == Stage::process)
            for (Stage s : out)
                if (s == Stage::create || s == Stage::process) restricted.insert(s);
        return restricted;
    }
    return out;
}

bool intra_arc_legal(Stage from, Stage to, KindCategory category) {
    return legal_successors(from, category).count(to) > 0;
}

}  // namespace flowkit
