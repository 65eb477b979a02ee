#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>

namespace flowkit {

/// The six generic stages. `receive` is surface sugar for Arrive+Accept and
/// never appears in a loaded model.
enum class Stage { create, release, transfer, arrive, accept, process };

inline constexpr std::array<Stage, 6> all_stages = {
    Stage::create, Stage::release, Stage::transfer,
    Stage::arrive, Stage::accept, Stage::process,
};

enum class KindCategory { normal, state };

std::string stage_name(Stage s);
std::optional<Stage> stage_from_name(const std::string& name);

/// The canonical successor set for intra-flowsystem arcs. State-category
/// kinds are restricted to Create and Process.
std::set<Stage> legal_successors(Stage from, KindCategory category);

/// True iff (from -> to) is a member of the canonical intra-arc set for the
/// given kind category.
bool intra_arc_legal(Stage from, Stage to, KindCategory category);

}  // namespace flowkit
