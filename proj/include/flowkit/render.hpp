#pragma once

#include <stdexcept>
#include <string>

#include "flowkit/engine.hpp"
#include "flowkit/model.hpp"

namespace flowkit {

struct RenderError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// DOT text: one cluster per sphere (nested), one subcluster per
/// flowsystem, one node per stage; solid edges for flow arcs, dashed for
/// trigger arcs, double-bordered subclusters for state-category
/// flowsystems. Emission order is sorted by path, so output is a function
/// of the model value alone. Throws RenderError when the model has
/// validation errors.
std::string render_graph(const Model& model);

/// Message-sequence text: header line, then one
///   "t<time> <from> -> <to> : <kind>"
/// line per channel crossing between flowsystems owned by different
/// top-level spheres; dropped crossings get a " (lost)" suffix.
std::string render_msc(const Trace& trace);

}  // namespace flowkit
