#pragma once

#include <string>

#include <json.hpp>

#include "spineforge/spine.hpp"

namespace spineforge::io {

using json = nlohmann::ordered_json;

// Spine schema: kind, d, k, relator (a..z/A..Z string), copies, partition
// (directed L-edge id lists), fibers (derived strand lists, for integrity
// checks by `verify`).
json spine_to_json(const spine::Spine& s);
spine::Spine spine_from_json(const json& j);

json report_to_json(const spine::SpineReport& r);

// Graph schema per the library interface: {vertices, edges: [{u, v, label}],
// partition: [[edgeIds]]}.
json graph_to_json(const rosegraph::LabeledGraph& g,
                   const rosegraph::EdgePartition* partition = nullptr);
rosegraph::LabeledGraph graph_from_json(const json& j);

// DOT export of the quotient: glued edges (full fibers) red, free black.
std::string spine_dot(const spine::Spine& s);
std::string graph_dot(const rosegraph::LabeledGraph& g);

// Atomic file write (temp + rename).
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace spineforge::io
