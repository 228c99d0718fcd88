#pragma once

#include <string>
#include <vector>

namespace pedplan {

// Renders one tick of a trace (header line + tick lines) as a standalone SVG.
// Pedestrian trails cover the preceding ticks; uncertainty ellipses at
// 0.2/1/3 sigma appear when the trace carries predictions. Output bytes are
// a pure function of the input.
std::string render_svg(const std::vector<std::string>& trace_lines, int tick);

}  // namespace pedplan
