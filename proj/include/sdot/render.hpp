#pragma once

#include <string>

#include "sdot/io.hpp"

namespace sdot::render {

/// SVG rendering of a solve result. mode "diagram" draws the domain, the
/// cells (color keyed by site index, matching each site's marker) and the
/// sites; mode "potential" draws a heat map of u_h on a grid. Byte output is
/// deterministic for fixed inputs; empty cells are omitted from the drawing
/// and listed in the embedded metadata.
std::string render_svg(const io::SolveResult& result, const std::string& mode);

} // namespace sdot::render
