#pragma once

#include <string>
#include <vector>

#include "lifeformer/grid.hpp"

namespace lifeformer {

/// A named cell drawing: rows of '.'/'O' characters, rectangular.
struct PatternDef {
  std::string name;
  std::string rows;
  int height() const;
  int width() const;
};

/// The canonical testing-set drawings, in fixed order.
const std::vector<PatternDef>& named_patterns();

const PatternDef& pattern_by_name(const std::string& name);

/// Places the drawing centered on an S-by-S torus. Throws if the drawing
/// does not fit.
Grid place_centered(const PatternDef& def, int grid_size);

}  // namespace lifeformer
