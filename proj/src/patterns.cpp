#include "lifeformer/patterns.hpp"

#include <stdexcept>

namespace lifeformer {
namespace {

// Canonical drawings. These are the versioned source of truth for the named
// testing-set initial conditions; placements are produced by place_centered.
//
// cloverleaf: a 24-cell period-2 oscillator with fourfold mirror symmetry,
// stored in its four-lobed phase.
//
// hwss: the heavyweight spaceship stands in for the hammerhead slot; it is
// the largest of the standard orthogonal c/2 spaceships.
const std::vector<PatternDef> kPatterns = {
    {"glider",
     ".O.\n"
     "..O\n"
     "OOO"},
    {"cloverleaf",
     ".O.....O.\n"
     "O..O.O..O\n"
     "O..O.O..O\n"
     "..O...O..\n"
     ".........\n"
     ".........\n"
     ".........\n"
     "..O...O..\n"
     "O..O.O..O\n"
     "O..O.O..O\n"
     ".O.....O."},
    {"hwss",
     "..OO...\n"
     "O....O.\n"
     "......O\n"
     "O.....O\n"
     ".OOOOOO"},
    {"blinkers",
     "OOO.....\n"
     "........\n"
     ".....OOO\n"
     "........\n"
     "OOO....."},
    {"r_pentomino",
     ".OO\n"
     "OO.\n"
     ".O."},
};

std::vector<std::string> split_rows(const std::string& rows) {
  std::vector<std::string> out;
  std::string current;
  for (char c : rows) {
    if (c == '\n') {
      out.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) {
    out.push_back(current);
  }
  return out;
}

}  // namespace

int PatternDef::height() const {
  return static_cast<int>(split_rows(rows).size());
}

int PatternDef::width() const {
  const auto lines = split_rows(rows);
  return lines.empty() ? 0 : static_cast<int>(lines[0].size());
}

const std::vector<PatternDef>& named_patterns() { return kPatterns; }

const PatternDef& pattern_by_name(const std::string& name) {
  for (const auto& p : kPatterns) {
    if (p.name == name) {
      return p;
    }
  }
  throw std::invalid_argument("unknown pattern: " + name);
}

Grid place_centered(const PatternDef& def, int grid_size) {
  const auto lines = split_rows(def.rows);
  const int h = static_cast<int>(lines.size());
  int w = 0;
  for (const auto& line : lines) {
    w = std::max(w, static_cast<int>(line.size()));
  }
  if (h > grid_size || w > grid_size) {
    throw std::invalid_argument("pattern " + def.name + " does not fit a " +
                                std::to_string(grid_size) + "x" +
                                std::to_string(grid_size) + " grid");
  }
  Grid g(grid_size);
  const int r0 = (grid_size - h) / 2;
  const int c0 = (grid_size - w) / 2;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < static_cast<int>(lines[r].size()); ++c) {
      if (lines[r][static_cast<std::size_t>(c)] == 'O') {
        g.set(r0 + r, c0 + c, 1);
      }
    }
  }
  return g;
}

}  // namespace lifeformer
