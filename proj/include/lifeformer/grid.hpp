#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lifeformer {

/// A square binary cell lattice with toroidal adjacency. Cells are stored
/// row-major, one byte per cell, each exactly 0 or 1.
class Grid {
 public:
  /// All-dead grid. Sides smaller than 3 are rejected: the Moore
  /// neighborhood would self-overlap.
  explicit Grid(int size);

  static Grid from_cells(int size, std::span<const std::uint8_t> cells);

  /// Parses S lines of '0'/'1' characters (the debugging dump form).
  static Grid parse_rows(const std::string& text);

  int size() const { return size_; }

  std::uint8_t at(int row, int col) const {
    return cells_[static_cast<std::size_t>(row) * size_ + col];
  }

  void set(int row, int col, std::uint8_t value);

  const std::vector<std::uint8_t>& cells() const { return cells_; }

  int live_count() const;

  /// S rows of '0'/'1' joined by '\n' (no trailing newline).
  std::string to_rows() const;

  bool operator==(const Grid& other) const = default;

 private:
  int size_;
  std::vector<std::uint8_t> cells_;
};

Grid shift(const Grid& g, int drow, int dcol);
Grid rotate90(const Grid& g);
Grid flip_horizontal(const Grid& g);
Grid complement(const Grid& g);

}  // namespace lifeformer
