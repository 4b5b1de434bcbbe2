#include "lifeformer/grid.hpp"

#include <numeric>
#include <stdexcept>

namespace lifeformer {

Grid::Grid(int size) : size_(size) {
  if (size < 3) {
    throw std::invalid_argument("grid size must be at least 3");
  }
  cells_.assign(static_cast<std::size_t>(size) * size, 0);
}

Grid Grid::from_cells(int size, std::span<const std::uint8_t> cells) {
  Grid g(size);
  if (cells.size() != g.cells_.size()) {
    throw std::invalid_argument("cell count does not match grid size");
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i] > 1) {
      throw std::invalid_argument("cell values must be 0 or 1");
    }
    g.cells_[i] = cells[i];
  }
  return g;
}

Grid Grid::parse_rows(const std::string& text) {
  std::vector<std::string> rows;
  std::string current;
  for (char c : text) {
    if (c == '\n') {
      rows.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) {
    rows.push_back(current);
  }
  const int size = static_cast<int>(rows.size());
  Grid g(size);
  for (int r = 0; r < size; ++r) {
    if (static_cast<int>(rows[r].size()) != size) {
      throw std::invalid_argument("grid rows must form a square");
    }
    for (int c = 0; c < size; ++c) {
      const char ch = rows[r][static_cast<std::size_t>(c)];
      if (ch != '0' && ch != '1') {
        throw std::invalid_argument("grid rows must contain only 0/1");
      }
      g.set(r, c, ch == '1' ? 1 : 0);
    }
  }
  return g;
}

void Grid::set(int row, int col, std::uint8_t value) {
  if (row < 0 || row >= size_ || col < 0 || col >= size_) {
    throw std::out_of_range("cell index out of range");
  }
  if (value > 1) {
    throw std::invalid_argument("cell values must be 0 or 1");
  }
  cells_[static_cast<std::size_t>(row) * size_ + col] = value;
}

int Grid::live_count() const {
  return std::accumulate(cells_.begin(), cells_.end(), 0);
}

std::string Grid::to_rows() const {
  std::string out;
  out.reserve(static_cast<std::size_t>(size_) * (size_ + 1));
  for (int r = 0; r < size_; ++r) {
    if (r != 0) {
      out.push_back('\n');
    }
    for (int c = 0; c < size_; ++c) {
      out.push_back(at(r, c) ? '1' : '0');
    }
  }
  return out;
}

Grid shift(const Grid& g, int drow, int dcol) {
  const int s = g.size();
  Grid out(s);
  const int dr = ((drow % s) + s) % s;
  const int dc = ((dcol % s) + s) % s;
  for (int r = 0; r < s; ++r) {
    for (int c = 0; c < s; ++c) {
      out.set((r + dr) % s, (c + dc) % s, g.at(r, c));
    }
  }
  return out;
}

Grid rotate90(const Grid& g) {
  const int s = g.size();
  Grid out(s);
  for (int r = 0; r < s; ++r) {
    for (int c = 0; c < s; ++c) {
      out.set(c, s - 1 - r, g.at(r, c));
    }
  }
  return out;
}

Grid flip_horizontal(const Grid& g) {
  const int s = g.size();
  Grid out(s);
  for (int r = 0; r < s; ++r) {
    for (int c = 0; c < s; ++c) {
      out.set(r, s - 1 - c, g.at(r, c));
    }
  }
  return out;
}

Grid complement(const Grid& g) {
  const int s = g.size();
  Grid out(s);
  for (int r = 0; r < s; ++r) {
    for (int c = 0; c < s; ++c) {
      out.set(r, c, g.at(r, c) ? 0 : 1);
    }
  }
  return out;
}

}  // namespace lifeformer
