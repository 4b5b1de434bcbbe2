#include "lifeformer/life.hpp"

#include <stdexcept>

namespace lifeformer {

int neighbor_count(const Grid& g, int row, int col) {
  const int s = g.size();
  if (row < 0 || row >= s || col < 0 || col >= s) {
    throw std::out_of_range("neighbor_count index out of range");
  }
  const int up = (row + s - 1) % s;
  const int down = (row + 1) % s;
  const int left = (col + s - 1) % s;
  const int right = (col + 1) % s;
  return g.at(up, left) + g.at(up, col) + g.at(up, right) +
         g.at(row, left) + g.at(row, right) +
         g.at(down, left) + g.at(down, col) + g.at(down, right);
}

Grid step(const Grid& g) {
  const int s = g.size();
  Grid next(s);
  for (int r = 0; r < s; ++r) {
    const int up = (r + s - 1) % s;
    const int down = (r + 1) % s;
    for (int c = 0; c < s; ++c) {
      const int left = (c + s - 1) % s;
      const int right = (c + 1) % s;
      const int n = g.at(up, left) + g.at(up, c) + g.at(up, right) +
                    g.at(r, left) + g.at(r, right) +
                    g.at(down, left) + g.at(down, c) + g.at(down, right);
      const bool alive = g.at(r, c) != 0;
      next.set(r, c, (n == 3 || (alive && n == 2)) ? 1 : 0);
    }
  }
  return next;
}

Grid oracle_step(const Grid& g) {
  // Deliberately naive: visit every neighbor offset and reduce the rules
  // from the per-cell transition table, with no shared index math.
  const int s = g.size();
  Grid next(s);
  for (int r = 0; r < s; ++r) {
    for (int c = 0; c < s; ++c) {
      int live_neighbors = 0;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) {
            continue;
          }
          const int rr = ((r + dr) % s + s) % s;
          const int cc = ((c + dc) % s + s) % s;
          if (g.at(rr, cc) == 1) {
            ++live_neighbors;
          }
        }
      }
      std::uint8_t out;
      if (g.at(r, c) == 1) {
        out = (live_neighbors == 2 || live_neighbors == 3) ? 1 : 0;
      } else {
        out = (live_neighbors == 3) ? 1 : 0;
      }
      next.set(r, c, out);
    }
  }
  return next;
}

std::vector<Grid> rollout(const Grid& ic, int steps) {
  if (steps < 0) {
    throw std::invalid_argument("rollout steps must be >= 0");
  }
  std::vector<Grid> states;
  states.reserve(static_cast<std::size_t>(steps) + 1);
  states.push_back(ic);
  for (int k = 0; k < steps; ++k) {
    states.push_back(step(states.back()));
  }
  return states;
}

}  // namespace lifeformer
