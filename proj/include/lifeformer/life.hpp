#pragma once

#include <vector>

#include "lifeformer/grid.hpp"

namespace lifeformer {

/// Number of live cells among the 8 Moore neighbors of (row, col), with
/// toroidal wrap. The cell itself is excluded.
int neighbor_count(const Grid& g, int row, int col);

/// One synchronous update under B3/S23: a live cell survives with 2 or 3
/// live neighbors, a dead cell is born with exactly 3, everything else dies
/// or stays dead. Double-buffered; the input is untouched.
Grid step(const Grid& g);

/// Reference implementation of `step`, written independently as a plain
/// double loop with explicit modular arithmetic. Kept separate so the two
/// can be cross-checked against each other.
Grid oracle_step(const Grid& g);

/// states[k] = step applied k times; length steps + 1, states[0] = ic.
std::vector<Grid> rollout(const Grid& ic, int steps);

}  // namespace lifeformer
