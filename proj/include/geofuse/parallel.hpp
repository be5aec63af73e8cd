#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace geofuse {

// Tile-parallel worker count used by the per-pixel operations. Every output
// pixel is a pure function of the immutable inputs, so results are identical
// for any worker count.
void set_thread_count(int n);
int thread_count();

// Runs fn(y) for y in [0, height), split into contiguous row chunks.
void parallel_rows(int height, const std::function<void(int)>& fn);

}  // namespace geofuse
