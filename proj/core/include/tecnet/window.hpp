#pragma once

#include <cstddef>
#include <vector>

#include "tecnet/tensor.hpp"

namespace tecnet {

/// How a token grid is tiled into attention windows.
struct WindowPlan {
  std::size_t window = 0;  // effective window edge
  std::size_t shift = 0;   // cyclic shift, 0 when unshifted
  std::size_t padded_h = 0;
  std::size_t padded_w = 0;

  std::size_t windows() const { return (padded_h / window) * (padded_w / window); }
};

/// Plans windows of edge M over an h x w grid. A grid no larger than M in
/// either direction collapses to a single window of edge min(h, w) and no
/// shift; otherwise the grid is zero-padded to a multiple of M and a shifted
/// layer rolls by floor(M / 2).
WindowPlan plan_windows(std::size_t h, std::size_t w, std::size_t window, bool shifted);

/// C x h x w -> nw x C x M x M in row-major window order.
Tensor window_partition(const Tensor& x, std::size_t window);
/// Inverse of window_partition for an h x w grid.
Tensor window_reverse(const Tensor& windows, std::size_t h, std::size_t w);

/// Toroidal roll by (-s, -s); cyclic_unshift rolls back by (+s, +s).
Tensor cyclic_shift(const Tensor& x, std::size_t s);
Tensor cyclic_unshift(const Tensor& x, std::size_t s);

/// Additive mask [nw x M^2 x M^2]: 0 for token pairs from the same region of
/// the shifted canvas, -1e9 otherwise. All zeros when s == 0.
Tensor shift_mask(std::size_t h, std::size_t w, std::size_t window, std::size_t s);

/// Region id (0..8) of every pixel of the shifted h x w canvas, row-major.
std::vector<int> shift_regions(std::size_t h, std::size_t w, std::size_t window, std::size_t s);

/// Index into a (2T-1)^2 relative-displacement table for every pair of the
/// M^2 tokens of an M x M window, with T >= M the table's window edge.
std::vector<std::size_t> relative_position_index(std::size_t window, std::size_t table_window);

inline constexpr double kMaskedLogit = -1e9;

}  // namespace tecnet
