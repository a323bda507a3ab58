#pragma once

#include <cstdint>

namespace tecnet {

/// Token-grid extents h x w, channel width C and window edge M.
struct CostModel {
  std::uint64_t h = 1;
  std::uint64_t w = 1;
  std::uint64_t channels = 1;
  std::uint64_t window = 1;
};

/// Global multi-head self-attention: 4hwC^2 + 2(hw)^2 C.
std::uint64_t cost_msa(const CostModel& m);
/// (Shifted-)window self-attention: 4hwC^2 + 2M^2 hwC.
std::uint64_t cost_swmsa(const CostModel& m);
/// Complementary window attention with 8x compact projections: hwC^2/4 + M^2 hwC.
/// hwC^2/4 is rounded down when it is not an integer.
std::uint64_t cost_acam(const CostModel& m);

}  // namespace tecnet
