#include "tecnet/cost_model.hpp"

#include "tecnet/errors.hpp"

namespace tecnet {

namespace {

void require_positive(const CostModel& m) {
  if (m.h == 0 || m.w == 0 || m.channels == 0 || m.window == 0) {
    throw ConfigError("cost model fields must be positive");
  }
}

}  // namespace

std::uint64_t cost_msa(const CostModel& m) {
  require_positive(m);
  const std::uint64_t hw = m.h * m.w, c = m.channels;
  return 4 * hw * c * c + 2 * hw * hw * c;
}

std::uint64_t cost_swmsa(const CostModel& m) {
  require_positive(m);
  const std::uint64_t hw = m.h * m.w, c = m.channels;
  return 4 * hw * c * c + 2 * m.window * m.window * hw * c;
}

std::uint64_t cost_acam(const CostModel& m) {
  require_positive(m);
  const std::uint64_t hw = m.h * m.w, c = m.channels;
  return hw * c * c / 4 + m.window * m.window * hw * c;
}

}  // namespace tecnet
