#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "tecnet/config.hpp"
#include "tecnet/parameters.hpp"

namespace tecnet {

/// (module key, count) rows in network order; module keys match
/// TecNet::module_of of the parameter names and the MAC labels of forward().
using ModuleCounts = std::vector<std::pair<std::string, std::uint64_t>>;

std::uint64_t total_of(const ModuleCounts& rows);

/// Closed-form parameter counts per module.
ModuleCounts count_params(const TecNetConfig& cfg);
/// Closed-form multiply-accumulates of one forward pass per module, at the
/// configured input size.
ModuleCounts count_flops(const TecNetConfig& cfg);

/// Groups an enumerated parameter list by module key, in first-seen order.
ModuleCounts enumerate_params(const ParameterList& params);

/// One row per attention layer and branch: module,branch,formula_macs,actual_macs.
struct AttentionMacRow {
  std::string module;
  std::string branch;
  std::uint64_t formula_macs = 0;
  std::uint64_t actual_macs = 0;
};
std::vector<AttentionMacRow> attention_mac_rows(const TecNetConfig& cfg);
void write_attention_mac_csv(std::ostream& os, const std::vector<AttentionMacRow>& rows);

/// Closed-form attention costs of one stage grid.
struct StageCost {
  std::size_t stage = 0;
  std::uint64_t h = 0, w = 0, channels = 0, window = 0;
  std::uint64_t msa = 0, swmsa = 0, acam = 0;
};
std::vector<StageCost> stage_costs(const TecNetConfig& cfg);

/// Parameter totals of one on/off combination of the three ablation toggles,
/// with the total predicted from the all-off baseline plus per-component deltas.
struct AblationRow {
  bool use_ddconv = false;
  bool use_acam = false;
  bool use_lpm = false;
  std::uint64_t params = 0;
  std::int64_t predicted_delta = 0;  // relative to all toggles off
};

/// Per-component parameter deltas of switching each toggle on, computed
/// layer by layer (DDConv vs plain 3x3 convolution, complementary vs plain
/// window attention, ghost vs dense feed-forward).
struct AblationDeltas {
  std::int64_t ddconv = 0;
  std::int64_t acam = 0;
  std::int64_t lpm = 0;
};
AblationDeltas ablation_deltas(const TecNetConfig& cfg);
std::vector<AblationRow> ablation_table(const TecNetConfig& cfg);

/// Human-readable report: parameter and MAC tables plus attention costs.
void write_analysis(std::ostream& os, const TecNetConfig& cfg);

}  // namespace tecnet
