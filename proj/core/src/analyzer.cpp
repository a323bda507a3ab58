#include "tecnet/analyzer.hpp"

#include <cstdio>
#include <ostream>

#include "tecnet/attention.hpp"
#include "tecnet/cost_model.hpp"
#include "tecnet/layers.hpp"
#include "tecnet/model.hpp"
#include "tecnet/transformer_block.hpp"

namespace tecnet {

namespace {

std::string key(const char* branch, const char* part, std::size_t i) {
  return std::string(branch) + "." + part + std::to_string(i);
}

BlockOptions block_options(const TecNetConfig& c, std::size_t stage, std::size_t j) {
  BlockOptions o;
  o.channels = c.stage_width(stage);
  o.heads = c.heads[stage];
  o.window = c.window;
  o.grid_h = o.grid_w = c.stage_grid(stage);
  o.shifted = j % 2 == 1;
  o.use_acam = c.use_acam;
  o.use_lpm = c.use_lpm;
  o.shared_kv = c.shared_kv;
  return o;
}

std::uint64_t cnn_conv_macs(const TecNetConfig& c, std::size_t in, std::size_t out,
                            std::size_t stride, std::size_t grid) {
  const std::uint64_t g = (grid + stride - 1) / stride;
  if (!c.use_ddconv) return 9ull * in * out * g * g;
  DDConvOptions o;
  o.in_channels = in;
  o.out_channels = out;
  o.n_kernels = c.n_kernels;
  o.stride = stride;
  return DDConvLayer::mac_count(o, grid, grid);
}

std::string with_commas(std::uint64_t v) {
  std::string s = std::to_string(v);
  for (int i = static_cast<int>(s.size()) - 3; i > 0; i -= 3) s.insert(static_cast<std::size_t>(i), ",");
  return s;
}

}  // namespace

std::uint64_t total_of(const ModuleCounts& rows) {
  std::uint64_t t = 0;
  for (const auto& r : rows) t += r.second;
  return t;
}

ModuleCounts count_params(const TecNetConfig& c) {
  c.validate();
  const std::uint64_t d = c.base_width, p = c.patch;
  ModuleCounts rows;
  rows.emplace_back("trans.embed", p * p * d + d + LayerNormLayer::parameter_count(d));
  rows.emplace_back("cnn.stem", p * p * d + d);
  for (std::size_t i = 0; i < kStages; ++i) {
    const std::size_t w = c.stage_width(i);
    if (i >= 1 && i <= 3) {
      rows.emplace_back(key("trans", "merge", i), PatchMerging::parameter_count(c.stage_width(i - 1)));
      rows.emplace_back(key("cnn", "down", i), CnnConv::parameter_count(c.stage_width(i - 1), w, c));
    }
    if (i >= 4) {
      rows.emplace_back(key("trans", "expand", i), PatchExpanding::parameter_count(c.stage_width(i - 1)));
      rows.emplace_back(key("cnn", "up", i), Conv2dLayer::parameter_count(c.stage_width(i - 1), w, 3));
      rows.emplace_back(key("trans", "skip", i), LinearLayer::parameter_count(2 * w, w, true));
      rows.emplace_back(key("cnn", "skip", i), Conv2dLayer::parameter_count(2 * w, w, 1));
      rows.emplace_back(key("trans", "fuse", i), Conv2dLayer::parameter_count(2 * w, w, 1));
      rows.emplace_back(key("cnn", "fuse", i), Conv2dLayer::parameter_count(2 * w, w, 1));
    }
    std::uint64_t blocks = 0;
    for (std::size_t j = 0; j < c.layer_numbers[i]; ++j) {
      blocks += TransformerBlock::parameter_count(block_options(c, i, j));
    }
    rows.emplace_back(key("trans", "stage", i), blocks);
    rows.emplace_back(key("cnn", "body", i), CnnConv::parameter_count(w, w, c));
  }
  rows.emplace_back("head.cnn", Conv2dLayer::parameter_count(d, c.num_classes, 1));
  rows.emplace_back("head.trans", Conv2dLayer::parameter_count(d, c.num_classes, 1));
  rows.emplace_back("head.tec", Conv2dLayer::parameter_count(2 * d, c.num_classes, 1));
  return rows;
}

ModuleCounts count_flops(const TecNetConfig& c) {
  c.validate();
  const std::uint64_t d = c.base_width, p = c.patch;
  const std::uint64_t n0 = static_cast<std::uint64_t>(c.stage_grid(0)) * c.stage_grid(0);
  ModuleCounts rows;
  rows.emplace_back("trans.embed", p * p * d * n0);
  rows.emplace_back("cnn.stem", p * p * d * n0);
  for (std::size_t i = 0; i < kStages; ++i) {
    const std::uint64_t w = c.stage_width(i), g = c.stage_grid(i), n = g * g;
    if (i >= 1 && i <= 3) {
      const std::uint64_t cp = c.stage_width(i - 1);
      rows.emplace_back(key("trans", "merge", i), n * 4 * cp * 2 * cp);
      rows.emplace_back(key("cnn", "down", i), cnn_conv_macs(c, cp, w, 2, c.stage_grid(i - 1)));
    }
    if (i >= 4) {
      const std::uint64_t cp = c.stage_width(i - 1), np = n / 4;
      rows.emplace_back(key("trans", "expand", i), np * cp * 2 * cp);
      rows.emplace_back(key("cnn", "up", i), 9 * cp * w * n);
      rows.emplace_back(key("trans", "skip", i), n * 2 * w * w);
      rows.emplace_back(key("cnn", "skip", i), n * 2 * w * w);
      rows.emplace_back(key("trans", "fuse", i), n * 2 * w * w);
      rows.emplace_back(key("cnn", "fuse", i), n * 2 * w * w);
    }
    std::uint64_t blocks = 0;
    for (std::size_t j = 0; j < c.layer_numbers[i]; ++j) {
      blocks += TransformerBlock::mac_count(block_options(c, i, j));
    }
    rows.emplace_back(key("trans", "stage", i), blocks);
    rows.emplace_back(key("cnn", "body", i), cnn_conv_macs(c, w, w, 1, g));
  }
  rows.emplace_back("head.cnn", d * c.num_classes * n0);
  rows.emplace_back("head.trans", d * c.num_classes * n0);
  rows.emplace_back("head.tec", 2 * d * c.num_classes * n0);
  return rows;
}

ModuleCounts enumerate_params(const ParameterList& params) {
  ModuleCounts rows;
  for (const NamedTensor& t : params) {
    const std::string m = TecNet::module_of(t.name);
    if (rows.empty() || rows.back().first != m) {
      bool found = false;
      for (auto& r : rows) {
        if (r.first == m) {
          r.second += t.tensor.numel();
          found = true;
          break;
        }
      }
      if (!found) rows.emplace_back(m, t.tensor.numel());
    } else {
      rows.back().second += t.tensor.numel();
    }
  }
  return rows;
}

std::vector<AttentionMacRow> attention_mac_rows(const TecNetConfig& c) {
  c.validate();
  std::vector<AttentionMacRow> rows;
  if (!c.use_acam) return rows;
  for (std::size_t i = 0; i < kStages; ++i) {
    for (std::size_t j = 0; j < c.layer_numbers[i]; ++j) {
      const BlockOptions b = block_options(c, i, j);
      AcamOptions o;
      o.channels = b.channels;
      o.heads = b.heads;
      o.window = b.window;
      o.grid_h = b.grid_h;
      o.grid_w = b.grid_w;
      o.shifted = b.shifted;
      o.shared_kv = b.shared_kv;
      const AcamMacReport r = AcamLayer::count_actual_macs(o);
      const std::string module = key("trans", "stage", i) + ".block" + std::to_string(j);
      rows.push_back({module, "projection", r.formula_projection, r.projection});
      for (std::size_t k = 0; k < kAcamBranches; ++k) {
        rows.push_back({module, branch_name(static_cast<AcamBranch>(k)), r.formula_attention[k],
                        r.attention[k]});
      }
      rows.push_back({module, "total", r.formula_total(), r.total()});
    }
  }
  return rows;
}

void write_attention_mac_csv(std::ostream& os, const std::vector<AttentionMacRow>& rows) {
  os << "module,branch,formula_macs,actual_macs\n";
  for (const auto& r : rows) {
    os << r.module << ',' << r.branch << ',' << r.formula_macs << ',' << r.actual_macs << '\n';
  }
}

std::vector<StageCost> stage_costs(const TecNetConfig& c) {
  std::vector<StageCost> out;
  for (std::size_t i = 0; i < kStages; ++i) {
    StageCost s;
    s.stage = i;
    s.h = s.w = c.stage_grid(i);
    s.channels = c.stage_width(i);
    s.window = c.window;
    const CostModel m{s.h, s.w, s.channels, s.window};
    s.msa = cost_msa(m);
    s.swmsa = cost_swmsa(m);
    s.acam = cost_acam(m);
    out.push_back(s);
  }
  return out;
}

AblationDeltas ablation_deltas(const TecNetConfig& cfg) {
  TecNetConfig off = cfg;
  off.use_ddconv = off.use_acam = off.use_lpm = false;
  AblationDeltas d;
  auto as_signed = [](std::size_t v) { return static_cast<std::int64_t>(v); };
  TecNetConfig on = off;
  on.use_ddconv = true;
  for (std::size_t i = 0; i < kStages; ++i) {
    const std::size_t w = cfg.stage_width(i);
    d.ddconv += as_signed(CnnConv::parameter_count(w, w, on)) - as_signed(CnnConv::parameter_count(w, w, off));
    if (i >= 1 && i <= 3) {
      const std::size_t cp = cfg.stage_width(i - 1);
      d.ddconv += as_signed(CnnConv::parameter_count(cp, w, on)) -
                  as_signed(CnnConv::parameter_count(cp, w, off));
    }
    for (std::size_t j = 0; j < cfg.layer_numbers[i]; ++j) {
      BlockOptions b = block_options(off, i, j);
      AcamOptions a;
      a.channels = b.channels;
      a.heads = b.heads;
      a.window = b.window;
      a.grid_h = b.grid_h;
      a.grid_w = b.grid_w;
      a.shifted = b.shifted;
      a.shared_kv = cfg.shared_kv;
      const WindowMsaOptions m{b.channels, b.heads, b.window, b.grid_h, b.grid_w, b.shifted};
      d.acam += as_signed(AcamLayer::parameter_count(a)) - as_signed(WindowMsaLayer::parameter_count(m));
      d.lpm += as_signed(LpmLayer::parameter_count(b.channels)) -
               as_signed(MlpLayer::parameter_count(b.channels));
    }
  }
  return d;
}

std::vector<AblationRow> ablation_table(const TecNetConfig& cfg) {
  const AblationDeltas d = ablation_deltas(cfg);
  std::vector<AblationRow> rows;
  for (int mask = 0; mask < 8; ++mask) {
    TecNetConfig c = cfg;
    c.use_ddconv = (mask & 1) != 0;
    c.use_acam = (mask & 2) != 0;
    c.use_lpm = (mask & 4) != 0;
    AblationRow r;
    r.use_ddconv = c.use_ddconv;
    r.use_acam = c.use_acam;
    r.use_lpm = c.use_lpm;
    r.params = total_of(count_params(c));
    r.predicted_delta = (c.use_ddconv ? d.ddconv : 0) + (c.use_acam ? d.acam : 0) +
                        (c.use_lpm ? d.lpm : 0);
    rows.push_back(r);
  }
  return rows;
}

void write_analysis(std::ostream& os, const TecNetConfig& c) {
  const ModuleCounts params = count_params(c), macs = count_flops(c);
  char line[160];
  os << "variant " << c.variant << ", input " << c.input_size << "x" << c.input_size
     << ", config hash " << c.hash() << "\n\n";
  std::snprintf(line, sizeof line, "%-16s %16s %18s\n", "module", "params", "macs");
  os << line;
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::snprintf(line, sizeof line, "%-16s %16s %18s\n", params[i].first.c_str(),
                  with_commas(params[i].second).c_str(), with_commas(macs[i].second).c_str());
    os << line;
  }
  const std::uint64_t tp = total_of(params), tm = total_of(macs);
  std::snprintf(line, sizeof line, "%-16s %16s %18s\n", "total", with_commas(tp).c_str(),
                with_commas(tm).c_str());
  os << line;
  std::snprintf(line, sizeof line, "\nparams %.2f M, %.2f GMACs per forward pass\n",
                static_cast<double>(tp) / 1e6, static_cast<double>(tm) / 1e9);
  os << line;

  os << "\nattention cost per stage (h, w = token grid)\n";
  std::snprintf(line, sizeof line, "%-6s %5s %5s %6s %3s %16s %16s %16s\n", "stage", "h", "w",
                "C", "M", "msa", "swmsa", "acam");
  os << line;
  for (const StageCost& s : stage_costs(c)) {
    std::snprintf(line, sizeof line, "%-6zu %5llu %5llu %6llu %3llu %16s %16s %16s\n", s.stage,
                  static_cast<unsigned long long>(s.h), static_cast<unsigned long long>(s.w),
                  static_cast<unsigned long long>(s.channels),
                  static_cast<unsigned long long>(s.window), with_commas(s.msa).c_str(),
                  with_commas(s.swmsa).c_str(), with_commas(s.acam).c_str());
    os << line;
  }
}

}  // namespace tecnet
