#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace tecnet {

/// Collects multiply-accumulate counts from the product kernels (matmul,
/// linear, convolutions) executed on this thread while it is alive.
/// Counts are attributed to the '/'-joined stack of active MacLabel scopes.
class MacCounter {
 public:
  MacCounter();
  ~MacCounter();
  MacCounter(const MacCounter&) = delete;
  MacCounter& operator=(const MacCounter&) = delete;

  std::uint64_t total() const;
  /// Sum of `prefix` and every label nested below it ("prefix/...").
  std::uint64_t total_under(const std::string& prefix) const;
  const std::map<std::string, std::uint64_t>& by_label() const { return counts_; }

  void add(std::uint64_t macs);
  void push(const std::string& label);
  void pop();

 private:
  MacCounter* previous_;
  std::map<std::string, std::uint64_t> counts_;
  std::vector<std::string> stack_;
};

/// Scoped label for MAC attribution. No-op when no counter is installed.
class MacLabel {
 public:
  explicit MacLabel(const std::string& label);
  ~MacLabel();
  MacLabel(const MacLabel&) = delete;
  MacLabel& operator=(const MacLabel&) = delete;

 private:
  MacCounter* counter_;
};

/// Reports `macs` to the active counter, if any.
void count_macs(std::uint64_t macs);

}  // namespace tecnet
