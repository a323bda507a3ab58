#include "tecnet/mac_counter.hpp"

namespace tecnet {

namespace {
thread_local MacCounter* g_counter = nullptr;
}  // namespace

MacCounter::MacCounter() : previous_(g_counter) { g_counter = this; }
MacCounter::~MacCounter() { g_counter = previous_; }

std::uint64_t MacCounter::total() const {
  std::uint64_t t = 0;
  for (const auto& [label, n] : counts_) t += n;
  return t;
}

std::uint64_t MacCounter::total_under(const std::string& prefix) const {
  std::uint64_t t = 0;
  for (const auto& [label, n] : counts_) {
    const bool inside = label.compare(0, prefix.size(), prefix) == 0 &&
                        (label.size() == prefix.size() || label[prefix.size()] == '/');
    if (inside) t += n;
  }
  return t;
}

void MacCounter::add(std::uint64_t macs) {
  counts_[stack_.empty() ? std::string() : stack_.back()] += macs;
}

void MacCounter::push(const std::string& label) {
  stack_.push_back(stack_.empty() ? label : stack_.back() + "/" + label);
}

void MacCounter::pop() {
  if (!stack_.empty()) stack_.pop_back();
}

MacLabel::MacLabel(const std::string& label) : counter_(g_counter) {
  if (counter_) counter_->push(label);
}

MacLabel::~MacLabel() {
  if (counter_) counter_->pop();
}

void count_macs(std::uint64_t macs) {
  if (g_counter) g_counter->add(macs);
}

}  // namespace tecnet
