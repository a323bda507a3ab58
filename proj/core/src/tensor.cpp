#include "tecnet/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "tecnet/errors.hpp"

namespace tecnet {

namespace {
thread_local Tape* g_active_tape = nullptr;
}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape) : impl_(std::make_shared<detail::TensorImpl>()) {
  for (std::size_t e : shape) {
    if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_string(shape));
  }
  impl_->values.assign(shape_numel(shape), 0.0);
  impl_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : impl_(std::make_shared<detail::TensorImpl>()) {
  for (std::size_t e : shape) {
    if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_string(shape));
  }
  if (shape_numel(shape) != values.size()) {
    throw DimensionError("shape " + shape_string(shape) + " needs " +
                         std::to_string(shape_numel(shape)) + " values, got " +
                         std::to_string(values.size()));
  }
  impl_->shape = std::move(shape);
  impl_->values = std::move(values);
}

Tensor Tensor::full(Shape shape, double value) {
  Tensor t(std::move(shape));
  std::fill(t.impl_->values.begin(), t.impl_->values.end(), value);
  return t;
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= impl_->shape.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " +
                         shape_string(impl_->shape));
  }
  return impl_->shape[axis];
}

double Tensor::item() const {
  if (numel() != 1) throw UsageError("item() on tensor of shape " + shape_string(shape()));
  return impl_->values[0];
}

Tensor& Tensor::set_requires_grad(bool flag) {
  impl_->requires_grad = flag;
  return *this;
}

std::span<const double> Tensor::grad() const { return impl_->grad_buffer(); }

void Tensor::zero_grad() {
  if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::detach() const { return Tensor(impl_->shape, impl_->values); }

void Tape::record(const Tensor& output, std::initializer_list<Tensor> inputs, BackwardFn fn) {
  record(output, std::vector<Tensor>(inputs), std::move(fn));
}

void Tape::record(const Tensor& output, const std::vector<Tensor>& inputs, BackwardFn fn) {
  if (consumed_) throw UsageError("cannot record onto a tape after backward()");
  Record rec;
  rec.inputs.reserve(inputs.size());
  for (const Tensor& t : inputs) rec.inputs.push_back(t.shared_impl());
  rec.output = output.shared_impl();
  rec.backward = std::move(fn);
  rec.output->requires_grad = true;
  rec.output->node = static_cast<std::int64_t>(records_.size());
  rec.output->tape = this;
  records_.push_back(std::move(rec));
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw UsageError("backward() needs a scalar loss, got shape " +
                     (loss.defined() ? shape_string(loss.shape()) : std::string("<undefined>")));
  }
  detail::TensorImpl* l = loss.impl();
  if (l->tape != this || l->node < 0) {
    if (l->node < 0 && l->requires_grad) {
      l->grad_buffer()[0] += 1.0;
      return;
    }
    throw UsageError("backward() loss was not produced on this tape");
  }
  if (consumed_) throw UsageError("tape already consumed by a previous backward()");
  consumed_ = true;
  l->grad_buffer()[0] += 1.0;
  for (std::int64_t i = l->node; i >= 0; --i) {
    Record& rec = records_[static_cast<std::size_t>(i)];
    if (rec.output->grad.empty()) continue;
    rec.backward();
  }
}

Tape* active_tape() { return g_active_tape; }

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

NoGradScope::NoGradScope() : previous_(g_active_tape) { g_active_tape = nullptr; }
NoGradScope::~NoGradScope() { g_active_tape = previous_; }

bool record_op(Tensor& output, std::initializer_list<Tensor> inputs, Tape::BackwardFn fn) {
  return record_op(output, std::vector<Tensor>(inputs), std::move(fn));
}

bool record_op(Tensor& output, const std::vector<Tensor>& inputs, Tape::BackwardFn fn) {
  Tape* tape = g_active_tape;
  if (tape == nullptr) return false;
  bool any = std::any_of(inputs.begin(), inputs.end(),
                         [](const Tensor& t) { return t.defined() && t.requires_grad(); });
  if (!any) return false;
  tape->record(output, inputs, std::move(fn));
  return true;
}

void backward(const Tensor& loss) {
  if (!loss.defined()) throw UsageError("backward() on undefined tensor");
  Tape* tape = loss.impl()->tape;
  if (tape == nullptr) {
    if (loss.numel() == 1 && loss.requires_grad()) {
      loss.impl()->grad_buffer()[0] += 1.0;
      return;
    }
    throw UsageError("backward() loss is not on any tape");
  }
  tape->backward(loss);
}

}  // namespace tecnet
