#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace tecnet {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

class Tape;

namespace detail {

struct TensorImpl {
  Shape shape;
  std::vector<double> values;
  // Empty until a gradient is first accumulated.
  std::vector<double> grad;
  bool requires_grad = false;
  std::int64_t node = -1;
  Tape* tape = nullptr;

  std::span<double> grad_buffer() {
    if (grad.empty()) grad.assign(values.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

/// Dense row-major array of doubles with an optional gradient buffer.
///
/// Copies are shallow: two Tensor handles may refer to the same storage,
/// which is how parameters are shared between a layer and its callers.
/// Operations in ops.hpp never mutate their inputs; they allocate a fresh
/// result and, when a Tape is active and an input requires a gradient,
/// append a backward record to it.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);

  bool defined() const { return static_cast<bool>(impl_); }

  const Shape& shape() const { return impl_->shape; }
  std::size_t ndim() const { return impl_->shape.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const { return impl_->values.size(); }

  std::span<const double> values() const { return impl_->values; }
  std::span<double> mutable_values() { return impl_->values; }
  double item() const;
  double operator[](std::size_t i) const { return impl_->values[i]; }

  bool requires_grad() const { return impl_->requires_grad; }
  Tensor& set_requires_grad(bool flag);

  bool has_grad() const { return !impl_->grad.empty(); }
  /// Gradient buffer; all zeros when nothing has been accumulated yet.
  std::span<const double> grad() const;
  std::span<double> mutable_grad() { return impl_->grad_buffer(); }
  void zero_grad();

  /// Index of the producing record on the active tape, or -1 for leaves.
  std::int64_t tape_id() const { return impl_->node; }

  /// Deep copy of the values with no tape linkage and no gradient.
  Tensor detach() const;

  detail::TensorImpl* impl() const { return impl_.get(); }
  const std::shared_ptr<detail::TensorImpl>& shared_impl() const { return impl_; }

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

/// Define-by-run record of differentiable operations.
///
/// Records are appended in execution order, so the list is topologically
/// sorted by construction. backward() walks it once in reverse.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  std::size_t size() const { return records_.size(); }

  /// Appends a record producing `output` from `inputs`. `fn` is invoked
  /// during backward() only if the output received a gradient.
  void record(const Tensor& output, std::initializer_list<Tensor> inputs, BackwardFn fn);
  void record(const Tensor& output, const std::vector<Tensor>& inputs, BackwardFn fn);

  /// Seeds d(loss)/d(loss) = 1 and propagates to every reachable tensor.
  /// A tape may be consumed once.
  void backward(const Tensor& loss);

 private:
  struct Record {
    std::vector<std::shared_ptr<detail::TensorImpl>> inputs;
    std::shared_ptr<detail::TensorImpl> output;
    BackwardFn backward;
  };
  std::vector<Record> records_;
  bool consumed_ = false;
};

/// Tape that operations on this thread record into, or nullptr.
Tape* active_tape();

/// Installs a tape as the active tape for the current thread.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

/// Temporarily disables recording on the current thread.
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape* previous_;
};

/// Records `output` on the active tape when any input requires a gradient.
/// Returns true when a record was appended. Building block for operations.
bool record_op(Tensor& output, std::initializer_list<Tensor> inputs, Tape::BackwardFn fn);
bool record_op(Tensor& output, const std::vector<Tensor>& inputs, Tape::BackwardFn fn);

/// Backward through the tape that produced `loss`.
void backward(const Tensor& loss);

}  // namespace tecnet
