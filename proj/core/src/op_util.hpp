#pragma once

#include <string>

#include "tecnet/errors.hpp"
#include "tecnet/tensor.hpp"

namespace tecnet::detail {

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

inline void require_rank(const Tensor& a, std::size_t rank, const char* op) {
  if (a.ndim() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                         ", got shape " + shape_string(a.shape()));
  }
}

inline bool wants_grad(const TensorImpl* t) { return t != nullptr && t->requires_grad; }

}  // namespace tecnet::detail
