// Copyright 2026 the srhnet authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <memory>

#include "srh/common.hpp"
#include "srh/memory.hpp"

namespace srh {

template <typename T>
struct TensorImpl {
  Shape shape;
  tracked_vector<T> data;
  tracked_vector<T> grad;  // empty until a gradient is accumulated
  bool requires_grad = false;
};

// Dense row-major tensor handle with shared storage. Copies are shallow;
// use clone() for a deep copy. Gradient storage lives beside the data and
// is lazily allocated by the tape.
template <typename T>
class Tensor {
 public:
  using scalar_type = T;

  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    Tensor t;
    t.p_ = std::make_shared<TensorImpl<T>>();
    t.p_->shape = std::move(shape);
    t.p_->data.assign(static_cast<size_t>(shape_numel(t.p_->shape)), T(0));
    t.p_->requires_grad = requires_grad;
    return t;
  }

  static Tensor full(Shape shape, T value, bool requires_grad = false) {
    Tensor t = zeros(std::move(shape), requires_grad);
    std::fill(t.data(), t.data() + t.numel(), value);
    return t;
  }

  static Tensor from(Shape shape, std::vector<T> values, bool requires_grad = false) {
    Tensor t;
    t.p_ = std::make_shared<TensorImpl<T>>();
    t.p_->shape = std::move(shape);
    check(shape_numel(t.p_->shape) == static_cast<index_t>(values.size()),
          "tensor data size ", values.size(), " does not match shape ", shape_str(t.p_->shape));
    t.p_->data.assign(values.begin(), values.end());
    t.p_->requires_grad = requires_grad;
    return t;
  }

  static Tensor scalar(T value, bool requires_grad = false) {
    return from({1}, {value}, requires_grad);
  }

  bool defined() const { return p_ != nullptr; }
  const Shape& shape() const { return p_->shape; }
  size_t rank() const { return p_->shape.size(); }
  index_t dim(size_t i) const { return p_->shape[i]; }
  index_t numel() const { return static_cast<index_t>(p_->data.size()); }

  T* data() { return p_->data.data(); }
  const T* data() const { return p_->data.data(); }
  T& at(index_t i) { return p_->data[static_cast<size_t>(i)]; }
  T at(index_t i) const { return p_->data[static_cast<size_t>(i)]; }

  bool requires_grad() const { return p_->requires_grad; }
  Tensor& set_requires_grad(bool rg) {
    p_->requires_grad = rg;
    return *this;
  }

  bool has_grad() const { return !p_->grad.empty(); }
  T* grad_data() { return p_->grad.data(); }
  const T* grad_data() const { return p_->grad.data(); }
  // Allocates a zero gradient buffer on first use.
  tracked_vector<T>& grad_buffer() {
    if (p_->grad.empty()) p_->grad.assign(p_->data.size(), T(0));
    return p_->grad;
  }
  void zero_grad() {
    if (!p_->grad.empty()) std::fill(p_->grad.begin(), p_->grad.end(), T(0));
  }
  void drop_grad() { tracked_vector<T>().swap(p_->grad); }

  // Gradient as a detached tensor (zeros if never accumulated).
  Tensor grad() const {
    Tensor g = zeros(p_->shape);
    if (!p_->grad.empty()) std::copy(p_->grad.begin(), p_->grad.end(), g.data());
    return g;
  }

  T item() const {
    check(numel() == 1, "item() on tensor of ", numel(), " elements");
    return p_->data[0];
  }

  Tensor clone() const {
    Tensor t = zeros(p_->shape);
    std::copy(p_->data.begin(), p_->data.end(), t.data());
    return t;
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> t = Tensor<U>::zeros(p_->shape);
    for (index_t i = 0; i < numel(); ++i) t.data()[i] = static_cast<U>(p_->data[i]);
    return t;
  }

  bool same_storage(const Tensor& o) const { return p_ == o.p_; }
  std::shared_ptr<TensorImpl<T>> impl() const { return p_; }

 private:
  std::shared_ptr<TensorImpl<T>> p_;
};

template <typename T>
bool all_finite(const Tensor<T>& t) {
  const T* p = t.data();
  for (index_t i = 0; i < t.numel(); ++i)
    if (!std::isfinite(p[i])) return false;
  return true;
}

// Row-major strides for a shape.
inline std::vector<index_t> strides_of(const Shape& s) {
  std::vector<index_t> st(s.size());
  index_t acc = 1;
  for (size_t i = s.size(); i-- > 0;) {
    st[i] = acc;
    acc *= s[i];
  }
  return st;
}

}  // namespace srh
