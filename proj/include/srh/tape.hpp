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

#include <functional>
#include <utility>
#include <vector>

#include "srh/tensor.hpp"

namespace srh {

// Reverse-mode tape. Forward ops append nodes in execution order; backward
// replays them once, in reverse. One tape serves one logical training
// context at a time (confined by TapeScope).
template <typename T>
class Tape {
 public:
  static Tape*& active() {
    thread_local Tape* t = nullptr;
    return t;
  }

  void record(std::function<void()> backward_fn) { nodes_.push_back(std::move(backward_fn)); }

  size_t size() const { return nodes_.size(); }

  void run_backward(Tensor<T> loss) {
    check(loss.defined() && loss.numel() == 1,
          "backward requires a scalar loss, got ", loss.defined() ? shape_str(loss.shape()) : "undefined");
    loss.grad_buffer()[0] = T(1);
    for (size_t i = nodes_.size(); i-- > 0;) nodes_[i]();
  }

  void clear() { nodes_.clear(); }

 private:
  std::vector<std::function<void()>> nodes_;
};

template <typename T>
class TapeScope {
 public:
  TapeScope() : prev_(Tape<T>::active()) { Tape<T>::active() = &tape_; }
  ~TapeScope() { Tape<T>::active() = prev_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;
  Tape<T>& tape() { return tape_; }

 private:
  Tape<T> tape_;
  Tape<T>* prev_;
};

template <typename T>
class NoGradScope {
 public:
  NoGradScope() : prev_(Tape<T>::active()) { Tape<T>::active() = nullptr; }
  ~NoGradScope() { Tape<T>::active() = prev_; }
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape<T>* prev_;
};

// Populates .grad on every requires_grad tensor reachable from loss.
template <typename T>
void backward(Tensor<T> loss) {
  Tape<T>* tape = Tape<T>::active();
  check(tape != nullptr, "backward called without an active tape");
  tape->run_backward(std::move(loss));
}

namespace detail {

template <typename T>
inline bool recording(std::initializer_list<const Tensor<T>*> inputs) {
  if (Tape<T>::active() == nullptr) return false;
  for (const Tensor<T>* t : inputs)
    if (t->defined() && t->requires_grad()) return true;
  return false;
}

template <typename T>
inline void mark_output(Tensor<T>& out, bool rec) {
  out.set_requires_grad(rec);
}

// Adds src into dst's grad buffer.
template <typename T>
inline void accumulate(Tensor<T>& dst, const T* src) {
  auto& g = dst.grad_buffer();
  for (size_t i = 0; i < g.size(); ++i) g[i] += src[i];
}

}  // namespace detail

#define SRH_DCHECK_FINITE(t, opname)                                             \
  do {                                                                           \
    if (!::srh::all_finite(t))                                                   \
      throw std::runtime_error(std::string("non-finite output of ") + (opname)); \
  } while (0)

}  // namespace srh
