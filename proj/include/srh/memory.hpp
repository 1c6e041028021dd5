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

#include <atomic>
#include <cstddef>
#include <memory>

namespace srh {

// Instrumented accounting of every tensor payload allocation. The counters
// can never undercount live tensor bytes: allocation and bookkeeping happen
// in the same call, before the memory is handed out.
class MemoryStats {
 public:
  static std::int64_t current_bytes() { return cur().load(std::memory_order_relaxed); }
  static std::int64_t peak_bytes() { return peak().load(std::memory_order_relaxed); }
  static std::int64_t cumulative_bytes() { return cum().load(std::memory_order_relaxed); }

  // Restarts the high-water mark from the current live size.
  static void reset_peak() { peak().store(cur().load(std::memory_order_relaxed)); }
  static void reset_cumulative() { cum().store(0); }

  static void on_alloc(std::int64_t bytes) {
    cum().fetch_add(bytes, std::memory_order_relaxed);
    std::int64_t now = cur().fetch_add(bytes, std::memory_order_relaxed) + bytes;
    std::int64_t old = peak().load(std::memory_order_relaxed);
    while (now > old && !peak().compare_exchange_weak(old, now)) {
    }
  }
  static void on_free(std::int64_t bytes) { cur().fetch_sub(bytes, std::memory_order_relaxed); }

 private:
  static std::atomic<std::int64_t>& cur() {
    static std::atomic<std::int64_t> v{0};
    return v;
  }
  static std::atomic<std::int64_t>& peak() {
    static std::atomic<std::int64_t> v{0};
    return v;
  }
  static std::atomic<std::int64_t>& cum() {
    static std::atomic<std::int64_t> v{0};
    return v;
  }
};

template <typename T>
struct TrackingAllocator {
  using value_type = T;
  TrackingAllocator() = default;
  template <typename U>
  TrackingAllocator(const TrackingAllocator<U>&) {}

  T* allocate(std::size_t n) {
    MemoryStats::on_alloc(static_cast<std::int64_t>(n * sizeof(T)));
    return std::allocator<T>{}.allocate(n);
  }
  void deallocate(T* p, std::size_t n) {
    MemoryStats::on_free(static_cast<std::int64_t>(n * sizeof(T)));
    std::allocator<T>{}.deallocate(p, n);
  }
  bool operator==(const TrackingAllocator&) const { return true; }
};

template <typename T>
using tracked_vector = std::vector<T, TrackingAllocator<T>>;

}  // namespace srh
