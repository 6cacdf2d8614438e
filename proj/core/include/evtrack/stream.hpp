#pragma once

// Concurrency primitives for the tracking pipeline: a bounded single-producer
// single-consumer queue that preserves order, and a seqlock cell through
// which the single writer publishes model snapshots without ever blocking.

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <new>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

namespace evtrack {

inline constexpr std::size_t kCacheLine = 64;

template <typename T>
class SpscQueue {
 public:
  explicit SpscQueue(std::size_t capacity) : slots_(round_up(capacity + 1)), mask_(slots_.size() - 1) {}

  SpscQueue(const SpscQueue&) = delete;
  SpscQueue& operator=(const SpscQueue&) = delete;

  /// Moves from `value` only when the push succeeds.
  bool try_push(T&& value) { return emplace_if_room([&](T& slot) { slot = std::move(value); }); }
  bool try_push(const T& value) { return emplace_if_room([&](T& slot) { slot = value; }); }

  void push(T value) {
    while (!try_push(std::move(value))) std::this_thread::yield();
  }

  std::optional<T> try_pop() {
    const std::size_t tail = tail_.load(std::memory_order_relaxed);
    if (tail == head_cache_) {
      head_cache_ = head_.load(std::memory_order_acquire);
      if (tail == head_cache_) return std::nullopt;
    }
    std::optional<T> out(std::move(slots_[tail]));
    tail_.store((tail + 1) & mask_, std::memory_order_release);
    return out;
  }

  T pop() {
    for (;;) {
      if (auto v = try_pop()) return std::move(*v);
      std::this_thread::yield();
    }
  }

  std::size_t capacity() const { return slots_.size() - 1; }

 private:
  template <typename Store>
  bool emplace_if_room(Store store) {
    const std::size_t head = head_.load(std::memory_order_relaxed);
    const std::size_t next = (head + 1) & mask_;
    if (next == tail_cache_) {
      tail_cache_ = tail_.load(std::memory_order_acquire);
      if (next == tail_cache_) return false;
    }
    store(slots_[head]);
    head_.store(next, std::memory_order_release);
    return true;
  }

  static std::size_t round_up(std::size_t n) {
    std::size_t p = 2;
    while (p < n) p <<= 1;
    return p;
  }

  std::vector<T> slots_;
  const std::size_t mask_;
  alignas(kCacheLine) std::atomic<std::size_t> head_{0};
  alignas(kCacheLine) std::size_t tail_cache_ = 0;  // producer-owned
  alignas(kCacheLine) std::atomic<std::size_t> tail_{0};
  alignas(kCacheLine) std::size_t head_cache_ = 0;  // consumer-owned
};

/// Seqlock over a trivially copyable value. `publish` is wait-free for the
/// single writer; readers retry while a write is in flight.
template <typename T>
class SnapshotCell {
  static_assert(std::is_trivially_copyable_v<T>);
  static constexpr std::size_t kWords = (sizeof(T) + sizeof(std::uint64_t) - 1) / sizeof(std::uint64_t);

 public:
  SnapshotCell() { publish(T{}); }

  void publish(const T& value) {
    std::array<std::uint64_t, kWords> words{};
    std::memcpy(words.data(), &value, sizeof(T));
    const std::uint64_t seq = seq_.load(std::memory_order_relaxed);
    seq_.store(seq + 1, std::memory_order_relaxed);
    std::atomic_thread_fence(std::memory_order_release);
    for (std::size_t i = 0; i < kWords; ++i) data_[i].store(words[i], std::memory_order_relaxed);
    seq_.store(seq + 2, std::memory_order_release);
  }

  T read() const {
    std::array<std::uint64_t, kWords> words{};
    for (;;) {
      const std::uint64_t before = seq_.load(std::memory_order_acquire);
      if (before & 1U) {
        std::this_thread::yield();
        continue;
      }
      for (std::size_t i = 0; i < kWords; ++i) words[i] = data_[i].load(std::memory_order_relaxed);
      std::atomic_thread_fence(std::memory_order_acquire);
      if (seq_.load(std::memory_order_relaxed) == before) break;
    }
    T out;
    std::memcpy(static_cast<void*>(&out), words.data(), sizeof(T));
    return out;
  }

  /// Number of completed publications.
  std::uint64_t version() const { return seq_.load(std::memory_order_acquire) / 2; }

 private:
  alignas(kCacheLine) std::atomic<std::uint64_t> seq_{0};
  std::array<std::atomic<std::uint64_t>, kWords> data_{};
};

}  // namespace evtrack
