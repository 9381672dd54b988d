#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <exception>
#include <mutex>
#include <optional>
#include <utility>

namespace transfeat {

// Bounded single-producer/single-consumer queue used between pipeline
// stages. Items come out in push order. A producer failure is forwarded to
// the consumer through fail().
template <typename T>
class Handoff {
 public:
  explicit Handoff(std::size_t capacity = 64) : capacity_(capacity == 0 ? 1 : capacity) {}

  Handoff(const Handoff&) = delete;
  Handoff& operator=(const Handoff&) = delete;

  // Returns false if the consumer cancelled.
  bool push(T item) {
    std::unique_lock lock(mutex_);
    not_full_.wait(lock, [&] { return items_.size() < capacity_ || cancelled_; });
    if (cancelled_) return false;
    items_.push_back(std::move(item));
    not_empty_.notify_one();
    return true;
  }

  void close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    not_empty_.notify_all();
  }

  void fail(std::exception_ptr error) {
    std::lock_guard lock(mutex_);
    error_ = std::move(error);
    closed_ = true;
    not_empty_.notify_all();
  }

  // Consumer side: stop accepting pushes (producer unblocks and exits).
  void cancel() {
    std::lock_guard lock(mutex_);
    cancelled_ = true;
    items_.clear();
    not_full_.notify_all();
  }

  // Empty optional once closed and drained. Rethrows a forwarded failure
  // after the items pushed before it.
  std::optional<T> pop() {
    std::unique_lock lock(mutex_);
    not_empty_.wait(lock, [&] { return !items_.empty() || closed_; });
    if (items_.empty()) {
      if (error_) std::rethrow_exception(error_);
      return std::nullopt;
    }
    T item = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return item;
  }

 private:
  std::mutex mutex_;
  std::condition_variable not_empty_;
  std::condition_variable not_full_;
  std::deque<T> items_;
  std::size_t capacity_;
  bool closed_ = false;
  bool cancelled_ = false;
  std::exception_ptr error_;
};

}  // namespace transfeat
