#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "transfeat/error.hpp"
#include "transfeat/event.hpp"
#include "transfeat/registry.hpp"

namespace transfeat {

struct SparseEntry {
  std::uint32_t row = 0;  // from
  std::uint32_t col = 0;  // to
  std::uint32_t count = 0;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

// Engine output for one transition: the window matrix right after the push.
struct FeatureFrame {
  std::uint64_t seq = 0;
  std::string case_id;
  Timestamp timestamp = 0;
  Transition transition;
  std::vector<SparseEntry> entries;  // nonzero counts, sorted by (row, col)

  friend bool operator==(const FeatureFrame&, const FeatureFrame&) = default;
};

// FIFO of the last `capacity` transitions with a dense dim x dim count
// matrix and a sorted index of its nonzero cells.
class SlidingWindow {
 public:
  SlidingWindow(std::size_t capacity, std::size_t dim);

  // Evicts the oldest transition when full. O(1) counts, O(nnz) index.
  void push(Transition t);

  std::size_t capacity() const noexcept { return ring_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return size_; }
  std::size_t nonzero() const noexcept { return nonzero_.size(); }
  std::uint32_t count(ClassId from, ClassId to) const noexcept {
    return counts_[from.value * dim_ + to.value];
  }

  // Oldest first.
  std::vector<Transition> contents() const;

  void snapshot(std::vector<SparseEntry>& out) const;

 private:
  void increment(std::uint32_t cell);
  void decrement(std::uint32_t cell);

  std::size_t dim_;
  std::vector<Transition> ring_;
  std::size_t head_ = 0;  // slot of the oldest transition
  std::size_t size_ = 0;
  std::vector<std::uint32_t> counts_;
  std::vector<std::uint32_t> nonzero_;  // flat cell indices, ascending
};

// Open cases keyed by case id, each with its last class and last-seen time.
// Entries are also threaded on a recency list so idle cases are found
// without scanning the whole table; this assumes non-decreasing timestamps.
class TemporalEventTable {
 public:
  struct Record {
    ClassId last;
    Timestamp last_seen = 0;
  };

  TemporalEventTable() = default;
  TemporalEventTable(const TemporalEventTable&) = delete;
  TemporalEventTable& operator=(const TemporalEventTable&) = delete;
  TemporalEventTable(TemporalEventTable&&) = default;
  TemporalEventTable& operator=(TemporalEventTable&&) = default;

  // Records `current` as the case's last class; returns the previous one,
  // or nullopt when the case was not open.
  std::optional<ClassId> update(std::string_view case_id, ClassId current, Timestamp ts);

  std::optional<Record> find(std::string_view case_id) const;
  bool contains(std::string_view case_id) const { return find(case_id).has_value(); }
  std::size_t size() const noexcept { return map_.size(); }

  // Removes and returns the record; nullopt when absent.
  std::optional<Record> erase(std::string_view case_id);

  // Cases with now - last_seen > timeout, ordered by (last_seen, case_id).
  std::vector<std::pair<Timestamp, std::string>> idle(Timestamp now, Timestamp timeout) const;

  // Every open case, ordered by (last_seen, case_id).
  std::vector<std::pair<Timestamp, std::string>> all_by_recency() const;

 private:
  struct Node {
    Record record;
    const std::string* key = nullptr;
    Node* prev = nullptr;
    Node* next = nullptr;
  };
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
      return std::hash<std::string_view>{}(s);
    }
  };

  void unlink(Node& n) noexcept;
  void append(Node& n) noexcept;

  std::unordered_map<std::string, Node, Hash, std::equal_to<>> map_;
  Node* head_ = nullptr;  // least recently seen
  Node* tail_ = nullptr;
};

struct EngineConfig {
  std::size_t window = 200;
  // Close cases idle for longer than this whenever the stream time advances.
  std::optional<Timestamp> idle_timeout;
  // Close every open case at end of input.
  bool flush_at_end = false;
  // When false, frames carry no matrix entries (latency measurements).
  bool emit_entries = true;
};

// Single-threaded feature generator. Not copyable; movable between threads.
class Engine {
 public:
  Engine(std::shared_ptr<const Vocabulary> vocab, std::vector<std::string> class_fields,
         EngineConfig config = {});

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;
  Engine(Engine&&) = default;
  Engine& operator=(Engine&&) = default;

  // One frame for the event's transition, a second one when e.is_end.
  template <typename Sink>
  void process_event(const Event& e, Sink&& sink) {
    derive_event_class_into(e.attributes, class_fields_, label_);
    process_classified(e.case_id, vocab_->map(label_), e.timestamp, e.is_end, sink);
  }

  // Same as process_event for an already mapped class.
  template <typename Sink>
  void process_classified(std::string_view case_id, ClassId cls, Timestamp ts, bool is_end,
                          Sink&& sink) {
    note_time(ts);
    std::optional<ClassId> prev = tet_.update(case_id, cls, ts);
    emit({prev.value_or(kSot), cls}, case_id, ts, sink);
    if (is_end) close_case(case_id, ts, sink);
  }

  // Emits (last, EOT) and drops the case. Throws UnknownCase.
  template <typename Sink>
  void close_case(std::string_view case_id, Timestamp at, Sink&& sink) {
    std::optional<TemporalEventTable::Record> rec = tet_.erase(case_id);
    if (!rec) throw UnknownCase(std::string(case_id));
    note_time(at);
    emit({rec->last, kEot}, case_id, at, sink);
  }

  // Closes cases idle for more than `timeout` at time `now`, oldest first.
  template <typename Sink>
  void evict_idle(Timestamp now, Timestamp timeout, Sink&& sink) {
    if (timeout == 0) throw ConfigError("idle timeout must be positive");
    for (const auto& [last_seen, case_id] : tet_.idle(now, timeout)) {
      close_case(case_id, now, sink);
    }
  }

  // Stream driver: idle eviction on time advance, then process_event.
  template <typename Sink>
  void feed(const Event& e, Sink&& sink) {
    if (config_.idle_timeout && seen_time_ && e.timestamp > last_time_) {
      evict_idle(e.timestamp, *config_.idle_timeout, sink);
    }
    process_event(e, sink);
  }

  // End of input: flushes open cases when configured.
  template <typename Sink>
  void finish(Sink&& sink) {
    if (!config_.flush_at_end) return;
    for (const auto& [last_seen, case_id] : tet_.all_by_recency()) {
      close_case(case_id, last_time_, sink);
    }
  }

  std::vector<FeatureFrame> process_event(const Event& e);
  FeatureFrame close_case(std::string_view case_id, Timestamp at);
  std::vector<FeatureFrame> evict_idle(Timestamp now, Timestamp timeout);

  const TemporalEventTable& table() const noexcept { return tet_; }
  const SlidingWindow& window() const noexcept { return window_; }
  const Vocabulary& vocabulary() const noexcept { return *vocab_; }
  const EngineConfig& config() const noexcept { return config_; }
  std::uint64_t frames_emitted() const noexcept { return seq_; }

 private:
  void note_time(Timestamp ts) noexcept {
    if (!seen_time_ || ts > last_time_) last_time_ = ts;
    seen_time_ = true;
  }

  template <typename Sink>
  void emit(Transition t, std::string_view case_id, Timestamp ts, Sink& sink) {
    window_.push(t);
    frame_.seq = seq_++;
    frame_.case_id.assign(case_id);
    frame_.timestamp = ts;
    frame_.transition = t;
    if (config_.emit_entries) {
      window_.snapshot(frame_.entries);
    } else {
      frame_.entries.clear();
    }
    sink(static_cast<const FeatureFrame&>(frame_));
  }

  std::shared_ptr<const Vocabulary> vocab_;
  std::vector<std::string> class_fields_;
  EngineConfig config_;
  TemporalEventTable tet_;
  SlidingWindow window_;
  std::uint64_t seq_ = 0;
  Timestamp last_time_ = 0;
  bool seen_time_ = false;
  std::string label_;
  FeatureFrame frame_;
};

// Folds a whole ordered stream through a fresh engine.
std::vector<FeatureFrame> run_stream(std::span<const Event> events,
                                     std::shared_ptr<const Vocabulary> vocab,
                                     std::vector<std::string> class_fields,
                                     const EngineConfig& config = {});

}  // namespace transfeat
