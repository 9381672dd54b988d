#include "transfeat/engine.hpp"

#include <algorithm>

namespace transfeat {

// ---------------------------------------------------------------------------
// SlidingWindow

SlidingWindow::SlidingWindow(std::size_t capacity, std::size_t dim)
    : dim_(dim), ring_(capacity), counts_(dim * dim, 0) {
  if (capacity == 0) throw ConfigError("window length must be at least 1");
  if (dim < kReservedCount) throw ConfigError("matrix dimension below reserved count");
  nonzero_.reserve(std::min(capacity, dim * dim));
}

void SlidingWindow::increment(std::uint32_t cell) {
  if (counts_[cell]++ == 0) {
    nonzero_.insert(std::lower_bound(nonzero_.begin(), nonzero_.end(), cell), cell);
  }
}

void SlidingWindow::decrement(std::uint32_t cell) {
  if (--counts_[cell] == 0) {
    nonzero_.erase(std::lower_bound(nonzero_.begin(), nonzero_.end(), cell));
  }
}

void SlidingWindow::push(Transition t) {
  const auto cell = static_cast<std::uint32_t>(t.from.value * dim_ + t.to.value);
  if (size_ == ring_.size()) {
    const Transition old = ring_[head_];
    ring_[head_] = t;
    head_ = (head_ + 1) % ring_.size();
    const auto old_cell = static_cast<std::uint32_t>(old.from.value * dim_ + old.to.value);
    if (old_cell == cell) return;
    decrement(old_cell);
  } else {
    ring_[(head_ + size_) % ring_.size()] = t;
    ++size_;
  }
  increment(cell);
}

std::vector<Transition> SlidingWindow::contents() const {
  std::vector<Transition> out;
  out.reserve(size_);
  for (std::size_t i = 0; i < size_; ++i) out.push_back(ring_[(head_ + i) % ring_.size()]);
  return out;
}

void SlidingWindow::snapshot(std::vector<SparseEntry>& out) const {
  out.resize(nonzero_.size());
  for (std::size_t i = 0; i < nonzero_.size(); ++i) {
    const std::uint32_t cell = nonzero_[i];
    out[i] = SparseEntry{static_cast<std::uint32_t>(cell / dim_),
                         static_cast<std::uint32_t>(cell % dim_), counts_[cell]};
  }
}

// ---------------------------------------------------------------------------
// TemporalEventTable

void TemporalEventTable::unlink(Node& n) noexcept {
  if (n.prev) n.prev->next = n.next; else head_ = n.next;
  if (n.next) n.next->prev = n.prev; else tail_ = n.prev;
  n.prev = n.next = nullptr;
}

void TemporalEventTable::append(Node& n) noexcept {
  n.prev = tail_;
  n.next = nullptr;
  if (tail_) tail_->next = &n; else head_ = &n;
  tail_ = &n;
}

std::optional<ClassId> TemporalEventTable::update(std::string_view case_id, ClassId current,
                                                  Timestamp ts) {
  auto it = map_.find(case_id);
  if (it == map_.end()) {
    it = map_.emplace(std::string(case_id), Node{}).first;
    Node& node = it->second;
    node.key = &it->first;
    node.record = {current, ts};
    append(node);
    return std::nullopt;
  }
  Node& node = it->second;
  const ClassId prev = node.record.last;
  node.record = {current, ts};
  if (&node != tail_) {
    unlink(node);
    append(node);
  }
  return prev;
}

std::optional<TemporalEventTable::Record> TemporalEventTable::find(std::string_view case_id) const {
  auto it = map_.find(case_id);
  if (it == map_.end()) return std::nullopt;
  return it->second.record;
}

std::optional<TemporalEventTable::Record> TemporalEventTable::erase(std::string_view case_id) {
  auto it = map_.find(case_id);
  if (it == map_.end()) return std::nullopt;
  Record rec = it->second.record;
  unlink(it->second);
  map_.erase(it);
  return rec;
}

namespace {

void sort_by_recency(std::vector<std::pair<Timestamp, std::string>>& v) {
  std::sort(v.begin(), v.end());
}

}  // namespace

std::vector<std::pair<Timestamp, std::string>> TemporalEventTable::idle(Timestamp now,
                                                                        Timestamp timeout) const {
  std::vector<std::pair<Timestamp, std::string>> out;
  for (const Node* n = head_; n != nullptr; n = n->next) {
    const Timestamp seen = n->record.last_seen;
    if (now <= seen || now - seen <= timeout) break;
    out.emplace_back(seen, *n->key);
  }
  sort_by_recency(out);
  return out;
}

std::vector<std::pair<Timestamp, std::string>> TemporalEventTable::all_by_recency() const {
  std::vector<std::pair<Timestamp, std::string>> out;
  out.reserve(map_.size());
  for (const Node* n = head_; n != nullptr; n = n->next) out.emplace_back(n->record.last_seen, *n->key);
  sort_by_recency(out);
  return out;
}

// ---------------------------------------------------------------------------
// Engine

Engine::Engine(std::shared_ptr<const Vocabulary> vocab, std::vector<std::string> class_fields,
               EngineConfig config)
    : vocab_(std::move(vocab)),
      class_fields_(std::move(class_fields)),
      config_(config),
      window_(config.window, vocab_ ? vocab_->dim() : 0) {
  if (class_fields_.empty()) throw ConfigError("class_fields is empty");
  if (config_.idle_timeout && *config_.idle_timeout == 0) {
    throw ConfigError("idle timeout must be positive");
  }
}

std::vector<FeatureFrame> Engine::process_event(const Event& e) {
  std::vector<FeatureFrame> out;
  process_event(e, [&](const FeatureFrame& f) { out.push_back(f); });
  return out;
}

FeatureFrame Engine::close_case(std::string_view case_id, Timestamp at) {
  FeatureFrame out;
  close_case(case_id, at, [&](const FeatureFrame& f) { out = f; });
  return out;
}

std::vector<FeatureFrame> Engine::evict_idle(Timestamp now, Timestamp timeout) {
  std::vector<FeatureFrame> out;
  evict_idle(now, timeout, [&](const FeatureFrame& f) { out.push_back(f); });
  return out;
}

std::vector<FeatureFrame> run_stream(std::span<const Event> events,
                                     std::shared_ptr<const Vocabulary> vocab,
                                     std::vector<std::string> class_fields,
                                     const EngineConfig& config) {
  Engine engine(std::move(vocab), std::move(class_fields), config);
  std::vector<FeatureFrame> out;
  auto sink = [&](const FeatureFrame& f) { out.push_back(f); };
  for (const auto& e : events) engine.feed(e, sink);
  engine.finish(sink);
  return out;
}

}  // namespace transfeat
