#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "transfeat/engine.hpp"

namespace transfeat {

// Opt-in scale-out: cases are assigned to independent engines by a stable
// hash of the case id. Each shard has its own window, so the matrices are
// per-shard, not the global ones a single engine would produce.

enum class Execution { Serial, Parallel };

// FNV-1a, identical on every platform.
std::uint64_t stable_hash(std::string_view text) noexcept;
std::size_t shard_of(std::string_view case_id, std::size_t shards) noexcept;

// Splits an ordered stream into per-shard ordered streams.
std::vector<std::vector<Event>> partition_by_case(std::span<const Event> events,
                                                  std::size_t shards);

struct ShardSummary {
  std::uint64_t frames = 0;
  std::uint64_t digest = 0;  // order-sensitive hash of every frame
  std::size_t open_cases = 0;

  friend bool operator==(const ShardSummary&, const ShardSummary&) = default;
};

// Order-sensitive digest update used by ShardSummary.
std::uint64_t fold_frame_digest(std::uint64_t digest, const FeatureFrame& frame) noexcept;

// Serial runs the shards one after another and is the reference for the
// OpenMP-parallel execution; both must agree exactly.
std::vector<std::vector<FeatureFrame>> collect_sharded(
    std::span<const std::vector<Event>> shards, std::shared_ptr<const Vocabulary> vocab,
    const std::vector<std::string>& class_fields, const EngineConfig& config, Execution exec);

std::vector<ShardSummary> summarize_sharded(std::span<const std::vector<Event>> shards,
                                            std::shared_ptr<const Vocabulary> vocab,
                                            const std::vector<std::string>& class_fields,
                                            const EngineConfig& config, Execution exec);

}  // namespace transfeat
