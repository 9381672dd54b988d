#include "transfeat/sharded.hpp"

#include <exception>

namespace transfeat {

std::uint64_t stable_hash(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::size_t shard_of(std::string_view case_id, std::size_t shards) noexcept {
  return shards <= 1 ? 0 : static_cast<std::size_t>(stable_hash(case_id) % shards);
}

std::vector<std::vector<Event>> partition_by_case(std::span<const Event> events,
                                                  std::size_t shards) {
  if (shards == 0) throw ConfigError("shard count must be at least 1");
  std::vector<std::vector<Event>> out(shards);
  for (const auto& e : events) out[shard_of(e.case_id, shards)].push_back(e);
  return out;
}

namespace {

inline std::uint64_t mix(std::uint64_t h, std::uint64_t v) noexcept {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

template <typename PerShard>
void for_each_shard(std::size_t n, Execution exec, PerShard&& body) {
  if (exec == Execution::Serial) {
    for (std::size_t s = 0; s < n; ++s) body(s);
    return;
  }
  std::exception_ptr failure;
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t s = 0; s < count; ++s) {
    try {
      body(static_cast<std::size_t>(s));
    } catch (...) {
#pragma omp critical(transfeat_shard_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

std::uint64_t fold_frame_digest(std::uint64_t digest, const FeatureFrame& frame) noexcept {
  digest = mix(digest, frame.seq);
  digest = mix(digest, stable_hash(frame.case_id));
  digest = mix(digest, frame.timestamp);
  digest = mix(digest, (std::uint64_t{frame.transition.from.value} << 32) | frame.transition.to.value);
  for (const auto& e : frame.entries) {
    digest = mix(digest, (std::uint64_t{e.row} << 40) ^ (std::uint64_t{e.col} << 20) ^ e.count);
  }
  return digest;
}

std::vector<std::vector<FeatureFrame>> collect_sharded(
    std::span<const std::vector<Event>> shards, std::shared_ptr<const Vocabulary> vocab,
    const std::vector<std::string>& class_fields, const EngineConfig& config, Execution exec) {
  std::vector<std::vector<FeatureFrame>> out(shards.size());
  for_each_shard(shards.size(), exec, [&](std::size_t s) {
    out[s] = run_stream(shards[s], vocab, class_fields, config);
  });
  return out;
}

std::vector<ShardSummary> summarize_sharded(std::span<const std::vector<Event>> shards,
                                            std::shared_ptr<const Vocabulary> vocab,
                                            const std::vector<std::string>& class_fields,
                                            const EngineConfig& config, Execution exec) {
  std::vector<ShardSummary> out(shards.size());
  for_each_shard(shards.size(), exec, [&](std::size_t s) {
    Engine engine(vocab, class_fields, config);
    ShardSummary summary;
    auto sink = [&](const FeatureFrame& f) {
      ++summary.frames;
      summary.digest = fold_frame_digest(summary.digest, f);
    };
    for (const auto& e : shards[s]) engine.feed(e, sink);
    engine.finish(sink);
    summary.open_cases = engine.table().size();
    out[s] = summary;
  });
  return out;
}

}  // namespace transfeat
