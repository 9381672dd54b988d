#include <gtest/gtest.h>

#include <memory>

#include "generators.hpp"
#include "transfeat/sharded.hpp"

namespace transfeat {
namespace {

const std::vector<std::string> kFields{"cls"};

TEST(StableHash, KnownValues) {
  EXPECT_EQ(stable_hash(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(stable_hash("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_LT(shard_of("anything", 3), 3u);
}

TEST(PartitionByCase, KeepsCasesTogetherAndInOrder) {
  gen::Rng rng(4);
  auto stream = gen::random_stream(rng, {2000, 40, 10});
  auto shards = partition_by_case(stream.events, 4);
  ASSERT_EQ(shards.size(), 4u);
  std::size_t total = 0;
  for (std::size_t s = 0; s < shards.size(); ++s) {
    total += shards[s].size();
    for (std::size_t i = 0; i < shards[s].size(); ++i) {
      EXPECT_EQ(shard_of(shards[s][i].case_id, 4), s);
      if (i > 0) {
        EXPECT_LE(shards[s][i - 1].timestamp, shards[s][i].timestamp);
      }
    }
  }
  EXPECT_EQ(total, stream.events.size());
}

TEST(ShardedEngine, OneShardEqualsSingleEngine) {
  gen::Rng rng(6);
  auto stream = gen::random_stream(rng);
  auto vocab = std::make_shared<const Vocabulary>(build_vocabulary(stream.events, 6, kFields));
  EngineConfig config{.window = 9, .flush_at_end = true};
  auto shards = partition_by_case(stream.events, 1);
  auto out = collect_sharded(shards, vocab, kFields, config, Execution::Serial);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0], run_stream(stream.events, vocab, kFields, config));
}

TEST(ShardedEngineProperty, ParallelMatchesSerial) {
  gen::Rng rng(12);
  for (int iter = 0; iter < 30; ++iter) {
    auto stream = gen::random_stream(rng);
    auto vocab = std::make_shared<const Vocabulary>(
        build_vocabulary(stream.events, rng.between(1, 10), kFields));
    EngineConfig config;
    config.window = rng.between(1, 40);
    config.flush_at_end = rng.chance(0.5);
    if (rng.chance(0.5)) config.idle_timeout = rng.between(1, 100);
    auto shards = partition_by_case(stream.events, rng.between(1, 8));
    EXPECT_EQ(collect_sharded(shards, vocab, kFields, config, Execution::Serial),
              collect_sharded(shards, vocab, kFields, config, Execution::Parallel));
    auto serial = summarize_sharded(shards, vocab, kFields, config, Execution::Serial);
    EXPECT_EQ(serial, summarize_sharded(shards, vocab, kFields, config, Execution::Parallel));

    auto frames = collect_sharded(shards, vocab, kFields, config, Execution::Serial);
    for (std::size_t s = 0; s < shards.size(); ++s) {
      std::uint64_t digest = 0;
      for (const auto& f : frames[s]) digest = fold_frame_digest(digest, f);
      EXPECT_EQ(serial[s].frames, frames[s].size());
      EXPECT_EQ(serial[s].digest, digest);
    }
  }
}

TEST(ShardedEngine, ParallelPropagatesErrors) {
  auto vocab = std::make_shared<const Vocabulary>(1, std::vector<std::string>{"a"});
  std::vector<std::vector<Event>> shards(3);
  shards[0].push_back(gen::event("x", 1, "a"));
  Event bad;
  bad.case_id = "y";
  shards[2].push_back(bad);
  EXPECT_THROW(collect_sharded(shards, vocab, kFields, {}, Execution::Parallel), MissingAttribute);
}

}  // namespace
}  // namespace transfeat
