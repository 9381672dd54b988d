#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "transfeat/event.hpp"

namespace transfeat {

struct BenchConfig {
  std::size_t n_events = 1'000'000;
  std::size_t n_cases = 10'000;  // concurrently open cases
  std::size_t k = 50;
  std::size_t window = 200;
  std::uint64_t seed = 7;
  bool emit_entries = true;
  std::size_t mean_case_length = 20;
};

struct BenchReport {
  std::size_t n_events = 0;
  std::size_t n_cases = 0;
  std::size_t k = 0;
  std::size_t window = 0;
  bool emit_entries = true;
  std::uint64_t frames = 0;
  std::size_t open_cases_end = 0;
  double elapsed_sec = 0.0;
  double events_per_sec = 0.0;
  double p50_ns = 0.0;
  double p99_ns = 0.0;
};

// In-memory stream keeping `n_cases` cases open: the first n_cases events
// open one case each, then every event goes to a uniformly chosen slot and
// ends its case with probability 1/mean_case_length. Classes are drawn from
// 2k labels with a skewed distribution, so some are hidden.
std::vector<Event> make_bench_workload(const BenchConfig& config);

// Timed throughput pass plus a per-event latency pass, each on a fresh
// engine. Vocabulary construction is not timed.
BenchReport run_bench(const BenchConfig& config);

// {"n_events":...,"events_per_sec":...,"p50_ns":...,"p99_ns":...}
std::string bench_report_json(const BenchReport& report);

}  // namespace transfeat
