#include "transfeat/workload.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>

#include <json.hpp>

#include "transfeat/engine.hpp"
#include "transfeat/registry.hpp"
#include "transfeat/synth.hpp"

namespace transfeat {

std::vector<Event> make_bench_workload(const BenchConfig& config) {
  if (config.n_cases == 0) throw ConfigError("bench needs at least one case");
  if (config.k == 0) throw ConfigError("k must be at least 1");
  PortableRandom rng(config.seed);

  const std::size_t n_labels = 2 * config.k;
  std::vector<std::string> labels;
  std::vector<double> weights;
  double total = 0.0;
  for (std::size_t i = 0; i < n_labels; ++i) {
    std::string name = std::to_string(i);
    name.insert(0, 4 - std::min<std::size_t>(4, name.size()), '0');
    labels.push_back("ev" + name);
    const double w = 1.0 / std::sqrt(static_cast<double>(i + 1));
    weights.push_back(w);
    total += w;
  }
  for (double& w : weights) w /= total;

  std::vector<std::string> slots(config.n_cases);
  std::uint64_t next_case = 0;
  auto fresh_case = [&] { return "c" + std::to_string(next_case++); };

  const double end_probability = 1.0 / static_cast<double>(std::max<std::size_t>(1, config.mean_case_length));
  std::vector<Event> events;
  events.reserve(config.n_events);
  for (std::size_t i = 0; i < config.n_events; ++i) {
    std::size_t slot = i < config.n_cases
                           ? i
                           : static_cast<std::size_t>(rng.uniform() * static_cast<double>(config.n_cases));
    if (slots[slot].empty()) slots[slot] = fresh_case();
    Event e;
    e.case_id = slots[slot];
    e.timestamp = static_cast<Timestamp>(i) * 1000;
    e.attributes.push_back({"api", labels[rng.categorical(weights)]});
    e.is_end = i >= config.n_cases && rng.uniform() < end_probability;
    if (e.is_end) slots[slot].clear();
    events.push_back(std::move(e));
  }
  return events;
}

BenchReport run_bench(const BenchConfig& config) {
  using Clock = std::chrono::steady_clock;

  const std::vector<Event> events = make_bench_workload(config);
  const std::vector<std::string> fields{"api"};
  auto vocab = std::make_shared<const Vocabulary>(build_vocabulary(events, config.k, fields));

  EngineConfig engine_config;
  engine_config.window = config.window;
  engine_config.emit_entries = config.emit_entries;

  BenchReport report;
  report.n_events = config.n_events;
  report.n_cases = config.n_cases;
  report.k = config.k;
  report.window = config.window;
  report.emit_entries = config.emit_entries;

  std::uint64_t checksum = 0;
  auto sink = [&](const FeatureFrame& f) { checksum += f.entries.size() + f.transition.to.value; };

  {
    Engine engine(vocab, fields, engine_config);
    const auto start = Clock::now();
    for (const auto& e : events) engine.process_event(e, sink);
    const auto stop = Clock::now();
    report.elapsed_sec = std::chrono::duration<double>(stop - start).count();
    report.frames = engine.frames_emitted();
    report.open_cases_end = engine.table().size();
  }
  report.events_per_sec =
      report.elapsed_sec > 0.0 ? static_cast<double>(events.size()) / report.elapsed_sec : 0.0;

  if (!events.empty()) {
    Engine engine(vocab, fields, engine_config);
    std::vector<std::int64_t> latency;
    latency.reserve(events.size());
    for (const auto& e : events) {
      const auto start = Clock::now();
      engine.process_event(e, sink);
      const auto stop = Clock::now();
      latency.push_back(std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start).count());
    }
    auto quantile = [&](double q) {
      auto idx = static_cast<std::size_t>(q * static_cast<double>(latency.size() - 1));
      std::nth_element(latency.begin(), latency.begin() + static_cast<std::ptrdiff_t>(idx),
                       latency.end());
      return static_cast<double>(latency[idx]);
    };
    report.p50_ns = quantile(0.50);
    report.p99_ns = quantile(0.99);
  }
  // Keeps the sink's work observable.
  if (checksum == 0xFFFFFFFFFFFFFFFFULL) report.frames = 0;
  return report;
}

std::string bench_report_json(const BenchReport& r) {
  nlohmann::ordered_json doc;
  doc["n_events"] = r.n_events;
  doc["n_cases"] = r.n_cases;
  doc["k"] = r.k;
  doc["l"] = r.window;
  doc["emit_entries"] = r.emit_entries;
  doc["frames"] = r.frames;
  doc["open_cases_end"] = r.open_cases_end;
  doc["elapsed_sec"] = r.elapsed_sec;
  doc["events_per_sec"] = r.events_per_sec;
  doc["p50_ns"] = r.p50_ns;
  doc["p99_ns"] = r.p99_ns;
  return doc.dump();
}

}  // namespace transfeat
