#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "transfeat/event.hpp"
#include "transfeat/ingest.hpp"

namespace transfeat {

// Markov chain over event classes. Each row of `next` plus `terminate` sums
// to 1; `start` sums to 1.
struct TraceTemplate {
  std::string name;
  std::vector<std::string> classes;
  std::vector<double> start;
  std::vector<std::vector<double>> next;
  std::vector<double> terminate;
  // Events per second inside a case; SynthConfig::event_rate when unset.
  std::optional<double> event_rate;

  // Throws InvalidTemplate.
  void validate() const;
};

// {"templates":[{"name":..., "event_rate":..., "start":{cls:p},
//   "transitions":{cls:{cls:p, "$end":p}}}]}
std::vector<TraceTemplate> parse_templates(std::string_view json_text);
std::vector<TraceTemplate> load_templates(const std::filesystem::path& path);
std::string templates_to_json(std::span<const TraceTemplate> templates);

// Two TCP-like normal session templates and a scan-style anomaly ("scan").
std::vector<TraceTemplate> default_templates();

struct SynthConfig {
  std::size_t n_cases = 1000;
  std::string anomaly_template = "scan";
  double anomaly_rate = 0.05;
  double arrival_rate = 1.0;  // cases per second
  double event_rate = 10.0;   // events per second inside a case
  std::uint64_t seed = 1;
  // Leading cases that are always normal (profile warm-up material).
  std::size_t normal_prefix = 0;
  std::size_t max_case_events = 10000;
  std::string case_prefix = "case-";
};

struct SynthOutput {
  std::vector<Event> events;           // timestamp ordered
  std::map<std::string, int> labels;   // 1 = anomalous case
};

// Schema matching the generated events.
Schema synth_schema();

// Deterministic for a given seed: uses std::mt19937_64 with its raw output
// converted by hand, so results do not depend on the standard library's
// distribution implementations.
SynthOutput generate(std::span<const TraceTemplate> templates, const SynthConfig& config);

// {"case":"case-000001","ts":123,"class":"syn:c","end":true}
void write_events_ndjson(std::ostream& out, std::span<const Event> events);

// Portable draws from a 64-bit Mersenne Twister.
class PortableRandom {
 public:
  explicit PortableRandom(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Exponential with the given rate.
  double exponential(double rate);
  // Index drawn from weights summing to ~1; the last index absorbs rounding.
  std::size_t categorical(std::span<const double> weights);
  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace transfeat
