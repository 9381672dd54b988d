#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "transfeat/synth.hpp"

namespace transfeat {
namespace {

std::string ndjson(const SynthOutput& out) {
  std::ostringstream s;
  write_events_ndjson(s, out.events);
  return s.str();
}

TEST(Synth, ZeroCasesIsEmpty) {
  auto templates = default_templates();
  SynthConfig config;
  config.n_cases = 0;
  auto out = generate(templates, config);
  EXPECT_TRUE(out.events.empty());
  EXPECT_TRUE(out.labels.empty());
}

TEST(Synth, ZeroAnomalyRateLabelsEverythingNormal) {
  auto templates = default_templates();
  SynthConfig config;
  config.n_cases = 300;
  config.anomaly_rate = 0.0;
  auto out = generate(templates, config);
  EXPECT_EQ(out.labels.size(), 300u);
  for (const auto& [c, y] : out.labels) EXPECT_EQ(y, 0) << c;
}

TEST(Synth, SameSeedIsByteIdentical) {
  auto templates = default_templates();
  SynthConfig config;
  config.n_cases = 500;
  config.seed = 42;
  EXPECT_EQ(ndjson(generate(templates, config)), ndjson(generate(templates, config)));
  auto first = generate(templates, config);
  config.seed = 43;
  EXPECT_NE(ndjson(first), ndjson(generate(templates, config)));
}

TEST(Synth, StreamShape) {
  auto templates = default_templates();
  SynthConfig config;
  config.n_cases = 200;
  config.anomaly_rate = 0.2;
  auto out = generate(templates, config);
  EXPECT_TRUE(std::is_sorted(out.events.begin(), out.events.end(),
                             [](const Event& a, const Event& b) { return a.timestamp < b.timestamp; }));
  std::map<std::string, int> ends;
  for (const auto& e : out.events) {
    EXPECT_EQ(e.case_id.size(), 11u);
    EXPECT_EQ(e.case_id.rfind("case-", 0), 0u);
    EXPECT_EQ(ends[e.case_id], 0) << "event after end in " << e.case_id;
    if (e.is_end) ++ends[e.case_id];
  }
  EXPECT_EQ(ends.size(), 200u);
  for (const auto& [c, n] : ends) EXPECT_EQ(n, 1) << c;
  EXPECT_EQ(out.labels.begin()->first, "case-000000");
}

TEST(Synth, NormalPrefixIsNeverAnomalous) {
  auto templates = default_templates();
  SynthConfig config;
  config.n_cases = 100;
  config.anomaly_rate = 1.0;
  config.normal_prefix = 40;
  auto out = generate(templates, config);
  int anomalies = 0;
  for (const auto& [c, y] : out.labels) anomalies += y;
  EXPECT_EQ(anomalies, 60);
  EXPECT_EQ(out.labels.at("case-000039"), 0);
  EXPECT_EQ(out.labels.at("case-000040"), 1);
}

TEST(Synth, MaxCaseEventsTruncates) {
  auto templates = default_templates();
  SynthConfig config;
  config.n_cases = 20;
  config.anomaly_rate = 1.0;
  config.max_case_events = 5;
  auto out = generate(templates, config);
  std::map<std::string, int> lengths;
  for (const auto& e : out.events) ++lengths[e.case_id];
  for (const auto& [c, n] : lengths) EXPECT_LE(n, 5);
}

// Empirical next-class frequencies converge to the template's transition
// probabilities.
TEST(Synth, TransitionFrequenciesMatchTemplate) {
  auto templates = parse_templates(R"({"templates":[{"name":"n","start":{"a":1},
    "transitions":{"a":{"a":0.5,"b":0.3,"$end":0.2},"b":{"a":0.6,"b":0.1,"$end":0.3}}}]})");
  SynthConfig config;
  config.n_cases = 50000;
  config.anomaly_rate = 0.0;
  config.arrival_rate = 1000.0;
  auto out = generate(templates, config);
  ASSERT_GE(out.events.size(), 100000u);

  std::map<std::string, std::string> last;
  std::map<std::string, std::map<std::string, double>> counts;
  for (const auto& e : out.events) {
    const std::string cls = e.attributes.at(0).value;
    auto it = last.find(e.case_id);
    if (it != last.end()) counts[it->second][cls] += 1;
    last[e.case_id] = cls;
    if (e.is_end) {
      counts[cls]["$end"] += 1;
      last.erase(e.case_id);
    }
  }
  const std::map<std::string, std::map<std::string, double>> expected{
      {"a", {{"a", 0.5}, {"b", 0.3}, {"$end", 0.2}}}, {"b", {{"a", 0.6}, {"b", 0.1}, {"$end", 0.3}}}};
  for (const auto& [from, row] : expected) {
    double total = 0;
    for (const auto& [to, n] : counts[from]) total += n;
    for (const auto& [to, p] : row) EXPECT_NEAR(counts[from][to] / total, p, 0.02) << from << "->" << to;
  }
}

TEST(Synth, AnomalyCountIsReproducibleAndNearRate) {
  auto templates = default_templates();
  SynthConfig config;
  config.n_cases = 4000;
  config.anomaly_rate = 0.05;
  config.seed = 9;
  auto count = [&] {
    int n = 0;
    for (const auto& [c, y] : generate(templates, config).labels) n += y;
    return n;
  };
  const int a = count();
  EXPECT_EQ(a, count());
  // Binomial(4000, 0.05): mean 200, sd ~13.8; five sd either way.
  EXPECT_NEAR(a, 200, 69);
}

TEST(PortableRandom, FixedSequence) {
  PortableRandom a(5489);
  EXPECT_EQ(a.raw(), 14514284786278117030ULL);
  PortableRandom b(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = b.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_GE(b.exponential(2.0), 0.0);
  }
  const std::vector<double> w{0.0, 1.0, 0.0};
  EXPECT_EQ(b.categorical(w), 1u);
}

TEST(Templates, RejectInvalid) {
  const char* bad[] = {
      "not json",
      R"({"templates":[{"name":"x","start":{"a":0.5},"transitions":{"a":{"$end":1}}}]})",
      R"({"templates":[{"name":"x","start":{"a":1},"transitions":{"a":{"a":0.5}}}]})",
      R"({"templates":[{"name":"x","start":{"a":1},"transitions":{"a":{"b":1}}}]})",
      R"({"templates":[{"name":"x","start":{"a":1.5,"b":-0.5},"transitions":{"a":{"$end":1},"b":{"$end":1}}}]})",
      R"({"templates":[{"name":"x","event_rate":0,"start":{"a":1},"transitions":{"a":{"$end":1}}}]})",
      R"({"templates":[{"start":{"a":1},"transitions":{"a":{"$end":1}}}]})",
      R"({"nope":[]})",
  };
  for (const char* text : bad) EXPECT_THROW(parse_templates(text), InvalidTemplate) << text;
}

TEST(Templates, MissingAnomalyTemplate) {
  auto templates = default_templates();
  SynthConfig config;
  config.anomaly_template = "nonexistent";
  EXPECT_THROW(generate(templates, config), InvalidTemplate);
}

TEST(Templates, JsonRoundTrip) {
  auto templates = default_templates();
  auto again = parse_templates(templates_to_json(templates));
  ASSERT_EQ(again.size(), templates.size());
  for (std::size_t i = 0; i < templates.size(); ++i) {
    EXPECT_EQ(again[i].name, templates[i].name);
    EXPECT_EQ(again[i].classes, templates[i].classes);
    EXPECT_EQ(again[i].next, templates[i].next);
    EXPECT_EQ(again[i].terminate, templates[i].terminate);
    EXPECT_EQ(again[i].event_rate, templates[i].event_rate);
  }
}

}  // namespace
}  // namespace transfeat
