#include "transfeat/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "transfeat/error.hpp"
#include "transfeat/text.hpp"

namespace transfeat {

namespace {

constexpr std::string_view kEndKey = "$end";
constexpr double kSumTolerance = 1e-9;

bool sums_to_one(std::span<const double> v, double extra = 0.0) {
  double s = std::accumulate(v.begin(), v.end(), extra);
  return std::fabs(s - 1.0) <= kSumTolerance;
}

}  // namespace

double PortableRandom::exponential(double rate) { return -std::log1p(-uniform()) / rate; }

std::size_t PortableRandom::categorical(std::span<const double> weights) {
  const double u = uniform();
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;
}

void TraceTemplate::validate() const {
  auto fail = [&](const std::string& why) { throw InvalidTemplate("template '" + name + "': " + why); };
  if (name.empty()) throw InvalidTemplate("template without a name");
  if (classes.empty()) fail("no classes");
  if (start.size() != classes.size() || next.size() != classes.size() ||
      terminate.size() != classes.size()) {
    fail("table sizes do not match the class list");
  }
  std::vector<std::string> sorted = classes;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) fail("duplicate class");
  for (const auto& c : classes) {
    if (c.empty()) fail("empty class name");
  }
  for (double p : start) {
    if (!(p >= 0.0)) fail("negative start probability");
  }
  if (!sums_to_one(start)) fail("start probabilities do not sum to 1");
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (next[i].size() != classes.size()) fail("row '" + classes[i] + "' has the wrong size");
    for (double p : next[i]) {
      if (!(p >= 0.0)) fail("negative probability in row '" + classes[i] + "'");
    }
    if (!(terminate[i] >= 0.0)) fail("negative terminate probability");
    if (!sums_to_one(next[i], terminate[i])) {
      fail("row '" + classes[i] + "' does not sum to 1");
    }
  }
  if (event_rate && !(*event_rate > 0.0)) fail("event_rate must be positive");
}

std::vector<TraceTemplate> parse_templates(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& ex) {
    throw InvalidTemplate(std::string("templates are not valid JSON: ") + ex.what());
  }
  if (!doc.is_object() || !doc.contains("templates") || !doc["templates"].is_array()) {
    throw InvalidTemplate("expected an object with a 'templates' array");
  }
  std::vector<TraceTemplate> out;
  try {
    for (const auto& t : doc["templates"]) {
      TraceTemplate tpl;
      tpl.name = t.at("name").get<std::string>();
      if (t.contains("event_rate")) tpl.event_rate = t["event_rate"].get<double>();
      const auto& rows = t.at("transitions");
      const auto& start = t.at("start");
      if (!rows.is_object() || !start.is_object()) {
        throw InvalidTemplate("template '" + tpl.name + "': start/transitions must be objects");
      }
      // nlohmann::json keeps object keys sorted, so class order is lexical.
      for (const auto& [cls, row] : rows.items()) tpl.classes.push_back(cls);
      auto index_of = [&](const std::string& cls) -> std::size_t {
        auto it = std::find(tpl.classes.begin(), tpl.classes.end(), cls);
        if (it == tpl.classes.end()) {
          throw InvalidTemplate("template '" + tpl.name + "': class '" + cls +
                                "' has no transition row");
        }
        return static_cast<std::size_t>(it - tpl.classes.begin());
      };
      const std::size_t n = tpl.classes.size();
      tpl.start.assign(n, 0.0);
      tpl.next.assign(n, std::vector<double>(n, 0.0));
      tpl.terminate.assign(n, 0.0);
      for (const auto& [cls, p] : start.items()) tpl.start[index_of(cls)] = p.get<double>();
      for (const auto& [cls, row] : rows.items()) {
        const std::size_t i = index_of(cls);
        for (const auto& [target, p] : row.items()) {
          if (target == kEndKey) {
            tpl.terminate[i] = p.get<double>();
          } else {
            tpl.next[i][index_of(target)] = p.get<double>();
          }
        }
      }
      tpl.validate();
      out.push_back(std::move(tpl));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw InvalidTemplate(std::string("malformed template: ") + ex.what());
  }
  return out;
}

std::vector<TraceTemplate> load_templates(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_templates(buf.str());
}

std::string templates_to_json(std::span<const TraceTemplate> templates) {
  nlohmann::json doc;
  doc["templates"] = nlohmann::json::array();
  for (const auto& t : templates) {
    nlohmann::json jt;
    jt["name"] = t.name;
    if (t.event_rate) jt["event_rate"] = *t.event_rate;
    nlohmann::json start = nlohmann::json::object();
    nlohmann::json rows = nlohmann::json::object();
    for (std::size_t i = 0; i < t.classes.size(); ++i) {
      if (t.start[i] > 0.0) start[t.classes[i]] = t.start[i];
      nlohmann::json row = nlohmann::json::object();
      for (std::size_t j = 0; j < t.classes.size(); ++j) {
        if (t.next[i][j] > 0.0) row[t.classes[j]] = t.next[i][j];
      }
      if (t.terminate[i] > 0.0) row[std::string(kEndKey)] = t.terminate[i];
      rows[t.classes[i]] = row;
    }
    jt["start"] = start;
    jt["transitions"] = rows;
    doc["templates"].push_back(jt);
  }
  return doc.dump(2) + "\n";
}

std::vector<TraceTemplate> default_templates() {
  static constexpr std::string_view kJson = R"({
  "templates": [
    {
      "name": "web",
      "start": {"syn:c": 1.0},
      "transitions": {
        "syn:c":    {"synack:s": 1.0},
        "synack:s": {"ack:c": 1.0},
        "ack:c":    {"get:c": 0.7, "fin:c": 0.3},
        "get:c":    {"data:s": 0.9, "err:s": 0.1},
        "data:s":   {"data:s": 0.5, "ack:c": 0.5},
        "err:s":    {"ack:c": 0.6, "fin:s": 0.4},
        "fin:c":    {"fin:s": 1.0},
        "fin:s":    {"$end": 1.0}
      }
    },
    {
      "name": "login",
      "start": {"syn:c": 1.0},
      "transitions": {
        "syn:c":    {"synack:s": 1.0},
        "synack:s": {"ack:c": 1.0},
        "ack:c":    {"auth:c": 0.5, "get:c": 0.3, "fin:c": 0.2},
        "auth:c":   {"ok:s": 0.8, "deny:s": 0.2},
        "ok:s":     {"get:c": 1.0},
        "deny:s":   {"auth:c": 0.5, "fin:s": 0.5},
        "get:c":    {"data:s": 1.0},
        "data:s":   {"ack:c": 0.7, "data:s": 0.3},
        "fin:c":    {"fin:s": 1.0},
        "fin:s":    {"$end": 1.0}
      }
    },
    {
      "name": "scan",
      "event_rate": 1000.0,
      "start": {"syn:c": 1.0},
      "transitions": {
        "syn:c": {"rst:s": 0.85, "synack:s": 0.15},
        "rst:s": {"syn:c": 0.999, "$end": 0.001},
        "synack:s": {"rst:c": 1.0},
        "rst:c": {"syn:c": 0.999, "$end": 0.001}
      }
    }
  ]
})";
  return parse_templates(kJson);
}

Schema synth_schema() {
  Schema s;
  s.case_field = "case";
  s.timestamp_field = "ts";
  s.end_field = "end";
  s.class_fields = {"class"};
  return s;
}

namespace {

struct Pending {
  Event event;
  std::size_t case_index;
  std::size_t position;
};

Timestamp to_nanos(double seconds) {
  const double ns = std::floor(seconds * 1e9);
  if (ns >= 1.8e19) return static_cast<Timestamp>(1.8e19);
  return static_cast<Timestamp>(ns);
}

std::string case_name(const std::string& prefix, std::size_t index) {
  std::string digits = std::to_string(index);
  if (digits.size() < 6) digits.insert(0, 6 - digits.size(), '0');
  return prefix + digits;
}

}  // namespace

SynthOutput generate(std::span<const TraceTemplate> templates, const SynthConfig& config) {
  if (!(config.anomaly_rate >= 0.0 && config.anomaly_rate <= 1.0)) {
    throw InvalidTemplate("anomaly rate must lie in [0, 1]");
  }
  if (!(config.arrival_rate > 0.0) || !(config.event_rate > 0.0)) {
    throw InvalidTemplate("rates must be positive");
  }
  if (config.max_case_events == 0) throw InvalidTemplate("max_case_events must be positive");

  const TraceTemplate* anomaly = nullptr;
  std::vector<const TraceTemplate*> normal;
  for (const auto& t : templates) {
    t.validate();
    if (t.name == config.anomaly_template) {
      anomaly = &t;
    } else {
      normal.push_back(&t);
    }
  }
  SynthOutput out;
  if (config.n_cases == 0) return out;
  if (config.anomaly_rate > 0.0 && anomaly == nullptr) {
    throw InvalidTemplate("anomaly template '" + config.anomaly_template + "' not found");
  }
  if (normal.empty() && config.anomaly_rate < 1.0) {
    throw InvalidTemplate("no normal template");
  }

  PortableRandom rng(config.seed);
  std::vector<Pending> pending;
  double arrival = 0.0;
  for (std::size_t c = 0; c < config.n_cases; ++c) {
    bool is_anomaly = false;
    if (c >= config.normal_prefix && config.anomaly_rate > 0.0) {
      is_anomaly = rng.uniform() < config.anomaly_rate;
    }
    const TraceTemplate* tpl = is_anomaly ? anomaly : nullptr;
    if (!tpl) {
      tpl = normal.size() == 1 ? normal.front()
                               : normal[static_cast<std::size_t>(rng.uniform() * normal.size())];
    }
    arrival += rng.exponential(config.arrival_rate);
    const double rate = tpl->event_rate.value_or(config.event_rate);
    const std::string case_id = case_name(config.case_prefix, c);
    out.labels[case_id] = is_anomaly ? 1 : 0;

    std::vector<double> row_with_end(tpl->classes.size() + 1);
    double t = arrival;
    std::size_t cls = rng.categorical(tpl->start);
    for (std::size_t pos = 0;; ++pos) {
      if (pos > 0) t += rng.exponential(rate);
      Pending p;
      p.event.case_id = case_id;
      p.event.timestamp = to_nanos(t);
      p.event.attributes.push_back({"class", tpl->classes[cls]});
      p.case_index = c;
      p.position = pos;

      std::copy(tpl->next[cls].begin(), tpl->next[cls].end(), row_with_end.begin());
      row_with_end.back() = tpl->terminate[cls];
      const std::size_t pick = rng.categorical(row_with_end);
      const bool ends = pick == tpl->classes.size() || pos + 1 == config.max_case_events;
      p.event.is_end = ends;
      pending.push_back(std::move(p));
      if (ends) break;
      cls = pick;
    }
  }

  std::sort(pending.begin(), pending.end(), [](const Pending& a, const Pending& b) {
    if (a.event.timestamp != b.event.timestamp) return a.event.timestamp < b.event.timestamp;
    if (a.case_index != b.case_index) return a.case_index < b.case_index;
    return a.position < b.position;
  });
  out.events.reserve(pending.size());
  for (auto& p : pending) out.events.push_back(std::move(p.event));
  return out;
}

void write_events_ndjson(std::ostream& out, std::span<const Event> events) {
  std::string line;
  for (const auto& e : events) {
    line.clear();
    line += "{\"case\":";
    text::append_json_string(line, e.case_id);
    line += ",\"ts\":";
    text::append_uint(line, e.timestamp);
    for (const auto& a : e.attributes) {
      line.push_back(',');
      text::append_json_string(line, a.name);
      line.push_back(':');
      text::append_json_string(line, a.value);
    }
    if (e.is_end) line += ",\"end\":true";
    line += "}\n";
    out << line;
  }
  if (!out) throw IoError("failed writing events");
}

}  // namespace transfeat
