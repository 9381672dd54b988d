#pragma once

// Brute-force reference for the engine. It shares no code with the engine:
// the vocabulary is recomputed by sorting a std::map of counts, per-case
// histories are kept in full, the complete transition list of the stream is
// materialized, and every frame's matrix is recounted from the last l
// entries of that list.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "transfeat/engine.hpp"

namespace oracle {

struct Emitted {
  std::string case_id;
  std::uint64_t ts = 0;
  std::uint32_t from = 0;
  std::uint32_t to = 0;
};

struct Options {
  std::size_t window = 1;
  std::size_t k = 1;
  std::optional<std::uint64_t> idle_timeout;
  bool flush = false;
  std::string class_attribute = "cls";
};

// label -> id: 0 SOT, 1 EOT, 2 Other, visible from 3 in rank order.
inline std::map<std::string, std::uint32_t> vocabulary(const std::vector<transfeat::Event>& events,
                                                       const Options& opt) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto& e : events) ++counts[*e.find(opt.class_attribute)];
  std::vector<std::pair<std::string, std::uint64_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::map<std::string, std::uint32_t> ids;
  std::uint32_t next = 3;
  for (const auto& [label, n] : ranked) {
    if (ids.size() == opt.k) break;
    if (label == "SOT" || label == "EOT" || label == "Other") continue;
    ids[label] = next++;
  }
  return ids;
}

inline std::vector<Emitted> transitions(const std::vector<transfeat::Event>& events,
                                        const Options& opt) {
  const auto ids = vocabulary(events, opt);
  auto id_of = [&](const std::string& label) -> std::uint32_t {
    auto it = ids.find(label);
    return it == ids.end() ? 2u : it->second;
  };

  std::map<std::string, std::vector<std::uint32_t>> history;
  std::map<std::string, std::uint64_t> last_seen;
  std::vector<Emitted> out;
  std::optional<std::uint64_t> max_ts;

  auto close = [&](const std::string& case_id, std::uint64_t at) {
    out.push_back({case_id, at, history.at(case_id).back(), 1u});
    history.erase(case_id);
    last_seen.erase(case_id);
  };
  auto open_by_recency = [&] {
    std::vector<std::pair<std::uint64_t, std::string>> v;
    for (const auto& [c, t] : last_seen) v.emplace_back(t, c);
    std::sort(v.begin(), v.end());
    return v;
  };

  for (const auto& e : events) {
    if (opt.idle_timeout && max_ts && e.timestamp > *max_ts) {
      for (const auto& [t, c] : open_by_recency()) {
        if (e.timestamp - t > *opt.idle_timeout) close(c, e.timestamp);
      }
    }
    max_ts = max_ts ? std::max(*max_ts, e.timestamp) : e.timestamp;
    const std::uint32_t cls = id_of(*e.find(opt.class_attribute));
    auto& h = history[e.case_id];
    out.push_back({e.case_id, e.timestamp, h.empty() ? 0u : h.back(), cls});
    h.push_back(cls);
    last_seen[e.case_id] = e.timestamp;
    if (e.is_end) close(e.case_id, e.timestamp);
  }
  if (opt.flush) {
    for (const auto& [t, c] : open_by_recency()) close(c, *max_ts);
  }
  return out;
}

inline std::vector<transfeat::FeatureFrame> frames(const std::vector<transfeat::Event>& events,
                                                   const Options& opt) {
  const auto list = transitions(events, opt);
  std::vector<transfeat::FeatureFrame> out;
  out.reserve(list.size());
  for (std::size_t i = 0; i < list.size(); ++i) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> counts;
    const std::size_t first = i + 1 >= opt.window ? i + 1 - opt.window : 0;
    for (std::size_t j = first; j <= i; ++j) ++counts[{list[j].from, list[j].to}];
    transfeat::FeatureFrame f;
    f.seq = i;
    f.case_id = list[i].case_id;
    f.timestamp = list[i].ts;
    f.transition = {transfeat::ClassId{list[i].from}, transfeat::ClassId{list[i].to}};
    for (const auto& [cell, n] : counts) f.entries.push_back({cell.first, cell.second, n});
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace oracle
