#include "transfeat/registry.hpp"

#include <omp.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "transfeat/error.hpp"

namespace transfeat {

bool is_reserved_name(std::string_view label) noexcept {
  return label == kSotName || label == kEotName || label == kOtherName;
}

Vocabulary::Vocabulary(std::size_t k, std::vector<std::string> visible)
    : k_(k), visible_(std::move(visible)) {
  if (k_ == 0) throw ConfigError("k must be at least 1");
  if (visible_.size() > k_) throw ConfigError("more visible labels than k");
  index_.reserve(visible_.size());
  for (std::uint32_t i = 0; i < visible_.size(); ++i) {
    if (visible_[i].empty() || is_reserved_name(visible_[i])) {
      throw DuplicateLabel(visible_[i]);
    }
    if (!index_.emplace(visible_[i], kReservedCount + i).second) {
      throw DuplicateLabel(visible_[i]);
    }
  }
}

ClassId Vocabulary::map(std::string_view label) const {
  auto it = index_.find(label);
  return it == index_.end() ? kOther : ClassId{it->second};
}

std::string_view Vocabulary::name(ClassId id) const {
  switch (id.value) {
    case 0: return kSotName;
    case 1: return kEotName;
    case 2: return kOtherName;
    default: return visible_.at(id.value - kReservedCount);
  }
}

ClassId map_class(std::string_view label, const Vocabulary& vocab) { return vocab.map(label); }

namespace {

using CountMap = std::unordered_map<std::string, std::uint64_t>;

std::vector<LabelCount> sorted_counts(const CountMap& counts) {
  std::vector<LabelCount> out;
  out.reserve(counts.size());
  for (const auto& [label, n] : counts) out.push_back({label, n});
  std::sort(out.begin(), out.end(), [](const LabelCount& a, const LabelCount& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.label < b.label;
  });
  return out;
}

}  // namespace

std::vector<LabelCount> count_labels_serial(std::span<const Event> events,
                                            std::span<const std::string> class_fields) {
  CountMap counts;
  std::string label;
  for (const auto& e : events) {
    derive_event_class_into(e.attributes, class_fields, label);
    ++counts[label];
  }
  return sorted_counts(counts);
}

std::vector<LabelCount> count_labels_parallel(std::span<const Event> events,
                                              std::span<const std::string> class_fields) {
  const auto n = static_cast<std::ptrdiff_t>(events.size());
  const int threads = omp_get_max_threads();
  std::vector<CountMap> partial(static_cast<std::size_t>(threads));
  std::exception_ptr failure;

#pragma omp parallel num_threads(threads)
  {
    CountMap& local = partial[static_cast<std::size_t>(omp_get_thread_num())];
    std::string label;
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      try {
        derive_event_class_into(events[static_cast<std::size_t>(i)].attributes, class_fields,
                                label);
        ++local[label];
      } catch (...) {
#pragma omp critical(transfeat_count_failure)
        if (!failure) failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);

  CountMap merged = std::move(partial.front());
  for (std::size_t t = 1; t < partial.size(); ++t) {
    for (auto& [label, c] : partial[t]) merged[label] += c;
  }
  return sorted_counts(merged);
}

Vocabulary select_vocabulary(std::vector<LabelCount> counts, std::size_t k) {
  if (k == 0) throw ConfigError("k must be at least 1");
  std::sort(counts.begin(), counts.end(), [](const LabelCount& a, const LabelCount& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.label < b.label;
  });
  std::vector<std::string> visible;
  for (auto& c : counts) {
    if (visible.size() == k) break;
    // Reserved names can never be visible; such events fall into Other.
    if (is_reserved_name(c.label) || c.label.empty()) continue;
    visible.push_back(std::move(c.label));
  }
  return Vocabulary(k, std::move(visible));
}

Vocabulary build_vocabulary(std::span<const Event> events, std::size_t k,
                            std::span<const std::string> class_fields) {
  if (k == 0) throw ConfigError("k must be at least 1");
  if (events.empty()) throw EmptyStream();
  return select_vocabulary(count_labels_parallel(events, class_fields), k);
}

std::string vocabulary_to_json(const Vocabulary& vocab) {
  nlohmann::ordered_json doc;
  doc["version"] = kVocabularyVersion;
  doc["k"] = vocab.k();
  doc["visible"] = vocab.visible();
  return doc.dump(2) + "\n";
}

Vocabulary vocabulary_from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(0, std::string("vocabulary is not valid JSON: ") + ex.what());
  }
  if (!doc.is_object() || !doc.contains("version")) {
    throw VersionMismatch("vocabulary has no version tag");
  }
  if (!doc["version"].is_number_integer() || doc["version"].get<int>() != kVocabularyVersion) {
    throw VersionMismatch("unsupported vocabulary version " + doc["version"].dump());
  }
  try {
    auto k = doc.at("k").get<std::size_t>();
    auto visible = doc.at("visible").get<std::vector<std::string>>();
    return Vocabulary(k, std::move(visible));
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(0, std::string("malformed vocabulary: ") + ex.what());
  }
}

void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << vocabulary_to_json(vocab);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return vocabulary_from_json(buf.str());
}

}  // namespace transfeat
