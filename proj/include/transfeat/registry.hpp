#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "transfeat/event.hpp"

namespace transfeat {

inline constexpr std::string_view kSotName = "SOT";
inline constexpr std::string_view kEotName = "EOT";
inline constexpr std::string_view kOtherName = "Other";
inline constexpr int kVocabularyVersion = 1;

bool is_reserved_name(std::string_view label) noexcept;

// Event-class vocabulary: reserved SOT=0, EOT=1, Other=2, then the visible
// classes in rank order at 3, 4, ... Immutable once built.
class Vocabulary {
 public:
  Vocabulary() = default;
  // Throws DuplicateLabel; reserved names are rejected the same way.
  Vocabulary(std::size_t k, std::vector<std::string> visible);

  std::size_t k() const noexcept { return k_; }
  const std::vector<std::string>& visible() const noexcept { return visible_; }
  std::size_t dim() const noexcept { return visible_.size() + kReservedCount; }

  // Total: visible labels map to 3+i, everything else to Other.
  ClassId map(std::string_view label) const;

  // Label for any id, including the reserved tokens.
  std::string_view name(ClassId id) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.k_ == b.k_ && a.visible_ == b.visible_;
  }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
      return std::hash<std::string_view>{}(s);
    }
  };

  std::size_t k_ = 0;
  std::vector<std::string> visible_;
  std::unordered_map<std::string, std::uint32_t, Hash, std::equal_to<>> index_;
};

struct LabelCount {
  std::string label;
  std::uint64_t count = 0;
  friend bool operator==(const LabelCount&, const LabelCount&) = default;
};

// Occurrences of each derived label, sorted by descending count then
// ascending label. The serial version is the reference for the parallel one.
std::vector<LabelCount> count_labels_serial(std::span<const Event> events,
                                            std::span<const std::string> class_fields);
std::vector<LabelCount> count_labels_parallel(std::span<const Event> events,
                                              std::span<const std::string> class_fields);

// Top-k labels by frequency, ties by label. Throws EmptyStream, ConfigError
// for k == 0, MissingAttribute.
Vocabulary build_vocabulary(std::span<const Event> events, std::size_t k,
                            std::span<const std::string> class_fields);

// Same selection rule applied to precomputed counts.
Vocabulary select_vocabulary(std::vector<LabelCount> counts, std::size_t k);

ClassId map_class(std::string_view label, const Vocabulary& vocab);

std::string vocabulary_to_json(const Vocabulary& vocab);
Vocabulary vocabulary_from_json(std::string_view text);

// Throws IoError, VersionMismatch, DuplicateLabel.
void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path);
Vocabulary load_vocabulary(const std::filesystem::path& path);

}  // namespace transfeat
