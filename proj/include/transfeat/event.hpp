#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace transfeat {

// Nanoseconds, or the record position when the input carries no timestamp.
using Timestamp = std::uint64_t;

struct Attribute {
  std::string name;
  std::string value;

  friend bool operator==(const Attribute&, const Attribute&) = default;
};

// One observed activity. The event log is an ordered sequence of these.
struct Event {
  std::string case_id;
  Timestamp timestamp = 0;
  std::vector<Attribute> attributes;
  bool is_end = false;

  // nullptr when absent.
  const std::string* find(std::string_view name) const noexcept;

  friend bool operator==(const Event&, const Event&) = default;
};

// Index of an event class in a fixed vocabulary. 0, 1 and 2 are reserved.
struct ClassId {
  std::uint32_t value = 0;

  constexpr ClassId() = default;
  constexpr explicit ClassId(std::uint32_t v) : value(v) {}

  friend constexpr auto operator<=>(ClassId, ClassId) = default;
};

inline constexpr ClassId kSot{0};
inline constexpr ClassId kEot{1};
inline constexpr ClassId kOther{2};
inline constexpr std::uint32_t kReservedCount = 3;

// Directly-follows pair within one case.
struct Transition {
  ClassId from;
  ClassId to;

  friend constexpr auto operator<=>(const Transition&, const Transition&) = default;
};

inline constexpr char kClassSeparator = '|';

// Joins the values of `class_fields` (in that order) with '|', escaping
// '\' as "\\" and '|' as "\|". Throws MissingAttribute.
std::string derive_event_class(std::span<const Attribute> attributes,
                               std::span<const std::string> class_fields);

// Same as derive_event_class, reusing `out`'s storage.
void derive_event_class_into(std::span<const Attribute> attributes,
                             std::span<const std::string> class_fields,
                             std::string& out);

// Inverse of the join; used by tests and tooling.
std::vector<std::string> split_event_class(std::string_view label);

}  // namespace transfeat
