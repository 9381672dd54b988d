#include "transfeat/event.hpp"

#include <algorithm>

#include "transfeat/error.hpp"

namespace transfeat {

const std::string* Event::find(std::string_view name) const noexcept {
  for (const auto& attr : attributes) {
    if (attr.name == name) return &attr.value;
  }
  return nullptr;
}

namespace {

const std::string* lookup(std::span<const Attribute> attributes,
                          std::string_view name) {
  auto it = std::find_if(attributes.begin(), attributes.end(),
                         [&](const Attribute& a) { return a.name == name; });
  return it == attributes.end() ? nullptr : &it->value;
}

void append_escaped(std::string& out, std::string_view value) {
  for (char ch : value) {
    if (ch == '\\' || ch == kClassSeparator) out.push_back('\\');
    out.push_back(ch);
  }
}

}  // namespace

void derive_event_class_into(std::span<const Attribute> attributes,
                             std::span<const std::string> class_fields,
                             std::string& out) {
  if (class_fields.empty()) throw ConfigError("class_fields is empty");
  out.clear();
  bool first = true;
  for (const auto& field : class_fields) {
    const std::string* value = lookup(attributes, field);
    if (value == nullptr) throw MissingAttribute(field);
    if (!first) out.push_back(kClassSeparator);
    append_escaped(out, *value);
    first = false;
  }
}

std::string derive_event_class(std::span<const Attribute> attributes,
                               std::span<const std::string> class_fields) {
  std::string out;
  derive_event_class_into(attributes, class_fields, out);
  return out;
}

std::vector<std::string> split_event_class(std::string_view label) {
  std::vector<std::string> parts(1);
  for (std::size_t i = 0; i < label.size(); ++i) {
    char ch = label[i];
    if (ch == '\\' && i + 1 < label.size()) {
      parts.back().push_back(label[++i]);
    } else if (ch == kClassSeparator) {
      parts.emplace_back();
    } else {
      parts.back().push_back(ch);
    }
  }
  return parts;
}

}  // namespace transfeat
