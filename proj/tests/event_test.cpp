#include <gtest/gtest.h>

#include <map>
#include <set>

#include "generators.hpp"
#include "transfeat/error.hpp"
#include "transfeat/event.hpp"

namespace transfeat {
namespace {

std::vector<std::string> fields(std::initializer_list<const char*> names) {
  return {names.begin(), names.end()};
}

TEST(DeriveEventClass, JoinsFieldsInSchemaOrder) {
  std::vector<Attribute> attrs{{"flags", "SYN"}, {"dir", "client"}};
  EXPECT_EQ(derive_event_class(attrs, fields({"flags", "dir"})), "SYN|client");
  EXPECT_EQ(derive_event_class(attrs, fields({"dir", "flags"})), "client|SYN");
}

TEST(DeriveEventClass, SingleFieldIsIdentity) {
  std::vector<Attribute> attrs{{"api", "NtOpenFile"}};
  EXPECT_EQ(derive_event_class(attrs, fields({"api"})), "NtOpenFile");
}

TEST(DeriveEventClass, EscapesSeparatorAndBackslash) {
  std::vector<Attribute> attrs{{"x", "a|b"}};
  EXPECT_EQ(derive_event_class(attrs, fields({"x"})), "a\\|b");
  std::vector<Attribute> slash{{"x", "a\\b"}};
  EXPECT_EQ(derive_event_class(slash, fields({"x"})), "a\\\\b");
}

TEST(DeriveEventClass, MissingAttributeNamesTheField) {
  std::vector<Attribute> attrs{{"flags", "SYN"}};
  try {
    derive_event_class(attrs, fields({"flags", "dir"}));
    FAIL() << "expected MissingAttribute";
  } catch (const MissingAttribute& e) {
    EXPECT_EQ(e.name(), "dir");
    EXPECT_EQ(e.kind(), "MissingAttribute");
  }
}

TEST(DeriveEventClass, RejectsEmptyFieldList) {
  std::vector<Attribute> attrs{{"flags", "SYN"}};
  EXPECT_THROW(derive_event_class(attrs, std::vector<std::string>{}), ConfigError);
}

TEST(DeriveEventClass, IgnoresAttributesOutsideTheSchema) {
  std::vector<Attribute> attrs{{"len", "60"}, {"flags", "ACK"}};
  EXPECT_EQ(derive_event_class(attrs, fields({"flags"})), "ACK");
}

// Distinct value tuples never collide and the label splits back into them.
TEST(DeriveEventClassProperty, InjectiveAndReversible) {
  gen::Rng rng(11);
  const char alphabet[] = {'a', 'b', '|', '\\'};
  const auto schema = fields({"f0", "f1", "f2"});
  std::map<std::string, std::vector<std::string>> seen;
  for (int iter = 0; iter < 5000; ++iter) {
    std::vector<Attribute> attrs;
    std::vector<std::string> values;
    for (int f = 0; f < 3; ++f) {
      std::string v;
      const auto len = rng.between(0, 4);
      for (std::uint64_t i = 0; i < len; ++i) v.push_back(alphabet[rng.between(0, 3)]);
      values.push_back(v);
      attrs.push_back({"f" + std::to_string(f), v});
    }
    const std::string label = derive_event_class(attrs, schema);
    EXPECT_EQ(derive_event_class(attrs, schema), label);
    EXPECT_EQ(split_event_class(label), values);
    auto [it, inserted] = seen.emplace(label, values);
    if (!inserted) {
      EXPECT_EQ(it->second, values) << "collision on " << label;
    }
  }
}

TEST(Event, FindLooksUpByName) {
  Event e = gen::event("c", 1, "x");
  ASSERT_NE(e.find("cls"), nullptr);
  EXPECT_EQ(*e.find("cls"), "x");
  EXPECT_EQ(e.find("nope"), nullptr);
}

TEST(Transition, OrdersLexicographically) {
  EXPECT_LT((Transition{ClassId{0}, ClassId{5}}), (Transition{ClassId{1}, ClassId{0}}));
  EXPECT_LT((Transition{ClassId{3}, ClassId{4}}), (Transition{ClassId{3}, ClassId{5}}));
}

}  // namespace
}  // namespace transfeat
