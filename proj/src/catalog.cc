// Copyright 2026 The lmp2 Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lmp2/catalog.h"

#include <fstream>
#include <set>
#include <sstream>

#include "lmp2/errors.h"
#include "lmp2/util.h"

namespace lmp2 {

using nlohmann::json;

namespace {

struct CategoryName {
  Category category;
  std::string_view name;
};

constexpr CategoryName kCategoryNames[] = {
    {Category::kDemographics, "Demographics"},
    {Category::kFamily, "Family"},
    {Category::kPhysical, "Physical"},
    {Category::kOriginsAndGeography, "OriginsAndGeography"},
    {Category::kProfessionalLife, "ProfessionalLife"},
    {Category::kInterestsAndEvents, "InterestsAndEvents"},
    {Category::kNamesAndTitles, "NamesAndTitles"},
    {Category::kHighSensitivity, "HighSensitivity"},
};

std::size_t count_occurrences(std::string_view haystack,
                              std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

std::string replace_once(std::string text, std::string_view slot,
                         std::string_view value) {
  const auto pos = text.find(slot);
  if (pos != std::string::npos) text.replace(pos, slot.size(), value);
  return text;
}

template <typename T>
T required(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) {
    throw ParseError(where + ": missing field '" + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(where + ": field '" + key + "' has wrong type");
  }
}

PropertySpec property_from_json(const json& j, std::size_t index) {
  const std::string where = "properties[" + std::to_string(index) + "]";
  if (!j.is_object()) throw ParseError(where + ": expected object");
  PropertySpec spec;
  spec.property_id = required<std::string>(j, "property_id", where);
  spec.label = required<std::string>(j, "label", where);
  try {
    spec.category = parse_category(required<std::string>(j, "category", where));
    spec.cardinality_class =
        parse_cardinality(required<std::string>(j, "cardinality_class", where));
    spec.value_format =
        parse_value_format(required<std::string>(j, "value_format", where));
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(e.what()) + " (property '" +
                          spec.property_id + "')");
  }
  spec.paraphrases = required<std::vector<std::string>>(j, "paraphrases", where);
  spec.sensitive = required<bool>(j, "sensitive", where);
  return spec;
}

}  // namespace

std::string_view to_string(Category c) {
  for (const auto& entry : kCategoryNames) {
    if (entry.category == c) return entry.name;
  }
  return "unknown";
}

std::string_view to_string(CardinalityClass c) {
  return c == CardinalityClass::kLow ? "low" : "open";
}

std::string_view to_string(ValueFormat f) {
  switch (f) {
    case ValueFormat::kText:
      return "text";
    case ValueFormat::kDate:
      return "date";
    case ValueFormat::kNumber:
      return "number";
    case ValueFormat::kPhone:
      return "phone";
  }
  return "text";
}

Category parse_category(std::string_view s) {
  for (const auto& entry : kCategoryNames) {
    if (entry.name == s) return entry.category;
  }
  throw ValidationError("unknown category '" + std::string(s) + "'");
}

CardinalityClass parse_cardinality(std::string_view s) {
  if (s == "low") return CardinalityClass::kLow;
  if (s == "open") return CardinalityClass::kOpen;
  throw ValidationError("unknown cardinality_class '" + std::string(s) + "'");
}

ValueFormat parse_value_format(std::string_view s) {
  if (s == "text") return ValueFormat::kText;
  if (s == "date") return ValueFormat::kDate;
  if (s == "number") return ValueFormat::kNumber;
  if (s == "phone") return ValueFormat::kPhone;
  throw ValidationError("unknown value_format '" + std::string(s) + "'");
}

void validate_property(const PropertySpec& spec) {
  const std::string who = "property '" + spec.property_id + "'";
  if (spec.property_id.empty()) {
    throw ValidationError("property_id must be non-empty");
  }
  if (spec.label.empty()) throw ValidationError(who + ": label is empty");
  if (spec.paraphrases.empty() || spec.paraphrases.size() > kMaxParaphrases) {
    throw ValidationError(who + ": expected 1-5 paraphrases, found " +
                          std::to_string(spec.paraphrases.size()));
  }
  for (std::size_t i = 0; i < spec.paraphrases.size(); ++i) {
    const std::string& t = spec.paraphrases[i];
    const std::string at = who + " paraphrase " + std::to_string(i);
    if (count_occurrences(t, kSubjectSlot) != 1) {
      throw ValidationError(at + ": needs exactly one {subject} slot");
    }
    if (count_occurrences(t, kPrefixSlot) != 1) {
      throw ValidationError(at + ": needs exactly one {prefix} slot");
    }
    if (!std::string_view(t).ends_with(kPrefixSlot)) {
      throw ValidationError(at + ": {prefix} must be in final position");
    }
  }
}

Catalog::Catalog(std::string version, std::vector<PropertySpec> properties)
    : version_(std::move(version)), properties_(std::move(properties)) {
  if (version_.empty()) throw ValidationError("catalog version is empty");
  if (properties_.empty()) {
    throw ValidationError("catalog has no properties");
  }
  std::set<std::string> seen;
  for (const auto& p : properties_) {
    validate_property(p);
    if (!seen.insert(p.property_id).second) {
      throw ValidationError("duplicate property_id '" + p.property_id + "'");
    }
  }
}

const PropertySpec* Catalog::find(std::string_view property_id) const {
  for (const auto& p : properties_) {
    if (p.property_id == property_id) return &p;
  }
  return nullptr;
}

const PropertySpec& Catalog::at(std::string_view property_id) const {
  if (const auto* p = find(property_id)) return *p;
  throw ValidationError("unknown property '" + std::string(property_id) + "'");
}

Catalog load_catalog(std::string_view source) {
  json doc;
  try {
    doc = json::parse(source);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("catalog is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("catalog: expected a JSON object");
  auto version = required<std::string>(doc, "version", "catalog");
  if (!doc.contains("properties") || !doc["properties"].is_array()) {
    throw ParseError("catalog: 'properties' must be an array");
  }
  std::vector<PropertySpec> props;
  const auto& arr = doc["properties"];
  for (std::size_t i = 0; i < arr.size(); ++i) {
    props.push_back(property_from_json(arr[i], i));
  }
  return Catalog(std::move(version), std::move(props));
}

Catalog load_catalog_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot open catalog file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return load_catalog(buf.str());
}

json property_to_json(const PropertySpec& spec) {
  return json{
      {"property_id", spec.property_id},
      {"label", spec.label},
      {"category", to_string(spec.category)},
      {"cardinality_class", to_string(spec.cardinality_class)},
      {"value_format", to_string(spec.value_format)},
      {"paraphrases", spec.paraphrases},
      {"sensitive", spec.sensitive},
  };
}

json catalog_to_json(const Catalog& catalog) {
  json props = json::array();
  for (const auto& p : catalog.properties()) props.push_back(property_to_json(p));
  return json{{"version", catalog.version()}, {"properties", std::move(props)}};
}

std::string render_canary_line(const PropertySpec& spec,
                               std::size_t paraphrase_index,
                               std::string_view subject,
                               std::string_view prefix) {
  if (paraphrase_index >= spec.paraphrases.size()) {
    throw IndexOutOfRange("paraphrase index " +
                          std::to_string(paraphrase_index) + " out of range for '" +
                          spec.property_id + "' (" +
                          std::to_string(spec.paraphrases.size()) + " templates)");
  }
  if (trim(subject).empty() || prefix.empty()) {
    throw ValidationError("subject and prefix must be non-empty");
  }
  std::string line = replace_once(spec.paraphrases[paraphrase_index],
                                  kSubjectSlot, subject);
  // The subject may itself contain "{prefix}"; substitute from the end.
  const auto pos = line.rfind(kPrefixSlot);
  line.replace(pos, kPrefixSlot.size(), prefix);
  return line;
}

std::string render_canary(const PropertySpec& spec,
                          std::size_t paraphrase_index,
                          std::string_view subject, std::string_view prefix) {
  std::string prompt(kFragmentRecoveryPreamble);
  prompt += "\n\nSentence: ";
  prompt += render_canary_line(spec, paraphrase_index, subject, prefix);
  return prompt;
}

std::map<Category, std::vector<PropertySpec>> properties_by_category(
    const Catalog& catalog) {
  std::map<Category, std::vector<PropertySpec>> buckets;
  for (Category c : kAllCategories) buckets[c];
  for (const auto& p : catalog.properties()) buckets[p.category].push_back(p);
  return buckets;
}

}  // namespace lmp2
