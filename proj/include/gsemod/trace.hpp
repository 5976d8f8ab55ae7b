#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gsemod/classifier.hpp"
#include "gsemod/diversity.hpp"

namespace gsemod {

enum class TraceLevel : std::uint8_t { kSilent, kStates, kFull };

inline std::string_view to_string(TraceLevel level) {
  switch (level) {
    case TraceLevel::kSilent: return "silent";
    case TraceLevel::kStates: return "states";
    case TraceLevel::kFull: return "full";
  }
  return "?";
}

inline std::optional<TraceLevel> trace_level_from_string(std::string_view s) {
  if (s == "silent") return TraceLevel::kSilent;
  if (s == "states") return TraceLevel::kStates;
  if (s == "full") return TraceLevel::kFull;
  return std::nullopt;
}

struct SetSizes {
  std::size_t i10 = 0;
  std::size_t jhot = 0;
  std::size_t j00 = 0;
  std::size_t j10 = 0;
  friend bool operator==(const SetSizes&, const SetSizes&) = default;
};

// One iteration t. Classification fields describe P_t (before the
// iteration); diversity and `optimal` describe P_{t+1}.
struct TraceRecord {
  std::uint64_t iter = 0;
  bool accepted = false;
  bool changed = false;
  std::optional<std::size_t> replaced_index;
  std::optional<IndexClass> replaced_class;
  Diversity diversity = 0;
  bool optimal = false;
  std::optional<State> state;
  SetSizes sizes;
  std::optional<std::size_t> hot;
  std::optional<std::size_t> cold;
  std::optional<std::string> offspring;  // full verbosity only

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

class MalformedTrace : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <class T>
nlohmann::json optional_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace detail

// Positions are written 1-based.
inline nlohmann::json to_json(const TraceRecord& r) {
  nlohmann::json j;
  j["type"] = "iter";
  j["iter"] = r.iter;
  j["accepted"] = r.accepted;
  j["changed"] = r.changed;
  j["replaced"] = detail::optional_json(r.replaced_index);
  j["replaced_class"] = r.replaced_class ? nlohmann::json(std::string(to_string(*r.replaced_class))) : nlohmann::json(nullptr);
  j["diversity"] = r.diversity;
  j["optimal"] = r.optimal;
  j["state"] = r.state ? nlohmann::json(static_cast<int>(*r.state)) : nlohmann::json(nullptr);
  j["i10"] = r.sizes.i10;
  j["jhot"] = r.sizes.jhot;
  j["j00"] = r.sizes.j00;
  j["j10"] = r.sizes.j10;
  j["hot"] = r.hot ? nlohmann::json(*r.hot + 1) : nlohmann::json(nullptr);
  j["cold"] = r.cold ? nlohmann::json(*r.cold + 1) : nlohmann::json(nullptr);
  if (r.offspring) j["offspring"] = *r.offspring;
  return j;
}

inline TraceRecord trace_record_from_json(const nlohmann::json& j) {
  try {
    TraceRecord r;
    r.iter = j.at("iter").get<std::uint64_t>();
    r.accepted = j.at("accepted").get<bool>();
    r.changed = j.at("changed").get<bool>();
    if (!j.at("replaced").is_null()) r.replaced_index = j.at("replaced").get<std::size_t>();
    if (!j.at("replaced_class").is_null()) {
      r.replaced_class = index_class_from_string(j.at("replaced_class").get<std::string>());
      if (!r.replaced_class) throw MalformedTrace("unknown replaced_class");
    }
    r.diversity = j.at("diversity").get<Diversity>();
    r.optimal = j.at("optimal").get<bool>();
    if (!j.at("state").is_null()) {
      const int s = j.at("state").get<int>();
      if (s < 1 || s > 3) throw MalformedTrace("state must be 1, 2 or 3");
      r.state = static_cast<State>(s);
    }
    r.sizes = {j.at("i10").get<std::size_t>(), j.at("jhot").get<std::size_t>(), j.at("j00").get<std::size_t>(),
               j.at("j10").get<std::size_t>()};
    if (!j.at("hot").is_null()) r.hot = j.at("hot").get<std::size_t>() - 1;
    if (!j.at("cold").is_null()) r.cold = j.at("cold").get<std::size_t>() - 1;
    if (j.contains("offspring")) r.offspring = j.at("offspring").get<std::string>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedTrace(std::string("bad trace record: ") + e.what());
  }
}

// Parsed trace file: a "meta" line, "iter" lines and an optional "end" line.
struct TraceFile {
  nlohmann::json meta;
  std::vector<TraceRecord> records;
  std::optional<nlohmann::json> end;
};

inline TraceFile read_trace(std::istream& in) {
  TraceFile file;
  std::string line;
  std::size_t line_no = 0;
  bool have_meta = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw MalformedTrace("line " + std::to_string(line_no) + ": " + e.what());
    }
    const std::string type = j.value("type", "");
    if (type == "meta") {
      file.meta = j;
      have_meta = true;
    } else if (type == "iter") {
      file.records.push_back(trace_record_from_json(j));
    } else if (type == "end") {
      file.end = j;
    } else {
      throw MalformedTrace("line " + std::to_string(line_no) + ": unknown record type");
    }
  }
  if (!have_meta) throw MalformedTrace("trace has no meta record");
  return file;
}

}  // namespace gsemod
