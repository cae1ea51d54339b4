#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "borderflux/time.hpp"

namespace bflux {

enum class EventKind : std::uint8_t { Call, Data, Handshake };
enum class MobilityClass : std::uint8_t { Visa, NoVisa, Unknown };
enum class LangGroup : std::uint8_t { Visa, NoVisa, Turkish, Unassigned };
enum class Destination : std::uint8_t { Europe, Turkey, Other, Unresolved };

const char* to_string(EventKind k);
const char* to_string(MobilityClass c);
const char* to_string(LangGroup g);
const char* to_string(Destination d);
std::optional<EventKind> parse_event_kind(std::string_view s);
std::optional<MobilityClass> parse_mobility_class(std::string_view s);
std::optional<LangGroup> parse_lang_group(std::string_view s);
std::optional<Destination> parse_destination(std::string_view s);

// Upper-case alpha-3 country / nationality codes, lower-case BCP-47
// primary language tags. Single normalization point, applied at parse time.
std::string normalize_country(std::string_view code);
std::string normalize_lang(std::string_view tag);

// Record-level view of one xDR line.
struct XdrEvent {
  std::string subscriber_id;
  std::int64_t ts = 0;
  std::string cell_id;
  EventKind kind = EventKind::Data;

  friend bool operator==(const XdrEvent&, const XdrEvent&) = default;
};

struct Tweet {
  std::string id;
  std::string user;
  std::int64_t ts = 0;
  bool has_coord = false;
  double lat = 0;
  double lon = 0;
  std::string country;  // empty when absent
  std::string lang;     // normalized; "und" allowed
  std::string text;

  friend bool operator==(const Tweet&, const Tweet&) = default;
};

struct Diagnostic {
  std::size_t line = 0;  // 1-based
  std::string field;
  std::string reason;
};

struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  std::size_t operator()(const std::string& s) const { return std::hash<std::string_view>{}(s); }
};

// Unique tokens in first-appearance order.
class IdPool {
 public:
  std::uint32_t intern(std::string_view token);
  std::optional<std::uint32_t> find(std::string_view token) const;
  const std::string& token(std::uint32_t id) const { return tokens_[id]; }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  // Replaces every token (used by the pseudonymization pass). Mapping must
  // be injective; throws DataError on collision.
  void rewrite(const std::vector<std::string>& new_tokens);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::uint32_t, StringHash, std::equal_to<>> index_;
};

// Interned event storage; the pipeline's working representation.
struct Event {
  std::int64_t ts = 0;
  std::uint32_t subscriber = 0;  // index into EventBatch::subscribers
  std::uint32_t cell = 0;        // index into EventBatch::cells
  EventKind kind = EventKind::Data;
};

struct EventBatch {
  std::vector<Event> events;
  IdPool subscribers;
  IdPool cells;

  XdrEvent materialize(std::size_t i) const {
    const Event& e = events[i];
    return XdrEvent{subscribers.token(e.subscriber), e.ts, cells.token(e.cell), e.kind};
  }
};

struct CellRegistry {
  struct Cell {
    std::string id;
    std::uint16_t province = 0;    // index into provinces
    std::int32_t district = -1;    // index into districts, -1 when absent
    double lat = 0;
    double lon = 0;
  };
  std::vector<std::string> provinces;
  std::vector<std::string> districts;
  std::vector<Cell> cells;
  std::unordered_map<std::string, std::uint32_t, StringHash, std::equal_to<>> by_id;

  std::optional<std::uint32_t> find(std::string_view cell_id) const;
  std::optional<std::uint16_t> province_index(std::string_view code) const;
};

struct SubscriberTable {
  struct Row {
    std::string id;
    std::string nationality;  // normalized alpha-3
  };
  std::vector<Row> rows;
  std::unordered_map<std::string, std::uint32_t, StringHash, std::equal_to<>> by_id;

  std::optional<std::uint32_t> find(std::string_view id) const;
};

struct VisaPolicy {
  std::map<std::string, MobilityClass> by_nationality;
  MobilityClass lookup(std::string_view nationality) const;
};

struct LanguageGroupPolicy {
  std::map<std::string, LangGroup> by_lang;
  LangGroup lookup(std::string_view lang) const;
};

struct DestinationPolicy {
  std::map<std::string, Destination> by_country;
  Destination lookup(std::string_view country) const;
};

}  // namespace bflux
