#include "borderflux/types.hpp"

#include <algorithm>
#include <cctype>

#include "borderflux/error.hpp"

namespace bflux {

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::Call: return "call";
    case EventKind::Data: return "data";
    case EventKind::Handshake: return "handshake";
  }
  return "?";
}

const char* to_string(MobilityClass c) {
  switch (c) {
    case MobilityClass::Visa: return "Visa";
    case MobilityClass::NoVisa: return "NoVisa";
    case MobilityClass::Unknown: return "Unknown";
  }
  return "?";
}

const char* to_string(LangGroup g) {
  switch (g) {
    case LangGroup::Visa: return "Visa";
    case LangGroup::NoVisa: return "NoVisa";
    case LangGroup::Turkish: return "Turkish";
    case LangGroup::Unassigned: return "Unassigned";
  }
  return "?";
}

const char* to_string(Destination d) {
  switch (d) {
    case Destination::Europe: return "Europe";
    case Destination::Turkey: return "Turkey";
    case Destination::Other: return "Other";
    case Destination::Unresolved: return "Unresolved";
  }
  return "?";
}

std::optional<EventKind> parse_event_kind(std::string_view s) {
  if (s == "call") return EventKind::Call;
  if (s == "data" || s.empty()) return EventKind::Data;
  if (s == "handshake") return EventKind::Handshake;
  return std::nullopt;
}

std::optional<MobilityClass> parse_mobility_class(std::string_view s) {
  if (s == "Visa") return MobilityClass::Visa;
  if (s == "NoVisa") return MobilityClass::NoVisa;
  return std::nullopt;
}

std::optional<LangGroup> parse_lang_group(std::string_view s) {
  if (s == "Visa") return LangGroup::Visa;
  if (s == "NoVisa") return LangGroup::NoVisa;
  if (s == "Turkish") return LangGroup::Turkish;
  return std::nullopt;
}

std::optional<Destination> parse_destination(std::string_view s) {
  if (s == "Europe") return Destination::Europe;
  if (s == "Turkey") return Destination::Turkey;
  if (s == "Other") return Destination::Other;
  return std::nullopt;
}

std::string normalize_country(std::string_view code) {
  std::string out(code);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

std::string normalize_lang(std::string_view tag) {
  std::size_t cut = tag.find_first_of("-_");
  if (cut != std::string_view::npos) tag = tag.substr(0, cut);
  std::string out(tag);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::uint32_t IdPool::intern(std::string_view token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  auto id = static_cast<std::uint32_t>(tokens_.size());
  tokens_.emplace_back(token);
  index_.emplace(tokens_.back(), id);
  return id;
}

std::optional<std::uint32_t> IdPool::find(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void IdPool::rewrite(const std::vector<std::string>& new_tokens) {
  if (new_tokens.size() != tokens_.size()) throw DataError("pool rewrite size mismatch");
  decltype(index_) fresh;
  fresh.reserve(new_tokens.size());
  for (std::uint32_t i = 0; i < new_tokens.size(); ++i) {
    if (!fresh.emplace(new_tokens[i], i).second) {
      throw DataError("pseudonym collision for token index " + std::to_string(i));
    }
  }
  tokens_ = new_tokens;
  index_ = std::move(fresh);
}

std::optional<std::uint32_t> CellRegistry::find(std::string_view cell_id) const {
  auto it = by_id.find(cell_id);
  if (it == by_id.end()) return std::nullopt;
  return it->second;
}

std::optional<std::uint16_t> CellRegistry::province_index(std::string_view code) const {
  for (std::size_t i = 0; i < provinces.size(); ++i) {
    if (provinces[i] == code) return static_cast<std::uint16_t>(i);
  }
  return std::nullopt;
}

std::optional<std::uint32_t> SubscriberTable::find(std::string_view id) const {
  auto it = by_id.find(id);
  if (it == by_id.end()) return std::nullopt;
  return it->second;
}

MobilityClass VisaPolicy::lookup(std::string_view nationality) const {
  auto it = by_nationality.find(std::string(nationality));
  return it == by_nationality.end() ? MobilityClass::Unknown : it->second;
}

LangGroup LanguageGroupPolicy::lookup(std::string_view lang) const {
  auto it = by_lang.find(std::string(lang));
  return it == by_lang.end() ? LangGroup::Unassigned : it->second;
}

Destination DestinationPolicy::lookup(std::string_view country) const {
  auto it = by_country.find(std::string(country));
  return it == by_country.end() ? Destination::Unresolved : it->second;
}

}  // namespace bflux
