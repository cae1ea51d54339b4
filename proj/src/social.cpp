#include "borderflux/social.hpp"

#include <algorithm>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "borderflux/error.hpp"

namespace bflux::social {

using nlohmann::json;

bool Polygon::contains(double lon, double lat) const {
  bool inside = false;
  for (const auto& ring : rings) {
    std::size_t n = ring.size();
    if (n < 4) continue;  // closed triangle minimum
    for (std::size_t i = 0, j = n - 2; i < n - 1; j = i++) {
      double xi = ring[i].first, yi = ring[i].second;
      double xj = ring[j].first, yj = ring[j].second;
      bool crosses = (yi > lat) != (yj > lat);
      if (crosses && lon < (xj - xi) * (lat - yi) / (yj - yi) + xi) inside = !inside;
    }
  }
  return inside;
}

namespace {

Polygon polygon_from_coords(const json& coords) {
  Polygon poly;
  for (const auto& ring_json : coords) {
    std::vector<std::pair<double, double>> ring;
    for (const auto& pt : ring_json) {
      ring.emplace_back(pt.at(0).get<double>(), pt.at(1).get<double>());
    }
    if (ring.size() < 4 || ring.front() != ring.back()) {
      throw DataError("fence polygon ring must be closed (first point == last point)");
    }
    poly.rings.push_back(std::move(ring));
  }
  return poly;
}

BBox envelope_of(const Polygon& poly) {
  BBox box{180, 90, -180, -90};
  for (const auto& ring : poly.rings) {
    for (const auto& [lon, lat] : ring) {
      box.min_lon = std::min(box.min_lon, lon);
      box.max_lon = std::max(box.max_lon, lon);
      box.min_lat = std::min(box.min_lat, lat);
      box.max_lat = std::max(box.max_lat, lat);
    }
  }
  return box;
}

std::vector<Polygon> polygons_from_geometry(const json& geom) {
  std::vector<Polygon> out;
  const std::string type = geom.at("type").get<std::string>();
  if (type == "Polygon") {
    out.push_back(polygon_from_coords(geom.at("coordinates")));
  } else if (type == "MultiPolygon") {
    for (const auto& coords : geom.at("coordinates")) {
      out.push_back(polygon_from_coords(coords));
    }
  } else {
    throw DataError("unsupported fence geometry type: " + type);
  }
  return out;
}

}  // namespace

GeoFence parse_fence_geojson(std::string_view text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw DataError("fence file is not valid JSON");
  GeoFence fence;
  if (!doc.contains("features")) throw DataError("fence file must be a FeatureCollection");
  for (const auto& feature : doc["features"]) {
    std::string role;
    if (feature.contains("properties") && feature["properties"].is_object()) {
      const auto& props = feature["properties"];
      if (props.contains("role")) role = props["role"].get<std::string>();
      if (props.contains("country") && fence.territory_country.empty()) {
        fence.territory_country = normalize_country(props["country"].get<std::string>());
      }
    }
    if (role == "bbox") {
      if (feature.contains("bbox") && feature["bbox"].is_array() && feature["bbox"].size() == 4) {
        const auto& b = feature["bbox"];
        fence.bboxes.push_back(BBox{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                                    b[3].get<double>()});
      } else if (feature.contains("geometry") && !feature["geometry"].is_null()) {
        for (const auto& poly : polygons_from_geometry(feature["geometry"])) {
          fence.bboxes.push_back(envelope_of(poly));
        }
      } else {
        throw DataError("bbox feature needs a bbox array or a polygon geometry");
      }
    } else if (role == "territory") {
      if (feature.contains("geometry") && !feature["geometry"].is_null()) {
        for (auto& poly : polygons_from_geometry(feature["geometry"])) {
          fence.territory.push_back(std::move(poly));
        }
      }
    }
  }
  for (const BBox& b : fence.bboxes) {
    if (!(b.min_lon < b.max_lon && b.min_lat < b.max_lat)) {
      throw DataError("fence bbox must satisfy min < max on both axes");
    }
  }
  if (fence.bboxes.empty()) throw DataError("fence file defines no bounding boxes");
  if (fence.territory.empty() && fence.territory_country.empty()) {
    throw DataError("fence file defines neither a territory polygon nor a country predicate");
  }
  return fence;
}

CountryPolygons parse_countries_geojson(std::string_view text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw DataError("country polygon file is not valid JSON");
  CountryPolygons out;
  for (const auto& feature : doc.at("features")) {
    if (!feature.contains("properties") || !feature["properties"].contains("code")) {
      throw DataError("country polygon feature needs properties.code");
    }
    std::string code = normalize_country(feature["properties"]["code"].get<std::string>());
    for (auto& poly : polygons_from_geometry(feature.at("geometry"))) {
      out.entries.emplace_back(code, std::move(poly));
    }
  }
  return out;
}

std::optional<std::string> CountryPolygons::resolve(double lon, double lat) const {
  for (const auto& [code, poly] : entries) {
    if (poly.contains(lon, lat)) return code;
  }
  return std::nullopt;
}

std::vector<Tweet> geofilter(std::span<const Tweet> tweets, const GeoFence& fence,
                             GeofilterStats* stats) {
  GeofilterStats local;
  std::vector<Tweet> kept;
  for (const Tweet& t : tweets) {
    if (!t.has_coord) {
      ++local.no_location;
      continue;
    }
    bool in_bbox = false;
    for (const BBox& b : fence.bboxes) {
      if (b.contains(t.lon, t.lat)) {
        in_bbox = true;
        break;
      }
    }
    if (!in_bbox) {
      ++local.outside_bbox;
      continue;
    }
    bool on_territory;
    if (!fence.territory.empty()) {
      on_territory = false;
      for (const Polygon& poly : fence.territory) {
        if (poly.contains(t.lon, t.lat)) {
          on_territory = true;
          break;
        }
      }
    } else {
      on_territory = !t.country.empty() && t.country == fence.territory_country;
    }
    if (!on_territory) {
      ++local.outside_territory;
      continue;
    }
    ++local.kept;
    kept.push_back(t);
  }
  if (stats) *stats = local;
  return kept;
}

namespace {

struct UserState {
  std::map<std::string, std::size_t> lang_counts;  // labelled only
  std::int64_t latest_ts = 0;
  std::size_t latest_idx = 0;
  std::string latest_lang;
  bool any_labelled = false;
  std::vector<std::size_t> und_indices;

  // Majority labelled language; a tie takes the chronologically latest
  // labelled tweet's language. Empty for all-und users.
  std::string majority() const {
    if (!any_labelled) return {};
    std::size_t best = 0;
    for (const auto& [lang, n] : lang_counts) best = std::max(best, n);
    std::size_t tied = 0;
    std::string winner;
    for (const auto& [lang, n] : lang_counts) {
      if (n == best) {
        ++tied;
        winner = lang;
      }
    }
    return tied > 1 ? latest_lang : winner;
  }
};

std::unordered_map<std::string, UserState, StringHash, std::equal_to<>> collect_users(
    std::span<const Tweet> tweets) {
  std::unordered_map<std::string, UserState, StringHash, std::equal_to<>> users;
  for (std::size_t i = 0; i < tweets.size(); ++i) {
    const Tweet& t = tweets[i];
    UserState& u = users[t.user];
    if (t.lang == "und") {
      u.und_indices.push_back(i);
      continue;
    }
    ++u.lang_counts[t.lang];
    // Later file position breaks timestamp ties.
    if (!u.any_labelled || t.ts > u.latest_ts || (t.ts == u.latest_ts && i >= u.latest_idx)) {
      u.latest_ts = t.ts;
      u.latest_idx = i;
      u.latest_lang = t.lang;
    }
    u.any_labelled = true;
  }
  return users;
}

}  // namespace

std::map<std::string, UserLanguageProfile> language_profiles(std::span<const Tweet> tweets) {
  std::map<std::string, UserLanguageProfile> out;
  for (auto& [user, state] : collect_users(tweets)) {
    UserLanguageProfile profile;
    profile.user = user;
    profile.counts = state.lang_counts;
    profile.und_tweets = state.und_indices.size();
    if (!state.und_indices.empty()) profile.resolved_und = state.majority();
    out.emplace(user, std::move(profile));
  }
  return out;
}

UndResolution resolve_und(std::vector<Tweet>& tweets) {
  UndResolution res;
  auto users = collect_users(tweets);
  for (auto& [user, u] : users) {
    res.und_total += u.und_indices.size();
    if (u.und_indices.empty()) continue;
    if (!u.any_labelled) {
      ++res.all_und_users;
      res.unresolved_tweets += u.und_indices.size();
      continue;
    }
    const std::string majority = u.majority();
    for (std::size_t idx : u.und_indices) {
      tweets[idx].lang = majority;
      ++res.resolved;
    }
  }
  return res;
}

LangGroup map_language_group(std::string_view lang, const LanguageGroupPolicy& policy) {
  return policy.lookup(lang);
}

ActivityCounts activity_counts(std::span<const Tweet> tweets, const LanguageGroupPolicy& policy,
                               bool daily, UtcOffset tz) {
  ActivityCounts out;
  std::map<LangGroup, std::set<std::string>> users;
  std::map<std::pair<Date, LangGroup>, std::set<std::string>> daily_users;
  for (const Tweet& t : tweets) {
    if (t.lang == "und") {
      ++out.skipped_unresolved;
      continue;
    }
    LangGroup g = policy.lookup(t.lang);
    if (g == LangGroup::Unassigned) {
      ++out.skipped_unassigned;
      continue;
    }
    ++out.tweets[g];
    users[g].insert(t.user);
    if (daily) {
      Date d = local_date_of(t.ts, tz);
      ++out.daily_tweets[{d, g}];
      daily_users[{d, g}].insert(t.user);
    }
  }
  for (const auto& [g, set] : users) out.users[g] = set.size();
  for (const auto& [key, set] : daily_users) out.daily_users[key] = set.size();
  return out;
}

Destination classify_destination(const Tweet& tweet, const DestinationPolicy& policy,
                                 const CountryPolygons* countries) {
  if (!tweet.country.empty()) return policy.lookup(tweet.country);
  if (tweet.has_coord && countries) {
    if (auto code = countries->resolve(tweet.lon, tweet.lat)) return policy.lookup(*code);
  }
  return Destination::Unresolved;
}

unsigned lang_group_bit(LangGroup g) {
  switch (g) {
    case LangGroup::Visa: return 1u;
    case LangGroup::NoVisa: return 2u;
    case LangGroup::Turkish: return 4u;
    default: return 0u;
  }
}

unsigned destination_bit(Destination d) {
  switch (d) {
    case Destination::Europe: return 1u;
    case Destination::Turkey: return 2u;
    case Destination::Other: return 4u;
    default: return 0u;
  }
}

std::vector<std::string> mask_names_lang(unsigned mask) {
  std::vector<std::string> out;
  if (mask & 1u) out.emplace_back("Visa");
  if (mask & 2u) out.emplace_back("NoVisa");
  if (mask & 4u) out.emplace_back("Turkish");
  return out;
}

std::vector<std::string> mask_names_dest(unsigned mask) {
  std::vector<std::string> out;
  if (mask & 1u) out.emplace_back("Europe");
  if (mask & 2u) out.emplace_back("Turkey");
  if (mask & 4u) out.emplace_back("Other");
  return out;
}

namespace {

// Geolocated follow-up tweets of the fixed user set, und-resolved within
// the subset.
std::vector<Tweet> follow_up_subset(std::span<const Tweet> all_tweets,
                                    const std::set<std::string>& border_users, Date start,
                                    Date end, UtcOffset tz) {
  std::vector<Tweet> subset;
  for (const Tweet& t : all_tweets) {
    if (!border_users.contains(t.user)) continue;
    Date d = local_date_of(t.ts, tz);
    if (d < start || d > end) continue;
    if (!t.has_coord && t.country.empty()) continue;
    subset.push_back(t);
  }
  resolve_und(subset);
  return subset;
}

}  // namespace

DestinationMatrix destination_matrix(std::span<const Tweet> all_tweets,
                                     const std::set<std::string>& border_users, Date start,
                                     Date end, UtcOffset tz,
                                     const LanguageGroupPolicy& lang_policy,
                                     const DestinationPolicy& dest_policy,
                                     const CountryPolygons* countries) {
  DestinationMatrix out;
  out.border_users = border_users.size();
  auto subset = follow_up_subset(all_tweets, border_users, start, end, tz);

  std::set<std::string> present;
  std::map<std::pair<LangGroup, Destination>, std::set<std::string>> cells;
  for (const Tweet& t : subset) {
    present.insert(t.user);
    if (t.lang == "und") continue;
    LangGroup g = lang_policy.lookup(t.lang);
    if (g == LangGroup::Unassigned) continue;
    Destination d = classify_destination(t, dest_policy, countries);
    if (d == Destination::Unresolved) continue;
    cells[{g, d}].insert(t.user);
  }
  out.present_users = present.size();
  out.disappeared_users = out.border_users - out.present_users;
  for (const auto& [key, set] : cells) out.users[key] = set.size();
  return out;
}

FollowUpSets follow_up_sets(std::span<const Tweet> all_tweets,
                            const std::set<std::string>& border_users, Date start, Date end,
                            UtcOffset tz, const LanguageGroupPolicy& lang_policy,
                            const DestinationPolicy& dest_policy,
                            const CountryPolygons* countries) {
  FollowUpSets out;
  auto subset = follow_up_subset(all_tweets, border_users, start, end, tz);
  for (const Tweet& t : subset) {
    if (t.lang != "und") {
      LangGroup g = lang_policy.lookup(t.lang);
      if (g != LangGroup::Unassigned) out.lang_masks[t.user] |= lang_group_bit(g);
    }
    Destination d = classify_destination(t, dest_policy, countries);
    if (d != Destination::Unresolved) out.dest_masks[t.user] |= destination_bit(d);
  }
  // Users whose subset tweets all failed group/destination resolution
  // carry a zero mask; overlap_regions ignores them.
  return out;
}

VennCounts overlap_regions(const std::map<std::string, unsigned>& user_masks) {
  VennCounts out;
  for (const auto& [user, mask] : user_masks) {
    if (mask > 0 && mask < 8) ++out.regions[mask];
  }
  return out;
}

}  // namespace bflux::social
