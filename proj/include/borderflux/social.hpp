#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "borderflux/types.hpp"

namespace bflux::social {

struct BBox {
  double min_lon = 0, min_lat = 0, max_lon = 0, max_lat = 0;
  bool contains(double lon, double lat) const {
    return lon >= min_lon && lon <= max_lon && lat >= min_lat && lat <= max_lat;
  }
};

struct Polygon {
  // Rings of (lon, lat); first == last point. Even-odd rule.
  std::vector<std::vector<std::pair<double, double>>> rings;
  bool contains(double lon, double lat) const;
};

struct GeoFence {
  std::vector<BBox> bboxes;
  std::vector<Polygon> territory;  // empty => use the country predicate
  std::string territory_country;   // alpha-3, used when no polygons given
};

// GeoJSON FeatureCollection; each feature carries properties.role of
// "bbox" or "territory". A bbox feature may give an explicit "bbox"
// array or a polygon whose envelope is taken.
GeoFence parse_fence_geojson(std::string_view text);

// Country polygons for coordinate resolution: features with
// properties.code = ISO alpha-3.
struct CountryPolygons {
  std::vector<std::pair<std::string, Polygon>> entries;
  std::optional<std::string> resolve(double lon, double lat) const;
};
CountryPolygons parse_countries_geojson(std::string_view text);

struct GeofilterStats {
  std::size_t kept = 0;
  std::size_t no_location = 0;
  std::size_t outside_bbox = 0;
  std::size_t outside_territory = 0;
};

// Keeps tweets with coordinates inside at least one bbox AND on the
// territory (polygon test, or country predicate when no polygon is
// configured). Idempotent.
std::vector<Tweet> geofilter(std::span<const Tweet> tweets, const GeoFence& fence,
                             GeofilterStats* stats = nullptr);

// Per-user language usage over an analysis period.
struct UserLanguageProfile {
  std::string user;
  std::map<std::string, std::size_t> counts;  // labelled tweets per language
  std::string resolved_und;                   // empty when nothing to resolve
  std::size_t und_tweets = 0;
};

std::map<std::string, UserLanguageProfile> language_profiles(std::span<const Tweet> tweets);

struct UndResolution {
  std::size_t und_total = 0;
  std::size_t resolved = 0;
  std::size_t unresolved_tweets = 0;  // tweets of all-und users
  std::size_t all_und_users = 0;
};

// Assigns each user's und tweets the user's majority labelled language;
// a tie takes the language of the user's chronologically latest labelled
// tweet. Users with only und tweets stay unresolved.
UndResolution resolve_und(std::vector<Tweet>& tweets);

LangGroup map_language_group(std::string_view lang, const LanguageGroupPolicy& policy);

struct ActivityCounts {
  // Totals per group.
  std::map<LangGroup, std::uint64_t> tweets;
  std::map<LangGroup, std::uint64_t> users;
  // Daily mode, keyed by local date.
  std::map<std::pair<Date, LangGroup>, std::uint64_t> daily_tweets;
  std::map<std::pair<Date, LangGroup>, std::uint64_t> daily_users;
  std::size_t skipped_unresolved = 0;  // und after resolution
  std::size_t skipped_unassigned = 0;  // lang missing from the policy
};

ActivityCounts activity_counts(std::span<const Tweet> tweets, const LanguageGroupPolicy& policy,
                               bool daily, UtcOffset tz);

Destination classify_destination(const Tweet& tweet, const DestinationPolicy& policy,
                                 const CountryPolygons* countries);

struct DestinationMatrix {
  // Distinct users per (language group, destination) co-occurring on the
  // same tweet.
  std::map<std::pair<LangGroup, Destination>, std::uint64_t> users;
  std::uint64_t border_users = 0;   // size of the fixed user set
  std::uint64_t present_users = 0;  // border users with >=1 geolocated follow-up tweet
  std::uint64_t disappeared_users = 0;
};

// follow_up: the full tweet stream; the fixed `border_users` set comes
// from the border-period analysis. Time filtering against [start, end]
// uses local dates. resolve_und runs on the follow-up subset internally.
DestinationMatrix destination_matrix(std::span<const Tweet> all_tweets,
                                     const std::set<std::string>& border_users, Date start,
                                     Date end, UtcOffset tz, const LanguageGroupPolicy& lang_policy,
                                     const DestinationPolicy& dest_policy,
                                     const CountryPolygons* countries);

// Venn region counts over three-element dimensions. regions[mask] for
// mask 1..7; bit order follows the enum order of the dimension.
struct VennCounts {
  std::array<std::uint64_t, 8> regions{};
  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (std::size_t i = 1; i < 8; ++i) t += regions[i];
    return t;
  }
};

VennCounts overlap_regions(const std::map<std::string, unsigned>& user_masks);

// Per-user group/destination masks for the follow-up period, used for the
// published Venn artifact. Returns (language masks, destination masks).
struct FollowUpSets {
  std::map<std::string, unsigned> lang_masks;
  std::map<std::string, unsigned> dest_masks;
};
FollowUpSets follow_up_sets(std::span<const Tweet> all_tweets,
                            const std::set<std::string>& border_users, Date start, Date end,
                            UtcOffset tz, const LanguageGroupPolicy& lang_policy,
                            const DestinationPolicy& dest_policy,
                            const CountryPolygons* countries);

unsigned lang_group_bit(LangGroup g);
unsigned destination_bit(Destination d);
std::vector<std::string> mask_names_lang(unsigned mask);
std::vector<std::string> mask_names_dest(unsigned mask);

}  // namespace bflux::social
