#include <doctest.h>

#include <set>

#include "borderflux/ingest.hpp"
#include "borderflux/rng.hpp"
#include "borderflux/social.hpp"

using namespace bflux;

namespace {

// bbox spans the border area; the territory rectangle starts slightly
// east of the bbox's west edge, so points in [26.0, 26.3) are inside the
// bbox but off the territory (the "Greek side").
const char* kFence = R"({
  "type": "FeatureCollection",
  "features": [
    {"type": "Feature", "properties": {"role": "bbox"},
     "bbox": [26.0, 40.8, 27.2, 42.0], "geometry": null},
    {"type": "Feature", "properties": {"role": "territory", "country": "TUR"},
     "geometry": {"type": "Polygon", "coordinates":
       [[[26.3, 40.5], [45.0, 40.5], [45.0, 42.2], [26.3, 42.2], [26.3, 40.5]]]}}
  ]
})";

Tweet tweet(const std::string& id, const std::string& user, std::int64_t ts,
            const std::string& lang, double lat = 41.2, double lon = 26.6,
            const std::string& country = "") {
  Tweet t;
  t.id = id;
  t.user = user;
  t.ts = ts;
  t.lang = lang;
  t.has_coord = true;
  t.lat = lat;
  t.lon = lon;
  t.country = country;
  return t;
}

LanguageGroupPolicy lang_policy() {
  return ingest::parse_lang_group_policy_csv("lang,group\ntr,Turkish\nen,NoVisa\nar,Visa\nel,NoVisa\n");
}

DestinationPolicy dest_policy() {
  return ingest::parse_destination_policy_csv(
      "country,dest\nTUR,Turkey\nDEU,Europe\nGRC,Europe\nUSA,Other\n");
}

}  // namespace

TEST_CASE("geofilter keeps bbox-and-territory points only") {
  auto fence = social::parse_fence_geojson(kFence);
  std::vector<Tweet> tweets{
      tweet("t1", "u1", 100, "tr", 41.2, 26.6),  // inside both
      tweet("t2", "u2", 101, "tr", 41.2, 26.1),  // inside bbox, west of territory
      tweet("t3", "u3", 102, "tr", 41.2, 30.0),  // outside all bboxes
  };
  Tweet no_geo;
  no_geo.id = "t4";
  no_geo.user = "u4";
  no_geo.ts = 103;
  no_geo.lang = "tr";
  tweets.push_back(no_geo);

  social::GeofilterStats stats;
  auto kept = social::geofilter(tweets, fence, &stats);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].id == "t1");
  CHECK(stats.outside_territory == 1);
  CHECK(stats.outside_bbox == 1);
  CHECK(stats.no_location == 1);

  // Idempotent.
  auto again = social::geofilter(kept, fence);
  CHECK(again == kept);
}

TEST_CASE("country-predicate fence without a polygon") {
  auto fence = social::parse_fence_geojson(R"({
    "type": "FeatureCollection",
    "features": [
      {"type": "Feature", "properties": {"role": "bbox"},
       "bbox": [26.0, 40.8, 27.2, 42.0], "geometry": null},
      {"type": "Feature", "properties": {"country": "TUR"}, "geometry": null}
    ]
  })");
  std::vector<Tweet> tweets{tweet("t1", "u1", 1, "tr", 41.0, 26.5, "TUR"),
                            tweet("t2", "u2", 2, "el", 41.0, 26.5, "GRC")};
  auto kept = social::geofilter(tweets, fence);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].id == "t1");
}

TEST_CASE("und resolution by user majority") {
  SUBCASE("majority label wins") {
    std::vector<Tweet> tweets{tweet("t1", "u1", 1, "tr"), tweet("t2", "u1", 2, "tr"),
                              tweet("t3", "u1", 3, "tr"), tweet("t4", "u1", 4, "und")};
    auto res = social::resolve_und(tweets);
    CHECK(tweets[3].lang == "tr");
    CHECK(res.resolved == 1);
    CHECK(res.unresolved_tweets == 0);
  }
  SUBCASE("users without und tweets are untouched") {
    std::vector<Tweet> tweets{tweet("t1", "u1", 1, "en")};
    auto before = tweets;
    social::resolve_und(tweets);
    CHECK(tweets == before);
  }
  SUBCASE("tie takes the chronologically latest labelled language") {
    std::vector<Tweet> tweets{tweet("t1", "u1", 10, "en"), tweet("t2", "u1", 20, "tr"),
                              tweet("t3", "u1", 30, "en"), tweet("t4", "u1", 40, "tr"),
                              tweet("t5", "u1", 35, "und")};
    social::resolve_und(tweets);
    CHECK(tweets[4].lang == "tr");  // latest labelled tweet (ts=40) is tr
  }
  SUBCASE("all-und users stay unresolved and are counted") {
    std::vector<Tweet> tweets{tweet("t1", "u1", 1, "und"), tweet("t2", "u1", 2, "und"),
                              tweet("t3", "u2", 3, "tr")};
    auto res = social::resolve_und(tweets);
    CHECK(tweets[0].lang == "und");
    CHECK(res.all_und_users == 1);
    CHECK(res.unresolved_tweets == 2);
  }
  SUBCASE("language profiles expose counts and the resolution target") {
    std::vector<Tweet> tweets{tweet("t1", "u1", 1, "tr"), tweet("t2", "u1", 2, "tr"),
                              tweet("t3", "u1", 3, "en"), tweet("t4", "u1", 4, "und"),
                              tweet("t5", "u2", 5, "und")};
    auto profiles = social::language_profiles(tweets);
    REQUIRE(profiles.size() == 2);
    const auto& u1 = profiles.at("u1");
    CHECK(u1.counts.at("tr") == 2);
    CHECK(u1.counts.at("en") == 1);
    CHECK(u1.und_tweets == 1);
    CHECK(u1.resolved_und == "tr");
    CHECK(u1.counts.count(u1.resolved_und) == 1);  // resolved_und in keys(counts)
    CHECK(profiles.at("u2").resolved_und.empty());  // all-und user
  }
}

TEST_CASE("after resolution only all-und users' tweets stay undefined") {
  Rng rng(13);
  const char* langs[] = {"tr", "en", "ar", "und"};
  std::vector<Tweet> tweets;
  for (int i = 0; i < 2000; ++i) {
    tweets.push_back(tweet("t" + std::to_string(i), "u" + std::to_string(rng.below(60)),
                           1000 + static_cast<std::int64_t>(rng.below(100000)),
                           langs[rng.below(4)]));
  }
  auto res = social::resolve_und(tweets);
  std::map<std::string, bool> has_labelled;
  for (const auto& t : tweets) {
    if (t.lang != "und") has_labelled[t.user] = true;
  }
  std::size_t still_und = 0;
  for (const auto& t : tweets) {
    if (t.lang == "und") {
      ++still_und;
      CHECK(has_labelled.count(t.user) == 0);  // only all-und users remain
    }
  }
  CHECK(still_und == res.unresolved_tweets);
}

TEST_CASE("language group mapping") {
  auto policy = lang_policy();
  CHECK(social::map_language_group("tr", policy) == LangGroup::Turkish);
  CHECK(social::map_language_group("en", policy) == LangGroup::NoVisa);
  CHECK(social::map_language_group("xx", policy) == LangGroup::Unassigned);
}

TEST_CASE("activity counts per group") {
  auto policy = lang_policy();
  std::vector<Tweet> tweets;
  for (int i = 0; i < 3; ++i) tweets.push_back(tweet("a" + std::to_string(i), "u1", 100 + i, "tr"));
  for (int i = 0; i < 2; ++i) tweets.push_back(tweet("b" + std::to_string(i), "u2", 200 + i, "tr"));

  SUBCASE("five tweets from two users") {
    auto counts = social::activity_counts(tweets, policy, false, UtcOffset{0});
    CHECK(counts.tweets.at(LangGroup::Turkish) == 5);
    CHECK(counts.users.at(LangGroup::Turkish) == 2);
  }
  SUBCASE("empty input") {
    auto counts = social::activity_counts({}, policy, false, UtcOffset{0});
    CHECK(counts.tweets.empty());
    CHECK(counts.users.empty());
  }
  SUBCASE("a user tweeting in two groups counts once in each") {
    tweets.push_back(tweet("c1", "u1", 300, "en"));
    auto counts = social::activity_counts(tweets, policy, false, UtcOffset{0});
    CHECK(counts.users.at(LangGroup::Turkish) == 2);
    CHECK(counts.users.at(LangGroup::NoVisa) == 1);
    // Distinct users never exceed tweets.
    for (const auto& [g, n] : counts.users) CHECK(n <= counts.tweets.at(g));
  }
  SUBCASE("daily mode keys by local date") {
    auto counts = social::activity_counts(tweets, policy, true, UtcOffset{3 * 3600});
    std::uint64_t total = 0;
    for (const auto& [k, n] : counts.daily_tweets) total += n;
    CHECK(total == 5);
  }
}

TEST_CASE("destination classification") {
  auto policy = dest_policy();
  CHECK(social::classify_destination(tweet("t", "u", 1, "tr", 0, 0, "TUR"), policy, nullptr) ==
        Destination::Turkey);
  CHECK(social::classify_destination(tweet("t", "u", 1, "tr", 0, 0, "DEU"), policy, nullptr) ==
        Destination::Europe);
  CHECK(social::classify_destination(tweet("t", "u", 1, "tr", 0, 0, "USA"), policy, nullptr) ==
        Destination::Other);

  Tweet bare;
  bare.lang = "tr";
  CHECK(social::classify_destination(bare, policy, nullptr) == Destination::Unresolved);

  // Coordinate resolution through a country-polygon table.
  auto countries = social::parse_countries_geojson(R"({
    "type": "FeatureCollection",
    "features": [
      {"type": "Feature", "properties": {"code": "TUR"},
       "geometry": {"type": "Polygon", "coordinates":
         [[[26.0, 36.0], [45.0, 36.0], [45.0, 42.5], [26.0, 42.5], [26.0, 36.0]]]}}
    ]
  })");
  CHECK(social::classify_destination(tweet("t", "u", 1, "tr", 39.0, 35.0), policy, &countries) ==
        Destination::Turkey);
  CHECK(social::classify_destination(tweet("t", "u", 1, "tr", 10.0, 10.0), policy, &countries) ==
        Destination::Unresolved);
}

TEST_CASE("destination matrix distinct-user semantics") {
  auto lp = lang_policy();
  auto dp = dest_policy();
  Date start = make_date(2020, 5, 1), end = make_date(2020, 12, 31);
  UtcOffset tz{0};
  auto day_ts = [&](int offset) { return (start + offset).days * 86400LL + 7 * 3600; };

  SUBCASE("repeat tweets count the user once") {
    std::vector<Tweet> tweets;
    for (int i = 0; i < 5; ++i) {
      tweets.push_back(tweet("t" + std::to_string(i), "u1", day_ts(i), "tr", 39, 32, "TUR"));
    }
    auto matrix = social::destination_matrix(tweets, {"u1"}, start, end, tz, lp, dp, nullptr);
    CHECK(matrix.users.at({LangGroup::Turkish, Destination::Turkey}) == 1);
    CHECK(matrix.users.size() == 1);
    CHECK(matrix.present_users == 1);
    // Distinct-user counts are invariant under duplication.
    auto dup = tweets;
    dup.insert(dup.end(), tweets.begin(), tweets.end());
    auto matrix2 = social::destination_matrix(dup, {"u1"}, start, end, tz, lp, dp, nullptr);
    CHECK(matrix2.users == matrix.users);
  }
  SUBCASE("pairing is per-tweet co-occurrence, not a cartesian product") {
    std::vector<Tweet> tweets{tweet("t1", "u1", day_ts(0), "tr", 39, 32, "TUR"),
                              tweet("t2", "u1", day_ts(1), "en", 50, 9, "DEU")};
    auto matrix = social::destination_matrix(tweets, {"u1"}, start, end, tz, lp, dp, nullptr);
    CHECK(matrix.users.size() == 2);
    CHECK(matrix.users.at({LangGroup::Turkish, Destination::Turkey}) == 1);
    CHECK(matrix.users.at({LangGroup::NoVisa, Destination::Europe}) == 1);
    CHECK(matrix.users.count({LangGroup::Turkish, Destination::Europe}) == 0);
  }
  SUBCASE("no follow-up tweets") {
    auto matrix = social::destination_matrix({}, {"u1", "u2"}, start, end, tz, lp, dp, nullptr);
    CHECK(matrix.present_users == 0);
    CHECK(matrix.disappeared_users == 2);
    CHECK(matrix.users.empty());
  }
}

TEST_CASE("overlap regions partition the analyzed users") {
  SUBCASE("single-language users fall in singleton regions") {
    std::map<std::string, unsigned> masks{{"u1", 4}, {"u2", 4}};
    auto venn = social::overlap_regions(masks);
    CHECK(venn.regions[4] == 2);
    CHECK(venn.total() == 2);
  }
  SUBCASE("a user in all three groups lands in the triple region") {
    std::map<std::string, unsigned> masks{{"u1", 7}};
    auto venn = social::overlap_regions(masks);
    CHECK(venn.regions[7] == 1);
  }
  SUBCASE("regions sum to the user total on random masks") {
    Rng rng(3);
    std::map<std::string, unsigned> masks;
    std::size_t nonzero = 0;
    for (int i = 0; i < 500; ++i) {
      unsigned mask = static_cast<unsigned>(rng.below(8));
      masks["u" + std::to_string(i)] = mask;
      if (mask > 0) ++nonzero;
    }
    auto venn = social::overlap_regions(masks);
    CHECK(venn.total() == nonzero);
  }
}

TEST_CASE("follow-up sets feed the published venn") {
  auto lp = lang_policy();
  auto dp = dest_policy();
  Date start = make_date(2020, 5, 1), end = make_date(2020, 12, 31);
  auto day_ts = [&](int offset) { return (start + offset).days * 86400LL + 7 * 3600; };
  std::vector<Tweet> tweets{
      tweet("t1", "u1", day_ts(0), "tr", 39, 32, "TUR"),
      tweet("t2", "u1", day_ts(1), "en", 50, 9, "DEU"),
      tweet("t3", "u2", day_ts(2), "ar", 39, 32, "TUR"),
  };
  auto sets = social::follow_up_sets(tweets, {"u1", "u2", "u3"}, start, end, UtcOffset{0}, lp,
                                     dp, nullptr);
  CHECK(sets.lang_masks.at("u1") ==
        (social::lang_group_bit(LangGroup::Turkish) | social::lang_group_bit(LangGroup::NoVisa)));
  CHECK(sets.dest_masks.at("u1") ==
        (social::destination_bit(Destination::Turkey) | social::destination_bit(Destination::Europe)));
  CHECK(sets.lang_masks.at("u2") == social::lang_group_bit(LangGroup::Visa));
  CHECK(sets.lang_masks.count("u3") == 0);  // disappeared
}
