#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "borderflux/time.hpp"
#include "borderflux/toml.hpp"
#include "borderflux/types.hpp"

namespace bflux::synth {

struct ProvinceSpec {
  std::string code;
  int cells = 1;
};

struct GroupSpec {
  std::string nationality;
  MobilityClass cls = MobilityClass::Visa;
  int count = 0;
  std::string home_province;
  double events_per_day = 1.0;
  int min_events_per_day = 0;  // floor for noise-free worlds
};

enum class InjectKind { Surge, Disappear, Return };

struct InjectSpec {
  InjectKind kind = InjectKind::Surge;
  Date date{};
  std::vector<std::string> nationalities;  // empty = any
  int count = 0;
  std::string province;  // surge target
};

struct MixtureSpec {
  std::vector<std::string> langs;
  double weight = 1.0;
  std::vector<std::string> dests;  // follow-up countries
};

struct TweetConfig {
  int users = 0;
  Date period_start{}, period_end{};
  Date followup_start{}, followup_end{};
  int tweets_per_user = 4;
  int followup_tweets_per_user = 4;
  double und_fraction = 0.0;
  double followup_fraction = 1.0;
  double out_of_fence_fraction = 0.0;
  double off_territory_fraction = 0.0;
  std::array<double, 4> bbox{26.0, 40.8, 27.2, 42.0};       // min_lon,min_lat,max_lon,max_lat
  std::array<double, 4> territory{26.3, 40.5, 45.0, 42.2};  // rectangle polygon
  std::map<std::string, LangGroup> lang_groups;
  std::map<std::string, Destination> destinations;
  std::vector<MixtureSpec> mixtures;
};

struct SynthConfig {
  std::uint64_t seed = 1;
  Horizon horizon{make_date(2020, 2, 25), make_date(2020, 6, 15)};
  UtcOffset tz{};
  bool manifest_itineraries = true;
  std::vector<ProvinceSpec> provinces;
  std::vector<GroupSpec> groups;
  std::vector<InjectSpec> injections;
  std::optional<TweetConfig> tweets;
};

SynthConfig config_from_toml(const toml::Table& root);
SynthConfig load_config(const std::string& path);

// Writes cells.csv, subscribers.csv, visa_policy.csv and xdr.csv into
// out_dir and returns the world's ground-truth manifest section. The
// manifest itinerary is oracle-exact by construction: runs give the
// carried-forward daily province, lost_date the first day of trailing
// silence. Deterministic under the seed; same seed, same bytes.
nlohmann::json generate_world(const SynthConfig& config, const std::string& out_dir);

// Writes tweets.ndjson, lang_groups.csv, destinations.csv and
// fence.geojson; returns the tweet ground-truth section (expected
// und-resolution stats, activity counts, destination matrix and Venn
// regions, all derived from the generation plan).
nlohmann::json generate_tweets(const SynthConfig& config, const std::string& out_dir);

// generate_world + generate_tweets + manifest.json.
void generate_all(const SynthConfig& config, const std::string& out_dir);

}  // namespace bflux::synth
