#include "borderflux/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>

#include "borderflux/error.hpp"
#include "borderflux/rng.hpp"

namespace bflux::synth {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Date req_date(const toml::Table& t, std::string_view path) {
  auto d = parse_date(toml::req_string(t, path));
  if (!d) throw ConfigError("bad date at config key '" + std::string(path) + "'");
  return *d;
}

Date opt_date(const toml::Table& t, std::string_view path, Date fallback) {
  auto s = toml::opt_string(t, path, "");
  if (s.empty()) return fallback;
  auto d = parse_date(s);
  if (!d) throw ConfigError("bad date at config key '" + std::string(path) + "'");
  return *d;
}

std::array<double, 4> quad(const toml::Table& t, std::string_view path,
                           std::array<double, 4> fallback) {
  const toml::Value* v = toml::find(t, path);
  if (!v) return fallback;
  if (!v->is_array() || v->as_array().size() != 4) {
    throw ConfigError("config key '" + std::string(path) + "' must be [min_lon,min_lat,max_lon,max_lat]");
  }
  std::array<double, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) out[i] = v->as_array()[i].as_float();
  return out;
}

}  // namespace

SynthConfig config_from_toml(const toml::Table& root) {
  SynthConfig cfg;
  cfg.seed = static_cast<std::uint64_t>(toml::opt_int(root, "seed", 1));
  cfg.horizon.start = opt_date(root, "horizon_start", cfg.horizon.start);
  cfg.horizon.end = opt_date(root, "horizon_end", cfg.horizon.end);
  if (cfg.horizon.start > cfg.horizon.end) throw ConfigError("horizon_start must be <= horizon_end");
  auto off = parse_utc_offset(toml::opt_string(root, "utc_offset", "+03:00"));
  if (!off) throw ConfigError("bad utc_offset");
  cfg.tz = *off;
  cfg.manifest_itineraries = toml::opt_bool(root, "manifest_itineraries", true);

  if (const toml::Array* provinces = toml::find_table_array(root, "province")) {
    for (const auto& p : *provinces) {
      const toml::Table& t = p.as_table();
      ProvinceSpec spec;
      spec.code = toml::req_string(t, "code");
      spec.cells = static_cast<int>(toml::opt_int(t, "cells", 1));
      if (spec.cells < 1) throw ConfigError("province '" + spec.code + "' needs >= 1 cell");
      cfg.provinces.push_back(std::move(spec));
    }
  }
  if (const toml::Array* groups = toml::find_table_array(root, "group")) {
    for (const auto& g : *groups) {
      const toml::Table& t = g.as_table();
      GroupSpec spec;
      spec.nationality = normalize_country(toml::req_string(t, "nationality"));
      auto cls = parse_mobility_class(toml::opt_string(t, "class", "Visa"));
      if (!cls) throw ConfigError("group class must be Visa or NoVisa");
      spec.cls = *cls;
      spec.count = static_cast<int>(toml::req_int(t, "count"));
      if (spec.count < 0) throw ConfigError("group count must be non-negative");
      spec.home_province = toml::req_string(t, "home_province");
      spec.events_per_day = toml::opt_float(t, "events_per_day", 1.0);
      spec.min_events_per_day = static_cast<int>(toml::opt_int(t, "min_events_per_day", 0));
      cfg.groups.push_back(std::move(spec));
    }
  }
  if (const toml::Array* injections = toml::find_table_array(root, "inject")) {
    for (const auto& i : *injections) {
      const toml::Table& t = i.as_table();
      InjectSpec spec;
      const std::string kind = toml::req_string(t, "kind");
      if (kind == "surge") spec.kind = InjectKind::Surge;
      else if (kind == "disappear") spec.kind = InjectKind::Disappear;
      else if (kind == "return") spec.kind = InjectKind::Return;
      else throw ConfigError("inject kind must be surge, disappear or return");
      spec.date = req_date(t, "date");
      if (!cfg.horizon.contains(spec.date)) {
        throw ConfigError("inject date " + format_date(spec.date) + " outside the horizon");
      }
      for (const auto& nat : toml::opt_string_array(t, "nationalities")) {
        spec.nationalities.push_back(normalize_country(nat));
      }
      spec.count = static_cast<int>(toml::req_int(t, "count"));
      if (spec.count < 0) throw ConfigError("inject count must be non-negative");
      if (spec.kind == InjectKind::Surge) spec.province = toml::req_string(t, "province");
      cfg.injections.push_back(std::move(spec));
    }
  }

  if (toml::find(root, "tweets")) {
    TweetConfig tw;
    tw.users = static_cast<int>(toml::opt_int(root, "tweets.users", 0));
    tw.period_start = opt_date(root, "tweets.period_start", cfg.horizon.start);
    tw.period_end = opt_date(root, "tweets.period_end", cfg.horizon.end);
    tw.followup_start = opt_date(root, "tweets.followup_start", tw.period_end + 1);
    tw.followup_end = opt_date(root, "tweets.followup_end", tw.followup_start + 60);
    tw.tweets_per_user = static_cast<int>(toml::opt_int(root, "tweets.tweets_per_user", 4));
    tw.followup_tweets_per_user =
        static_cast<int>(toml::opt_int(root, "tweets.followup_tweets_per_user", 4));
    tw.und_fraction = toml::opt_float(root, "tweets.und_fraction", 0.0);
    tw.followup_fraction = toml::opt_float(root, "tweets.followup_fraction", 1.0);
    tw.out_of_fence_fraction = toml::opt_float(root, "tweets.out_of_fence_fraction", 0.0);
    tw.off_territory_fraction = toml::opt_float(root, "tweets.off_territory_fraction", 0.0);
    tw.bbox = quad(root, "tweets.fence.bbox", tw.bbox);
    tw.territory = quad(root, "tweets.fence.territory", tw.territory);
    if (const toml::Value* langs = toml::find(root, "tweets.lang_groups")) {
      for (const auto& [lang, group] : langs->as_table()) {
        auto g = parse_lang_group(group.as_string());
        if (!g) throw ConfigError("unknown language group for lang " + lang);
        tw.lang_groups[normalize_lang(lang)] = *g;
      }
    }
    if (const toml::Value* dests = toml::find(root, "tweets.destinations")) {
      for (const auto& [country, dest] : dests->as_table()) {
        auto d = parse_destination(dest.as_string());
        if (!d) throw ConfigError("unknown destination class for country " + country);
        tw.destinations[normalize_country(country)] = *d;
      }
    }
    if (const toml::Array* mixtures = toml::find_table_array(root, "tweets.mixture")) {
      for (const auto& m : *mixtures) {
        const toml::Table& t = m.as_table();
        MixtureSpec spec;
        for (const auto& l : toml::opt_string_array(t, "langs")) {
          spec.langs.push_back(normalize_lang(l));
        }
        spec.weight = toml::opt_float(t, "weight", 1.0);
        for (const auto& c : toml::opt_string_array(t, "dests")) {
          spec.dests.push_back(normalize_country(c));
        }
        if (spec.langs.empty()) throw ConfigError("tweet mixture needs at least one lang");
        tw.mixtures.push_back(std::move(spec));
      }
    }
    if (tw.users > 0 && tw.mixtures.empty()) {
      throw ConfigError("tweets.users > 0 requires at least one [[tweets.mixture]]");
    }
    cfg.tweets = std::move(tw);
  }
  return cfg;
}

SynthConfig load_config(const std::string& path) {
  return config_from_toml(toml::parse_file(path));
}

namespace {

struct WorldPlan {
  struct Province {
    std::string code;
    std::vector<std::string> cell_ids;
  };
  std::vector<Province> provinces;
  std::map<std::string, int> province_index;

  struct Subscriber {
    std::string id;
    int group = 0;
    int home = 0;
    std::map<Date, int> moves;  // day -> province (applied at day start)
    std::optional<Date> silence_from;
  };
  std::vector<Subscriber> subscribers;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

void append_i64(std::string& out, std::int64_t v) {
  char buf[24];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, p);
}

std::string subscriber_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "s%07d", index);
  return buf;
}

std::string user_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "u%05d", index);
  return buf;
}

}  // namespace

json generate_world(const SynthConfig& config, const std::string& out_dir) {
  fs::create_directories(out_dir);
  Rng rng(config.seed);

  WorldPlan plan;
  for (const auto& spec : config.provinces) {
    if (plan.province_index.count(spec.code)) {
      throw ConfigError("duplicate province code " + spec.code);
    }
    plan.province_index[spec.code] = static_cast<int>(plan.provinces.size());
    plan.provinces.push_back({spec.code, {}});
  }

  // cells.csv — deterministic grid with per-cell jitter.
  {
    std::string out = "cell_id,province,district,lat,lon\n";
    for (std::size_t p = 0; p < plan.provinces.size(); ++p) {
      const auto& spec = config.provinces[p];
      // 12-wide grid: row within a column band, integer column step.
      const std::size_t grid_row = p % 12;
      const std::size_t grid_col = p / 12;
      double base_lat = 36.0 + 0.4 * static_cast<double>(grid_row);
      double base_lon = 26.0 + 1.1 * static_cast<double>(grid_col);
      for (int c = 0; c < spec.cells; ++c) {
        std::string cell_id = "c_" + spec.code + "_" + std::to_string(c);
        double lat = base_lat + 0.3 * rng.unit();
        double lon = base_lon + 0.3 * rng.unit();
        out += cell_id;
        out += ',';
        out += spec.code;
        out += ',';
        out += spec.code + "_d" + std::to_string(c % 3);
        out += ',';
        out += std::to_string(lat);
        out += ',';
        out += std::to_string(lon);
        out += '\n';
        plan.provinces[p].cell_ids.push_back(std::move(cell_id));
      }
    }
    write_text(fs::path(out_dir) / "cells.csv", out);
  }

  // subscribers.csv + visa_policy.csv
  {
    std::string subs = "subscriber_id,nationality\n";
    int index = 0;
    for (std::size_t g = 0; g < config.groups.size(); ++g) {
      const auto& spec = config.groups[g];
      auto home = plan.province_index.find(spec.home_province);
      if (home == plan.province_index.end()) {
        throw ConfigError("group home_province '" + spec.home_province + "' is not a province");
      }
      for (int i = 0; i < spec.count; ++i) {
        WorldPlan::Subscriber sub;
        sub.id = subscriber_id(index++);
        sub.group = static_cast<int>(g);
        sub.home = home->second;
        subs += sub.id;
        subs += ',';
        subs += spec.nationality;
        subs += '\n';
        plan.subscribers.push_back(std::move(sub));
      }
    }
    write_text(fs::path(out_dir) / "subscribers.csv", subs);

    std::string policy = "nationality,class\n";
    std::set<std::string> seen;
    for (const auto& spec : config.groups) {
      if (!seen.insert(spec.nationality).second) continue;
      policy += spec.nationality;
      policy += ',';
      policy += to_string(spec.cls);
      policy += '\n';
    }
    write_text(fs::path(out_dir) / "visa_policy.csv", policy);
  }

  // Injection planning, in config order.
  json injections_doc = json::array();
  for (const auto& inject : config.injections) {
    int surge_target = -1;
    if (inject.kind == InjectKind::Surge) {
      auto it = plan.province_index.find(inject.province);
      if (it == plan.province_index.end()) {
        throw ConfigError("surge province '" + inject.province + "' is not a province");
      }
      surge_target = it->second;
    }
    std::vector<int> eligible;
    for (std::size_t s = 0; s < plan.subscribers.size(); ++s) {
      const auto& sub = plan.subscribers[s];
      const auto& nat = config.groups[static_cast<std::size_t>(sub.group)].nationality;
      if (!inject.nationalities.empty() &&
          std::find(inject.nationalities.begin(), inject.nationalities.end(), nat) ==
              inject.nationalities.end()) {
        continue;
      }
      if (sub.silence_from && *sub.silence_from <= inject.date) continue;
      eligible.push_back(static_cast<int>(s));
    }
    if (static_cast<int>(eligible.size()) < inject.count) {
      throw DataError("infeasible injection on " + format_date(inject.date) + ": needs " +
                      std::to_string(inject.count) + " members, only " +
                      std::to_string(eligible.size()) + " eligible");
    }
    rng.shuffle(eligible);
    eligible.resize(static_cast<std::size_t>(inject.count));
    std::sort(eligible.begin(), eligible.end());
    json chosen = json::array();
    for (int s : eligible) {
      auto& sub = plan.subscribers[static_cast<std::size_t>(s)];
      switch (inject.kind) {
        case InjectKind::Surge:
          sub.moves[inject.date] = surge_target;
          break;
        case InjectKind::Return:
          sub.moves[inject.date] = sub.home;
          break;
        case InjectKind::Disappear:
          sub.silence_from = inject.date;
          break;
      }
      chosen.push_back(sub.id);
    }
    const char* kind_name = inject.kind == InjectKind::Surge
                                ? "surge"
                                : (inject.kind == InjectKind::Disappear ? "disappear" : "return");
    injections_doc.push_back({{"kind", kind_name},
                              {"date", format_date(inject.date)},
                              {"count", inject.count},
                              {"subscribers", std::move(chosen)}});
  }

  // Event emission, subscriber-major then chronological: the fixed
  // serialization order.
  json subscribers_doc = json::array();
  std::uint64_t events_total = 0;
  {
    std::ofstream out(fs::path(out_dir) / "xdr.csv", std::ios::binary);
    if (!out) throw DataError("cannot write xdr.csv");
    std::string buf;
    buf.reserve(1 << 22);
    buf += "subscriber_id,ts,cell_id,kind\n";
    const int days = config.horizon.num_days();

    for (auto& sub : plan.subscribers) {
      const auto& group = config.groups[static_cast<std::size_t>(sub.group)];
      int current = sub.home;
      // Realized observed days: (day offset, province).
      std::vector<std::pair<int, int>> observed;
      std::vector<std::int64_t> day_ts;
      for (int d = 0; d < days; ++d) {
        Date date = config.horizon.start + d;
        auto move = sub.moves.find(date);
        if (move != sub.moves.end()) current = move->second;
        if (sub.silence_from && date >= *sub.silence_from) break;
        int n = rng.poisson(group.events_per_day);
        if (n < group.min_events_per_day) n = group.min_events_per_day;
        if (n == 0) continue;
        day_ts.clear();
        const std::int64_t midnight = local_midnight_utc(date, config.tz);
        for (int e = 0; e < n; ++e) {
          day_ts.push_back(midnight + static_cast<std::int64_t>(rng.below(86400)));
        }
        std::sort(day_ts.begin(), day_ts.end());
        const auto& cells = plan.provinces[static_cast<std::size_t>(current)].cell_ids;
        for (std::int64_t ts : day_ts) {
          buf += sub.id;
          buf += ',';
          append_i64(buf, ts);
          buf += ',';
          buf += cells[rng.below(cells.size())];
          buf += ",data\n";
          ++events_total;
        }
        observed.emplace_back(d, current);
        if (buf.size() > (1 << 22) - 256) {
          out << buf;
          buf.clear();
        }
      }
      out << buf;
      buf.clear();

      // Ground-truth series: carried fill between observed days.
      if (config.manifest_itineraries) {
        json entry;
        entry["id"] = sub.id;
        entry["nationality"] = group.nationality;
        entry["class"] = to_string(group.cls);
        if (observed.empty()) {
          entry["observed"] = false;
        } else {
          entry["observed"] = true;
          json runs = json::array();
          int run_start = observed.front().first;
          int run_prov = observed.front().second;
          int prev_day = observed.front().first;
          int last_prov = run_prov;
          for (std::size_t i = 1; i < observed.size(); ++i) {
            // Gap days carry last_prov; a run breaks only on a new
            // observed province.
            int d = observed[i].first;
            int prov = observed[i].second;
            if (prov != last_prov) {
              runs.push_back({{"from", format_date(config.horizon.start + run_start)},
                              {"to", format_date(config.horizon.start + (d - 1))},
                              {"province", plan.provinces[static_cast<std::size_t>(run_prov)].code}});
              run_start = d;
              run_prov = prov;
              last_prov = prov;
            }
            prev_day = d;
          }
          runs.push_back({{"from", format_date(config.horizon.start + run_start)},
                          {"to", format_date(config.horizon.start + prev_day)},
                          {"province", plan.provinces[static_cast<std::size_t>(run_prov)].code}});
          entry["runs"] = std::move(runs);
          entry["first_obs"] = format_date(config.horizon.start + observed.front().first);
          entry["last_obs"] = format_date(config.horizon.start + observed.back().first);
          if (observed.back().first < days - 1) {
            entry["lost_date"] = format_date(config.horizon.start + observed.back().first + 1);
          } else {
            entry["lost_date"] = nullptr;
          }
        }
        subscribers_doc.push_back(std::move(entry));
      }
    }
  }

  json world;
  world["rng"] = Rng::kAlgorithmId;
  world["seed"] = config.seed;
  world["utc_offset"] = format_utc_offset(config.tz);
  world["horizon"] = {{"start", format_date(config.horizon.start)},
                      {"end", format_date(config.horizon.end)}};
  world["events_total"] = events_total;
  world["subscribers_total"] = plan.subscribers.size();
  world["injections"] = std::move(injections_doc);
  if (config.manifest_itineraries) world["subscribers"] = std::move(subscribers_doc);
  return world;
}

namespace {

struct GenTweet {
  std::string id;
  int user = 0;
  std::int64_t ts = 0;
  bool has_coord = false;
  double lat = 0, lon = 0;
  bool in_fence = false;
  std::string country;
  std::string true_lang;
  bool is_und = false;
  bool followup = false;
  std::string text;

  std::string emitted_lang() const { return is_und ? "und" : true_lang; }
};

struct UndOutcome {
  std::size_t all_und_users = 0;
  std::size_t unresolved_tweets = 0;
  // user -> majority lang (resolution target), absent for all-und users
  std::map<int, std::string> majority;
};

// Replays the documented resolution rule over a subset of tweets given in
// file order: per user, und tweets take the majority labelled language,
// ties take the chronologically latest labelled tweet's language.
UndOutcome replay_resolution(const std::vector<const GenTweet*>& subset) {
  struct UserAcc {
    std::map<std::string, std::size_t> labels;
    std::int64_t latest_ts = 0;
    std::size_t latest_pos = 0;
    std::string latest_lang;
    bool any = false;
    std::size_t und = 0;
  };
  std::map<int, UserAcc> users;
  for (std::size_t pos = 0; pos < subset.size(); ++pos) {
    const GenTweet& t = *subset[pos];
    UserAcc& acc = users[t.user];
    if (t.is_und) {
      ++acc.und;
      continue;
    }
    ++acc.labels[t.true_lang];
    if (!acc.any || t.ts > acc.latest_ts || (t.ts == acc.latest_ts && pos >= acc.latest_pos)) {
      acc.latest_ts = t.ts;
      acc.latest_pos = pos;
      acc.latest_lang = t.true_lang;
    }
    acc.any = true;
  }
  UndOutcome out;
  for (auto& [user, acc] : users) {
    if (!acc.any) {
      if (acc.und > 0) {
        ++out.all_und_users;
        out.unresolved_tweets += acc.und;
      }
      continue;
    }
    std::size_t best = 0;
    for (const auto& [lang, n] : acc.labels) best = std::max(best, n);
    std::size_t tied = 0;
    std::string majority;
    for (const auto& [lang, n] : acc.labels) {
      if (n == best) {
        ++tied;
        majority = lang;
      }
    }
    out.majority[user] = tied > 1 ? acc.latest_lang : majority;
  }
  return out;
}

const char* pick_text(Rng& rng) {
  static const char* phrases[] = {
      "waiting at the gate", "the road is open today",    "love this place",
      "very hard night",     "no news from the crossing", "hate the cold wind",
      "all quiet here",      "good luck everyone",        "great people here",
      "an awful night again",
  };
  return phrases[rng.below(std::size(phrases))];
}

}  // namespace

json generate_tweets(const SynthConfig& config, const std::string& out_dir) {
  if (!config.tweets) return json::object();
  const TweetConfig& tw = *config.tweets;
  fs::create_directories(out_dir);
  // Independent stream; world generation draws do not shift tweet draws.
  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ull);

  // fence.geojson: bbox + territory rectangle. Labeled approximate: the
  // fixture geometry stands in for real survey boundaries.
  {
    json fence;
    fence["type"] = "FeatureCollection";
    json features = json::array();
    features.push_back({{"type", "Feature"},
                        {"properties", {{"role", "bbox"}, {"note", "approximate"}}},
                        {"bbox", tw.bbox},
                        {"geometry", nullptr}});
    json ring = json::array();
    ring.push_back({tw.territory[0], tw.territory[1]});
    ring.push_back({tw.territory[2], tw.territory[1]});
    ring.push_back({tw.territory[2], tw.territory[3]});
    ring.push_back({tw.territory[0], tw.territory[3]});
    ring.push_back({tw.territory[0], tw.territory[1]});
    json coords = json::array();
    coords.push_back(std::move(ring));
    features.push_back({{"type", "Feature"},
                        {"properties", {{"role", "territory"}, {"country", "TUR"}, {"note", "approximate"}}},
                        {"geometry", {{"type", "Polygon"}, {"coordinates", std::move(coords)}}}});
    fence["features"] = std::move(features);
    write_text(fs::path(out_dir) / "fence.geojson", fence.dump(2) + "\n");
  }

  // Policy CSVs.
  {
    std::string langs = "lang,group\n";
    for (const auto& [lang, group] : tw.lang_groups) {
      langs += lang;
      langs += ',';
      langs += to_string(group);
      langs += '\n';
    }
    write_text(fs::path(out_dir) / "lang_groups.csv", langs);
    std::string dests = "country,dest\n";
    for (const auto& [country, dest] : tw.destinations) {
      dests += country;
      dests += ',';
      dests += to_string(dest);
      dests += '\n';
    }
    write_text(fs::path(out_dir) / "destinations.csv", dests);
  }

  // User archetypes by weighted draw.
  double total_weight = 0;
  for (const auto& m : tw.mixtures) total_weight += m.weight;
  std::vector<int> user_mix(static_cast<std::size_t>(tw.users), 0);
  for (auto& mix : user_mix) {
    double r = rng.unit() * total_weight;
    double acc = 0;
    for (std::size_t m = 0; m < tw.mixtures.size(); ++m) {
      acc += tw.mixtures[m].weight;
      if (r < acc || m + 1 == tw.mixtures.size()) {
        mix = static_cast<int>(m);
        break;
      }
    }
  }

  // Quota-exact follow-up user set.
  std::vector<int> user_order(static_cast<std::size_t>(tw.users));
  for (int u = 0; u < tw.users; ++u) user_order[static_cast<std::size_t>(u)] = u;
  rng.shuffle(user_order);
  auto followup_n = static_cast<std::size_t>(
      std::llround(tw.followup_fraction * static_cast<double>(tw.users)));
  followup_n = std::min(followup_n, user_order.size());
  std::vector<bool> has_followup(static_cast<std::size_t>(tw.users), false);
  for (std::size_t i = 0; i < followup_n; ++i) {
    has_followup[static_cast<std::size_t>(user_order[i])] = true;
  }

  if (tw.off_territory_fraction > 0 && !(tw.bbox[0] < tw.territory[0])) {
    throw ConfigError(
        "off_territory_fraction > 0 requires the bbox to extend west of the territory");
  }

  const int period_days = tw.period_end - tw.period_start + 1;
  const int followup_days = tw.followup_end - tw.followup_start + 1;

  std::vector<GenTweet> tweets;
  for (int u = 0; u < tw.users; ++u) {
    const MixtureSpec& mix = tw.mixtures[static_cast<std::size_t>(user_mix[static_cast<std::size_t>(u)])];
    for (int k = 0; k < tw.tweets_per_user; ++k) {
      GenTweet t;
      t.user = u;
      Date d = tw.period_start + static_cast<int>(rng.below(static_cast<std::uint64_t>(period_days)));
      t.ts = local_midnight_utc(d, config.tz) + static_cast<std::int64_t>(rng.below(86400));
      t.true_lang = mix.langs[rng.below(mix.langs.size())];
      t.has_coord = true;
      double r = rng.unit();
      if (k > 0 && r < tw.out_of_fence_fraction) {
        // East of the bbox, still on the territory.
        t.lon = tw.bbox[2] + 0.5 + rng.unit();
        t.lat = (tw.territory[1] + tw.territory[3]) / 2;
        t.country = "TUR";
        t.in_fence = false;
      } else if (k > 0 && r < tw.out_of_fence_fraction + tw.off_territory_fraction) {
        // Inside the bbox, west of the territory edge.
        t.lon = tw.bbox[0] + (tw.territory[0] - tw.bbox[0]) * 0.5 * (0.5 + rng.unit() * 0.5);
        t.lat = (tw.bbox[1] + tw.bbox[3]) / 2;
        t.country = "GRC";
        t.in_fence = false;
      } else {
        // First tweet always inside: every user is a border user.
        double lon_lo = std::max(tw.bbox[0], tw.territory[0]);
        double lon_hi = std::min(tw.bbox[2], tw.territory[2]);
        double lat_lo = std::max(tw.bbox[1], tw.territory[1]);
        double lat_hi = std::min(tw.bbox[3], tw.territory[3]);
        t.lon = lon_lo + (lon_hi - lon_lo) * (0.05 + 0.9 * rng.unit());
        t.lat = lat_lo + (lat_hi - lat_lo) * (0.05 + 0.9 * rng.unit());
        t.country = "TUR";
        t.in_fence = true;
      }
      t.text = pick_text(rng);
      tweets.push_back(std::move(t));
    }
    if (has_followup[static_cast<std::size_t>(u)] && !mix.dests.empty()) {
      for (int k = 0; k < tw.followup_tweets_per_user; ++k) {
        GenTweet t;
        t.user = u;
        t.followup = true;
        Date d = tw.followup_start +
                 static_cast<int>(rng.below(static_cast<std::uint64_t>(followup_days)));
        t.ts = local_midnight_utc(d, config.tz) + static_cast<std::int64_t>(rng.below(86400));
        t.true_lang = mix.langs[rng.below(mix.langs.size())];
        t.country = mix.dests[rng.below(mix.dests.size())];
        t.text = pick_text(rng);
        tweets.push_back(std::move(t));
      }
    }
  }

  // Exact und quota over all tweets.
  auto und_n = static_cast<std::size_t>(
      std::llround(tw.und_fraction * static_cast<double>(tweets.size())));
  {
    std::vector<std::size_t> order(tweets.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    for (std::size_t i = 0; i < std::min(und_n, order.size()); ++i) {
      tweets[order[i]].is_und = true;
    }
  }

  // Fixed serialization order: (ts, user, generation index via stable sort).
  std::stable_sort(tweets.begin(), tweets.end(), [](const GenTweet& a, const GenTweet& b) {
    if (a.ts != b.ts) return a.ts < b.ts;
    return a.user < b.user;
  });
  for (std::size_t i = 0; i < tweets.size(); ++i) {
    tweets[i].id = "t" + std::to_string(i);
  }

  {
    std::string out;
    for (const GenTweet& t : tweets) {
      json j;
      j["id"] = t.id;
      j["user"] = user_id(t.user);
      j["ts"] = t.ts;
      if (t.has_coord) {
        j["lat"] = t.lat;
        j["lon"] = t.lon;
      }
      if (!t.country.empty()) j["country"] = t.country;
      j["lang"] = t.emitted_lang();
      j["text"] = t.text;
      out += j.dump();
      out += '\n';
    }
    write_text(fs::path(out_dir) / "tweets.ndjson", out);
  }

  // Expected pipeline outcomes, replayed from the plan.
  json doc;
  doc["users_total"] = tw.users;
  doc["tweets_total"] = tweets.size();
  doc["und_total"] = und_n;

  auto subset_stats = [&](const std::vector<const GenTweet*>& subset) {
    UndOutcome o = replay_resolution(subset);
    return json{{"all_und_users", o.all_und_users}, {"unresolved_tweets", o.unresolved_tweets}};
  };

  std::vector<const GenTweet*> all;
  std::vector<const GenTweet*> border_kept;
  std::set<int> border_users;
  for (const GenTweet& t : tweets) {
    all.push_back(&t);
    if (!t.followup && t.in_fence) {
      Date d = local_date_of(t.ts, config.tz);
      if (d >= tw.period_start && d <= tw.period_end) {
        border_kept.push_back(&t);
        border_users.insert(t.user);
      }
    }
  }
  doc["full"] = subset_stats(all);
  doc["border"] = subset_stats(border_kept);
  doc["border_users"] = border_users.size();
  doc["border_kept_tweets"] = border_kept.size();

  // Border-period activity by group.
  {
    UndOutcome o = replay_resolution(border_kept);
    std::map<std::string, std::uint64_t> tweets_by_group;
    std::map<std::string, std::set<int>> users_by_group;
    for (const GenTweet* t : border_kept) {
      std::string lang;
      if (t->is_und) {
        auto it = o.majority.find(t->user);
        if (it == o.majority.end()) continue;  // all-und user
        lang = it->second;
      } else {
        lang = t->true_lang;
      }
      auto g = tw.lang_groups.find(lang);
      if (g == tw.lang_groups.end()) continue;
      ++tweets_by_group[to_string(g->second)];
      users_by_group[to_string(g->second)].insert(t->user);
    }
    json activity = json::array();
    for (const char* name : {"Visa", "NoVisa", "Turkish"}) {
      activity.push_back({{"group", name},
                          {"tweets", tweets_by_group[name]},
                          {"users", users_by_group[name].size()}});
    }
    doc["expected_border_activity"] = std::move(activity);
  }

  // Follow-up analysis: geolocated tweets of border users.
  {
    std::vector<const GenTweet*> followup_geo;
    for (const GenTweet& t : tweets) {
      if (!t.followup || !border_users.contains(t.user)) continue;
      Date d = local_date_of(t.ts, config.tz);
      if (d < tw.followup_start || d > tw.followup_end) continue;
      if (!t.has_coord && t.country.empty()) continue;
      followup_geo.push_back(&t);
    }
    doc["followup"] = subset_stats(followup_geo);
    UndOutcome o = replay_resolution(followup_geo);

    std::set<int> present;
    std::map<int, unsigned> lang_masks, dest_masks;
    std::map<std::pair<std::string, std::string>, std::set<int>> matrix;
    auto group_bit = [](LangGroup g) -> unsigned {
      return g == LangGroup::Visa ? 1u : (g == LangGroup::NoVisa ? 2u : 4u);
    };
    auto dest_bit = [](Destination d) -> unsigned {
      return d == Destination::Europe ? 1u : (d == Destination::Turkey ? 2u : 4u);
    };
    for (const GenTweet* t : followup_geo) {
      present.insert(t->user);
      std::string lang;
      bool lang_ok = true;
      if (t->is_und) {
        auto it = o.majority.find(t->user);
        if (it == o.majority.end()) lang_ok = false;
        else lang = it->second;
      } else {
        lang = t->true_lang;
      }
      std::optional<LangGroup> group;
      if (lang_ok) {
        auto g = tw.lang_groups.find(lang);
        if (g != tw.lang_groups.end()) group = g->second;
      }
      std::optional<Destination> dest;
      auto d = tw.destinations.find(t->country);
      if (d != tw.destinations.end()) dest = d->second;
      if (group) lang_masks[t->user] |= group_bit(*group);
      if (dest) dest_masks[t->user] |= dest_bit(*dest);
      if (group && dest) {
        matrix[{to_string(*group), to_string(*dest)}].insert(t->user);
      }
    }
    doc["present_users"] = present.size();

    auto venn = [](const std::map<int, unsigned>& masks) {
      std::array<std::uint64_t, 8> regions{};
      for (const auto& [user, mask] : masks) {
        if (mask > 0 && mask < 8) ++regions[mask];
      }
      json out = json::object();
      for (unsigned m = 1; m < 8; ++m) out[std::to_string(m)] = regions[m];
      return out;
    };
    doc["expected_lang_venn"] = venn(lang_masks);
    doc["expected_dest_venn"] = venn(dest_masks);

    json matrix_doc = json::array();
    for (const auto& [key, users] : matrix) {
      matrix_doc.push_back(
          {{"group", key.first}, {"destination", key.second}, {"users", users.size()}});
    }
    doc["expected_dest_matrix"] = std::move(matrix_doc);
  }

  return doc;
}

void generate_all(const SynthConfig& config, const std::string& out_dir) {
  fs::create_directories(out_dir);
  json manifest = generate_world(config, out_dir);
  json tweets = generate_tweets(config, out_dir);
  if (!tweets.empty()) manifest["tweets"] = std::move(tweets);
  write_text(fs::path(out_dir) / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace bflux::synth
