#include "borderflux/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <nlohmann/json.hpp>

#include "borderflux/artifacts.hpp"
#include "borderflux/digest.hpp"
#include "borderflux/error.hpp"
#include "borderflux/mobility.hpp"
#include "borderflux/sentiment.hpp"
#include "borderflux/social.hpp"
#include "borderflux/toml.hpp"

namespace bflux::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(Stage s) {
  switch (s) {
    case Stage::Ingest: return "ingest";
    case Stage::Cohort: return "cohort";
    case Stage::Mobility: return "mobility";
    case Stage::Social: return "social";
    case Stage::Sentiment: return "sentiment";
  }
  return "?";
}

std::vector<Stage> parse_stages(const std::string& comma_list) {
  std::vector<Stage> out;
  std::size_t start = 0;
  while (start <= comma_list.size()) {
    std::size_t comma = comma_list.find(',', start);
    std::string name = comma == std::string::npos ? comma_list.substr(start)
                                                  : comma_list.substr(start, comma - start);
    if (!name.empty()) {
      if (name == "ingest") out.push_back(Stage::Ingest);
      else if (name == "cohort") out.push_back(Stage::Cohort);
      else if (name == "mobility") out.push_back(Stage::Mobility);
      else if (name == "social") out.push_back(Stage::Social);
      else if (name == "sentiment") out.push_back(Stage::Sentiment);
      else throw ConfigError("unknown stage '" + name + "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

namespace {

std::string resolve_path(const fs::path& base_dir, const std::string& p) {
  if (p.empty()) return p;
  fs::path path(p);
  if (path.is_absolute()) return p;
  return (base_dir / path).lexically_normal().string();
}

Date cfg_date(const toml::Table& t, std::string_view key, Date fallback) {
  std::string s = toml::opt_string(t, key, "");
  if (s.empty()) return fallback;
  auto d = parse_date(s);
  if (!d) throw ConfigError("bad date at config key '" + std::string(key) + "'");
  return *d;
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  toml::Table root = toml::parse_file(path);
  fs::path base = fs::path(path).parent_path();
  RunConfig cfg;
  cfg.config_path = path;

  cfg.xdr_path = resolve_path(base, toml::req_string(root, "inputs.xdr"));
  cfg.cells_path = resolve_path(base, toml::req_string(root, "inputs.cells"));
  cfg.subscribers_path = resolve_path(base, toml::req_string(root, "inputs.subscribers"));
  cfg.visa_policy_path = resolve_path(base, toml::req_string(root, "inputs.visa_policy"));
  cfg.lang_groups_path = resolve_path(base, toml::opt_string(root, "inputs.lang_groups", ""));
  cfg.destinations_path = resolve_path(base, toml::opt_string(root, "inputs.destinations", ""));
  cfg.tweets_path = resolve_path(base, toml::opt_string(root, "inputs.tweets", ""));
  cfg.fence_path = resolve_path(base, toml::opt_string(root, "inputs.fence", ""));
  cfg.countries_path = resolve_path(base, toml::opt_string(root, "inputs.countries", ""));
  cfg.max_error_rate = toml::opt_float(root, "inputs.max_error_rate", 0.01);

  auto tz = parse_utc_offset(toml::opt_string(root, "mobility.utc_offset", "+03:00"));
  if (!tz) throw ConfigError("bad mobility.utc_offset");
  cfg.tz = *tz;

  cfg.cohort.border_provinces =
      toml::opt_string_array(root, "cohort.border_provinces", cfg.cohort.border_provinces);
  cfg.cohort.window_start = cfg_date(root, "cohort.window_start", cfg.cohort.window_start);
  cfg.cohort.window_end = cfg_date(root, "cohort.window_end", cfg.cohort.window_end);
  if (cfg.cohort.window_start > cfg.cohort.window_end) {
    throw ConfigError("cohort window start must be <= end");
  }
  cfg.cohort.top_k = static_cast<int>(toml::opt_int(root, "cohort.top_k", 20));
  if (cfg.cohort.top_k < 1) throw ConfigError("cohort.top_k must be >= 1");
  cfg.cohort.home_nationality =
      normalize_country(toml::opt_string(root, "cohort.home_nationality", "TUR"));
  cfg.cohort.tz = cfg.tz;

  cfg.horizon.start = cfg_date(root, "mobility.horizon_start", cfg.horizon.start);
  cfg.horizon.end = cfg_date(root, "mobility.horizon_end", cfg.horizon.end);
  if (cfg.horizon.start > cfg.horizon.end) throw ConfigError("horizon start must be <= end");
  cfg.backfill = toml::opt_bool(root, "mobility.backfill_before_first", true);
  auto floor = privacy::parse_spatial_floor(
      toml::opt_string(root, "mobility.granularity", "province"));
  if (!floor) throw ConfigError("mobility.granularity must be province or district");
  cfg.granularity = *floor;
  cfg.antenna_bucket_minutes =
      static_cast<int>(toml::opt_int(root, "mobility.antenna_bucket_minutes", 60));
  cfg.flow_a = cfg_date(root, "mobility.flow_date_a", cfg.horizon.start);
  cfg.flow_b = cfg_date(root, "mobility.flow_date_b", cfg.horizon.end);
  for (const auto& s : toml::opt_string_array(root, "mobility.count_dates")) {
    auto d = parse_date(s);
    if (!d) throw ConfigError("bad date in mobility.count_dates");
    cfg.count_dates.push_back(*d);
  }
  if (cfg.count_dates.empty()) cfg.count_dates = {cfg.horizon.start, cfg.horizon.end};
  cfg.drops_theta = toml::opt_float_maybe(root, "mobility.drops_theta");
  if (auto n = toml::opt_int_maybe(root, "mobility.drops_top_n")) {
    cfg.drops_top_n = static_cast<int>(*n);
  }
  if (!cfg.drops_theta && !cfg.drops_top_n) cfg.drops_top_n = 3;

  cfg.est_share = toml::opt_float(root, "estimates.share", 0.5);
  cfg.est_churn_floor = toml::opt_float(root, "estimates.churn_floor", 0.5);

  cfg.social_start = cfg_date(root, "social.period_start", cfg.cohort.window_start);
  cfg.social_end = cfg_date(root, "social.period_end", cfg.cohort.window_end);
  cfg.followup_start = cfg_date(root, "social.followup_start", make_date(2020, 5, 1));
  cfg.followup_end = cfg_date(root, "social.followup_end", make_date(2020, 12, 31));

  cfg.sentiment_tweets_path =
      resolve_path(base, toml::opt_string(root, "sentiment.tweets", ""));
  cfg.hashtags_path = resolve_path(base, toml::opt_string(root, "sentiment.hashtags", ""));
  if (const toml::Array* lexicons = toml::find_table_array(root, "sentiment.lexicon")) {
    for (const auto& entry : *lexicons) {
      const toml::Table& t = entry.as_table();
      cfg.lexicons.emplace_back(normalize_lang(toml::req_string(t, "lang")),
                                resolve_path(base, toml::req_string(t, "path")));
    }
  }

  cfg.policy.k = static_cast<std::uint32_t>(toml::opt_int(root, "privacy.k", 10));
  if (cfg.policy.k < 2) throw ConfigError("privacy.k must be >= 2");
  auto spatial = privacy::parse_spatial_floor(
      toml::opt_string(root, "privacy.spatial_floor", "province"));
  if (!spatial) throw ConfigError("privacy.spatial_floor must be province or district");
  cfg.policy.spatial_floor = *spatial;
  if (cfg.granularity == privacy::SpatialFloor::District &&
      cfg.policy.spatial_floor == privacy::SpatialFloor::Province) {
    throw ConfigError("district granularity conflicts with a province spatial floor");
  }
  cfg.pseudonymize = toml::opt_bool(root, "privacy.pseudonymize", false);
  cfg.mobile_key_env =
      toml::opt_string(root, "privacy.mobile_key_env", "BORDERFLUX_MOBILE_KEY");
  cfg.social_key_env =
      toml::opt_string(root, "privacy.social_key_env", "BORDERFLUX_SOCIAL_KEY");

  cfg.out_dir = resolve_path(base, toml::opt_string(root, "output.dir", "out"));
  cfg.threads = static_cast<int>(toml::opt_int(root, "output.threads", 0));

  // Referenced files must exist at validation time.
  std::vector<std::string> referenced{cfg.xdr_path,         cfg.cells_path,
                                      cfg.subscribers_path, cfg.visa_policy_path,
                                      cfg.lang_groups_path, cfg.destinations_path,
                                      cfg.tweets_path,      cfg.fence_path,
                                      cfg.countries_path,   cfg.sentiment_tweets_path,
                                      cfg.hashtags_path};
  for (const auto& [lang, lexicon_path] : cfg.lexicons) referenced.push_back(lexicon_path);
  for (const auto& p : referenced) {
    if (!p.empty() && !fs::exists(p)) {
      throw ConfigError("referenced input file does not exist: " + p);
    }
  }
  return cfg;
}

namespace {

struct Context {
  const RunConfig& cfg;
  std::string mobile_key;
  std::string social_key;
  std::optional<ingest::ReferenceTables> tables;
  std::optional<ingest::XdrParseResult> events;
  std::optional<ingest::LinkedRefs> links;
  std::optional<ingest::TweetParseResult> tweets;
  std::optional<cohort::Cohort> cohort_result;

  explicit Context(const RunConfig& c) : cfg(c) {}
};

std::string env_key(const std::string& env_name) {
  const char* v = std::getenv(env_name.c_str());
  return v ? v : "";
}

void ensure_tables(Context& ctx) {
  if (ctx.tables) return;
  ingest::ReferenceTables t;
  t.cells = ingest::parse_cells_csv(ingest::read_file(ctx.cfg.cells_path));
  t.subscribers = ingest::parse_subscribers_csv(ingest::read_file(ctx.cfg.subscribers_path));
  t.visa = ingest::parse_visa_policy_csv(ingest::read_file(ctx.cfg.visa_policy_path));
  if (!ctx.cfg.lang_groups_path.empty()) {
    t.lang_groups =
        ingest::parse_lang_group_policy_csv(ingest::read_file(ctx.cfg.lang_groups_path));
  }
  if (!ctx.cfg.destinations_path.empty()) {
    t.destinations =
        ingest::parse_destination_policy_csv(ingest::read_file(ctx.cfg.destinations_path));
  }
  if (ctx.cfg.pseudonymize) {
    for (auto& row : t.subscribers.rows) {
      row.id = privacy::pseudonymize(row.id, ctx.mobile_key);
    }
    t.subscribers.by_id.clear();
    for (std::uint32_t i = 0; i < t.subscribers.rows.size(); ++i) {
      if (!t.subscribers.by_id.emplace(t.subscribers.rows[i].id, i).second) {
        throw DataError("pseudonym collision in the subscriber table");
      }
    }
  }
  ctx.tables = std::move(t);
}

void ensure_events(Context& ctx) {
  if (ctx.events) return;
  ensure_tables(ctx);
  ingest::ParseLimits limits;
  limits.max_error_rate = ctx.cfg.max_error_rate;
  // Envelope of the cohort window and the mobility horizon, in the
  // configured day-boundary offset.
  Date lo = std::min(ctx.cfg.cohort.window_start, ctx.cfg.horizon.start);
  Date hi = std::max(ctx.cfg.cohort.window_end, ctx.cfg.horizon.end);
  limits.ts_min = local_midnight_utc(lo, ctx.cfg.tz);
  limits.ts_max = local_midnight_utc(hi + 1, ctx.cfg.tz) - 1;
  auto parsed = ingest::parse_xdr_file(ctx.cfg.xdr_path, ingest::XdrEncoding::Auto, limits);
  if (ctx.cfg.pseudonymize) {
    std::vector<std::string> renamed;
    renamed.reserve(parsed.batch.subscribers.size());
    for (const auto& token : parsed.batch.subscribers.tokens()) {
      renamed.push_back(privacy::pseudonymize(token, ctx.mobile_key));
    }
    parsed.batch.subscribers.rewrite(renamed);
  }
  ctx.events = std::move(parsed);
  ctx.links = ingest::link_refs(ctx.events->batch, ctx.tables->cells, ctx.tables->subscribers);
}

void ensure_tweets(Context& ctx) {
  if (ctx.tweets) return;
  if (ctx.cfg.tweets_path.empty()) throw ConfigError("social stage requires inputs.tweets");
  ingest::ParseLimits limits;
  limits.max_error_rate = ctx.cfg.max_error_rate;
  auto parsed = ingest::parse_tweets_file(ctx.cfg.tweets_path, limits);
  if (ctx.cfg.pseudonymize) {
    for (auto& t : parsed.tweets) {
      t.user = privacy::pseudonymize(t.user, ctx.social_key);
      t.id = privacy::pseudonymize(t.id, ctx.social_key);
    }
  }
  ctx.tweets = std::move(parsed);
}

void write_artifact(const fs::path& dir, const std::string& name, const std::string& content,
                    std::map<std::string, std::string>& digests) {
  fs::path p = dir / name;
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write artifact " + p.string());
  out << content;
  out.close();
  digests[name] = sha256_hex(content);
}

json stats_doc(const ingest::ParseStats& stats) {
  json doc;
  doc["total_lines"] = stats.total_lines;
  doc["emitted"] = stats.emitted;
  doc["malformed"] = stats.malformed;
  doc["filtered"] = stats.filtered;
  json diags = json::array();
  std::size_t limit = std::min<std::size_t>(stats.diagnostics.size(), 50);
  for (std::size_t i = 0; i < limit; ++i) {
    const auto& d = stats.diagnostics[i];
    diags.push_back({{"line", d.line}, {"field", d.field}, {"reason", d.reason}});
  }
  doc["diagnostics"] = std::move(diags);
  return doc;
}

void stage_ingest(Context& ctx, const fs::path& out_dir,
                  std::map<std::string, std::string>& digests) {
  ensure_events(ctx);
  json report;
  report["events"] = stats_doc(ctx.events->stats);
  auto refs = ingest::validate_refs(ctx.events->batch, ctx.tables->cells,
                                    ctx.tables->subscribers);
  json validation;
  validation["unknown_cells"] = refs.unknown_cells;
  validation["unknown_subscribers"] = refs.unknown_subscribers.size();
  validation["unknown_subscriber_events"] = refs.unknown_subscriber_events;
  report["validation"] = std::move(validation);
  report["tables"] = {{"cells", ctx.tables->cells.cells.size()},
                      {"provinces", ctx.tables->cells.provinces.size()},
                      {"subscribers", ctx.tables->subscribers.rows.size()}};
  if (!ctx.cfg.tweets_path.empty()) {
    ensure_tweets(ctx);
    report["tweets"] = stats_doc(ctx.tweets->stats);
  }
  write_artifact(out_dir, "ingest_report.json", report.dump(2) + "\n", digests);
  if (!refs.ok()) {
    throw DataError("validation failed: " + std::to_string(refs.unknown_cells.size()) +
                    " unknown cell ids (first: " + refs.unknown_cells.front() + ")");
  }
}

void stage_cohort(Context& ctx, const fs::path& out_dir,
                  std::map<std::string, std::string>& digests) {
  ensure_events(ctx);
  ctx.cohort_result = cohort::build(ctx.events->batch, *ctx.links, ctx.tables->cells,
                                    ctx.tables->subscribers, ctx.tables->visa, ctx.cfg.cohort);
  if (ctx.cohort_result->members.empty()) {
    std::fprintf(stderr, "warning: cohort selection matched no subscribers\n");
  }
  if (ctx.cohort_result->excluded_unknown_policy > 0) {
    std::fprintf(stderr, "warning: %zu subscribers excluded (nationality missing from policy)\n",
                 ctx.cohort_result->excluded_unknown_policy);
  }
  write_artifact(out_dir, "cohort.csv", cohort::to_csv(*ctx.cohort_result, ctx.tables->subscribers),
                 digests);
}

void stage_mobility(Context& ctx, const fs::path& out_dir,
                    std::map<std::string, std::string>& digests) {
  ensure_events(ctx);
  if (!ctx.cohort_result) {
    fs::path cohort_file = out_dir / "cohort.csv";
    if (!fs::exists(cohort_file)) throw DataError("MISSING_STAGE:cohort");
    ctx.cohort_result =
        cohort::from_csv(ingest::read_file(cohort_file.string()), ctx.tables->subscribers);
  }
  const auto& cfg = ctx.cfg;
  const auto& registry = ctx.tables->cells;

  // Region mapping at the configured granularity.
  std::span<const std::uint16_t> cell_region;
  std::vector<std::uint16_t> district_region;
  std::vector<std::string> region_names;
  std::vector<bool> border_region;
  if (cfg.granularity == privacy::SpatialFloor::Province) {
    cell_region = ctx.links->cell_province;
    region_names = registry.provinces;
    border_region.assign(registry.provinces.size(), false);
    for (const auto& code : cfg.cohort.border_provinces) {
      if (auto idx = registry.province_index(code)) border_region[*idx] = true;
    }
  } else {
    district_region.resize(ctx.links->cell_district.size());
    for (std::size_t i = 0; i < district_region.size(); ++i) {
      if (ctx.links->cell_district[i] < 0) {
        throw DataError("district granularity requires a district for every cell");
      }
      district_region[i] = static_cast<std::uint16_t>(ctx.links->cell_district[i]);
    }
    cell_region = district_region;
    region_names = registry.districts;
    border_region.assign(registry.districts.size(), false);
    std::vector<bool> border_province(registry.provinces.size(), false);
    for (const auto& code : cfg.cohort.border_provinces) {
      if (auto idx = registry.province_index(code)) border_province[*idx] = true;
    }
    for (const auto& cell : registry.cells) {
      if (cell.district >= 0 && border_province[cell.province]) {
        border_region[static_cast<std::size_t>(cell.district)] = true;
      }
    }
  }

  auto set = mobility::build_series_all(ctx.events->batch, cell_region,
                                        ctx.cohort_result->members,
                                        ctx.cohort_result->member_class, ctx.tables->subscribers,
                                        cfg.horizon, cfg.tz);
  if (set.excluded_no_events > 0) {
    std::fprintf(stderr, "warning: %zu cohort members had no events inside the horizon\n",
                 set.excluded_no_events);
  }

  auto gs = mobility::group_timeseries(set, border_region, cfg.backfill);
  write_artifact(out_dir, "group_timeseries.csv",
                 artifacts::group_timeseries_csv(gs, cfg.policy), digests);

  auto alive = gs.alive_series();
  auto drops = mobility::detect_drops(alive, cfg.drops_theta, cfg.drops_top_n);
  write_artifact(out_dir, "drops.csv", artifacts::drops_csv(drops), digests);

  std::vector<mobility::ProvinceCounts> counts;
  for (Date d : cfg.count_dates) {
    if (!cfg.horizon.contains(d)) {
      throw ConfigError("count date " + format_date(d) + " outside the horizon");
    }
    counts.push_back(mobility::province_counts(set, region_names, d, cfg.backfill));
  }
  write_artifact(out_dir, "province_counts.csv",
                 artifacts::province_counts_csv(counts, cfg.policy), digests);

  auto flow = mobility::flow_matrix(set, region_names, cfg.flow_a, cfg.flow_b, cfg.backfill);
  write_artifact(out_dir, "flows.json", artifacts::flows_doc(flow, cfg.policy).dump(2) + "\n",
                 digests);

  auto antenna = mobility::antenna_counts(ctx.events->batch,
                                          static_cast<std::int64_t>(cfg.antenna_bucket_minutes) * 60);
  write_artifact(out_dir, "antenna_counts.csv", artifacts::antenna_csv(antenna, cfg.policy),
                 digests);

  auto lost = mobility::lost_at_border_by_class(set, border_region);
  std::vector<mobility::CrossingEstimate> estimates;
  for (MobilityClass cls : {MobilityClass::Visa, MobilityClass::NoVisa}) {
    auto est = mobility::estimate_crossings(static_cast<std::int64_t>(lost[cls]), cfg.est_share,
                                            cfg.est_churn_floor);
    est.group = cls;
    estimates.push_back(est);
  }
  write_artifact(out_dir, "estimates.json",
                 artifacts::estimates_doc(estimates, cfg.policy).dump(2) + "\n", digests);
}

void stage_social(Context& ctx, const fs::path& out_dir,
                  std::map<std::string, std::string>& digests) {
  ensure_tables(ctx);
  ensure_tweets(ctx);
  const auto& cfg = ctx.cfg;
  if (cfg.fence_path.empty()) throw ConfigError("social stage requires inputs.fence");
  auto fence = social::parse_fence_geojson(ingest::read_file(cfg.fence_path));
  std::optional<social::CountryPolygons> countries;
  if (!cfg.countries_path.empty()) {
    countries = social::parse_countries_geojson(ingest::read_file(cfg.countries_path));
  }

  social::GeofilterStats geo_stats;
  auto fenced = social::geofilter(ctx.tweets->tweets, fence, &geo_stats);
  std::vector<Tweet> border_tweets;
  for (auto& t : fenced) {
    Date d = local_date_of(t.ts, cfg.tz);
    if (d >= cfg.social_start && d <= cfg.social_end) border_tweets.push_back(std::move(t));
  }
  auto und = social::resolve_und(border_tweets);
  auto activity =
      social::activity_counts(border_tweets, ctx.tables->lang_groups, /*daily=*/true, cfg.tz);
  write_artifact(out_dir, "lang_counts.csv", artifacts::lang_counts_csv(activity, cfg.policy),
                 digests);
  write_artifact(out_dir, "daily_lang_counts.csv",
                 artifacts::daily_lang_counts_csv(activity, cfg.policy), digests);

  std::set<std::string> border_users;
  for (const auto& t : border_tweets) border_users.insert(t.user);

  auto matrix = social::destination_matrix(
      ctx.tweets->tweets, border_users, cfg.followup_start, cfg.followup_end, cfg.tz,
      ctx.tables->lang_groups, ctx.tables->destinations, countries ? &*countries : nullptr);
  write_artifact(out_dir, "dest_matrix.csv", artifacts::dest_matrix_csv(matrix, cfg.policy),
                 digests);
  write_artifact(
      out_dir, "social_summary.json",
      artifacts::social_summary_doc(matrix, geo_stats, und, activity, cfg.policy).dump(2) + "\n",
      digests);

  auto sets = social::follow_up_sets(ctx.tweets->tweets, border_users, cfg.followup_start,
                                     cfg.followup_end, cfg.tz, ctx.tables->lang_groups,
                                     ctx.tables->destinations, countries ? &*countries : nullptr);
  auto lang_venn = social::overlap_regions(sets.lang_masks);
  auto dest_venn = social::overlap_regions(sets.dest_masks);
  write_artifact(out_dir, "venn.json",
                 artifacts::venn_doc(lang_venn, dest_venn, cfg.policy).dump(2) + "\n", digests);
}

void stage_sentiment(Context& ctx, const fs::path& out_dir,
                     std::map<std::string, std::string>& digests) {
  const auto& cfg = ctx.cfg;
  if (cfg.lexicons.empty()) throw ConfigError("sentiment stage requires [[sentiment.lexicon]]");
  std::string tweets_path =
      cfg.sentiment_tweets_path.empty() ? cfg.tweets_path : cfg.sentiment_tweets_path;
  if (tweets_path.empty()) throw ConfigError("sentiment stage requires a tweet input");
  ingest::ParseLimits limits;
  limits.max_error_rate = cfg.max_error_rate;
  auto parsed = ingest::parse_tweets_file(tweets_path, limits);

  // Optional ingest-time hashtag predicate.
  if (!cfg.hashtags_path.empty()) {
    std::vector<std::string> tags;
    std::string text = ingest::read_file(cfg.hashtags_path);
    std::string tag;
    for (char c : text + "\n") {
      if (c == '\n' || c == '\r') {
        if (!tag.empty() && tag[0] == '#') tag.erase(0, 1);
        if (!tag.empty()) {
          std::transform(tag.begin(), tag.end(), tag.begin(), [](unsigned char ch) {
            return ch < 0x80 ? static_cast<char>(std::tolower(ch)) : static_cast<char>(ch);
          });
          tags.push_back(tag);
        }
        tag.clear();
      } else {
        tag += c;
      }
    }
    std::vector<Tweet> kept;
    for (auto& t : parsed.tweets) {
      auto tokens = sentiment::tokenize(t.text);
      bool match = false;
      for (const auto& tok : tokens) {
        if (std::find(tags.begin(), tags.end(), tok) != tags.end()) {
          match = true;
          break;
        }
      }
      if (match) kept.push_back(std::move(t));
    }
    parsed.tweets = std::move(kept);
  }

  std::map<std::string, sentiment::Lexicon> lexicons;
  for (const auto& [lang, path] : cfg.lexicons) {
    lexicons[lang] = sentiment::parse_lexicon_csv(ingest::read_file(path));
  }

  // Scoring is per-language; texts are grouped to use the parallel kernel.
  std::map<std::string, std::vector<std::size_t>> by_lang;
  for (std::size_t i = 0; i < parsed.tweets.size(); ++i) {
    const auto& lang = parsed.tweets[i].lang;
    if (lexicons.count(lang)) by_lang[lang].push_back(i);
  }
  std::vector<sentiment::ScoredItem> items;
  std::vector<std::pair<std::string, std::string>> corpora;
  for (const auto& [lang, indices] : by_lang) {
    std::vector<std::string> texts;
    texts.reserve(indices.size());
    std::string corpus;
    for (std::size_t i : indices) {
      texts.push_back(parsed.tweets[i].text);
      corpus += parsed.tweets[i].text;
      corpus += '\n';
    }
    auto scores = sentiment::score_texts(texts, lexicons.at(lang));
    for (std::size_t k = 0; k < indices.size(); ++k) {
      items.push_back({lang, parsed.tweets[indices[k]].ts, scores[k].composite});
    }
    corpora.emplace_back(lang, std::move(corpus));
  }

  auto weekly = sentiment::aggregate_scores(items, sentiment::Granularity::Weekly, cfg.tz);
  write_artifact(out_dir, "sentiment_weekly.csv",
                 artifacts::sentiment_weekly_csv(weekly, cfg.policy), digests);

  auto extremes = sentiment::extreme_word_stats(corpora, lexicons);
  write_artifact(out_dir, "extreme_words.csv", artifacts::extreme_words_csv(extremes, cfg.policy),
                 digests);
}

}  // namespace

RunResult run_pipeline(const RunConfig& cfg, std::vector<Stage> stages) {
#ifdef _OPENMP
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
#endif
  if (stages.empty()) {
    stages = {Stage::Ingest, Stage::Cohort, Stage::Mobility};
    if (!cfg.tweets_path.empty() && !cfg.fence_path.empty()) stages.push_back(Stage::Social);
    if (!cfg.lexicons.empty() &&
        !(cfg.tweets_path.empty() && cfg.sentiment_tweets_path.empty())) {
      stages.push_back(Stage::Sentiment);
    }
  }
  // Dependency order regardless of the requested order.
  std::stable_sort(stages.begin(), stages.end(),
                   [](Stage a, Stage b) { return static_cast<int>(a) < static_cast<int>(b); });
  stages.erase(std::unique(stages.begin(), stages.end()), stages.end());

  Context ctx(cfg);
  if (cfg.pseudonymize) {
    // Keys come from the environment and fail fast, before any stage runs.
    ctx.mobile_key = env_key(cfg.mobile_key_env);
    ctx.social_key = env_key(cfg.social_key_env);
    if (ctx.mobile_key.empty()) {
      throw ConfigError("pseudonymization enabled but $" + cfg.mobile_key_env + " is empty");
    }
    if (ctx.social_key.empty()) {
      throw ConfigError("pseudonymization enabled but $" + cfg.social_key_env + " is empty");
    }
    if (ctx.mobile_key == ctx.social_key) {
      throw ConfigError("mobile and social pseudonym keys must differ");
    }
  }

  fs::path out_dir(cfg.out_dir);
  fs::create_directories(out_dir);

  RunResult result;
  for (Stage stage : stages) {
    auto t0 = std::chrono::steady_clock::now();
    switch (stage) {
      case Stage::Ingest: stage_ingest(ctx, out_dir, result.output_digests); break;
      case Stage::Cohort: stage_cohort(ctx, out_dir, result.output_digests); break;
      case Stage::Mobility: stage_mobility(ctx, out_dir, result.output_digests); break;
      case Stage::Social: stage_social(ctx, out_dir, result.output_digests); break;
      case Stage::Sentiment: stage_sentiment(ctx, out_dir, result.output_digests); break;
    }
    auto t1 = std::chrono::steady_clock::now();
    result.timings.push_back(
        {to_string(stage), std::chrono::duration<double, std::milli>(t1 - t0).count()});
  }

  {
    json policy_doc;
    policy_doc["k"] = cfg.policy.k;
    policy_doc["spatial_floor"] = privacy::to_string(cfg.policy.spatial_floor);
    write_artifact(out_dir, "policy.json", policy_doc.dump(2) + "\n", result.output_digests);
  }

  auto violations = privacy::scan_outputs(cfg.out_dir, cfg.policy);
  if (!violations.empty()) {
    std::string msg = "privacy scan failed with " + std::to_string(violations.size()) +
                      " violation(s); first: " + violations.front();
    throw PrivacyError(msg);
  }

  {
    json manifest;
    manifest["config_digest"] =
        cfg.config_path.empty() ? "" : sha256_file_hex(cfg.config_path);
    json inputs = json::object();
    for (const std::string& path :
         {cfg.xdr_path, cfg.cells_path, cfg.subscribers_path, cfg.visa_policy_path,
          cfg.lang_groups_path, cfg.destinations_path, cfg.tweets_path, cfg.fence_path,
          cfg.countries_path, cfg.sentiment_tweets_path, cfg.hashtags_path}) {
      if (!path.empty() && fs::exists(path)) inputs[path] = sha256_file_hex(path);
    }
    manifest["inputs"] = std::move(inputs);
    json timings = json::array();
    for (const auto& t : result.timings) timings.push_back({{"name", t.name}, {"ms", t.ms}});
    manifest["stages"] = std::move(timings);
    json outputs = json::object();
    for (const auto& [name, digest] : result.output_digests) outputs[name] = digest;
    manifest["outputs"] = std::move(outputs);
#ifdef _OPENMP
    manifest["threads"] = omp_get_max_threads();
#else
    manifest["threads"] = 1;
#endif
    std::ofstream out(out_dir / "run_manifest.json", std::ios::binary);
    out << manifest.dump(2) << "\n";
  }
  return result;
}

}  // namespace bflux::pipeline
