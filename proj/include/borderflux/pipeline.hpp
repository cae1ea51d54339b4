#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "borderflux/cohort.hpp"
#include "borderflux/privacy.hpp"
#include "borderflux/time.hpp"

namespace bflux::pipeline {

enum class Stage { Ingest, Cohort, Mobility, Social, Sentiment };

const char* to_string(Stage s);
std::vector<Stage> parse_stages(const std::string& comma_list);  // throws ConfigError

struct RunConfig {
  std::string config_path;  // for the config digest in the run manifest

  // [inputs] — paths resolved relative to the config file.
  std::string xdr_path;
  std::string cells_path;
  std::string subscribers_path;
  std::string visa_policy_path;
  std::string lang_groups_path;
  std::string destinations_path;
  std::string tweets_path;     // optional; social stage input
  std::string fence_path;      // required by the social stage
  std::string countries_path;  // optional coordinate->country table
  double max_error_rate = 0.01;

  cohort::CohortSpec cohort;

  // [mobility]
  Horizon horizon{make_date(2020, 2, 28), make_date(2020, 6, 15)};
  UtcOffset tz{};
  bool backfill = true;
  privacy::SpatialFloor granularity = privacy::SpatialFloor::Province;
  int antenna_bucket_minutes = 60;
  Date flow_a{};
  Date flow_b{};
  std::vector<Date> count_dates;  // default: horizon start and end
  std::optional<double> drops_theta;
  std::optional<int> drops_top_n;  // default 3 when theta absent
  double est_share = 0.5;
  double est_churn_floor = 0.5;

  // [social]
  Date social_start{};
  Date social_end{};
  Date followup_start{};
  Date followup_end{};

  // [sentiment]
  std::string sentiment_tweets_path;                        // default: tweets_path
  std::vector<std::pair<std::string, std::string>> lexicons;  // (lang, path)
  std::string hashtags_path;                                // optional filter list

  // [privacy]
  privacy::PrivacyPolicy policy;
  bool pseudonymize = false;
  std::string mobile_key_env = "BORDERFLUX_MOBILE_KEY";
  std::string social_key_env = "BORDERFLUX_SOCIAL_KEY";

  std::string out_dir = "out";
  int threads = 0;  // 0 = runtime default
};

RunConfig load_run_config(const std::string& path);

struct StageTiming {
  std::string name;
  double ms = 0;
};

struct RunResult {
  std::vector<StageTiming> timings;
  std::map<std::string, std::string> output_digests;
};

// Executes the requested stages (all when empty) in dependency order,
// writes artifacts into cfg.out_dir, runs the privacy scan, and writes
// run_manifest.json. Throws PrivacyError when any published cell violates
// the policy; the run is only successful when the scan is clean.
RunResult run_pipeline(const RunConfig& cfg, std::vector<Stage> stages = {});

}  // namespace bflux::pipeline
