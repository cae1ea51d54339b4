#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "borderflux/error.hpp"
#include "borderflux/pipeline.hpp"
#include "borderflux/synth.hpp"

using namespace bflux;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct PipelineFixture {
  fs::path root;
  fs::path world;
  fs::path out;
  fs::path config_path;

  explicit PipelineFixture(const std::string& tag, std::uint32_t k = 2) {
    root = fs::temp_directory_path() / ("bflux_pipe_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(root);
    world = root / "world";
    out = root / "out";
    fs::create_directories(world);

    synth::SynthConfig cfg;
    cfg.seed = 77;
    cfg.horizon = {make_date(2020, 2, 25), make_date(2020, 4, 10)};
    cfg.provinces = {{"EDI", 3}, {"KLR", 2}, {"IST", 5}, {"ANK", 3}};
    cfg.groups = {
        {"SYR", MobilityClass::Visa, 120, "IST", 2.0, 1},
        {"AFG", MobilityClass::Visa, 60, "ANK", 2.0, 1},
        {"GRC", MobilityClass::NoVisa, 40, "EDI", 2.0, 1},
        {"TUR", MobilityClass::NoVisa, 30, "IST", 2.0, 1},
    };
    cfg.injections = {
        {synth::InjectKind::Surge, make_date(2020, 2, 28), {"SYR", "AFG"}, 120, "EDI"},
        {synth::InjectKind::Disappear, make_date(2020, 3, 10), {"SYR"}, 60, ""},
    };
    synth::TweetConfig tw;
    tw.users = 80;
    tw.period_start = make_date(2020, 2, 25);
    tw.period_end = make_date(2020, 3, 25);
    tw.followup_start = make_date(2020, 4, 1);
    tw.followup_end = make_date(2020, 4, 10);
    tw.tweets_per_user = 6;
    tw.followup_tweets_per_user = 5;
    tw.und_fraction = 0.1;
    tw.followup_fraction = 0.75;
    tw.lang_groups = {{"tr", LangGroup::Turkish}, {"en", LangGroup::NoVisa},
                      {"ar", LangGroup::Visa}};
    tw.destinations = {{"TUR", Destination::Turkey}, {"DEU", Destination::Europe},
                       {"USA", Destination::Other}};
    tw.mixtures = {{{"tr"}, 2.0, {"TUR"}},
                   {{"ar", "tr"}, 1.0, {"TUR", "DEU"}},
                   {{"en", "tr", "ar"}, 1.0, {"TUR", "DEU", "USA"}}};
    cfg.tweets = tw;
    synth::generate_all(cfg, world.string());

    fs::path lexicon = root / "lexicon.csv";
    std::ofstream lex(lexicon);
    lex << "token,kind,value\nlove,term,3\nhate,term,-4\ngreat,term,5\nawful,term,-5\n"
           "very,booster,1\nnot,negator,\n";
    lex.close();

    std::ofstream cfg_out(root / "pipeline.toml");
    cfg_out << "[inputs]\n"
            << "xdr = \"world/xdr.csv\"\n"
            << "cells = \"world/cells.csv\"\n"
            << "subscribers = \"world/subscribers.csv\"\n"
            << "visa_policy = \"world/visa_policy.csv\"\n"
            << "lang_groups = \"world/lang_groups.csv\"\n"
            << "destinations = \"world/destinations.csv\"\n"
            << "tweets = \"world/tweets.ndjson\"\n"
            << "fence = \"world/fence.geojson\"\n"
            << "[cohort]\n"
            << "border_provinces = [\"EDI\", \"KLR\"]\n"
            << "window_start = \"2020-02-25\"\n"
            << "window_end = \"2020-03-25\"\n"
            << "top_k = 20\n"
            << "[mobility]\n"
            << "horizon_start = \"2020-02-28\"\n"
            << "horizon_end = \"2020-04-10\"\n"
            << "utc_offset = \"+03:00\"\n"
            << "drops_top_n = 1\n"
            << "[social]\n"
            << "period_start = \"2020-02-25\"\n"
            << "period_end = \"2020-03-25\"\n"
            << "followup_start = \"2020-04-01\"\n"
            << "followup_end = \"2020-04-10\"\n"
            << "[sentiment]\n"
            << "[[sentiment.lexicon]]\n"
            << "lang = \"tr\"\n"
            << "path = \"lexicon.csv\"\n"
            << "[[sentiment.lexicon]]\n"
            << "lang = \"en\"\n"
            << "path = \"lexicon.csv\"\n"
            << "[privacy]\n"
            << "k = " << k << "\n"
            << "[output]\n"
            << "dir = \"out\"\n";
    cfg_out.close();
    config_path = root / "pipeline.toml";
  }

  ~PipelineFixture() { fs::remove_all(root); }
};

}  // namespace

TEST_CASE("full pipeline run writes every artifact and passes the scan") {
  PipelineFixture fix("full");
  auto cfg = pipeline::load_run_config(fix.config_path.string());
  auto result = pipeline::run_pipeline(cfg);
  for (const char* name :
       {"ingest_report.json", "cohort.csv", "group_timeseries.csv", "province_counts.csv",
        "flows.json", "antenna_counts.csv", "drops.csv", "estimates.json", "lang_counts.csv",
        "daily_lang_counts.csv", "dest_matrix.csv", "venn.json", "social_summary.json",
        "sentiment_weekly.csv", "extreme_words.csv", "policy.json"}) {
    INFO(name);
    CHECK(fs::exists(fix.out / name));
    CHECK(result.output_digests.count(name) == 1);
  }
  CHECK(fs::exists(fix.out / "run_manifest.json"));
  CHECK(privacy::scan_outputs(fix.out.string(), cfg.policy).empty());

  // Stage timings recorded in order.
  REQUIRE(result.timings.size() == 5);
  CHECK(result.timings[0].name == "ingest");
  CHECK(result.timings[4].name == "sentiment");
}

TEST_CASE("reruns and thread counts do not change output digests") {
  PipelineFixture fix("determinism");
  auto cfg = pipeline::load_run_config(fix.config_path.string());
  cfg.threads = 1;
  auto first = pipeline::run_pipeline(cfg);
  cfg.threads = 2;
  auto second = pipeline::run_pipeline(cfg);
  CHECK(first.output_digests == second.output_digests);
}

TEST_CASE("mobility without cohort outputs fails with MISSING_STAGE") {
  PipelineFixture fix("missing");
  auto cfg = pipeline::load_run_config(fix.config_path.string());
  try {
    pipeline::run_pipeline(cfg, {pipeline::Stage::Mobility});
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()) == "MISSING_STAGE:cohort");
  }
  // With cohort outputs present, the mobility stage runs alone.
  pipeline::run_pipeline(cfg, {pipeline::Stage::Cohort});
  pipeline::run_pipeline(cfg, {pipeline::Stage::Mobility});
  CHECK(fs::exists(fix.out / "group_timeseries.csv"));
}

TEST_CASE("pseudonymization rewrites ids and keeps joins intact") {
  PipelineFixture fix("pseudo");
  auto cfg = pipeline::load_run_config(fix.config_path.string());
  cfg.pseudonymize = true;

  SUBCASE("missing keys are fatal before any stage runs") {
    ::unsetenv(cfg.mobile_key_env.c_str());
    ::unsetenv(cfg.social_key_env.c_str());
    CHECK_THROWS_AS(pipeline::run_pipeline(cfg, {pipeline::Stage::Cohort}), ConfigError);
  }
  SUBCASE("identical keys are rejected") {
    ::setenv(cfg.mobile_key_env.c_str(), "same", 1);
    ::setenv(cfg.social_key_env.c_str(), "same", 1);
    CHECK_THROWS_AS(pipeline::run_pipeline(cfg, {pipeline::Stage::Cohort}), ConfigError);
  }
  SUBCASE("cohort audit file carries 32-hex pseudonyms only") {
    ::setenv(cfg.mobile_key_env.c_str(), "mobile-secret", 1);
    ::setenv(cfg.social_key_env.c_str(), "social-secret", 1);
    pipeline::run_pipeline(cfg, {pipeline::Stage::Cohort});
    std::string cohort_csv = slurp(fix.out / "cohort.csv");
    CHECK(cohort_csv.find("s00000") == std::string::npos);  // raw ids absent
    // Same run with the same key is stable.
    auto again = pipeline::run_pipeline(cfg, {pipeline::Stage::Cohort});
    CHECK(slurp(fix.out / "cohort.csv") == cohort_csv);
    ::unsetenv(cfg.mobile_key_env.c_str());
    ::unsetenv(cfg.social_key_env.c_str());
  }
}

TEST_CASE("stage parsing rejects unknown stages") {
  CHECK(pipeline::parse_stages("ingest,cohort").size() == 2);
  CHECK(pipeline::parse_stages("").empty());
  CHECK_THROWS_AS(pipeline::parse_stages("ingest,flows"), ConfigError);
}

TEST_CASE("config errors carry file and line context") {
  PipelineFixture fix("badcfg");
  std::ofstream bad(fix.root / "bad.toml");
  bad << "[inputs\n";
  bad.close();
  try {
    pipeline::load_run_config((fix.root / "bad.toml").string());
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("bad.toml:1") != std::string::npos);
  }
}
