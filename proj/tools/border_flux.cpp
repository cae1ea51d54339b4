#include <cstdio>
#include <exception>
#include <functional>
#include <string>

#include <CLI11.hpp>

#include "borderflux/error.hpp"
#include "borderflux/pipeline.hpp"
#include "borderflux/serve.hpp"
#include "borderflux/synth.hpp"

namespace {

// Exit codes: 0 success, 1 config error, 2 data error, 3 privacy-scan
// failure.
int guarded(const std::function<void()>& fn) {
  try {
    fn();
    return 0;
  } catch (const bflux::PrivacyError& e) {
    std::fprintf(stderr, "privacy error: %s\n", e.what());
    return 3;
  } catch (const bflux::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const bflux::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

void run_stages(const std::string& config_path, const std::string& stages, int threads) {
  auto cfg = bflux::pipeline::load_run_config(config_path);
  if (threads > 0) cfg.threads = threads;
  auto result = bflux::pipeline::run_pipeline(cfg, bflux::pipeline::parse_stages(stages));
  for (const auto& t : result.timings) {
    std::printf("%-10s %10.1f ms\n", t.name.c_str(), t.ms);
  }
  std::printf("outputs: %zu artifacts in %s\n", result.output_digests.size(),
              cfg.out_dir.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"border-flux: mobility and social-media indicator pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string stages;
  int threads = 0;

  auto* synth = app.add_subcommand("synth", "generate a synthetic world with ground truth");
  synth->add_option("--config", config_path, "synth TOML config")->required();
  synth->add_option("--out", out_dir, "output directory")->required();

  auto add_stage_cmd = [&](const char* name, const char* help) {
    auto* cmd = app.add_subcommand(name, help);
    cmd->add_option("--config", config_path, "pipeline TOML config")->required();
    cmd->add_option("--threads", threads, "worker threads (0 = default)");
    return cmd;
  };
  auto* ingest = add_stage_cmd("ingest", "parse and validate all inputs");
  auto* cohort = add_stage_cmd("cohort", "select the border cohort");
  auto* mobility = add_stage_cmd("mobility", "placements, flows, drops, estimates");
  auto* social = add_stage_cmd("social", "geofiltered language and destination indicators");
  auto* sentiment = add_stage_cmd("sentiment", "lexicon sentiment aggregates");

  auto* run = app.add_subcommand("run", "run pipeline stages in dependency order");
  run->add_option("--config", config_path, "pipeline TOML config")->required();
  run->add_option("--stages", stages, "comma-separated subset (default: all)");
  run->add_option("--threads", threads, "worker threads (0 = default)");

  bflux::serve::ServeOptions serve_options;
  auto* serve = app.add_subcommand("serve", "aggregate query service over a finished run");
  serve->add_option("--store", serve_options.store_dir, "run output directory")->required();
  serve->add_option("--port", serve_options.port, "listen port");
  serve->add_option("--host", serve_options.host, "bind address");
  serve->add_option("--token", serve_options.token, "static bearer token");

  CLI11_PARSE(app, argc, argv);

  if (synth->parsed()) {
    return guarded([&] {
      auto cfg = bflux::synth::load_config(config_path);
      bflux::synth::generate_all(cfg, out_dir);
      std::printf("world written to %s\n", out_dir.c_str());
    });
  }
  for (auto* cmd : {ingest, cohort, mobility, social, sentiment}) {
    if (cmd->parsed()) {
      return guarded([&] { run_stages(config_path, cmd->get_name(), threads); });
    }
  }
  if (run->parsed()) {
    return guarded([&] { run_stages(config_path, stages, threads); });
  }
  if (serve->parsed()) {
    return guarded([&] {
      int rc = bflux::serve::run_server(serve_options);
      if (rc != 0) throw bflux::ConfigError("server failed to start");
    });
  }
  return 0;
}
