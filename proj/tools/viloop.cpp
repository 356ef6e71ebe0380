// SPDX-License-Identifier: Apache-2.0
//
// viloop: vehicle-in-the-loop digital twin simulator.
//
//   viloop --mode bridge --scenario scenarios/corridor.json
//   viloop --mode internal --scenario scenarios/corridor.json --cmd-file cmds.csv --ticks 200
//   viloop --mode rlenv --seed 7 --episodes 3 --export-dir out
//   viloop validate scenarios/hospital.json

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <random>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "viloop/app.hpp"
#include "viloop/error.hpp"
#include "viloop/scenario.hpp"

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

void configure_logging() {
  spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* level = std::getenv("VILOOP_LOG")) {
    const auto parsed = spdlog::level::from_str(level);
    // from_str maps unknown names to "off"; only honour an explicit "off".
    if (parsed != spdlog::level::off || std::string(level) == "off") spdlog::set_level(parsed);
  }
}

int exit_code(viloop::Errc code) {
  switch (code) {
    case viloop::Errc::IoError: return 3;
    default: return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();

  CLI::App app{"Vehicle-in-the-loop digital twin simulator"};
  app.require_subcommand(0, 1);

  viloop::RunConfig cfg;
  std::string mode = "bridge";
  std::string clock = "auto";
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> ticks;
  app.add_option("--mode", mode, "Run mode")
      ->check(CLI::IsMember({"bridge", "internal", "rlenv"}))
      ->capture_default_str();
  app.add_option("--scenario", cfg.scenario_path, "Scenario JSON file");
  app.add_option("--host", cfg.host, "Listen address")->capture_default_str();
  app.add_option("--port", cfg.port, "Listen port")->capture_default_str();
  app.add_option("--seed", seed, "Base seed (default: fresh entropy, always logged)");
  app.add_option("--export-dir", cfg.export_dir, "Directory for CSV exports");
  app.add_option("--ticks", ticks, "Stop after this many simulation ticks");
  app.add_option("--episodes", cfg.episodes, "Episodes in rlenv mode")->capture_default_str();
  app.add_option("--cmd-file", cfg.cmd_file,
                 "Internal mode: replay a t,v,w velocity script in lockstep");
  app.add_option("--clock", clock, "Timestamp source for timing exports")
      ->check(CLI::IsMember({"auto", "steady", "virtual"}))
      ->capture_default_str();

  auto* validate = app.add_subcommand("validate", "Check a scenario file and print a JSON report");
  std::filesystem::path validate_path;
  validate->add_option("scenario", validate_path, "Scenario JSON file")->required();

  CLI11_PARSE(app, argc, argv);

  if (*validate) {
    const viloop::ValidationReport report = viloop::validate_scenario(validate_path);
    std::cout << report.to_json().dump(2) << '\n';
    return report.ok() ? 0 : 1;
  }

  cfg.mode = *viloop::mode_from_string(mode);
  cfg.clock = clock == "steady"    ? viloop::ClockKind::Steady
              : clock == "virtual" ? viloop::ClockKind::Virtual
                                   : viloop::ClockKind::Auto;
  cfg.seed = seed ? *seed : std::random_device{}() ^ (std::uint64_t{std::random_device{}()} << 32);
  cfg.ticks = ticks;

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  try {
    return viloop::run(cfg, g_stop);
  } catch (const viloop::Error& e) {
    spdlog::error("{}", e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}
