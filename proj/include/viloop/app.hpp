// SPDX-License-Identifier: Apache-2.0
//
// Run modes wiring the library modules together. The CLI is a thin shell
// around these; tests drive them directly.
#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "viloop/bridge/client.hpp"
#include "viloop/bridge/server.hpp"
#include "viloop/kinematics.hpp"
#include "viloop/orchestrator.hpp"
#include "viloop/rlenv.hpp"
#include "viloop/scenario.hpp"

namespace viloop {

enum class Mode { Bridge, Internal, RlEnv };
enum class ClockKind { Auto, Steady, Virtual };

const char* to_string(Mode m) noexcept;
std::optional<Mode> mode_from_string(const std::string& s) noexcept;

struct RunConfig {
  Mode mode = Mode::Bridge;
  std::filesystem::path scenario_path;
  std::string host = "127.0.0.1";
  std::uint16_t port = bridge::kDefaultPort;
  std::uint64_t seed = 0;
  std::filesystem::path export_dir;  // empty: no exports
  std::optional<std::uint64_t> ticks;
  std::uint64_t episodes = 1;
  std::filesystem::path cmd_file;  // internal mode: lockstep replay, no bridge
  ClockKind clock = ClockKind::Auto;

  // Throws Error(ConfigError) when a mode-specific field is missing.
  void validate() const;
};

// Piecewise-constant velocity script: each knot holds from its time on.
struct CommandKnot {
  double t = 0.0;
  double v = 0.0;
  double w = 0.0;
};

// CSV with header "t,v,w"; times strictly increasing. Throws
// Error(ConfigError) or Error(IoError).
std::vector<CommandKnot> parse_command_script(std::istream& in, const std::string& origin);
std::vector<CommandKnot> load_command_script(const std::filesystem::path& path);
// Command in force at time t; (0, 0) before the first knot.
CommandKnot command_at(const std::vector<CommandKnot>& script, double t);

// Resets the session with `seed`, then feeds `ticks` poses from the internal
// robot (tick 0 is the resting start pose) driven by `script`. Returns the
// robot states, one per pose.
std::vector<UnicycleState> run_internal_lockstep(Session& session, const RobotConfig& robot,
                                                 const std::vector<CommandKnot>& script,
                                                 std::uint64_t seed, std::uint64_t ticks);

// Writes timing.csv and trajectory.csv.
void export_session(const Session& session, const std::filesystem::path& dir);

// Episodes with seeds seed, seed+1, ... under the built-in heuristic policy.
std::vector<Transcript> run_rlenv(const EnvConfig& cfg, std::uint64_t seed,
                                  std::uint64_t episodes);
// Writes transcript_seed<seed>.csv per episode.
void export_transcripts(const std::vector<Transcript>& transcripts,
                        const std::filesystem::path& dir);

// Orchestrator behind the TCP bridge. A simulation thread owns the Session
// and consumes the event queue fed by the standard input topics.
class BridgeRuntime {
 public:
  BridgeRuntime(Scenario scenario, bridge::ServerConfig server, Clock clock,
                std::uint64_t base_seed);
  ~BridgeRuntime();

  void start();
  // Stops the server and the simulation thread.
  void stop();
  std::uint16_t port() const { return server_.port(); }
  bridge::Server& server() { return server_; }

  std::uint64_t ticks() const { return ticks_.load(); }
  std::uint64_t queue_overflows() const { return queue_.overflow_drops(); }
  // Only valid after stop().
  const Session& session() const { return session_; }

 private:
  void sim_loop();
  void publish(const Output& out, double stamp);

  bridge::Server server_;
  Session session_;
  Clock clock_;
  EventQueue queue_;
  std::thread sim_;
  std::atomic<std::uint64_t> ticks_{0};
  bool started_ = false;
};

// Internal kinematic robot as a bridge client: consumes /cmd_vel, publishes
// /odom at the configured rate from its own timer thread.
class InternalRobot {
 public:
  InternalRobot(RobotConfig cfg, std::string host, std::uint16_t port);
  ~InternalRobot();
  void start();
  void stop();
  UnicycleState state() const;

 private:
  void loop();

  RobotConfig cfg_;
  std::string host_;
  std::uint16_t port_;
  std::unique_ptr<bridge::Client> client_;
  mutable std::mutex mutex_;
  UnicycleState state_;
  double v_ = 0.0;
  double w_ = 0.0;
  std::atomic<bool> running_{false};
  std::thread thread_;
};

struct LoopbackReport {
  std::uint64_t ticks = 0;
  std::uint64_t resets = 0;
  TimingSummary server;      // render and receive->publish, from the session
  DurationStats round_trip;  // client send -> last sensor message received
  std::vector<TickTiming> timing_log;
  std::vector<double> round_trip_ms;  // per tick
};

// End-to-end run over a loopback socket: a client streams `ticks` poses of a
// scripted kinematic robot in lockstep, waiting for each tick's last sensor
// message, and resets after every collision.
LoopbackReport run_loopback(const Scenario& scenario, std::uint64_t seed, std::uint64_t ticks,
                            double threshold_ms = 100.0);

// Entry point used by the CLI. Returns the process exit code. `stop` is
// polled by long-running modes.
int run(const RunConfig& cfg, const std::atomic<bool>& stop);

}  // namespace viloop
