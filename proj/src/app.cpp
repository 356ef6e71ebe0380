// SPDX-License-Identifier: Apache-2.0
#include "viloop/app.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "viloop/bridge/messages.hpp"
#include "viloop/bridge/topics.hpp"
#include "viloop/error.hpp"

namespace viloop {

namespace topic = bridge::topic;
using bridge::json;

const char* to_string(Mode m) noexcept {
  switch (m) {
    case Mode::Bridge: return "bridge";
    case Mode::Internal: return "internal";
    case Mode::RlEnv: return "rlenv";
  }
  return "bridge";
}

std::optional<Mode> mode_from_string(const std::string& s) noexcept {
  if (s == "bridge") return Mode::Bridge;
  if (s == "internal") return Mode::Internal;
  if (s == "rlenv") return Mode::RlEnv;
  return std::nullopt;
}

void RunConfig::validate() const {
  if (mode != Mode::RlEnv && scenario_path.empty()) {
    throw Error(Errc::ConfigError, std::string("--scenario is required in ") + to_string(mode) +
                                       " mode");
  }
  if (!cmd_file.empty() && mode != Mode::Internal) {
    throw Error(Errc::ConfigError, "--cmd-file only applies to internal mode");
  }
  if (!cmd_file.empty() && !ticks) {
    throw Error(Errc::ConfigError, "--cmd-file requires --ticks");
  }
  if (mode == Mode::RlEnv && episodes == 0) {
    throw Error(Errc::ConfigError, "--episodes must be positive");
  }
}

std::vector<CommandKnot> parse_command_script(std::istream& in, const std::string& origin) {
  std::vector<CommandKnot> out;
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line != "t,v,w") {
        throw Error(Errc::ConfigError, origin + ":" + std::to_string(lineno) +
                                           ": expected header \"t,v,w\"");
      }
      header = true;
      continue;
    }
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    CommandKnot k;
    std::string extra;
    if (!(fields >> k.t >> k.v >> k.w) || (fields >> extra) || !std::isfinite(k.t) ||
        !std::isfinite(k.v) || !std::isfinite(k.w)) {
      throw Error(Errc::ConfigError, origin + ":" + std::to_string(lineno) + ": bad row");
    }
    if (!out.empty() && k.t <= out.back().t) {
      throw Error(Errc::ConfigError,
                  origin + ":" + std::to_string(lineno) + ": times must increase");
    }
    out.push_back(k);
  }
  if (!header) throw Error(Errc::ConfigError, origin + ": empty command script");
  return out;
}

std::vector<CommandKnot> load_command_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot read command script " + path.string());
  return parse_command_script(in, path.string());
}

CommandKnot command_at(const std::vector<CommandKnot>& script, double t) {
  auto it = std::upper_bound(script.begin(), script.end(), t,
                             [](double time, const CommandKnot& k) { return time < k.t; });
  if (it == script.begin()) return {t, 0.0, 0.0};
  return *std::prev(it);
}

std::vector<UnicycleState> run_internal_lockstep(Session& session, const RobotConfig& robot,
                                                 const std::vector<CommandKnot>& script,
                                                 std::uint64_t seed, std::uint64_t ticks) {
  const double dt = 1.0 / robot.rate_hz;
  session.on_reset(seed);
  std::vector<UnicycleState> states;
  states.reserve(ticks);
  UnicycleState state;
  for (std::uint64_t k = 0; k < ticks; ++k) {
    if (k > 0) {
      const CommandKnot cmd = command_at(script, state.time);
      state = integrate(apply_command(state, cmd.v, cmd.w, robot.limits), dt);
    }
    states.push_back(state);
    session.on_pose(emit_pose(state));
  }
  return states;
}

namespace {

std::ofstream open_export(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  return out;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

void export_session(const Session& session, const std::filesystem::path& dir) {
  ensure_dir(dir);
  auto timing = open_export(dir / "timing.csv");
  session.write_timing_csv(timing);
  auto trajectory = open_export(dir / "trajectory.csv");
  session.write_trajectory_csv(trajectory);
  if (!timing || !trajectory) throw Error(Errc::IoError, "failed writing exports in " + dir.string());
}

std::vector<Transcript> run_rlenv(const EnvConfig& cfg, std::uint64_t seed,
                                  std::uint64_t episodes) {
  std::vector<Transcript> out;
  CorridorEnv env(cfg);
  const HeuristicPolicy policy;
  for (std::uint64_t i = 0; i < episodes; ++i) {
    out.push_back(run_episode(env, policy, seed + i));
  }
  return out;
}

void export_transcripts(const std::vector<Transcript>& transcripts,
                        const std::filesystem::path& dir) {
  ensure_dir(dir);
  for (const auto& t : transcripts) {
    const auto path = dir / ("transcript_seed" + std::to_string(t.seed) + ".csv");
    auto out = open_export(path);
    t.write_csv(out);
    if (!out) throw Error(Errc::IoError, "failed writing " + path.string());
  }
}

BridgeRuntime::BridgeRuntime(Scenario scenario, bridge::ServerConfig server, Clock clock,
                             std::uint64_t base_seed)
    : server_(std::move(server)),
      session_(std::move(scenario.scene), scenario.sensors, clock),
      clock_(std::move(clock)) {
  session_.set_base_seed(base_seed);
  session_.set_warning_handler([](const std::string& m) { spdlog::warn("{}", m); });
  server_.set_log_handler([](const std::string& m) { spdlog::debug("bridge: {}", m); });

  server_.local_subscribe(topic::kOdom, [this](const bridge::Envelope& e) {
    const std::int64_t received = clock_();
    try {
      queue_.push(PoseEvent{bridge::odom_from_json(e.msg, e.seq, e.stamp), received});
    } catch (const Error& err) {
      spdlog::warn("dropping malformed {} message: {}", e.topic, err.what());
    }
  });
  auto flag = [](const bridge::Envelope& e) {
    try {
      return bridge::bool_from_json(e.msg);
    } catch (const Error& err) {
      spdlog::warn("dropping malformed {} message: {}", e.topic, err.what());
      return false;
    }
  };
  server_.local_subscribe(topic::kReset, [this, flag](const bridge::Envelope& e) {
    if (!flag(e)) return;
    ResetEvent r;
    if (auto it = e.msg.find("seed"); it != e.msg.end() && it->is_number_unsigned()) {
      r.seed = it->get<std::uint64_t>();
    }
    queue_.push(r);
  });
  server_.local_subscribe(topic::kPause, [this, flag](const bridge::Envelope& e) {
    if (flag(e)) queue_.push(PauseEvent{});
  });
  server_.local_subscribe(topic::kResume, [this, flag](const bridge::Envelope& e) {
    if (flag(e)) queue_.push(ResumeEvent{});
  });
}

BridgeRuntime::~BridgeRuntime() { stop(); }

void BridgeRuntime::start() {
  server_.start();
  sim_ = std::thread([this] { sim_loop(); });
  started_ = true;
}

void BridgeRuntime::stop() {
  if (!started_) return;
  started_ = false;
  server_.stop();
  queue_.close();
  if (sim_.joinable()) sim_.join();
}

void BridgeRuntime::publish(const Output& out, double stamp) {
  std::visit(
      [&](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, DigitalPose>) {
          json msg = bridge::pose_to_json(o.pose);
          msg["tick"] = o.tick;
          server_.local_publish(topic::kPoseDigital, std::move(msg), stamp);
        } else if constexpr (std::is_same_v<T, CollisionReport>) {
          server_.local_publish(topic::kCollision, bridge::collision_to_json(o), stamp);
        } else if constexpr (std::is_same_v<T, LidarScan>) {
          server_.local_publish(topic::kLidar, bridge::lidar_to_json(o), stamp);
        } else {
          server_.local_publish(topic::kCameraDepth, bridge::depth_to_json(o), stamp);
          server_.local_publish(topic::kCameraSemantic, bridge::semantic_to_json(o), stamp);
        }
      },
      out);
}

void BridgeRuntime::sim_loop() {
  while (auto event = queue_.pop()) {
    double stamp = 0.0;
    if (const auto* pose = std::get_if<PoseEvent>(&*event)) stamp = pose->sample.stamp;
    try {
      session_.handle(*event, [&](const Output& out) { publish(out, stamp); });
    } catch (const Error& err) {
      spdlog::error("event rejected: {}", err.what());
    }
    ticks_ = session_.state().tick_count;
  }
}

InternalRobot::InternalRobot(RobotConfig cfg, std::string host, std::uint16_t port)
    : cfg_(std::move(cfg)), host_(std::move(host)), port_(port) {}

InternalRobot::~InternalRobot() { stop(); }

void InternalRobot::start() {
  client_ = std::make_unique<bridge::Client>();
  client_->connect(host_, port_);
  client_->subscribe(topic::kCmdVel, [this](const bridge::Envelope& e) {
    try {
      const bridge::Twist t = bridge::twist_from_json(e.msg);
      std::lock_guard lock(mutex_);
      v_ = t.linear_x;
      w_ = t.angular_z;
    } catch (const Error& err) {
      spdlog::warn("ignoring malformed /cmd_vel: {}", err.what());
    }
  });
  client_->advertise(topic::kOdom, "pose");
  running_ = true;
  thread_ = std::thread([this] { loop(); });
}

void InternalRobot::stop() {
  running_ = false;
  if (thread_.joinable()) thread_.join();
  if (client_) client_->close();
}

UnicycleState InternalRobot::state() const {
  std::lock_guard lock(mutex_);
  return state_;
}

void InternalRobot::loop() {
  const double dt = 1.0 / cfg_.rate_hz;
  const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(dt));
  auto next = std::chrono::steady_clock::now();
  bool first = true;
  while (running_) {
    PoseSample sample;
    {
      std::lock_guard lock(mutex_);
      if (!first) {
        try {
          state_ = integrate(apply_command(state_, v_, w_, cfg_.limits), dt);
        } catch (const Error& err) {
          spdlog::warn("internal robot: {}", err.what());
        }
      }
      sample = emit_pose(state_);
    }
    first = false;
    try {
      client_->publish(topic::kOdom, bridge::odom_to_json(sample), sample.stamp);
    } catch (const Error& err) {
      spdlog::error("internal robot lost the bridge: {}", err.what());
      return;
    }
    next += period;
    std::this_thread::sleep_until(next);
  }
}

LoopbackReport run_loopback(const Scenario& scenario, std::uint64_t seed, std::uint64_t ticks,
                            double threshold_ms) {
  bridge::ServerConfig server;
  server.port = 0;
  BridgeRuntime runtime(scenario, server, steady_clock(), seed);
  runtime.start();

  const std::string last_topic = scenario.sensors.camera_enabled  ? topic::kCameraSemantic
                                 : scenario.sensors.lidar_enabled ? topic::kLidar
                                                                  : topic::kCollision;
  std::mutex mutex;
  std::condition_variable cv;
  bool tick_done = false;
  bool collided = false;
  auto finish = [&](bool hit) {
    {
      std::lock_guard lock(mutex);
      tick_done = true;
      collided = hit;
    }
    cv.notify_one();
  };

  bridge::Client client;
  client.connect("127.0.0.1", runtime.port());
  client.subscribe(topic::kCollision, [&](const bridge::Envelope& e) {
    const bool hit = e.msg.value("collided", false);
    if (hit || last_topic == topic::kCollision) finish(hit);
  });
  if (last_topic != topic::kCollision) {
    client.subscribe(last_topic, [&](const bridge::Envelope&) { finish(false); });
  }

  LoopbackReport report;
  std::uint64_t next_seed = seed;
  client.publish(topic::kReset, {{"data", true}, {"seed", next_seed++}});
  report.resets = 1;

  const double dt = 1.0 / scenario.robot.rate_hz;
  UnicycleState state;
  std::vector<double> rtt;
  rtt.reserve(ticks);
  for (std::uint64_t k = 0; k < ticks; ++k) {
    if (k > 0) {
      const double w = 0.4 * std::sin(0.05 * static_cast<double>(k));
      state = integrate(apply_command(state, 0.6, w, scenario.robot.limits), dt);
    }
    const PoseSample sample = emit_pose(state);
    const auto t0 = std::chrono::steady_clock::now();
    {
      std::lock_guard lock(mutex);
      tick_done = false;
    }
    client.publish(topic::kOdom, bridge::odom_to_json(sample), sample.stamp);
    bool hit = false;
    {
      std::unique_lock lock(mutex);
      if (!cv.wait_for(lock, std::chrono::seconds(30), [&] { return tick_done; })) {
        throw Error(Errc::ConnectionLost, "loopback tick " + std::to_string(k) + " timed out");
      }
      hit = collided;
    }
    rtt.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count());
    if (hit) {
      client.publish(topic::kReset, {{"data", true}, {"seed", next_seed++}});
      ++report.resets;
    }
  }
  client.close();
  runtime.stop();

  report.ticks = runtime.session().state().tick_count;
  report.server = runtime.session().timing_summary(threshold_ms);
  report.round_trip = summarize(rtt, threshold_ms);
  report.timing_log = runtime.session().state().timing_log;
  report.round_trip_ms = std::move(rtt);
  return report;
}

namespace {

Clock make_clock(ClockKind kind, Mode mode, bool lockstep) {
  const bool virtual_clock =
      kind == ClockKind::Virtual || (kind == ClockKind::Auto && mode == Mode::Internal && lockstep);
  return virtual_clock ? stepping_clock() : steady_clock();
}

void log_timing(const Session& session) {
  if (session.state().timing_log.empty()) return;
  const TimingSummary s = session.timing_summary();
  spdlog::info("render ms: mean {:.3f} std {:.3f} p99 {:.3f} max {:.3f}", s.render.mean_ms,
               s.render.std_ms, s.render.p99_ms, s.render.max_ms);
  spdlog::info("receive->publish ms: mean {:.3f} p99 {:.3f}, {:.2f}% <= {} ms", s.total.mean_ms,
               s.total.p99_ms, 100.0 * s.total.fraction_le, s.threshold_ms);
}

int run_live(const RunConfig& cfg, const Scenario& scenario, const std::atomic<bool>& stop) {
  bridge::ServerConfig server;
  server.host = cfg.host;
  server.port = cfg.port;
  BridgeRuntime runtime(scenario, server, make_clock(cfg.clock, cfg.mode, false), cfg.seed);
  runtime.start();
  spdlog::info("bridge listening on {}:{}", cfg.host, runtime.port());

  std::unique_ptr<InternalRobot> robot;
  if (cfg.mode == Mode::Internal) {
    robot = std::make_unique<InternalRobot>(scenario.robot, "127.0.0.1", runtime.port());
    robot->start();
    spdlog::info("internal robot publishing /odom at {} Hz", scenario.robot.rate_hz);
  }
  while (!stop.load() && (!cfg.ticks || runtime.ticks() < *cfg.ticks)) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  if (robot) robot->stop();
  runtime.stop();
  spdlog::info("processed {} ticks, {} queue overflows", runtime.ticks(),
               runtime.queue_overflows());
  log_timing(runtime.session());
  if (!cfg.export_dir.empty()) export_session(runtime.session(), cfg.export_dir);
  return 0;
}

}  // namespace

int run(const RunConfig& cfg, const std::atomic<bool>& stop) {
  cfg.validate();
  spdlog::info("mode {} seed {}", to_string(cfg.mode), cfg.seed);

  if (cfg.mode == Mode::RlEnv) {
    const auto transcripts = run_rlenv(EnvConfig{}, cfg.seed, cfg.episodes);
    for (const auto& t : transcripts) {
      spdlog::info("episode seed {}: {} steps, outcome {}, reward {}", t.seed, t.rows.size(),
                   to_string(t.outcome), t.total_reward);
    }
    if (!cfg.export_dir.empty()) export_transcripts(transcripts, cfg.export_dir);
    return 0;
  }

  const Scenario scenario = load_scenario(cfg.scenario_path);
  spdlog::info("scenario '{}' with {} obstacles", scenario.name, scenario.scene.obstacles.size());

  if (cfg.mode == Mode::Internal && !cfg.cmd_file.empty()) {
    const auto script = load_command_script(cfg.cmd_file);
    Session session(scenario.scene, scenario.sensors, make_clock(cfg.clock, cfg.mode, true));
    session.set_warning_handler([](const std::string& m) { spdlog::warn("{}", m); });
    run_internal_lockstep(session, scenario.robot, script, cfg.seed, *cfg.ticks);
    spdlog::info("lockstep run: {} ticks, final phase {}", session.state().tick_count,
                 to_string(session.state().phase));
    log_timing(session);
    if (!cfg.export_dir.empty()) export_session(session, cfg.export_dir);
    return 0;
  }
  return run_live(cfg, scenario, stop);
}

}  // namespace viloop
