// SPDX-License-Identifier: Apache-2.0
//
// Simulation session: binds pose updates, resets, pause/resume, collision
// checks, sensor generation and timing into one serialized event loop.
#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "viloop/frames.hpp"
#include "viloop/sensors.hpp"
#include "viloop/world.hpp"

namespace viloop {

enum class SimPhase { Uninitialized, Running, Paused, Collided };
enum class SimEvent { Reset, Pause, Resume, Collision };

const char* to_string(SimPhase p) noexcept;

// Target phase of a legal transition, nothing for an illegal one.
std::optional<SimPhase> transition(SimPhase from, SimEvent event) noexcept;

struct TickTiming {
  std::uint64_t tick = 0;
  std::int64_t receive_ns = 0;
  std::int64_t publish_ns = 0;
  std::int64_t render_ns = 0;
};

struct TrajectoryRow {
  std::uint64_t tick = 0;
  SimPhase phase = SimPhase::Uninitialized;
  RigidTransform physical;
  RigidTransform digital;
};

struct SessionState {
  SimPhase phase = SimPhase::Uninitialized;
  RigidTransform offset;
  RigidTransform digital_pose;
  std::optional<PoseSample> last_physical;
  std::optional<std::uint64_t> last_timestep;
  std::uint64_t tick_count = 0;
  std::uint64_t dropped_pose_count = 0;
  std::uint64_t stale_pose_count = 0;
  std::uint64_t episode = 0;
  std::uint64_t episode_ticks = 0;
  std::vector<TickTiming> timing_log;
};

// Monotonic nanoseconds.
using Clock = std::function<std::int64_t()>;
Clock steady_clock();
// Deterministic clock advancing `step_ns` per reading; for reproducible
// timing exports.
Clock stepping_clock(std::int64_t step_ns = 1'000'000);

struct DigitalPose {
  std::uint64_t tick = 0;
  RigidTransform pose;
};

using Output = std::variant<DigitalPose, CollisionReport, LidarScan, SemanticDepthImage>;
using OutputSink = std::function<void(const Output&)>;

enum class DropReason { NotRunning, StalePose };

struct TickResult {
  bool dropped = false;
  DropReason reason = DropReason::NotRunning;
  RigidTransform digital_pose;
  CollisionReport collision;
  std::optional<LidarScan> lidar;
  std::optional<SemanticDepthImage> camera;
};

enum class TransitionStatus { Ok, IllegalTransition };

struct DurationStats {
  std::size_t count = 0;
  double mean_ms = 0.0;
  double std_ms = 0.0;  // population
  double max_ms = 0.0;
  double p99_ms = 0.0;       // nearest rank
  double fraction_le = 0.0;  // share of samples <= threshold
};

// Throws Error(Empty) for an empty sample set.
DurationStats summarize(std::span<const double> samples_ms, double threshold_ms);

struct TimingSummary {
  double threshold_ms = 100.0;
  DurationStats render;
  DurationStats total;  // receive -> publish
};

// NPCs advance by the pose-stamp delta between accepted samples, capped here.
inline constexpr double kMaxNpcStep = 0.1;

struct PoseEvent {
  PoseSample sample;
  std::optional<std::int64_t> receive_ns;
};
struct ResetEvent {
  std::optional<std::uint64_t> seed;
};
struct PauseEvent {};
struct ResumeEvent {};
using Event = std::variant<PoseEvent, ResetEvent, PauseEvent, ResumeEvent>;

class Session {
 public:
  Session(Scene scene, SensorSuite sensors, Clock clock = steady_clock());

  // Moves the twin and generates sensors while Running. Every non-stale
  // sample is remembered as the latest physical pose, also while paused, so
  // that resume and reset anchor against where the robot actually is.
  // Outputs go to `sink` in order: pose, collision, lidar, camera; after a
  // collision only the collision report is emitted.
  TickResult on_pose(const PoseSample& sample, const OutputSink& sink = {},
                     std::optional<std::int64_t> receive_ns = std::nullopt);
  void on_reset(std::uint64_t seed);
  TransitionStatus on_pause();
  TransitionStatus on_resume();

  // Dispatches one queued event. Resets without an explicit seed use
  // base_seed + episode index.
  void handle(const Event& event, const OutputSink& sink = {});

  void set_base_seed(std::uint64_t seed) { base_seed_ = seed; }
  void set_warning_handler(std::function<void(const std::string&)> handler) {
    warn_ = std::move(handler);
  }

  const SessionState& state() const { return state_; }
  const Scene& scene() const { return scene_; }
  const SensorSuite& sensors() const { return sensors_; }
  const std::vector<TrajectoryRow>& trajectory() const { return trajectory_; }

  // Throws Error(Empty) when no tick has been recorded.
  TimingSummary timing_summary(double threshold_ms = 100.0) const;
  void write_timing_csv(std::ostream& out) const;
  void write_trajectory_csv(std::ostream& out) const;

 private:
  void warn(const std::string& message) const;

  Scene scene_;
  SensorSuite sensors_;
  Clock clock_;
  SessionState state_;
  std::vector<TrajectoryRow> trajectory_;
  std::optional<double> last_npc_stamp_;
  std::uint64_t base_seed_ = 0;
  std::function<void(const std::string&)> warn_;
};

// Bounded queue feeding the simulation thread. When full, the oldest queued
// pose is discarded to make room; control events are never discarded.
class EventQueue {
 public:
  explicit EventQueue(std::size_t capacity = 64) : capacity_(capacity) {}

  void push(Event event);
  // Blocks until an event arrives or the queue is closed and drained.
  std::optional<Event> pop();
  std::optional<Event> try_pop();
  void close();

  std::size_t size() const;
  std::uint64_t overflow_drops() const;

 private:
  mutable std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<Event> events_;
  std::size_t capacity_;
  std::uint64_t overflow_ = 0;
  bool closed_ = false;
};

}  // namespace viloop
