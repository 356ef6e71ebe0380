// SPDX-License-Identifier: Apache-2.0
#include "viloop/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <memory>
#include <ostream>

#include "viloop/csv.hpp"
#include "viloop/error.hpp"

namespace viloop {

const char* to_string(SimPhase p) noexcept {
  switch (p) {
    case SimPhase::Uninitialized: return "Uninitialized";
    case SimPhase::Running: return "Running";
    case SimPhase::Paused: return "Paused";
    case SimPhase::Collided: return "Collided";
  }
  return "Uninitialized";
}

std::optional<SimPhase> transition(SimPhase from, SimEvent event) noexcept {
  switch (event) {
    case SimEvent::Reset: return SimPhase::Running;
    case SimEvent::Pause:
      if (from == SimPhase::Running) return SimPhase::Paused;
      return std::nullopt;
    case SimEvent::Resume:
      if (from == SimPhase::Paused) return SimPhase::Running;
      return std::nullopt;
    case SimEvent::Collision:
      if (from == SimPhase::Running) return SimPhase::Collided;
      return std::nullopt;
  }
  return std::nullopt;
}

Clock steady_clock() {
  return [] {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
  };
}

Clock stepping_clock(std::int64_t step_ns) {
  auto now = std::make_shared<std::atomic<std::int64_t>>(0);
  return [now, step_ns] { return now->fetch_add(step_ns) + step_ns; };
}

DurationStats summarize(std::span<const double> samples, double threshold_ms) {
  if (samples.empty()) throw Error(Errc::Empty, "no timing samples");
  DurationStats s;
  s.count = samples.size();
  const double n = static_cast<double>(samples.size());
  double sum = 0.0;
  std::size_t within = 0;
  s.max_ms = samples.front();
  for (double x : samples) {
    sum += x;
    s.max_ms = std::max(s.max_ms, x);
    if (x <= threshold_ms) ++within;
  }
  s.mean_ms = sum / n;
  double var = 0.0;
  for (double x : samples) var += (x - s.mean_ms) * (x - s.mean_ms);
  s.std_ms = std::sqrt(var / n);
  s.fraction_le = static_cast<double>(within) / n;
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.99 * n));
  s.p99_ms = sorted[std::max<std::size_t>(rank, 1) - 1];
  return s;
}

Session::Session(Scene scene, SensorSuite sensors, Clock clock)
    : scene_(std::move(scene)), sensors_(std::move(sensors)), clock_(std::move(clock)) {
  sensors_.lidar.validate();
  sensors_.camera.validate();
}

void Session::warn(const std::string& message) const {
  if (warn_) warn_(message);
}

TickResult Session::on_pose(const PoseSample& sample, const OutputSink& sink,
                            std::optional<std::int64_t> receive_ns) {
  const std::int64_t received = receive_ns ? *receive_ns : clock_();
  TickResult result;
  result.digital_pose = state_.digital_pose;

  if (state_.last_timestep && sample.timestep <= *state_.last_timestep) {
    ++state_.dropped_pose_count;
    ++state_.stale_pose_count;
    result.dropped = true;
    result.reason = DropReason::StalePose;
    return result;
  }
  state_.last_timestep = sample.timestep;
  state_.last_physical = sample;

  if (state_.phase != SimPhase::Running) {
    ++state_.dropped_pose_count;
    trajectory_.push_back({state_.tick_count, state_.phase, sample.transform, state_.digital_pose});
    result.dropped = true;
    result.reason = DropReason::NotRunning;
    return result;
  }

  state_.digital_pose = apply_offset(state_.offset, sample.transform);
  ++state_.tick_count;
  ++state_.episode_ticks;
  result.digital_pose = state_.digital_pose;

  const std::int64_t render_start = clock_();
  if (last_npc_stamp_ && !scene_.npcs.empty()) {
    const double dt = std::min(sample.stamp - *last_npc_stamp_, kMaxNpcStep);
    if (dt > 0.0) scene_ = step_npcs(std::move(scene_), dt);
  }
  last_npc_stamp_ = sample.stamp;

  result.collision = check_collision(scene_, state_.digital_pose);
  if (result.collision.collided) {
    state_.phase = *transition(state_.phase, SimEvent::Collision);
  } else {
    if (sensors_.lidar_enabled) {
      result.lidar = cast_lidar(scene_, state_.digital_pose, sensors_.lidar, sensors_.workers);
    }
    if (sensors_.camera_enabled) {
      result.camera =
          render_semantic_depth(scene_, state_.digital_pose, sensors_.camera, sensors_.workers);
    }
  }
  const std::int64_t render_end = clock_();

  if (sink) {
    if (!result.collision.collided) sink(DigitalPose{state_.tick_count, state_.digital_pose});
    sink(result.collision);
    if (result.lidar) sink(*result.lidar);
    if (result.camera) sink(*result.camera);
  }
  const std::int64_t published = clock_();
  state_.timing_log.push_back({state_.tick_count, received, published, render_end - render_start});
  trajectory_.push_back({state_.tick_count, state_.phase, sample.transform, state_.digital_pose});
  return result;
}

void Session::on_reset(std::uint64_t seed) {
  ResetResult reset = reset_scene(scene_, seed);
  scene_ = std::move(reset.scene);
  const RigidTransform physical =
      state_.last_physical ? state_.last_physical->transform : RigidTransform();
  state_.offset = initial_offset(reset.spawn_pose, physical);
  state_.digital_pose = reset.spawn_pose;
  state_.phase = *transition(state_.phase, SimEvent::Reset);
  ++state_.episode;
  state_.episode_ticks = 0;
  last_npc_stamp_.reset();
}

TransitionStatus Session::on_pause() {
  const auto next = transition(state_.phase, SimEvent::Pause);
  if (!next) {
    warn(std::string("pause ignored in phase ") + to_string(state_.phase));
    return TransitionStatus::IllegalTransition;
  }
  state_.phase = *next;
  return TransitionStatus::Ok;
}

TransitionStatus Session::on_resume() {
  const auto next = transition(state_.phase, SimEvent::Resume);
  if (!next) {
    warn(std::string("resume ignored in phase ") + to_string(state_.phase));
    return TransitionStatus::IllegalTransition;
  }
  const RigidTransform physical =
      state_.last_physical ? state_.last_physical->transform : RigidTransform();
  state_.offset = resume_offset(state_.digital_pose, physical);
  state_.phase = *next;
  last_npc_stamp_.reset();
  return TransitionStatus::Ok;
}

void Session::handle(const Event& event, const OutputSink& sink) {
  std::visit(
      [&](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, PoseEvent>) {
          on_pose(e.sample, sink, e.receive_ns);
        } else if constexpr (std::is_same_v<T, ResetEvent>) {
          on_reset(e.seed.value_or(base_seed_ + state_.episode));
        } else if constexpr (std::is_same_v<T, PauseEvent>) {
          on_pause();
        } else {
          on_resume();
        }
      },
      event);
}

TimingSummary Session::timing_summary(double threshold_ms) const {
  std::vector<double> render, total;
  render.reserve(state_.timing_log.size());
  total.reserve(state_.timing_log.size());
  for (const auto& t : state_.timing_log) {
    render.push_back(static_cast<double>(t.render_ns) / 1e6);
    total.push_back(static_cast<double>(t.publish_ns - t.receive_ns) / 1e6);
  }
  TimingSummary s;
  s.threshold_ms = threshold_ms;
  s.render = summarize(render, threshold_ms);
  s.total = summarize(total, threshold_ms);
  return s;
}

void Session::write_timing_csv(std::ostream& out) const {
  out << "tick,receive_ns,publish_ns,render_ns\n";
  for (const auto& t : state_.timing_log) {
    out << t.tick << ',' << t.receive_ns << ',' << t.publish_ns << ',' << t.render_ns << '\n';
  }
}

void Session::write_trajectory_csv(std::ostream& out) const {
  out << "tick,phase,px,py,pz,pqx,pqy,pqz,pqw,dx,dy,dz,dqx,dqy,dqz,dqw\n";
  auto pose = [&](const RigidTransform& t) {
    const Quaternion q = t.quaternion();
    const Vec3& p = t.translation();
    out << ',' << num(p.x()) << ',' << num(p.y()) << ',' << num(p.z()) << ',' << num(q.x) << ','
        << num(q.y) << ',' << num(q.z) << ',' << num(q.w);
  };
  for (const auto& row : trajectory_) {
    out << row.tick << ',' << to_string(row.phase);
    pose(row.physical);
    pose(row.digital);
    out << '\n';
  }
}

void EventQueue::push(Event event) {
  {
    std::lock_guard lock(mutex_);
    if (closed_) return;
    if (events_.size() >= capacity_) {
      auto oldest = std::find_if(events_.begin(), events_.end(), [](const Event& e) {
        return std::holds_alternative<PoseEvent>(e);
      });
      if (oldest != events_.end()) {
        events_.erase(oldest);
        ++overflow_;
      } else if (std::holds_alternative<PoseEvent>(event)) {
        ++overflow_;
        return;
      }
    }
    events_.push_back(std::move(event));
  }
  ready_.notify_one();
}

std::optional<Event> EventQueue::pop() {
  std::unique_lock lock(mutex_);
  ready_.wait(lock, [&] { return closed_ || !events_.empty(); });
  if (events_.empty()) return std::nullopt;
  Event e = std::move(events_.front());
  events_.pop_front();
  return e;
}

std::optional<Event> EventQueue::try_pop() {
  std::lock_guard lock(mutex_);
  if (events_.empty()) return std::nullopt;
  Event e = std::move(events_.front());
  events_.pop_front();
  return e;
}

void EventQueue::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  ready_.notify_all();
}

std::size_t EventQueue::size() const {
  std::lock_guard lock(mutex_);
  return events_.size();
}

std::uint64_t EventQueue::overflow_drops() const {
  std::lock_guard lock(mutex_);
  return overflow_;
}

}  // namespace viloop
