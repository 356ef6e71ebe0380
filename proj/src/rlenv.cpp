// SPDX-License-Identifier: Apache-2.0
#include "viloop/rlenv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "viloop/csv.hpp"
#include "viloop/error.hpp"
#include "viloop/rng.hpp"

namespace viloop {
namespace {

constexpr double kRadPerDeg = std::numbers::pi / 180.0;
constexpr int kCorridorAttempts = 20;
constexpr int kObstacleAttempts = 100;

Vec2 normal_of(double heading) { return {-std::sin(heading), std::cos(heading)}; }

std::vector<Segment2> polyline(const std::vector<Vec2>& pts) {
  std::vector<Segment2> out;
  for (std::size_t i = 1; i < pts.size(); ++i) out.push_back({pts[i - 1], pts[i]});
  return out;
}

struct Box2 {
  Vec2 lo, hi;
};

Box2 bounds_of(const Segment2& s) { return {s.a.cwiseMin(s.b), s.a.cwiseMax(s.b)}; }

bool boxes_touch(const Box2& a, const Box2& b) {
  return a.lo.x() <= b.hi.x() && b.lo.x() <= a.hi.x() && a.lo.y() <= b.hi.y() && b.lo.y() <= a.hi.y();
}

bool point_in_convex(const Vec2& p, const std::array<Vec2, 4>& quad) {
  // Corners are counter-clockwise.
  for (std::size_t i = 0; i < 4; ++i) {
    const Vec2 e = quad[(i + 1) % 4] - quad[i];
    const Vec2 w = p - quad[i];
    if (e.x() * w.y() - e.y() * w.x() < 0.0) return false;
  }
  return true;
}

bool polyline_self_intersects(const std::vector<Segment2>& segs) {
  for (std::size_t i = 0; i < segs.size(); ++i) {
    for (std::size_t k = i + 2; k < segs.size(); ++k) {
      if (segments_intersect(segs[i], segs[k])) return true;
    }
  }
  return false;
}

bool polylines_intersect(const std::vector<Segment2>& a, const std::vector<Segment2>& b) {
  for (const auto& s : a) {
    for (const auto& t : b) {
      if (segments_intersect(s, t)) return true;
    }
  }
  return false;
}

double square_to_polyline(const SquareObstacle& sq, const std::vector<Segment2>& segs) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : sq.edges()) {
    for (const auto& s : segs) best = std::min(best, segment_distance(e, s));
  }
  return best;
}

bool square_crosses(const SquareObstacle& sq, const std::vector<Segment2>& segs) {
  for (const auto& e : sq.edges()) {
    for (const auto& s : segs) {
      if (segments_intersect(e, s)) return true;
    }
  }
  return false;
}

double square_distance(const SquareObstacle& a, const SquareObstacle& b) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : a.edges()) {
    for (const auto& f : b.edges()) best = std::min(best, segment_distance(e, f));
  }
  return best;
}

void validate_params(const CorridorParams& p) {
  const bool ok = p.width > kFootprintSide && p.length > 0.0 && p.obstacle_count >= 0 &&
                  p.obstacle_min_side > 0.0 && p.obstacle_max_side >= p.obstacle_min_side &&
                  p.curvature >= 0.0 && p.segment_length > 0.0 && p.sample_step > 0.0 &&
                  p.sample_step <= kMaxIntegrationStep && p.start_arclength >= 0.0 &&
                  p.start_arclength < p.length && p.end_margin >= 0.0;
  if (!ok) throw Error(Errc::DegenerateParams, "corridor parameters out of range");
}

bool build_centerline(Rng& rng, const CorridorParams& p, Corridor& c) {
  const double total = p.length + p.end_margin;
  const auto n = static_cast<std::size_t>(std::ceil(total / p.sample_step));
  const auto per_segment =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(p.segment_length / p.sample_step)));
  // Turning radius v / |w| never drops below the corridor width.
  const double w_bound = p.curvature / p.width;
  const SaturationLimits limits{1.0, std::max(w_bound, 1e-12)};
  const double max_heading = kMaxHeadingDeg * kRadPerDeg;

  UnicycleState s;
  c.centerline = {Vec2::Zero()};
  c.headings = {0.0};
  c.arclengths = {0.0};
  double w = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % per_segment == 0) w = rng.uniform(-w_bound, w_bound);
    const double w_eff = std::abs(s.theta + w * p.sample_step) > max_heading ? 0.0 : w;
    s = integrate(apply_command(s, 1.0, w_eff, limits), p.sample_step);
    c.centerline.emplace_back(s.x, s.y);
    c.headings.push_back(s.theta);
    c.arclengths.push_back(static_cast<double>(i + 1) * p.sample_step);
  }
  c.left_wall.clear();
  c.right_wall.clear();
  for (std::size_t i = 0; i < c.centerline.size(); ++i) {
    const Vec2 offset = normal_of(c.headings[i]) * (p.width / 2.0);
    c.left_wall.push_back(c.centerline[i] + offset);
    c.right_wall.push_back(c.centerline[i] - offset);
  }
  const auto left = polyline(c.left_wall);
  const auto right = polyline(c.right_wall);
  return !polyline_self_intersects(left) && !polyline_self_intersects(right) &&
         !polylines_intersect(left, right);
}

bool place_obstacles(Rng& rng, const CorridorParams& p, Corridor& c) {
  const auto left = c.wall_segments(1);
  const auto right = c.wall_segments(-1);
  const double s_lo = p.start_arclength + 3.0;
  const double s_hi = p.length - 1.0;
  if (p.obstacle_count > 0 && s_hi <= s_lo) return false;
  for (int k = 0; k < p.obstacle_count; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < kObstacleAttempts && !placed; ++attempt) {
      const double s = rng.uniform(s_lo, s_hi);
      const double side = rng.uniform(p.obstacle_min_side, p.obstacle_max_side);
      const int wall = rng.coin() ? 1 : -1;
      const auto i = static_cast<std::size_t>(std::llround(s / p.sample_step));
      SquareObstacle sq;
      sq.side = side;
      sq.heading = c.headings[i];
      sq.wall = wall;
      const double offset = p.width / 2.0 - side / 2.0 + std::min(kObstacleEmbed, side / 4.0);
      sq.center = c.centerline[i] + normal_of(sq.heading) * (wall * offset);

      const auto& own = wall > 0 ? left : right;
      const auto& other = wall > 0 ? right : left;
      if (!square_crosses(sq, own) || square_crosses(sq, other)) continue;
      if (square_to_polyline(sq, other) < kMinPassage) continue;
      const bool crowded = std::any_of(c.obstacles.begin(), c.obstacles.end(), [&](const auto& o) {
        return square_distance(sq, o) < kMinPassage;
      });
      if (crowded) continue;
      c.obstacles.push_back(sq);
      placed = true;
    }
    if (!placed) return false;
  }
  return true;
}

}  // namespace

std::array<Vec2, 4> SquareObstacle::corners() const {
  const Vec2 ax(std::cos(heading), std::sin(heading));
  const Vec2 ay = normal_of(heading);
  const double h = side / 2.0;
  return {center - ax * h - ay * h, center + ax * h - ay * h, center + ax * h + ay * h,
          center - ax * h + ay * h};
}

std::array<Segment2, 4> SquareObstacle::edges() const {
  const auto q = corners();
  return {Segment2{q[0], q[1]}, Segment2{q[1], q[2]}, Segment2{q[2], q[3]}, Segment2{q[3], q[0]}};
}

std::vector<Segment2> Corridor::wall_segments(int side) const {
  return polyline(side > 0 ? left_wall : right_wall);
}

std::vector<Segment2> Corridor::segments() const {
  std::vector<Segment2> out = polyline(left_wall);
  const auto right = polyline(right_wall);
  out.insert(out.end(), right.begin(), right.end());
  if (!left_wall.empty()) {
    out.push_back({left_wall.front(), right_wall.front()});
    out.push_back({left_wall.back(), right_wall.back()});
  }
  for (const auto& o : obstacles) {
    const auto e = o.edges();
    out.insert(out.end(), e.begin(), e.end());
  }
  return out;
}

double Corridor::project(const Vec2& p) const {
  double best_d = std::numeric_limits<double>::infinity();
  double best_s = 0.0;
  for (std::size_t i = 1; i < centerline.size(); ++i) {
    const Vec2 a = centerline[i - 1];
    const Vec2 e = centerline[i] - a;
    const double len2 = e.squaredNorm();
    const double u = len2 > 0.0 ? std::clamp((p - a).dot(e) / len2, 0.0, 1.0) : 0.0;
    const double d = (a + u * e - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best_s = arclengths[i - 1] + u * (arclengths[i] - arclengths[i - 1]);
    }
  }
  return best_s;
}

bool Corridor::inside(const Vec2& p) const {
  // Even-odd rule over the closed outline (left wall, then right wall reversed).
  std::vector<Vec2> ring = left_wall;
  ring.insert(ring.end(), right_wall.rbegin(), right_wall.rend());
  bool in = false;
  for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
    const Vec2& a = ring[i];
    const Vec2& b = ring[j];
    if ((a.y() > p.y()) != (b.y() > p.y()) &&
        p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x()) {
      in = !in;
    }
  }
  return in;
}

Corridor generate_corridor(std::uint64_t seed, const CorridorParams& params) {
  validate_params(params);
  Rng rng(seed);
  for (int attempt = 0; attempt < kCorridorAttempts; ++attempt) {
    Corridor c;
    c.width = params.width;
    c.start_arclength = params.start_arclength;
    c.goal_arclength = params.length;
    if (!build_centerline(rng, params, c)) continue;
    if (!place_obstacles(rng, params, c)) continue;
    return c;
  }
  throw Error(Errc::DegenerateParams, "no valid corridor after repeated sampling");
}

std::array<Vec2, 4> footprint_corners(const Pose2& pose, double side) {
  SquareObstacle sq;
  sq.center = Vec2(pose.x, pose.y);
  sq.side = side;
  sq.heading = pose.theta;
  return sq.corners();
}

bool footprint_collision(const Corridor& corridor, const Pose2& pose) {
  const Vec2 center(pose.x, pose.y);
  if (!corridor.inside(center)) return true;
  const auto q = footprint_corners(pose);
  const std::array<Segment2, 4> edges{Segment2{q[0], q[1]}, Segment2{q[1], q[2]},
                                      Segment2{q[2], q[3]}, Segment2{q[3], q[0]}};
  Box2 fb{q[0], q[0]};
  for (const Vec2& p : q) {
    fb.lo = fb.lo.cwiseMin(p);
    fb.hi = fb.hi.cwiseMax(p);
  }
  for (const auto& seg : corridor.segments()) {
    if (!boxes_touch(fb, bounds_of(seg))) continue;
    for (const auto& e : edges) {
      if (segments_intersect(e, seg)) return true;
    }
  }
  for (const auto& o : corridor.obstacles) {
    const auto oc = o.corners();
    if (point_in_convex(center, oc)) return true;
    if (point_in_convex(oc[0], q)) return true;
  }
  return false;
}

double cast_ray_2d(const std::vector<Segment2>& segments, const Vec2& origin, double angle,
                   double max_range) {
  const Vec2 dir(std::cos(angle), std::sin(angle));
  const Box2 reach{origin - Vec2::Constant(max_range), origin + Vec2::Constant(max_range)};
  double best = max_range;
  for (const auto& seg : segments) {
    if (!boxes_touch(reach, bounds_of(seg))) continue;
    if (auto t = ray_segment(origin, dir, seg); t && *t < best) best = *t;
  }
  return std::clamp(best, 0.0, max_range);
}

Observation lidar2d(const Corridor& corridor, const Pose2& pose, double max_range) {
  const auto segs = corridor.segments();
  const Vec2 o(pose.x, pose.y);
  Observation obs;
  obs.front = cast_ray_2d(segs, o, pose.theta, max_range);
  obs.left = cast_ray_2d(segs, o, pose.theta + kSideRayDeg * kRadPerDeg, max_range);
  obs.right = cast_ray_2d(segs, o, pose.theta - kSideRayDeg * kRadPerDeg, max_range);
  return obs;
}

const char* to_string(Outcome o) noexcept {
  switch (o) {
    case Outcome::Running: return "Running";
    case Outcome::Goal: return "Goal";
    case Outcome::Collision: return "Collision";
    case Outcome::StepCap: return "StepCap";
  }
  return "Running";
}

CorridorEnv::CorridorEnv(EnvConfig cfg) : cfg_(std::move(cfg)) {
  if (!(cfg_.dt > 0.0 && cfg_.dt <= kMaxIntegrationStep) || cfg_.step_cap <= 0 ||
      !(cfg_.v_max > 0.0 && cfg_.w_scale > 0.0 && cfg_.max_range > 0.0)) {
    throw Error(Errc::InvalidConfig, "environment configuration out of range");
  }
}

Observation CorridorEnv::reset(std::uint64_t seed) {
  corridor_ = generate_corridor(seed, cfg_.corridor);
  return place_at_start();
}

Observation CorridorEnv::reset_with(Corridor corridor) {
  corridor_ = std::move(corridor);
  return place_at_start();
}

Observation CorridorEnv::place_at_start() {
  const auto& c = corridor_;
  std::size_t i = 0;
  while (i + 1 < c.arclengths.size() && c.arclengths[i] < c.start_arclength) ++i;
  robot_ = UnicycleState{};
  robot_.x = c.centerline[i].x();
  robot_.y = c.centerline[i].y();
  robot_.theta = c.headings[i];
  pose_ = {robot_.x, robot_.y, robot_.theta};
  ready_ = true;
  done_ = false;
  steps_ = 0;
  milestones_ = 0;
  best_progress_ = 0.0;
  cumulative_ = 0.0;
  return lidar2d(corridor_, pose_, cfg_.max_range);
}

StepResult CorridorEnv::step(const Action& action) {
  if (!ready_) throw Error(Errc::InvalidConfig, "step before reset");
  if (done_) throw Error(Errc::StepAfterDone, "episode has ended; call reset");

  const double a_v = std::clamp(action.a_v, -1.0, 1.0);
  const double a_w = std::clamp(action.a_w, -1.0, 1.0);
  const double v = cfg_.allow_reverse ? cfg_.v_max * a_v : cfg_.v_max * (a_v + 1.0) / 2.0;
  const double w = cfg_.w_scale * a_w;
  robot_ = apply_command(robot_, v, w, SaturationLimits{cfg_.v_max, cfg_.w_scale});
  robot_ = integrate(robot_, cfg_.dt);
  pose_ = {robot_.x, robot_.y, robot_.theta};
  ++steps_;

  StepResult out;
  out.v = robot_.v_cmd;
  out.w = robot_.w_cmd;
  const bool collided = footprint_collision(corridor_, pose_);
  out.obs = lidar2d(corridor_, pose_, cfg_.max_range);

  const double s = corridor_.project(Vec2(pose_.x, pose_.y));
  best_progress_ = std::max(best_progress_, s - corridor_.start_arclength);
  const int reached = static_cast<int>(std::floor(best_progress_ / kMilestoneDistance));
  out.new_milestones = std::max(0, reached - milestones_);
  milestones_ += out.new_milestones;
  out.progress = best_progress_;
  const bool goal = corridor_.start_arclength + best_progress_ >= corridor_.goal_arclength;

  RewardLedger& r = out.reward;
  r.step_penalty = kStepPenalty;
  r.frontal_bonus = kFrontalWeight * out.obs.front;
  r.balance_penalty = -kBalanceWeight * std::abs(out.obs.right - out.obs.left);
  r.progress_bonus = kMilestoneBonus * out.new_milestones;
  r.terminal = collided ? kCollisionReward : (goal ? kGoalReward : 0.0);
  r.total = r.step_penalty + r.frontal_bonus + r.balance_penalty + r.progress_bonus + r.terminal;
  cumulative_ += r.total;
  r.cumulative = cumulative_;

  if (collided) {
    out.outcome = Outcome::Collision;
  } else if (goal) {
    out.outcome = Outcome::Goal;
  } else if (steps_ >= cfg_.step_cap) {
    out.outcome = Outcome::StepCap;
  }
  out.done = out.outcome != Outcome::Running;
  done_ = out.done;
  return out;
}

Action HeuristicPolicy::operator()(const Observation& obs) const {
  Action a;
  a.a_w = std::clamp(steer_gain * (obs.left - obs.right), -1.0, 1.0);
  a.a_v = obs.front < slow_distance ? -0.6 : 1.0;
  return a;
}

void Transcript::write_csv(std::ostream& out) const {
  out << "step,x,y,theta,d_f,d_r,d_l,a_v,a_w,step_penalty,frontal_bonus,balance_penalty,"
         "progress_bonus,terminal,total,cumulative,outcome\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const bool last = i + 1 == rows.size();
    out << r.step << ',' << num(r.pose.x) << ',' << num(r.pose.y) << ',' << num(r.pose.theta) << ','
        << num(r.obs.front) << ',' << num(r.obs.right) << ',' << num(r.obs.left) << ','
        << num(r.action.a_v) << ',' << num(r.action.a_w) << ',' << num(r.reward.step_penalty) << ','
        << num(r.reward.frontal_bonus) << ',' << num(r.reward.balance_penalty) << ','
        << num(r.reward.progress_bonus) << ',' << num(r.reward.terminal) << ','
        << num(r.reward.total) << ',' << num(r.reward.cumulative) << ','
        << (last ? to_string(outcome) : "Running") << '\n';
  }
}

Transcript run_episode(CorridorEnv& env, const Policy& policy, std::uint64_t seed) {
  Transcript t;
  t.seed = seed;
  Observation obs = env.reset(seed);
  while (!env.done()) {
    const Action action = policy(obs);
    const StepResult r = env.step(action);
    t.rows.push_back({env.steps(), env.pose(), r.obs, action, r.reward});
    obs = r.obs;
    t.outcome = r.outcome;
  }
  t.total_reward = env.cumulative_reward();
  return t;
}

}  // namespace viloop
