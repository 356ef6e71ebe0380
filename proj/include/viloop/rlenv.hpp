// SPDX-License-Identifier: Apache-2.0
//
// 2D corridor-navigation environment for obstacle-avoidance agents: random
// corridors from unicycle rollouts, a 1 m square footprint, three LiDAR rays
// and a shaped reward.
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "viloop/geometry.hpp"
#include "viloop/kinematics.hpp"

namespace viloop {

struct CorridorParams {
  double width = 3.0;    // m
  double length = 50.0;  // arclength of the goal, m
  int obstacle_count = 6;
  double obstacle_min_side = 0.4;
  double obstacle_max_side = 0.9;
  double curvature = 1.0;       // 0 gives a straight corridor
  double segment_length = 2.0;  // m per random (v, w) draw
  double sample_step = 0.1;     // m between centerline samples
  double start_arclength = 1.5;
  double end_margin = 3.0;  // corridor continues past the goal
};

inline constexpr double kFootprintSide = 1.0;
inline constexpr double kObstacleEmbed = 0.05;  // squares cross their wall by this much
inline constexpr double kMaxHeadingDeg = 75.0;
inline constexpr double kMinPassage = 1.4142135623730951;  // footprint diagonal

struct SquareObstacle {
  Vec2 center = Vec2::Zero();
  double side = 0.0;
  double heading = 0.0;
  int wall = 1;  // +1 left wall, -1 right wall

  std::array<Vec2, 4> corners() const;
  std::array<Segment2, 4> edges() const;
};

struct Corridor {
  double width = 0.0;
  std::vector<Vec2> centerline;
  std::vector<double> headings;    // per centerline sample
  std::vector<double> arclengths;  // per centerline sample
  std::vector<Vec2> left_wall;
  std::vector<Vec2> right_wall;
  std::vector<SquareObstacle> obstacles;
  double start_arclength = 0.0;
  double goal_arclength = 0.0;

  // Wall segments, the two end caps, then obstacle edges.
  std::vector<Segment2> segments() const;
  std::vector<Segment2> wall_segments(int side) const;  // +1 left, -1 right
  // Closest-point arclength of p on the centerline.
  double project(const Vec2& p) const;
  bool inside(const Vec2& p) const;
};

// Throws Error(DegenerateParams).
Corridor generate_corridor(std::uint64_t seed, const CorridorParams& params);

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

std::array<Vec2, 4> footprint_corners(const Pose2& pose, double side = kFootprintSide);

// Any footprint edge touching a wall, cap or obstacle edge; also an obstacle
// fully inside the footprint, the footprint inside an obstacle, or the
// footprint center outside the corridor.
bool footprint_collision(const Corridor& corridor, const Pose2& pose);

struct Observation {
  double front = 0.0;
  double right = 0.0;
  double left = 0.0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

inline constexpr double kLidar2dMaxRange = 10.0;
inline constexpr double kSideRayDeg = 30.0;

double cast_ray_2d(const std::vector<Segment2>& segments, const Vec2& origin, double angle,
                   double max_range);
Observation lidar2d(const Corridor& corridor, const Pose2& pose,
                    double max_range = kLidar2dMaxRange);

struct Action {
  double a_v = 0.0;
  double a_w = 0.0;
};

struct RewardLedger {
  double step_penalty = 0.0;
  double frontal_bonus = 0.0;
  double balance_penalty = 0.0;
  double progress_bonus = 0.0;
  double terminal = 0.0;
  double total = 0.0;       // sum of the components above
  double cumulative = 0.0;  // episode total so far
};

inline constexpr double kStepPenalty = -1.0;
inline constexpr double kFrontalWeight = 0.1;
inline constexpr double kBalanceWeight = 0.1;
inline constexpr double kMilestoneDistance = 5.0;
inline constexpr double kMilestoneBonus = 10.0;
inline constexpr double kGoalReward = 100.0;
inline constexpr double kCollisionReward = -100.0;

enum class Outcome { Running, Goal, Collision, StepCap };
const char* to_string(Outcome o) noexcept;

struct EnvConfig {
  CorridorParams corridor;
  double dt = 0.1;
  int step_cap = 2000;
  double v_max = 1.0;
  double w_scale = 0.5;
  bool allow_reverse = false;  // map a_v to [-v_max, v_max] instead of [0, v_max]
  double max_range = kLidar2dMaxRange;
};

struct StepResult {
  Observation obs;
  RewardLedger reward;
  bool done = false;
  Outcome outcome = Outcome::Running;
  int new_milestones = 0;
  double progress = 0.0;  // monotone forward arclength since start
  double v = 0.0;         // commanded after mapping and saturation
  double w = 0.0;
};

class CorridorEnv {
 public:
  explicit CorridorEnv(EnvConfig cfg = {});

  // New corridor from `seed`; robot placed on the centerline at the start.
  Observation reset(std::uint64_t seed);
  // Throws Error(StepAfterDone) once the episode has ended, and
  // Error(InvalidConfig) before the first reset.
  StepResult step(const Action& action);

  const Corridor& corridor() const { return corridor_; }
  const Pose2& pose() const { return pose_; }
  const EnvConfig& config() const { return cfg_; }
  double cumulative_reward() const { return cumulative_; }
  int steps() const { return steps_; }
  bool done() const { return done_; }

  // Replaces the corridor (scripted scenes); robot goes to the start pose.
  Observation reset_with(Corridor corridor);

 private:
  Observation place_at_start();

  EnvConfig cfg_;
  Corridor corridor_;
  Pose2 pose_;
  UnicycleState robot_;
  bool ready_ = false;
  bool done_ = false;
  int steps_ = 0;
  int milestones_ = 0;
  double best_progress_ = 0.0;
  double cumulative_ = 0.0;
};

using Policy = std::function<Action(const Observation&)>;

// Steers toward the freer side, slows down when the front is closer than 2 m.
struct HeuristicPolicy {
  double steer_gain = 0.5;
  double slow_distance = 2.0;

  Action operator()(const Observation& obs) const;
};

struct TranscriptRow {
  int step = 0;
  Pose2 pose;
  Observation obs;
  Action action;
  RewardLedger reward;
};

struct Transcript {
  std::uint64_t seed = 0;
  std::vector<TranscriptRow> rows;
  Outcome outcome = Outcome::Running;
  double total_reward = 0.0;

  void write_csv(std::ostream& out) const;
};

Transcript run_episode(CorridorEnv& env, const Policy& policy, std::uint64_t seed);

}  // namespace viloop
