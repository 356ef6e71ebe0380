// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "acceptance/criteria.hpp"
#include "viloop/rlenv.hpp"

namespace acceptance {

using namespace viloop;

namespace {

EnvConfig open_corridor(double length, int step_cap, double width = 25.0) {
  EnvConfig cfg;
  cfg.corridor.width = width;
  cfg.corridor.length = length;
  cfg.corridor.obstacle_count = 0;
  cfg.corridor.curvature = 0.0;
  cfg.step_cap = step_cap;
  return cfg;
}

// Independent recomputation of the non-terminal terms from the observation.
double shaping(const StepResult& r) {
  return -1.0 + 0.1 * r.obs.front - 0.1 * std::abs(r.obs.right - r.obs.left) +
         10.0 * r.new_milestones;
}

}  // namespace

Verdict reward(const Context&) {
  Check c;

  // Published constants.
  c.expect(kStepPenalty == -1.0 && kFrontalWeight == 0.1 && kBalanceWeight == 0.1,
           "shaping weights");
  c.expect(kMilestoneDistance == 5.0 && kMilestoneBonus == 10.0, "milestone constants");
  c.expect(kGoalReward == 100.0 && kCollisionReward == -100.0, "terminal constants");

  // Standing still in open space: d = (10, 10, 10), no events.
  {
    CorridorEnv env(open_corridor(40.0, 50));
    env.reset(1);
    int steps = 0;
    StepResult r;
    while (!r.done) {
      r = env.step({-1.0, 0.0});
      ++steps;
      c.expect(r.obs == Observation{10.0, 10.0, 10.0}, "open-space observation at step {}", steps);
      c.expect(r.reward.total == 0.0, "step {} reward {} instead of exactly 0", steps,
               r.reward.total);
      c.expect(r.reward.step_penalty == -1.0 && r.reward.frontal_bonus == 1.0 &&
                   r.reward.balance_penalty == 0.0,
               "components at step {}", steps);
    }
    c.expect(steps == 50 && r.outcome == Outcome::StepCap, "stationary episode end");
    c.expect(env.cumulative_reward() == 0.0, "stationary cumulative {}", env.cumulative_reward());
  }

  // Driving straight at full speed: +10 exactly on each step that completes
  // a new 5 m of progress, 0 otherwise.
  int milestones = 0;
  {
    CorridorEnv env(open_corridor(80.0, 2000));
    env.reset(1);
    double last_progress = 0.0;
    for (int i = 0; i < 200; ++i) {
      const StepResult r = env.step({1.0, 0.0});
      const int expected = static_cast<int>(std::floor(r.progress / kMilestoneDistance)) -
                           static_cast<int>(std::floor(last_progress / kMilestoneDistance));
      c.expect(r.new_milestones == expected, "step {}: {} milestones, expected {}", i,
               r.new_milestones, expected);
      c.expect(r.reward.total == 10.0 * expected, "step {} reward {}", i, r.reward.total);
      milestones += r.new_milestones;
      last_progress = r.progress;
    }
    c.expect(milestones == static_cast<int>(std::floor(last_progress / kMilestoneDistance)),
             "milestone count {}", milestones);
  }

  // Goal reached: terminal +100.
  {
    CorridorEnv env(open_corridor(8.0, 2000));
    env.reset(1);
    StepResult r;
    while (!r.done) r = env.step({1.0, 0.0});
    c.expect(r.outcome == Outcome::Goal, "goal episode outcome {}", to_string(r.outcome));
    c.expect(r.reward.terminal == 100.0, "goal terminal {}", r.reward.terminal);
    c.expect(std::abs(r.reward.total - (shaping(r) + 100.0)) <= 1e-12, "goal step total {}",
             r.reward.total);
  }

  // Wall hit: terminal -100 added to the shaping terms of that step.
  {
    CorridorEnv env(open_corridor(20.0, 2000, 3.0));
    env.reset(1);
    StepResult r;
    while (!r.done) r = env.step({1.0, -1.0});
    c.expect(r.outcome == Outcome::Collision, "collision episode outcome {}",
             to_string(r.outcome));
    c.expect(r.reward.terminal == -100.0, "collision terminal {}", r.reward.terminal);
    c.expect(std::abs(r.reward.total - (shaping(r) - 100.0)) <= 1e-12, "collision step total {}",
             r.reward.total);
  }

  return verdict(c, fmt::format("stationary 0.0 exactly, {} milestones at +10, goal +100, "
                                "collision -100",
                                milestones));
}

}  // namespace acceptance
