// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "acceptance/criteria.hpp"
#include "viloop/app.hpp"
#include "viloop/kinematics.hpp"
#include "viloop/orchestrator.hpp"
#include "viloop/scenario.hpp"

namespace acceptance {

using namespace viloop;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 7;
constexpr int kTicks = 150;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Scripted pose/command stream with a pause, a resume and an unseeded
// second reset, on the corridor scenario with NPCs.
void scripted_session(const Scenario& scenario, const fs::path& dir) {
  Session session(scenario.scene, scenario.sensors, stepping_clock(250'000));
  session.set_base_seed(kSeed);
  session.handle(ResetEvent{kSeed}, {});
  UnicycleState robot;
  for (int k = 0; k < kTicks; ++k) {
    if (k == 60) session.handle(PauseEvent{}, {});
    if (k == 75) session.handle(ResumeEvent{}, {});
    if (k == 120) session.handle(ResetEvent{}, {});
    if (k > 0) {
      const double w = 0.3 * std::sin(0.1 * k);
      robot = integrate(apply_command(robot, 0.8, w, scenario.robot.limits), 0.05);
    }
    session.handle(PoseEvent{emit_pose(robot), std::nullopt}, {});
  }
  export_session(session, dir);
}

void compare_files(Check& c, const fs::path& a, const fs::path& b, const char* name,
                   std::size_t& bytes) {
  const std::string x = slurp(a / name), y = slurp(b / name);
  c.expect(!x.empty(), "{} is empty", (a / name).string());
  c.expect(x == y, "{} differs between runs", name);
  bytes += x.size();
}

}  // namespace

Verdict determinism(const Context& ctx) {
  Check c;
  const fs::path root = ctx.artifact_dir / "determinism";
  fs::remove_all(root);
  std::size_t bytes = 0;
  int files = 0;

  Scenario scenario = load_scenario(ctx.scenario_dir / "corridor.json");
  scenario.sensors.camera_enabled = false;
  for (const char* run : {"session_a", "session_b"}) scripted_session(scenario, root / run);
  for (const char* f : {"trajectory.csv", "timing.csv"}) {
    compare_files(c, root / "session_a", root / "session_b", f, bytes);
    ++files;
  }

  for (const char* run : {"rlenv_a", "rlenv_b"}) {
    export_transcripts(run_rlenv(EnvConfig{}, kSeed, 3), root / run);
  }
  for (std::uint64_t s = kSeed; s < kSeed + 3; ++s) {
    const std::string f = "transcript_seed" + std::to_string(s) + ".csv";
    compare_files(c, root / "rlenv_a", root / "rlenv_b", f.c_str(), bytes);
    ++files;
  }

  // The same through the command line, lockstep internal mode with the
  // camera enabled.
  std::ofstream(root / "cmds.csv") << "t,v,w\n0,0.6,0.2\n2,0.9,-0.3\n4,0.4,0.5\n";
  for (const char* run : {"cli_a", "cli_b"}) {
    const std::string cmd = ctx.cli_path.string() + " --mode internal --scenario " +
                            (ctx.scenario_dir / "corridor.json").string() + " --cmd-file " +
                            (root / "cmds.csv").string() + " --ticks 100 --seed 7 --export-dir " +
                            (root / run).string() + " > " + (root / run).string() + ".log 2>&1";
    c.expect(std::system(cmd.c_str()) == 0, "cli run {} failed", run);
  }
  for (const char* f : {"trajectory.csv", "timing.csv"}) {
    compare_files(c, root / "cli_a", root / "cli_b", f, bytes);
    ++files;
  }

  return verdict(c, fmt::format("{} CSV pairs byte-identical ({} bytes)", files, bytes));
}

}  // namespace acceptance
