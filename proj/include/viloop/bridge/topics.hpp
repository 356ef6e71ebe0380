// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "viloop/bridge/envelope.hpp"

namespace viloop::bridge {

using ConnectionId = std::uint64_t;

namespace topic {
inline constexpr const char* kOdom = "/odom";
inline constexpr const char* kReset = "/simprive/reset";
inline constexpr const char* kPause = "/simprive/pause";
inline constexpr const char* kResume = "/simprive/resume";
inline constexpr const char* kCmdVel = "/cmd_vel";
inline constexpr const char* kPoseDigital = "/simprive/pose_digital";
inline constexpr const char* kCollision = "/simprive/collision";
inline constexpr const char* kLidar = "/simprive/lidar";
inline constexpr const char* kCameraDepth = "/simprive/camera_depth";
inline constexpr const char* kCameraSemantic = "/simprive/camera_semantic";
// Carries server status frames (errors, pings). Not routable.
inline constexpr const char* kStatus = "/bridge/status";
}  // namespace topic

enum class Direction { RobotToSim, SimToRobot };

struct TopicSchema {
  std::string_view topic;
  std::string_view schema;
  Direction direction;
  std::string_view description;
};

std::span<const TopicSchema> standard_topics();
const TopicSchema* find_standard_topic(std::string_view name);

// Routing state. Not synchronized; the server guards it with one mutex.
class TopicTable {
 public:
  struct Entry {
    std::set<ConnectionId> publishers;
    std::set<ConnectionId> subscribers;
    std::string schema;
  };

  void advertise(ConnectionId conn, const std::string& topic, std::string schema = {});
  void subscribe(ConnectionId conn, const std::string& topic);
  void unsubscribe(ConnectionId conn, const std::string& topic);
  void remove_connection(ConnectionId conn);

  // Subscribers other than the publisher, ascending. Registers the publisher
  // on first use. Non-publish envelopes route nowhere.
  std::vector<ConnectionId> route(ConnectionId publisher, const Envelope& e);

  const Entry* find(const std::string& topic) const;
  std::size_t topic_count() const { return topics_.size(); }

 private:
  std::map<std::string, Entry, std::less<>> topics_;
};

}  // namespace viloop::bridge
