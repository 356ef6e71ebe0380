// SPDX-License-Identifier: Apache-2.0
#include "viloop/bridge/topics.hpp"

#include <array>

namespace viloop::bridge {

namespace {

constexpr std::array kCatalog = {
    TopicSchema{topic::kOdom, "pose", Direction::RobotToSim,
                "physical pose: position {x,y,z} m, orientation quaternion {x,y,z,w}"},
    TopicSchema{topic::kReset, "bool", Direction::RobotToSim, "start a new episode"},
    TopicSchema{topic::kPause, "bool", Direction::RobotToSim, "freeze the digital twin"},
    TopicSchema{topic::kResume, "bool", Direction::RobotToSim,
                "re-anchor and unfreeze the digital twin"},
    TopicSchema{topic::kCmdVel, "twist", Direction::RobotToSim,
                "linear.x m/s, angular.z rad/s; internal kinematics mode only"},
    TopicSchema{topic::kPoseDigital, "pose", Direction::SimToRobot, "digital twin pose"},
    TopicSchema{topic::kCollision, "collision", Direction::SimToRobot,
                "virtual collision flag and obstacle id"},
    TopicSchema{topic::kLidar, "lidar", Direction::SimToRobot, "synthetic range grid"},
    TopicSchema{topic::kCameraDepth, "image_f32", Direction::SimToRobot,
                "synthetic depth image, metres"},
    TopicSchema{topic::kCameraSemantic, "image_u8", Direction::SimToRobot,
                "synthetic semantic class image"},
};

}  // namespace

std::span<const TopicSchema> standard_topics() { return kCatalog; }

const TopicSchema* find_standard_topic(std::string_view name) {
  for (const auto& t : kCatalog) {
    if (t.topic == name) return &t;
  }
  return nullptr;
}

void TopicTable::advertise(ConnectionId conn, const std::string& topic, std::string schema) {
  Entry& e = topics_[topic];
  e.publishers.insert(conn);
  if (!schema.empty()) e.schema = std::move(schema);
}

void TopicTable::subscribe(ConnectionId conn, const std::string& topic) {
  topics_[topic].subscribers.insert(conn);
}

void TopicTable::unsubscribe(ConnectionId conn, const std::string& topic) {
  auto it = topics_.find(topic);
  if (it != topics_.end()) it->second.subscribers.erase(conn);
}

void TopicTable::remove_connection(ConnectionId conn) {
  for (auto& [name, entry] : topics_) {
    entry.publishers.erase(conn);
    entry.subscribers.erase(conn);
  }
}

std::vector<ConnectionId> TopicTable::route(ConnectionId publisher, const Envelope& e) {
  if (e.op != Op::Publish) return {};
  Entry& entry = topics_[e.topic];
  entry.publishers.insert(publisher);
  std::vector<ConnectionId> out;
  out.reserve(entry.subscribers.size());
  for (ConnectionId c : entry.subscribers) {
    if (c != publisher) out.push_back(c);
  }
  return out;
}

const TopicTable::Entry* TopicTable::find(const std::string& topic) const {
  auto it = topics_.find(topic);
  return it == topics_.end() ? nullptr : &it->second;
}

}  // namespace viloop::bridge
