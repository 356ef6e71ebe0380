// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>

#include "viloop/bridge/envelope.hpp"

namespace viloop::bridge {

// Blocking TCP client for the bridge. Handlers run on a single receive thread
// in arrival order; publishing from a handler is allowed. Pings are answered
// automatically.
class Client {
 public:
  using Handler = std::function<void(const Envelope&)>;

  Client() = default;
  ~Client();
  Client(const Client&) = delete;
  Client& operator=(const Client&) = delete;

  // Throws Error(ConnectionLost) when the server is unreachable.
  void connect(const std::string& host, std::uint16_t port);
  void close();
  bool connected() const { return connected_.load(); }

  // Both block until the server acknowledges; throw Error(ConnectionLost) on
  // disconnect or timeout.
  void advertise(const std::string& topic, const std::string& schema = {},
                 std::chrono::milliseconds timeout = std::chrono::seconds(5));
  void subscribe(const std::string& topic, Handler handler,
                 std::chrono::milliseconds timeout = std::chrono::seconds(5));

  // seq counts up per topic from 0. Throws Error(ConnectionLost) once closed.
  void publish(const std::string& topic, json msg, double stamp = 0.0);
  // Writes bytes verbatim; for protocol tests.
  void send_raw(const std::string& bytes);

  // Receives every status frame other than pings and acks.
  void on_status(Handler handler);

 private:
  void receive_loop();
  void send_frame(const Envelope& e);
  void wait_ack(const std::string& key, std::chrono::milliseconds timeout);

  int fd_ = -1;
  std::atomic<bool> connected_{false};
  std::thread receiver_;

  std::mutex send_mutex_;
  std::map<std::string, std::uint64_t> seq_;

  std::mutex handler_mutex_;
  std::map<std::string, Handler> handlers_;
  Handler status_handler_;

  std::mutex ack_mutex_;
  std::condition_variable ack_cv_;
  std::multiset<std::string> acks_;
};

}  // namespace viloop::bridge
