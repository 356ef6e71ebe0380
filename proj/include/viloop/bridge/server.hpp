// SPDX-License-Identifier: Apache-2.0
//
// TCP pub/sub server. Each client connection gets a reader and a writer
// thread; published envelopes are routed through one shared TopicTable. An
// in-process endpoint (connection id 0) lets the orchestrator subscribe and
// publish without a socket.
//
// Server-originated frames use op "status" on topic /bridge/status with a msg
// of the form {"code": ..., ...}:
//   ping     every ping_interval; clients answer with any frame
//   ack      after a successful advertise or subscribe, echoes op and topic
//   warning  non-fatal problem (e.g. non-increasing seq); frame dropped
//   error    fatal problem; the connection is closed after this frame
#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "viloop/bridge/envelope.hpp"
#include "viloop/bridge/topics.hpp"

namespace viloop::bridge {

inline constexpr std::uint16_t kDefaultPort = 9870;
inline constexpr ConnectionId kLocalConnection = 0;

struct ServerConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = kDefaultPort;  // 0 picks a free port
  std::size_t outbound_capacity = 256;
  std::chrono::milliseconds ping_interval{2000};
  std::chrono::milliseconds silence_timeout{10000};
};

struct ServerStats {
  std::uint64_t accepted = 0;
  std::uint64_t frames_in = 0;
  std::uint64_t deliveries = 0;
  std::uint64_t stale_seq_drops = 0;
  std::uint64_t protocol_errors = 0;
  std::uint64_t overflow_disconnects = 0;
  std::uint64_t timeout_disconnects = 0;
};

class Server {
 public:
  using LocalHandler = std::function<void(const Envelope&)>;
  using LogHandler = std::function<void(const std::string&)>;

  explicit Server(ServerConfig config = {});
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds and starts accepting. Throws Error(IoError).
  void start();
  void stop();
  std::uint16_t port() const { return bound_port_; }

  // Handlers run on the publishing connection's reader thread.
  void local_subscribe(const std::string& topic, LocalHandler handler);
  // Publishes from the in-process endpoint; seq counts per topic.
  void local_publish(const std::string& topic, json msg, double stamp);

  void set_log_handler(LogHandler handler) { log_ = std::move(handler); }

  std::size_t connection_count() const;
  ServerStats stats() const;

 private:
  struct Connection;

  void accept_loop();
  void reader_loop(const std::shared_ptr<Connection>& conn);
  void writer_loop(const std::shared_ptr<Connection>& conn);
  void handle(const std::shared_ptr<Connection>& conn, Envelope e);
  void deliver(ConnectionId from, const Envelope& e);
  void enqueue(Connection& conn, std::shared_ptr<const std::string> frame);
  void send_status(Connection& conn, json msg, bool close_after);
  void reap(bool all);
  void log(const std::string& line) const;

  ServerConfig config_;
  std::uint16_t bound_port_ = 0;
  int listen_fd_ = -1;
  std::atomic<bool> running_{false};
  std::thread acceptor_;

  mutable std::mutex table_mutex_;
  TopicTable table_;
  std::map<std::string, std::vector<LocalHandler>> local_handlers_;
  std::map<std::string, std::uint64_t> local_seq_;

  mutable std::mutex conn_mutex_;
  std::map<ConnectionId, std::shared_ptr<Connection>> connections_;
  ConnectionId next_id_ = 1;

  mutable std::mutex stats_mutex_;
  ServerStats stats_;
  LogHandler log_;
};

}  // namespace viloop::bridge
