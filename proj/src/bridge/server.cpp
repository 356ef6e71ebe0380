// SPDX-License-Identifier: Apache-2.0
#include "viloop/bridge/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>

#include "viloop/error.hpp"

namespace viloop::bridge {

using SteadyClock = std::chrono::steady_clock;

struct Server::Connection {
  ConnectionId id = 0;
  int fd = -1;
  std::thread reader;
  std::thread writer;

  std::mutex mutex;
  std::condition_variable cv;
  std::deque<std::shared_ptr<const std::string>> outbound;
  bool closing = false;  // writer flushes, then shuts the socket down
  std::uint64_t status_seq = 0;
  std::map<std::string, std::uint64_t> last_seq;  // reader thread only
  std::atomic<int> finished{0};
};

namespace {

bool send_all(int fd, const std::string& bytes) {
  std::size_t off = 0;
  while (off < bytes.size()) {
    const ssize_t n = ::send(fd, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    off += static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace

Server::Server(ServerConfig config) : config_(std::move(config)) {}

Server::~Server() { stop(); }

void Server::log(const std::string& line) const {
  if (log_) log_(line);
}

void Server::start() {
  if (running_) return;
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error(Errc::IoError, std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(config_.port);
  if (::inet_pton(AF_INET, config_.host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw Error(Errc::IoError, "invalid listen address " + config_.host);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 ||
      ::listen(listen_fd_, 64) < 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw Error(Errc::IoError,
                "cannot listen on " + config_.host + ":" + std::to_string(config_.port) + ": " + why);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  bound_port_ = ntohs(addr.sin_port);
  running_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void Server::stop() {
  if (!running_.exchange(false)) return;
  if (acceptor_.joinable()) acceptor_.join();
  ::close(listen_fd_);
  listen_fd_ = -1;
  {
    std::lock_guard lock(conn_mutex_);
    for (auto& [id, conn] : connections_) {
      {
        std::lock_guard q(conn->mutex);
        conn->closing = true;
      }
      conn->cv.notify_all();
      ::shutdown(conn->fd, SHUT_RDWR);
    }
  }
  reap(true);
}

void Server::accept_loop() {
  while (running_) {
    pollfd p{listen_fd_, POLLIN, 0};
    const int ready = ::poll(&p, 1, 100);
    reap(false);
    if (ready <= 0 || !(p.revents & POLLIN)) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);

    auto conn = std::make_shared<Connection>();
    conn->fd = fd;
    {
      std::lock_guard lock(conn_mutex_);
      conn->id = next_id_++;
      connections_[conn->id] = conn;
    }
    {
      std::lock_guard lock(stats_mutex_);
      ++stats_.accepted;
    }
    log("connection " + std::to_string(conn->id) + " opened");
    conn->reader = std::thread([this, conn] { reader_loop(conn); });
    conn->writer = std::thread([this, conn] { writer_loop(conn); });
  }
}

void Server::reap(bool all) {
  std::vector<std::shared_ptr<Connection>> done;
  {
    std::lock_guard lock(conn_mutex_);
    for (auto it = connections_.begin(); it != connections_.end();) {
      if (all || it->second->finished.load() == 2) {
        done.push_back(it->second);
        it = connections_.erase(it);
      } else {
        ++it;
      }
    }
  }
  for (auto& conn : done) {
    if (conn->reader.joinable()) conn->reader.join();
    if (conn->writer.joinable()) conn->writer.join();
    ::close(conn->fd);
    {
      std::lock_guard lock(table_mutex_);
      table_.remove_connection(conn->id);
    }
    log("connection " + std::to_string(conn->id) + " closed");
  }
}

void Server::enqueue(Connection& conn, std::shared_ptr<const std::string> frame) {
  bool overflow = false;
  {
    std::lock_guard lock(conn.mutex);
    if (conn.closing) return;
    if (conn.outbound.size() >= config_.outbound_capacity) {
      overflow = true;
    } else {
      conn.outbound.push_back(std::move(frame));
    }
  }
  if (overflow) {
    {
      std::lock_guard lock(stats_mutex_);
      ++stats_.overflow_disconnects;
    }
    log("connection " + std::to_string(conn.id) + " outbound queue overflow");
    {
      std::lock_guard lock(conn.mutex);
      conn.outbound.clear();
    }
    send_status(conn, {{"code", "error"}, {"error", "OutboundOverflow"},
                       {"message", "outbound queue full"}},
                true);
    return;
  }
  conn.cv.notify_one();
}

void Server::send_status(Connection& conn, json msg, bool close_after) {
  {
    std::lock_guard lock(conn.mutex);
    if (conn.closing) return;
    Envelope e{Op::Status, topic::kStatus, conn.status_seq++, 0.0, std::move(msg)};
    conn.outbound.push_back(std::make_shared<const std::string>(frame_encode(e)));
    if (close_after) conn.closing = true;
  }
  conn.cv.notify_one();
}

void Server::writer_loop(const std::shared_ptr<Connection>& conn) {
  auto next_ping = SteadyClock::now() + config_.ping_interval;
  for (;;) {
    std::shared_ptr<const std::string> frame;
    bool ping = false;
    {
      std::unique_lock lock(conn->mutex);
      conn->cv.wait_until(lock, next_ping,
                          [&] { return conn->closing || !conn->outbound.empty(); });
      if (!conn->outbound.empty()) {
        frame = std::move(conn->outbound.front());
        conn->outbound.pop_front();
      } else if (conn->closing) {
        break;
      } else if (SteadyClock::now() >= next_ping) {
        ping = true;
        Envelope e{Op::Status, topic::kStatus, conn->status_seq++, 0.0, {{"code", "ping"}}};
        frame = std::make_shared<const std::string>(frame_encode(e));
      }
    }
    if (ping) next_ping = SteadyClock::now() + config_.ping_interval;
    if (frame && !send_all(conn->fd, *frame)) {
      std::lock_guard lock(conn->mutex);
      conn->closing = true;
      conn->outbound.clear();
      break;
    }
  }
  ::shutdown(conn->fd, SHUT_RDWR);
  conn->finished.fetch_add(1);
}

void Server::reader_loop(const std::shared_ptr<Connection>& conn) {
  FrameReader reader;
  std::vector<char> buf(64 * 1024);
  auto last_rx = SteadyClock::now();
  bool alive = true;
  while (alive) {
    {
      std::lock_guard lock(conn->mutex);
      if (conn->closing) break;
    }
    pollfd p{conn->fd, POLLIN, 0};
    const int ready = ::poll(&p, 1, 100);
    if (ready < 0 && errno != EINTR) break;
    if (ready <= 0) {
      if (SteadyClock::now() - last_rx > config_.silence_timeout) {
        {
          std::lock_guard lock(stats_mutex_);
          ++stats_.timeout_disconnects;
        }
        send_status(*conn, {{"code", "error"}, {"error", "Timeout"}, {"message", "client silent"}},
                    true);
        break;
      }
      continue;
    }
    const ssize_t n = ::recv(conn->fd, buf.data(), buf.size(), 0);
    if (n <= 0) break;
    last_rx = SteadyClock::now();
    try {
      reader.feed(buf.data(), static_cast<std::size_t>(n));
      while (auto body = reader.next_body()) {
        Envelope e = decode_body(*body);
        {
          std::lock_guard lock(stats_mutex_);
          ++stats_.frames_in;
        }
        handle(conn, std::move(e));
      }
    } catch (const Error& err) {
      {
        std::lock_guard lock(stats_mutex_);
        ++stats_.protocol_errors;
      }
      log("connection " + std::to_string(conn->id) + ": " + err.what());
      send_status(*conn,
                  {{"code", "error"}, {"error", to_string(err.code())}, {"message", err.what()}},
                  true);
      alive = false;
    }
  }
  {
    std::lock_guard lock(conn->mutex);
    conn->closing = true;
  }
  conn->cv.notify_all();
  {
    std::lock_guard lock(table_mutex_);
    table_.remove_connection(conn->id);
  }
  conn->finished.fetch_add(1);
}

void Server::handle(const std::shared_ptr<Connection>& conn, Envelope e) {
  switch (e.op) {
    case Op::Status:
      return;  // liveness replies; arrival already refreshed the silence timer
    case Op::Advertise: {
      std::string schema;
      if (e.msg.is_object() && e.msg.contains("schema") && e.msg["schema"].is_string()) {
        schema = e.msg["schema"].get<std::string>();
      }
      {
        std::lock_guard lock(table_mutex_);
        table_.advertise(conn->id, e.topic, std::move(schema));
      }
      send_status(*conn, {{"code", "ack"}, {"op", "advertise"}, {"topic", e.topic}}, false);
      return;
    }
    case Op::Subscribe: {
      {
        std::lock_guard lock(table_mutex_);
        table_.subscribe(conn->id, e.topic);
      }
      send_status(*conn, {{"code", "ack"}, {"op", "subscribe"}, {"topic", e.topic}}, false);
      return;
    }
    case Op::Publish: {
      auto [it, fresh] = conn->last_seq.try_emplace(e.topic, e.seq);
      if (!fresh) {
        if (e.seq <= it->second) {
          {
            std::lock_guard lock(stats_mutex_);
            ++stats_.stale_seq_drops;
          }
          send_status(*conn,
                      {{"code", "warning"},
                       {"error", "StaleSeq"},
                       {"topic", e.topic},
                       {"message", "seq " + std::to_string(e.seq) + " not above " +
                                       std::to_string(it->second)}},
                      false);
          return;
        }
        it->second = e.seq;
      }
      deliver(conn->id, e);
      return;
    }
  }
}

void Server::deliver(ConnectionId from, const Envelope& e) {
  std::vector<ConnectionId> targets;
  std::vector<LocalHandler> local;
  {
    std::lock_guard lock(table_mutex_);
    targets = table_.route(from, e);
    if (!targets.empty() && targets.front() == kLocalConnection) {
      targets.erase(targets.begin());
      if (auto it = local_handlers_.find(e.topic); it != local_handlers_.end()) local = it->second;
    }
  }
  if (!targets.empty()) {
    auto frame = std::make_shared<const std::string>(frame_encode(e));
    std::vector<std::shared_ptr<Connection>> conns;
    {
      std::lock_guard lock(conn_mutex_);
      for (ConnectionId id : targets) {
        if (auto it = connections_.find(id); it != connections_.end()) conns.push_back(it->second);
      }
    }
    for (auto& c : conns) enqueue(*c, frame);
    std::lock_guard lock(stats_mutex_);
    stats_.deliveries += conns.size();
  }
  for (const auto& handler : local) handler(e);
}

void Server::local_subscribe(const std::string& topic, LocalHandler handler) {
  std::lock_guard lock(table_mutex_);
  table_.subscribe(kLocalConnection, topic);
  local_handlers_[topic].push_back(std::move(handler));
}

void Server::local_publish(const std::string& topic, json msg, double stamp) {
  Envelope e;
  e.op = Op::Publish;
  e.topic = topic;
  e.stamp = stamp;
  e.msg = std::move(msg);
  {
    std::lock_guard lock(table_mutex_);
    e.seq = local_seq_[topic]++;
  }
  deliver(kLocalConnection, e);
}

std::size_t Server::connection_count() const {
  std::lock_guard lock(conn_mutex_);
  std::size_t n = 0;
  for (const auto& [id, conn] : connections_) {
    if (conn->finished.load() == 0) ++n;
  }
  return n;
}

ServerStats Server::stats() const {
  std::lock_guard lock(stats_mutex_);
  return stats_;
}

}  // namespace viloop::bridge
