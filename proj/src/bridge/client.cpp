// SPDX-License-Identifier: Apache-2.0
#include "viloop/bridge/client.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <vector>

#include "viloop/bridge/topics.hpp"
#include "viloop/error.hpp"

namespace viloop::bridge {

Client::~Client() { close(); }

void Client::connect(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res) {
    throw Error(Errc::ConnectionLost, "cannot resolve " + host);
  }
  fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  const int rc = fd_ < 0 ? -1 : ::connect(fd_, res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc < 0) {
    const std::string why = std::strerror(errno);
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
    throw Error(Errc::ConnectionLost,
                "cannot connect to " + host + ":" + std::to_string(port) + ": " + why);
  }
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  connected_ = true;
  receiver_ = std::thread([this] { receive_loop(); });
}

void Client::close() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
  if (receiver_.joinable() && receiver_.get_id() != std::this_thread::get_id()) receiver_.join();
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
  connected_ = false;
}

void Client::send_raw(const std::string& bytes) {
  std::lock_guard lock(send_mutex_);
  if (!connected_) throw Error(Errc::ConnectionLost, "client is not connected");
  std::size_t off = 0;
  while (off < bytes.size()) {
    const ssize_t n = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      connected_ = false;
      throw Error(Errc::ConnectionLost, std::string("send failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

void Client::send_frame(const Envelope& e) { send_raw(frame_encode(e)); }

void Client::wait_ack(const std::string& key, std::chrono::milliseconds timeout) {
  std::unique_lock lock(ack_mutex_);
  const bool ok = ack_cv_.wait_for(lock, timeout, [&] { return acks_.count(key) > 0 || !connected_; });
  if (!ok || !acks_.count(key)) throw Error(Errc::ConnectionLost, "no acknowledgement for " + key);
  acks_.erase(acks_.find(key));
}

void Client::advertise(const std::string& topic, const std::string& schema,
                       std::chrono::milliseconds timeout) {
  json msg = json::object();
  if (!schema.empty()) msg["schema"] = schema;
  send_frame({Op::Advertise, topic, 0, 0.0, msg});
  wait_ack("advertise " + topic, timeout);
}

void Client::subscribe(const std::string& topic, Handler handler,
                       std::chrono::milliseconds timeout) {
  {
    std::lock_guard lock(handler_mutex_);
    handlers_[topic] = std::move(handler);
  }
  send_frame({Op::Subscribe, topic, 0, 0.0, json::object()});
  wait_ack("subscribe " + topic, timeout);
}

void Client::publish(const std::string& topic, json msg, double stamp) {
  std::uint64_t seq = 0;
  {
    std::lock_guard lock(send_mutex_);
    seq = seq_[topic]++;
  }
  send_frame({Op::Publish, topic, seq, stamp, std::move(msg)});
}

void Client::on_status(Handler handler) {
  std::lock_guard lock(handler_mutex_);
  status_handler_ = std::move(handler);
}

void Client::receive_loop() {
  FrameReader reader;
  std::vector<char> buf(64 * 1024);
  std::uint64_t pong_seq = 0;
  for (;;) {
    const ssize_t n = ::recv(fd_, buf.data(), buf.size(), 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    try {
      reader.feed(buf.data(), static_cast<std::size_t>(n));
      while (auto body = reader.next_body()) {
        Envelope e = decode_body(*body);
        if (e.op == Op::Status) {
          const std::string code = e.msg.value("code", "");
          if (code == "ping") {
            send_frame({Op::Status, topic::kStatus, pong_seq++, 0.0, {{"code", "pong"}}});
            continue;
          }
          if (code == "ack") {
            {
              std::lock_guard lock(ack_mutex_);
              acks_.insert(e.msg.value("op", "") + " " + e.msg.value("topic", ""));
            }
            ack_cv_.notify_all();
            continue;
          }
          Handler h;
          {
            std::lock_guard lock(handler_mutex_);
            h = status_handler_;
          }
          if (h) h(e);
          continue;
        }
        Handler h;
        {
          std::lock_guard lock(handler_mutex_);
          if (auto it = handlers_.find(e.topic); it != handlers_.end()) h = it->second;
        }
        if (h) h(e);
      }
    } catch (const Error&) {
      break;
    }
  }
  connected_ = false;
  ack_cv_.notify_all();
}

}  // namespace viloop::bridge
