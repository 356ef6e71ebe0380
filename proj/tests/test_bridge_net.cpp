// SPDX-License-Identifier: Apache-2.0
#include <arpa/inet.h>
#include <gtest/gtest.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <mutex>
#include <thread>

#include "viloop/bridge/client.hpp"
#include "viloop/bridge/server.hpp"
#include "viloop/bridge/topics.hpp"
#include "viloop/error.hpp"

using namespace viloop;
using namespace viloop::bridge;
using namespace std::chrono_literals;

namespace {

// Plain socket that speaks the framing by hand and never answers pings.
class RawConn {
 public:
  explicit RawConn(std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
      throw std::runtime_error("connect failed");
    }
  }
  ~RawConn() { ::close(fd_); }

  void send(const std::string& bytes) { ::send(fd_, bytes.data(), bytes.size(), MSG_NOSIGNAL); }
  void send(const Envelope& e) { send(frame_encode(e)); }

  // Next complete frame body, or nothing on timeout or close.
  std::optional<std::string> next_raw(std::chrono::milliseconds timeout = 3000ms) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      if (auto body = reader_.next_body()) return body;
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) return std::nullopt;
      pollfd p{fd_, POLLIN, 0};
      if (::poll(&p, 1, static_cast<int>(left.count())) <= 0) return std::nullopt;
      char buf[65536];
      const ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
      if (n <= 0) {
        closed_ = true;
        return std::nullopt;
      }
      reader_.feed(buf, static_cast<std::size_t>(n));
    }
  }
  std::optional<Envelope> next(std::chrono::milliseconds timeout = 3000ms) {
    auto body = next_raw(timeout);
    if (!body) return std::nullopt;
    return decode_body(*body);
  }
  // Skips pings.
  std::optional<Envelope> next_non_ping(std::chrono::milliseconds timeout = 3000ms) {
    for (;;) {
      auto e = next(timeout);
      if (!e || !(e->op == Op::Status && e->msg.value("code", "") == "ping")) return e;
    }
  }
  bool wait_closed(std::chrono::milliseconds timeout = 5000ms) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (!closed_ && std::chrono::steady_clock::now() < deadline) next_raw(100ms);
    return closed_;
  }
  int fd() const { return fd_; }

 private:
  int fd_ = -1;
  FrameReader reader_;
  bool closed_ = false;
};

ServerConfig test_config() {
  ServerConfig cfg;
  cfg.port = 0;
  return cfg;
}

template <class Pred>
bool eventually(Pred pred, std::chrono::milliseconds timeout = 5000ms) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (std::chrono::steady_clock::now() < deadline) {
    if (pred()) return true;
    std::this_thread::sleep_for(5ms);
  }
  return pred();
}

struct Inbox {
  std::mutex m;
  std::condition_variable cv;
  std::vector<Envelope> items;

  void push(const Envelope& e) {
    {
      std::lock_guard lock(m);
      items.push_back(e);
    }
    cv.notify_all();
  }
  bool wait_for_count(std::size_t n, std::chrono::milliseconds timeout = 5000ms) {
    std::unique_lock lock(m);
    return cv.wait_for(lock, timeout, [&] { return items.size() >= n; });
  }
};

}  // namespace

TEST(Server, StartFailsOnBusyPort) {
  Server a(test_config());
  a.start();
  ServerConfig cfg;
  cfg.port = a.port();
  Server b(cfg);
  try {
    b.start();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::IoError);
  }
  ServerConfig bad;
  bad.host = "not-an-address";
  EXPECT_THROW(Server(bad).start(), Error);
}

TEST(Server, AckAndEchoIdentity) {
  Server server(test_config());
  server.start();
  RawConn sub(server.port());
  sub.send(Envelope{Op::Subscribe, "/echo", 0, 0, json::object()});
  const auto ack = sub.next_non_ping();
  ASSERT_TRUE(ack);
  EXPECT_EQ(ack->op, Op::Status);
  EXPECT_EQ(ack->topic, topic::kStatus);
  EXPECT_EQ(ack->msg, (json{{"code", "ack"}, {"op", "subscribe"}, {"topic", "/echo"}}));

  Client pub;
  pub.connect("127.0.0.1", server.port());
  pub.advertise("/echo", "text");
  const json msg = {{"text", "hello"}, {"n", 3}};
  pub.publish("/echo", msg, 12.5);
  const auto got = sub.next_non_ping();
  ASSERT_TRUE(got);
  EXPECT_EQ(*got, (Envelope{Op::Publish, "/echo", 0, 12.5, msg}));
}

TEST(Server, PublishWithoutSubscribersIsDropped) {
  Server server(test_config());
  server.start();
  Client pub;
  pub.connect("127.0.0.1", server.port());
  pub.publish("/nobody", json{{"x", 1}});
  Client probe;  // round trip to make sure the publish was processed
  probe.connect("127.0.0.1", server.port());
  probe.subscribe("/other", [](const Envelope&) {});
  pub.advertise("/sync");
  EXPECT_EQ(server.stats().deliveries, 0u);
  EXPECT_EQ(server.stats().frames_in, 3u);
}

TEST(Server, TwoSubscribersGetIdenticalBytes) {
  Server server(test_config());
  server.start();
  RawConn a(server.port()), b(server.port());
  for (RawConn* c : {&a, &b}) {
    c->send(Envelope{Op::Subscribe, "/t", 0, 0, json::object()});
    ASSERT_TRUE(c->next_non_ping());
  }
  Client pub;
  pub.connect("127.0.0.1", server.port());
  pub.publish("/t", json{{"v", 1.25}, {"s", "\xc3\xa9"}}, 3.0);
  const auto x = a.next_raw(), y = b.next_raw();
  ASSERT_TRUE(x && y);
  EXPECT_EQ(*x, *y);
}

TEST(Server, PublisherDoesNotReceiveItsOwnMessages) {
  Server server(test_config());
  server.start();
  Inbox self, other;
  Client a, b;
  a.connect("127.0.0.1", server.port());
  b.connect("127.0.0.1", server.port());
  a.subscribe("/t", [&](const Envelope& e) { self.push(e); });
  b.subscribe("/t", [&](const Envelope& e) { other.push(e); });
  a.publish("/t", json{{"n", 1}});
  ASSERT_TRUE(other.wait_for_count(1));
  EXPECT_FALSE(self.wait_for_count(1, 200ms));
}

TEST(Server, StaleSeqWarnsAndDrops) {
  Server server(test_config());
  server.start();
  Inbox got, status;
  Client sub;
  sub.connect("127.0.0.1", server.port());
  sub.subscribe("/t", [&](const Envelope& e) { got.push(e); });
  RawConn pub(server.port());
  pub.send(Envelope{Op::Publish, "/t", 5, 0, {{"n", 1}}});
  pub.send(Envelope{Op::Publish, "/t", 5, 0, {{"n", 2}}});
  pub.send(Envelope{Op::Publish, "/t", 4, 0, {{"n", 3}}});
  pub.send(Envelope{Op::Publish, "/t", 6, 0, {{"n", 4}}});
  pub.send(Envelope{Op::Publish, "/u", 0, 0, {{"n", 5}}});  // independent per topic
  for (int i = 0; i < 2; ++i) {
    const auto w = pub.next_non_ping();
    ASSERT_TRUE(w);
    EXPECT_EQ(w->msg["code"], "warning");
    EXPECT_EQ(w->msg["error"], "StaleSeq");
  }
  ASSERT_TRUE(got.wait_for_count(2));
  EXPECT_EQ(got.items[0].msg["n"], 1);
  EXPECT_EQ(got.items[1].msg["n"], 4);
  EXPECT_EQ(server.stats().stale_seq_drops, 2u);
}

TEST(Server, MalformedFrameSendsErrorThenCloses) {
  Server server(test_config());
  server.start();
  RawConn c(server.port());
  const std::string junk = "not json at all";
  const auto n = static_cast<char>(junk.size());
  c.send(std::string{0, 0, 0, n} + junk);
  const auto err = c.next_non_ping();
  ASSERT_TRUE(err);
  EXPECT_EQ(err->msg["code"], "error");
  EXPECT_EQ(err->msg["error"], "MalformedJson");
  EXPECT_TRUE(c.wait_closed());
  EXPECT_TRUE(eventually([&] { return server.connection_count() == 0; }));
  EXPECT_EQ(server.stats().protocol_errors, 1u);
}

TEST(Server, UnknownOpAndOversizeClose) {
  Server server(test_config());
  server.start();
  {
    RawConn c(server.port());
    const std::string body = R"({"op":"fly","topic":"/a","seq":0,"stamp":0,"msg":{}})";
    c.send(std::string{0, 0, 0, static_cast<char>(body.size())} + body);
    const auto err = c.next_non_ping();
    ASSERT_TRUE(err);
    EXPECT_EQ(err->msg["error"], "UnknownOp");
    EXPECT_TRUE(c.wait_closed());
  }
  {
    RawConn c(server.port());
    c.send(std::string{0x01, 0x00, 0x00, 0x01});
    const auto err = c.next_non_ping();
    ASSERT_TRUE(err);
    EXPECT_EQ(err->msg["error"], "OversizeFrame");
    EXPECT_TRUE(c.wait_closed());
  }
}

TEST(Server, PingAndSilenceTimeout) {
  ServerConfig cfg = test_config();
  cfg.ping_interval = 100ms;
  cfg.silence_timeout = 600ms;
  Server server(cfg);
  server.start();
  RawConn silent(server.port());
  const auto ping = silent.next(1000ms);
  ASSERT_TRUE(ping);
  EXPECT_EQ(ping->msg["code"], "ping");
  std::optional<Envelope> last;
  while (auto e = silent.next(2000ms)) last = e;
  ASSERT_TRUE(last);
  EXPECT_EQ(last->msg["code"], "error");
  EXPECT_EQ(last->msg["error"], "Timeout");
  EXPECT_TRUE(silent.wait_closed());
  EXPECT_EQ(server.stats().timeout_disconnects, 1u);

  // A client that answers pings stays connected.
  Client live;
  live.connect("127.0.0.1", server.port());
  std::this_thread::sleep_for(1500ms);
  EXPECT_TRUE(live.connected());
  EXPECT_EQ(server.connection_count(), 1u);
}

TEST(Server, SlowSubscriberOverflowIsIsolated) {
  Server server(test_config());
  server.start();
  RawConn slow(server.port());
  slow.send(Envelope{Op::Subscribe, "/bulk", 0, 0, json::object()});
  ASSERT_TRUE(slow.next_non_ping());

  Inbox fast_box;
  Client fast;
  fast.connect("127.0.0.1", server.port());
  fast.subscribe("/bulk", [&](const Envelope& e) { fast_box.push(e); });

  Client pub;
  pub.connect("127.0.0.1", server.port());
  const std::string blob(16 * 1024, 'x');
  const std::size_t total = 1500;
  for (std::size_t i = 0; i < total; ++i) pub.publish("/bulk", json{{"i", i}, {"blob", blob}});
  ASSERT_TRUE(fast_box.wait_for_count(total, 20000ms));
  for (std::size_t i = 0; i < total; ++i) EXPECT_EQ(fast_box.items[i].msg["i"], i);
  EXPECT_TRUE(eventually([&] { return server.stats().overflow_disconnects == 1; }));

  // Drain the slow socket: data, then the overflow error, then close.
  std::optional<Envelope> last;
  while (auto e = slow.next(2000ms)) last = e;
  ASSERT_TRUE(last);
  EXPECT_EQ(last->msg["code"], "error");
  EXPECT_EQ(last->msg["error"], "OutboundOverflow");
  EXPECT_TRUE(slow.wait_closed());
}

TEST(Server, LocalEndpoint) {
  Server server(test_config());
  server.start();
  Inbox local, remote;
  server.local_subscribe("/in", [&](const Envelope& e) { local.push(e); });
  Client c;
  c.connect("127.0.0.1", server.port());
  c.subscribe("/out", [&](const Envelope& e) { remote.push(e); });
  c.publish("/in", json{{"k", 1}}, 0.5);
  ASSERT_TRUE(local.wait_for_count(1));
  EXPECT_EQ(local.items[0].msg["k"], 1);
  server.local_publish("/out", json{{"r", 2}}, 1.0);
  server.local_publish("/out", json{{"r", 3}}, 2.0);
  ASSERT_TRUE(remote.wait_for_count(2));
  EXPECT_EQ(remote.items[0].seq, 0u);
  EXPECT_EQ(remote.items[1].seq, 1u);
}

TEST(Client, ErrorsAndStatus) {
  Client c;
  try {
    c.connect("127.0.0.1", 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ConnectionLost);
  }
  Server server(test_config());
  server.start();
  Client d;
  d.connect("127.0.0.1", server.port());
  Inbox status;
  d.on_status([&](const Envelope& e) { status.push(e); });
  d.send_raw(std::string{0, 0, 0, 2} + "{}");
  ASSERT_TRUE(status.wait_for_count(1));
  EXPECT_EQ(status.items[0].msg["code"], "error");
  EXPECT_TRUE(eventually([&] { return !d.connected(); }));
  EXPECT_THROW(d.publish("/x", json::object()), Error);
}

TEST(Client, ChurnKeepsExactlyOnceOrder) {
  Server server(test_config());
  server.start();
  std::atomic<bool> stop{false};
  std::atomic<std::uint64_t> published{0};
  std::thread producer([&] {
    Client pub;
    pub.connect("127.0.0.1", server.port());
    std::uint64_t n = 0;
    while (!stop) {
      pub.publish("/churn", json{{"n", n++}});
      published = n;
      if (n % 50 == 0) std::this_thread::sleep_for(1ms);
    }
  });
  for (int round = 0; round < 20; ++round) {
    Inbox box;
    {
      Client sub;
      sub.connect("127.0.0.1", server.port());
      sub.subscribe("/churn", [&](const Envelope& e) { box.push(e); });
      ASSERT_TRUE(box.wait_for_count(20, 5000ms));
      sub.close();
    }
    std::lock_guard lock(box.m);
    for (std::size_t i = 1; i < box.items.size(); ++i) {
      ASSERT_EQ(box.items[i].msg["n"].get<std::uint64_t>(),
                box.items[i - 1].msg["n"].get<std::uint64_t>() + 1)
          << "round " << round;
      ASSERT_EQ(box.items[i].seq, box.items[i - 1].seq + 1);
    }
  }
  stop = true;
  producer.join();
  EXPECT_GT(published.load(), 100u);
  EXPECT_TRUE(eventually([&] { return server.connection_count() == 0; }));
}
