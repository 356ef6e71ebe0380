// SPDX-License-Identifier: Apache-2.0
//
// Wire framing: a 4-byte big-endian body length followed by a UTF-8 JSON
// object {"op", "topic", "seq", "stamp", "msg"}.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

namespace viloop::bridge {

using json = nlohmann::json;

enum class Op { Advertise, Subscribe, Publish, Status };

const char* to_string(Op op) noexcept;
std::optional<Op> op_from_string(std::string_view name) noexcept;

inline constexpr std::size_t kMaxFrameBytes = 16u * 1024u * 1024u;
inline constexpr std::size_t kMaxTopicBytes = 256;
inline constexpr std::size_t kLengthPrefixBytes = 4;

struct Envelope {
  Op op = Op::Publish;
  std::string topic;
  std::uint64_t seq = 0;
  double stamp = 0.0;
  json msg = json::object();

  friend bool operator==(const Envelope&, const Envelope&) = default;
};

// Throws Error(MalformedJson) for an empty or oversized topic, a non-finite
// stamp, or a payload that cannot be serialized (e.g. invalid UTF-8).
std::string encode_body(const Envelope& e);
// Throws Error(OversizeFrame) when the body exceeds kMaxFrameBytes.
std::string frame_encode(const Envelope& e);

// Parses and validates one JSON body. Throws Error(MalformedJson) or
// Error(UnknownOp).
Envelope decode_body(std::string_view body);
// Decodes exactly one complete frame. Throws Error(OversizeFrame) when the
// prefix announces more than kMaxFrameBytes, Error(MalformedJson) when the
// byte count disagrees with the prefix.
Envelope frame_decode(std::string_view bytes);

// Incremental splitter for a byte stream.
class FrameReader {
 public:
  void feed(const char* data, std::size_t size);
  // Next complete body, if buffered. Throws Error(OversizeFrame) as soon as
  // an oversized prefix is seen; the reader is unusable afterwards.
  std::optional<std::string> next_body();
  std::size_t buffered() const { return buffer_.size() - consumed_; }

 private:
  std::string buffer_;
  std::size_t consumed_ = 0;
};

}  // namespace viloop::bridge
