// SPDX-License-Identifier: Apache-2.0
#include "viloop/bridge/envelope.hpp"

#include <cmath>

#include "viloop/error.hpp"

namespace viloop::bridge {

const char* to_string(Op op) noexcept {
  switch (op) {
    case Op::Advertise: return "advertise";
    case Op::Subscribe: return "subscribe";
    case Op::Publish: return "publish";
    case Op::Status: return "status";
  }
  return "status";
}

std::optional<Op> op_from_string(std::string_view name) noexcept {
  if (name == "advertise") return Op::Advertise;
  if (name == "subscribe") return Op::Subscribe;
  if (name == "publish") return Op::Publish;
  if (name == "status") return Op::Status;
  return std::nullopt;
}

namespace {

void check_topic(std::string_view topic) {
  if (topic.empty() || topic.size() > kMaxTopicBytes) {
    throw Error(Errc::MalformedJson, "topic must be 1.." + std::to_string(kMaxTopicBytes) + " bytes");
  }
}

std::uint32_t read_prefix(std::string_view bytes) {
  return (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[0])) << 24) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[1])) << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[2])) << 8) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[3]));
}

}  // namespace

std::string encode_body(const Envelope& e) {
  check_topic(e.topic);
  if (!std::isfinite(e.stamp)) throw Error(Errc::MalformedJson, "stamp must be finite");
  json j = {{"op", to_string(e.op)},
            {"topic", e.topic},
            {"seq", e.seq},
            {"stamp", e.stamp},
            {"msg", e.msg}};
  try {
    return j.dump();
  } catch (const json::exception& ex) {
    throw Error(Errc::MalformedJson, ex.what());
  }
}

std::string frame_encode(const Envelope& e) {
  const std::string body = encode_body(e);
  if (body.size() > kMaxFrameBytes) {
    throw Error(Errc::OversizeFrame, "frame body of " + std::to_string(body.size()) + " bytes");
  }
  const auto n = static_cast<std::uint32_t>(body.size());
  std::string out;
  out.reserve(kLengthPrefixBytes + body.size());
  out.push_back(static_cast<char>((n >> 24) & 0xff));
  out.push_back(static_cast<char>((n >> 16) & 0xff));
  out.push_back(static_cast<char>((n >> 8) & 0xff));
  out.push_back(static_cast<char>(n & 0xff));
  out += body;
  return out;
}

Envelope decode_body(std::string_view body) {
  json j = json::parse(body.begin(), body.end(), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(Errc::MalformedJson, "frame body is not a JSON object");
  }
  auto field = [&](const char* key) -> const json& {
    auto it = j.find(key);
    if (it == j.end()) throw Error(Errc::MalformedJson, std::string("missing key ") + key);
    return *it;
  };

  const json& op = field("op");
  if (!op.is_string()) throw Error(Errc::MalformedJson, "op must be a string");
  const auto parsed_op = op_from_string(op.get_ref<const std::string&>());
  if (!parsed_op) throw Error(Errc::UnknownOp, "unknown op " + op.get<std::string>());

  const json& topic = field("topic");
  if (!topic.is_string()) throw Error(Errc::MalformedJson, "topic must be a string");
  const json& seq = field("seq");
  if (!seq.is_number_unsigned()) {
    throw Error(Errc::MalformedJson, "seq must be a non-negative integer");
  }
  const json& stamp = field("stamp");
  if (!stamp.is_number()) throw Error(Errc::MalformedJson, "stamp must be a number");

  Envelope e;
  e.op = *parsed_op;
  e.topic = topic.get<std::string>();
  check_topic(e.topic);
  e.seq = seq.get<std::uint64_t>();
  e.stamp = stamp.get<double>();
  e.msg = field("msg");
  return e;
}

Envelope frame_decode(std::string_view bytes) {
  if (bytes.size() < kLengthPrefixBytes) throw Error(Errc::MalformedJson, "truncated length prefix");
  const std::uint32_t n = read_prefix(bytes);
  if (n > kMaxFrameBytes) {
    throw Error(Errc::OversizeFrame, "frame announces " + std::to_string(n) + " bytes");
  }
  if (bytes.size() - kLengthPrefixBytes != n) {
    throw Error(Errc::MalformedJson, "length prefix does not match frame size");
  }
  return decode_body(bytes.substr(kLengthPrefixBytes));
}

void FrameReader::feed(const char* data, std::size_t size) {
  if (consumed_ > 0 && consumed_ == buffer_.size()) {
    buffer_.clear();
    consumed_ = 0;
  } else if (consumed_ > (1u << 20)) {
    buffer_.erase(0, consumed_);
    consumed_ = 0;
  }
  buffer_.append(data, size);
}

std::optional<std::string> FrameReader::next_body() {
  const std::string_view pending = std::string_view(buffer_).substr(consumed_);
  if (pending.size() < kLengthPrefixBytes) return std::nullopt;
  const std::uint32_t n = read_prefix(pending);
  if (n > kMaxFrameBytes) {
    throw Error(Errc::OversizeFrame, "frame announces " + std::to_string(n) + " bytes");
  }
  if (pending.size() - kLengthPrefixBytes < n) return std::nullopt;
  std::string body(pending.substr(kLengthPrefixBytes, n));
  consumed_ += kLengthPrefixBytes + n;
  return body;
}

}  // namespace viloop::bridge
