// SPDX-License-Identifier: Apache-2.0
//
// Random envelopes and byte strings for the codec property and fuzz tests.
#pragma once

#include <cmath>
#include <random>
#include <string>

#include "viloop/bridge/envelope.hpp"

namespace gen {

using viloop::bridge::Envelope;
using viloop::bridge::json;
using viloop::bridge::Op;

inline std::string utf8_text(std::mt19937_64& g, std::size_t max_len) {
  static const char* const pieces[] = {"a", "Z", "0", "/", "_", " ", "\"", "\\", "\n", "\t",
                                       "\x01", "\xc3\xa9", "\xe2\x82\xac", "\xf0\x9f\x99\x82"};
  std::string s;
  const std::size_t n = g() % (max_len + 1);
  for (std::size_t i = 0; i < n; ++i) s += pieces[g() % std::size(pieces)];
  return s;
}

inline json value(std::mt19937_64& g, int depth) {
  const int kind = static_cast<int>(g() % (depth > 0 ? 9 : 7));
  switch (kind) {
    case 0: return nullptr;
    case 1: return g() % 2 == 0;
    case 2: return static_cast<std::int64_t>(g()) >> (g() % 64);
    case 3: return g() >> (g() % 64);
    case 4: {
      const double x = std::uniform_real_distribution<double>(-1e6, 1e6)(g);
      return g() % 4 == 0 ? x * 1e-300 : x;
    }
    case 5: return utf8_text(g, 12);
    case 6: return std::ldexp(static_cast<double>(g() >> 11), -static_cast<int>(g() % 80));
    case 7: {
      json a = json::array();
      for (std::size_t i = 0, n = g() % 5; i < n; ++i) a.push_back(value(g, depth - 1));
      return a;
    }
    default: {
      json o = json::object();
      for (std::size_t i = 0, n = g() % 5; i < n; ++i) o[utf8_text(g, 6)] = value(g, depth - 1);
      return o;
    }
  }
}

inline Envelope envelope(std::mt19937_64& g) {
  Envelope e;
  e.op = static_cast<Op>(g() % 4);
  e.topic = "/" + utf8_text(g, 40);
  if (e.topic.size() > viloop::bridge::kMaxTopicBytes) e.topic.resize(1);
  e.seq = g() >> (g() % 64);
  e.stamp = std::uniform_real_distribution<double>(0, 1e7)(g);
  e.msg = value(g, 3);
  return e;
}

// Mostly-structured garbage: valid frames with random byte edits, truncated
// frames, random prefixes, and plain noise.
inline std::string fuzz_frame(std::mt19937_64& g) {
  const int mode = static_cast<int>(g() % 5);
  std::string bytes;
  if (mode <= 2) {
    bytes = viloop::bridge::frame_encode(envelope(g));
    const std::size_t edits = 1 + g() % 4;
    for (std::size_t i = 0; i < edits && !bytes.empty(); ++i) {
      const std::size_t pos = g() % bytes.size();
      switch (g() % 3) {
        case 0: bytes[pos] = static_cast<char>(g()); break;
        case 1: bytes.erase(pos, 1 + g() % 8); break;
        default: bytes.insert(pos, 1, static_cast<char>(g())); break;
      }
    }
    if (mode == 2 && bytes.size() >= 4) {
      // Repair the prefix so the body reaches the JSON parser.
      const auto n = static_cast<std::uint32_t>(bytes.size() - 4);
      bytes[0] = static_cast<char>(n >> 24);
      bytes[1] = static_cast<char>(n >> 16);
      bytes[2] = static_cast<char>(n >> 8);
      bytes[3] = static_cast<char>(n);
    }
  } else if (mode == 3) {
    static const char* const bodies[] = {
        R"({"op":"publish","topic":"/a","seq":-1,"stamp":0,"msg":{}})",
        R"({"op":"publish","topic":"/a","seq":1.5,"stamp":0,"msg":{}})",
        R"({"op":"teleport","topic":"/a","seq":1,"stamp":0,"msg":{}})",
        R"({"op":"publish","topic":"","seq":1,"stamp":0,"msg":{}})",
        R"({"op":"publish","topic":"/a","seq":1,"stamp":"now","msg":{}})",
        R"({"op":"publish","topic":"/a","seq":1,"stamp":0})",
        R"([1,2,3])",
        R"({"op":7})",
        "[[[[[[[[[[[[[[[[[[[[[[[[[[[[[[[[[[[[[[[[[[[[[[[[[[[[[[[[[[[",
        "\xff\xfe\xfd",
    };
    const std::string body = bodies[g() % std::size(bodies)];
    const auto n = static_cast<std::uint32_t>(body.size());
    bytes = {static_cast<char>(n >> 24), static_cast<char>(n >> 16), static_cast<char>(n >> 8),
             static_cast<char>(n)};
    bytes += body;
  } else {
    bytes.resize(g() % 64);
    for (char& c : bytes) c = static_cast<char>(g());
  }
  return bytes;
}

}  // namespace gen
