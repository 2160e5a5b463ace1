#pragma once

// Framed JSON protocol shared by the external trainer bridge and the
// simulator's wire format: 4-byte big-endian length, then a UTF-8 JSON body.

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "voidface/types.hpp"

namespace voidface::bridge {

inline constexpr std::uint32_t kMaxFrameBytes = 64u << 20;

std::string base64_encode(std::span<const Byte> bytes);
std::vector<Byte> base64_decode(std::string_view text);  // format error on bad input

std::vector<Byte> encode_frame(const nlohmann::json& body);

// Incremental decoder for a byte stream carrying frames.
class FrameDecoder {
 public:
  void feed(std::span<const Byte> bytes);
  // Next complete frame body, raw. Throws a format error when the length
  // prefix exceeds kMaxFrameBytes.
  std::optional<std::string> next_raw();
  // Next frame parsed as JSON; throws a format error on malformed JSON
  // (the frame is consumed, so the stream stays usable).
  std::optional<nlohmann::json> next();

 private:
  std::vector<Byte> buf_;
};

class FrameChannel {
 public:
  virtual ~FrameChannel() = default;
  virtual void send(const nlohmann::json& body) = 0;
  // Blocks up to `timeout`; io error on timeout or closed peer.
  virtual nlohmann::json receive(std::chrono::milliseconds timeout) = 0;
};

// TCP client channel (Boost.Asio).
std::unique_ptr<FrameChannel> connect_tcp(const std::string& host, std::uint16_t port);

}  // namespace voidface::bridge
