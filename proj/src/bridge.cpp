#include "voidface/bridge.hpp"

#include <boost/asio.hpp>
#include <sodium.h>

#include "voidface/error.hpp"

namespace voidface::bridge {

namespace asio = boost::asio;
using nlohmann::json;

std::string base64_encode(std::span<const Byte> bytes) {
  constexpr int variant = sodium_base64_VARIANT_ORIGINAL;
  std::string out(sodium_base64_ENCODED_LEN(bytes.size(), variant), '\0');
  sodium_bin2base64(out.data(), out.size(), bytes.data(), bytes.size(), variant);
  out.resize(out.size() - 1);  // trailing NUL
  return out;
}

std::vector<Byte> base64_decode(std::string_view text) {
  std::vector<Byte> out(text.size() / 4 * 3 + 3);
  std::size_t len = 0;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), nullptr, &len, nullptr,
                        sodium_base64_VARIANT_ORIGINAL) != 0)
    fail(ErrorCode::format, "invalid base64 payload");
  out.resize(len);
  return out;
}

std::vector<Byte> encode_frame(const json& body) {
  const std::string text = body.dump();
  if (text.size() > kMaxFrameBytes) fail(ErrorCode::format, "frame too large");
  const auto n = static_cast<std::uint32_t>(text.size());
  std::vector<Byte> out{static_cast<Byte>(n >> 24), static_cast<Byte>(n >> 16),
                        static_cast<Byte>(n >> 8), static_cast<Byte>(n)};
  out.insert(out.end(), text.begin(), text.end());
  return out;
}

void FrameDecoder::feed(std::span<const Byte> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }

std::optional<std::string> FrameDecoder::next_raw() {
  if (buf_.size() < 4) return std::nullopt;
  const std::uint32_t n = (std::uint32_t{buf_[0]} << 24) | (std::uint32_t{buf_[1]} << 16) |
                          (std::uint32_t{buf_[2]} << 8) | std::uint32_t{buf_[3]};
  if (n > kMaxFrameBytes) {
    buf_.clear();
    fail(ErrorCode::format, "frame length " + std::to_string(n) + " exceeds limit");
  }
  if (buf_.size() < 4 + std::size_t{n}) return std::nullopt;
  std::string body(buf_.begin() + 4, buf_.begin() + 4 + n);
  buf_.erase(buf_.begin(), buf_.begin() + 4 + n);
  return body;
}

std::optional<json> FrameDecoder::next() {
  auto raw = next_raw();
  if (!raw) return std::nullopt;
  try {
    return json::parse(*raw);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::format, std::string("malformed frame: ") + e.what());
  }
}

namespace {

class TcpChannel final : public FrameChannel {
 public:
  TcpChannel(const std::string& host, std::uint16_t port) : socket_(io_) {
    boost::system::error_code ec;
    asio::ip::tcp::resolver resolver(io_);
    auto endpoints = resolver.resolve(host, std::to_string(port), ec);
    if (!ec) asio::connect(socket_, endpoints, ec);
    if (ec) fail(ErrorCode::trainer, "cannot connect to " + host + ":" + std::to_string(port) + ": " + ec.message());
  }

  void send(const json& body) override {
    auto frame = encode_frame(body);
    boost::system::error_code ec;
    asio::write(socket_, asio::buffer(frame), ec);
    if (ec) fail(ErrorCode::io, "bridge send failed: " + ec.message());
  }

  json receive(std::chrono::milliseconds timeout) override {
    for (;;) {
      if (auto frame = decoder_.next()) return *frame;
      std::array<Byte, 65536> chunk;
      boost::system::error_code ec = asio::error::would_block;
      std::size_t got = 0;
      socket_.async_read_some(asio::buffer(chunk), [&](const boost::system::error_code& e, std::size_t n) {
        ec = e;
        got = n;
      });
      io_.restart();
      io_.run_for(timeout);
      if (ec == asio::error::would_block) {
        socket_.cancel();
        io_.restart();
        io_.run();
        fail(ErrorCode::io, "bridge receive timed out");
      }
      if (ec) fail(ErrorCode::io, "bridge receive failed: " + ec.message());
      decoder_.feed(std::span<const Byte>(chunk.data(), got));
    }
  }

 private:
  asio::io_context io_;
  asio::ip::tcp::socket socket_;
  FrameDecoder decoder_;
};

}  // namespace

std::unique_ptr<FrameChannel> connect_tcp(const std::string& host, std::uint16_t port) {
  return std::make_unique<TcpChannel>(host, port);
}

}  // namespace voidface::bridge
