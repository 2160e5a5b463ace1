#include <gtest/gtest.h>

#include <atomic>
#include <boost/asio.hpp>
#include <cmath>
#include <functional>
#include <thread>

#include "test_support.hpp"
#include "voidface/bridge.hpp"
#include "voidface/error.hpp"
#include "voidface/trainer.hpp"

using namespace voidface;
using nlohmann::json;
namespace asio = boost::asio;

namespace {

std::vector<train::SubjectPatches> make_input(BufferRegistry& reg, std::uint8_t tag,
                                              bool blank_mouth = false) {
  std::vector<train::SubjectPatches> in(1);
  in[0].subject = testing_support::subject(tag);
  for (std::uint8_t i = 0; i < 6; ++i) {
    auto p = testing_support::smooth_patch(i, {24, 24, 3}, i);
    if (blank_mouth && i == 5) std::fill(p.pixels.begin(), p.pixels.end(), 0);
    in[0].patches.emplace_back(train::ReconstructedPatch{i, p.dims, SensitiveBuffer(&reg, "p", p.pixels)});
  }
  return in;
}

double l2(const train::Embedding& a, const train::Embedding& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += double(a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

TEST(Bridge, Base64RoundTrip) {
  const std::vector<Byte> data{0, 1, 2, 250, 251, 255, 7};
  EXPECT_EQ(bridge::base64_encode(std::vector<Byte>{'f', 'o', 'o', 'b'}), "Zm9vYg==");
  EXPECT_EQ(bridge::base64_decode(bridge::base64_encode(data)), data);
  EXPECT_TRUE(bridge::base64_decode("").empty());
  EXPECT_THROW(bridge::base64_decode("!!!"), Error);
}

TEST(Bridge, FrameLayoutAndIncrementalDecode) {
  auto f = bridge::encode_frame(json{{"a", 1}});
  ASSERT_EQ(f.size(), 4u + 7u);
  EXPECT_EQ(f[0], 0);
  EXPECT_EQ(f[3], 7);
  EXPECT_EQ(std::string(f.begin() + 4, f.end()), R"({"a":1})");

  bridge::FrameDecoder d;
  auto g = bridge::encode_frame(json{{"b", 2}});
  f.insert(f.end(), g.begin(), g.end());
  d.feed(std::span<const Byte>(f.data(), 3));
  EXPECT_FALSE(d.next());
  d.feed(std::span<const Byte>(f.data() + 3, f.size() - 3));
  EXPECT_EQ(d.next()->at("a"), 1);
  EXPECT_EQ(d.next()->at("b"), 2);
  EXPECT_FALSE(d.next());
}

TEST(Bridge, MalformedFrameDoesNotPoisonStream) {
  bridge::FrameDecoder d;
  std::vector<Byte> bad{0, 0, 0, 3, '{', '{', '{'};
  auto good = bridge::encode_frame(json{{"ok", true}});
  d.feed(bad);
  d.feed(good);
  EXPECT_THROW(d.next(), Error);
  EXPECT_EQ(d.next()->at("ok"), true);

  bridge::FrameDecoder huge;
  huge.feed(std::vector<Byte>{0xFF, 0xFF, 0xFF, 0xFF});
  EXPECT_THROW(huge.next(), Error);
}

TEST(StubTrainer, DeterministicAcrossRuns) {
  BufferRegistry reg;
  train::StubTrainer t1, t2;
  auto in1 = make_input(reg, 1), in2 = make_input(reg, 1);
  auto a = train::train_round(in1, t1, 6);
  auto b = train::train_round(in2, t2, 6);
  const auto& ea = a.embeddings.begin()->second;
  ASSERT_EQ(ea.size(), 512u);
  EXPECT_EQ(ea, b.embeddings.begin()->second);
  EXPECT_EQ(a.metrics.output_digest, b.metrics.output_digest);
  EXPECT_EQ(a.metrics.output_digest.size(), 64u);
  EXPECT_EQ(a.metrics.patches_trained, 6u);
  EXPECT_EQ(reg.live_count(), 0u);
}

TEST(StubTrainer, BlankedPatchChangesOutput) {
  BufferRegistry reg;
  train::StubTrainer t;
  auto full = make_input(reg, 1), blank = make_input(reg, 1, true);
  auto a = train::train_round(full, t, 6).embeddings.begin()->second;
  auto b = train::train_round(blank, t, 6).embeddings.begin()->second;
  EXPECT_GT(l2(a, b), 1e-3);
}

TEST(StubTrainer, ZeroSubjectsIsNoData) {
  train::StubTrainer t;
  std::vector<train::SubjectPatches> none;
  try {
    train::train_round(none, t, 6);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::no_data);
  }
}

namespace {

class ThrowingOn : public train::EmbeddingTrainer {
 public:
  std::uint8_t bad;
  explicit ThrowingOn(std::uint8_t b) : bad(b) {}
  std::string name() const override { return "throwing"; }
  train::Embedding extract(const train::PatchView& p) override {
    if (p.patch_index == bad) fail(ErrorCode::trainer, "boom");
    return inner.extract(p);
  }
  train::Embedding aggregate(const SubjectId& s, std::span<const train::Embedding> f) override {
    seen = std::vector<train::Embedding>(f.begin(), f.end());
    return inner.aggregate(s, f);
  }
  std::vector<train::Embedding> seen;
  train::StubTrainer inner;
};

}  // namespace

TEST(StubTrainer, FailedPatchGetsZeroSubstitute) {
  BufferRegistry reg;
  ThrowingOn t(3);
  auto in = make_input(reg, 1);
  auto out = train::train_round(in, t, 6);
  ASSERT_EQ(out.metrics.failures.size(), 1u);
  EXPECT_EQ(out.metrics.failures[0].patch_index, 3);
  EXPECT_EQ(t.seen[3], train::Embedding(512, 0.0f));
  EXPECT_EQ(reg.live_count(), 0u);
}

namespace {

// Minimal frame server on 127.0.0.1; `handler` maps a request to a reply, or
// to nullopt to drop the connection without answering.
class FakeBridge {
 public:
  using Handler = std::function<std::optional<json>(const json&)>;
  explicit FakeBridge(Handler h) : acceptor_(io_, {asio::ip::make_address("127.0.0.1"), 0}), handler_(std::move(h)) {
    port_ = acceptor_.local_endpoint().port();
    thread_ = std::thread([this] { serve(); });
  }
  ~FakeBridge() {
    stop_ = true;
    boost::system::error_code ec;
    asio::ip::tcp::socket poke(io_);
    poke.connect({asio::ip::make_address("127.0.0.1"), port_}, ec);
    thread_.join();
  }
  std::uint16_t port() const { return port_; }
  std::atomic<int> connections{0};
  std::atomic<int> requests{0};

 private:
  void serve() {
    while (!stop_) {
      asio::ip::tcp::socket sock(io_);
      boost::system::error_code ec;
      acceptor_.accept(sock, ec);
      if (ec || stop_) return;
      ++connections;
      bridge::FrameDecoder dec;
      for (;;) {
        std::array<Byte, 4096> buf;
        auto n = sock.read_some(asio::buffer(buf), ec);
        if (ec) break;
        dec.feed(std::span<const Byte>(buf.data(), n));
        bool drop = false;
        for (;;) {
          std::optional<json> reply;
          try {
            auto req = dec.next();
            if (!req) break;
            ++requests;
            reply = handler_(*req);
            if (!reply) {
              drop = true;
              break;
            }
          } catch (const Error& e) {
            reply = json{{"type", "ERROR"}, {"error", e.what()}};
          }
          auto frame = bridge::encode_frame(*reply);
          asio::write(sock, asio::buffer(frame), ec);
        }
        if (drop) break;
      }
    }
  }

  asio::io_context io_;
  asio::ip::tcp::acceptor acceptor_;
  Handler handler_;
  std::uint16_t port_;
  std::atomic<bool> stop_{false};
  std::thread thread_;
};

// Replies like the stub, decoding the payload it was sent.
std::optional<json> stub_reply(const json& req) {
  static train::StubTrainer stub;
  train::Embedding v;
  if (req.at("op") == "extract") {
    auto bytes = bridge::base64_decode(req.at("payload").get<std::string>());
    Dimensions d{req.at("width"), req.at("height"), req.at("channels")};
    v = stub.extract({SubjectId::parse(req.at("subject").get<std::string>()),
                      req.at("patch_index"), d, bytes});
  } else {
    auto feats = req.at("features").get<std::vector<train::Embedding>>();
    v = stub.aggregate(SubjectId{}, feats);
  }
  return json{{"type", "TRAIN_RESULT"}, {"msg_id", req.at("msg_id")}, {"vector", v}};
}

train::ExternalTrainer::Connector connector(std::uint16_t port) {
  return [port] { return bridge::connect_tcp("127.0.0.1", port); };
}

}  // namespace

TEST(ExternalTrainer, MatchesStubOverTheWire) {
  FakeBridge server(stub_reply);
  train::ExternalTrainer ext(connector(server.port()), 3, std::chrono::seconds(5));
  train::StubTrainer stub;
  BufferRegistry reg;
  auto in1 = make_input(reg, 1), in2 = make_input(reg, 1);
  auto a = train::train_round(in1, ext, 6);
  auto b = train::train_round(in2, stub, 6);
  EXPECT_EQ(a.metrics.trainer, "external");
  EXPECT_TRUE(a.metrics.failures.empty());
  EXPECT_EQ(a.embeddings.begin()->second, b.embeddings.begin()->second);
  EXPECT_EQ(server.connections, 1);
  EXPECT_EQ(server.requests, 7);
}

TEST(ExternalTrainer, ErrorReplyThenRetrySucceeds) {
  std::atomic<int> calls{0};
  FakeBridge server([&](const json& req) -> std::optional<json> {
    if (calls++ == 0) return json{{"type", "ERROR"}, {"msg_id", req.at("msg_id")}, {"error", "busy"}};
    return stub_reply(req);
  });
  train::ExternalTrainer ext(connector(server.port()), 2, std::chrono::seconds(5));
  BufferRegistry reg;
  auto in = make_input(reg, 1);
  auto out = train::train_round(in, ext, 6);
  EXPECT_TRUE(out.metrics.failures.empty());
  EXPECT_EQ(server.connections, 1);
}

TEST(ExternalTrainer, RestartMidRoundRetriesThenFlags) {
  std::atomic<bool> killed_four{false};
  FakeBridge server([&](const json& req) -> std::optional<json> {
    // Patch 2 always kills the connection; patch 4 kills it once.
    if (req.value("patch_index", -1) == 2) return std::nullopt;
    if (req.value("patch_index", -1) == 4 && !killed_four.exchange(true)) return std::nullopt;
    return stub_reply(req);
  });
  train::ExternalTrainer ext(connector(server.port()), 3, std::chrono::seconds(5));
  BufferRegistry reg;
  auto in = make_input(reg, 1);
  auto out = train::train_round(in, ext, 6);
  ASSERT_EQ(out.metrics.failures.size(), 1u);
  EXPECT_EQ(out.metrics.failures[0].patch_index, 2);
  EXPECT_EQ(out.metrics.patches_trained, 5u);
  EXPECT_GE(server.connections, 4);
  EXPECT_EQ(reg.live_count(), 0u);
}

TEST(ExternalTrainer, UnreachableIsTrainerError) {
  std::uint16_t port;
  {
    asio::io_context io;
    asio::ip::tcp::acceptor a(io, {asio::ip::make_address("127.0.0.1"), 0});
    port = a.local_endpoint().port();
  }
  train::ExternalTrainer ext(connector(port), 2, std::chrono::milliseconds(200));
  auto p = testing_support::smooth_patch(0, {4, 4, 3});
  try {
    ext.extract({SubjectId{}, 0, p.dims, p.pixels});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::trainer);
  }
}

TEST(ExternalTrainer, RejectsWrongLengthReply) {
  auto body = json{{"type", "TRAIN_RESULT"}, {"msg_id", 4}, {"vector", std::vector<float>(3)}};
  EXPECT_THROW(train::parse_train_result(body, 4), Error);
  body["vector"] = std::vector<float>(512);
  EXPECT_NO_THROW(train::parse_train_result(body, 4));
  EXPECT_THROW(train::parse_train_result(body, 5), Error);
}
