#include <doctest.h>

#include <httplib.h>

#include <mutex>
#include <thread>

#include "anomforge/remote_providers.hpp"
#include "test_support.hpp"

using namespace anomforge;
using nlohmann::json;

namespace {

class FakeModelServer {
 public:
  FakeModelServer() {
    server_.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
      remember(req.body);
      const auto doc = json::parse(req.body);
      const double x = doc.at("kind") == "text" ? static_cast<double>(doc.at("payload").get<std::string>().size()) : 0.0;
      res.set_content(json{{"dim", 3}, {"values", {3.0, 4.0, x}}}.dump(), "application/json");
    });
    server_.Post("/inpaint", [this](const httplib::Request& req, httplib::Response& res) {
      remember(req.body);
      const auto doc = json::parse(req.body);
      auto image = decode_image_payload(doc.at("image").get<std::string>());
      image.fill(rect_from_json(doc.at("mask")), {9, 9, 9});
      json images = json::array();
      for (int i = 0; i < doc.at("n").get<int>(); ++i) images.push_back(encode_image_payload(image));
      res.set_content(json{{"images", images}}.dump(), "application/json");
    });
    server_.Post("/regions", [this](const httplib::Request& req, httplib::Response& res) {
      remember(req.body);
      res.set_content(R"({"regions":[{"x":0,"y":0,"w":2,"h":2,"confidence":0.4},{"x":1,"y":1,"w":3,"h":3,"confidence":0.8}]})",
                      "application/json");
    });
    server_.Post("/vqa", [this](const httplib::Request& req, httplib::Response& res) {
      remember(req.body);
      res.set_content(R"({"answer":"  a cow  "})", "application/json");
    });
    server_.Post("/vqa-blank", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"answer":"   "})", "application/json");
    });
    server_.Post("/describe", [this](const httplib::Request& req, httplib::Response& res) {
      remember(req.body);
      res.set_content(json{{"description", "about " + json::parse(req.body).at("text").get<std::string>()}}.dump(),
                      "application/json");
    });
    server_.Post("/broken", [](const httplib::Request&, httplib::Response& res) {
      res.status = 500;
      res.set_content("boom", "text/plain");
    });
    server_.Post("/garbage", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("{nope", "application/json");
    });
    server_.Post("/lying", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"dim":4,"values":[1,2,3]})", "application/json");
    });
    server_.Post("/wrong-schema", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"vector":[1,2,3]})", "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeModelServer() {
    server_.stop();
    thread_.join();
  }

  std::string url(std::string_view path) const { return fmt::format("http://127.0.0.1:{}{}", port_, path); }
  std::string last_body() {
    std::lock_guard lock(mutex_);
    return last_;
  }

 private:
  void remember(const std::string& body) {
    std::lock_guard lock(mutex_);
    last_ = body;
  }

  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::mutex mutex_;
  std::string last_;
};

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an anomforge::Error");
  return ErrorKind::Usage;
}

}  // namespace

TEST_CASE("parse_endpoint") {
  CHECK(parse_endpoint("http://host:8080/v1/embed").origin == "http://host:8080");
  CHECK(parse_endpoint("http://host:8080/v1/embed").path == "/v1/embed");
  CHECK(parse_endpoint("http://host").path == "/");
  CHECK_THROWS_AS(parse_endpoint("https://host/x"), Error);
  CHECK_THROWS_AS(parse_endpoint("http:///x"), Error);
}

TEST_CASE("image payloads round trip through base64 png") {
  RasterImage img(5, 3, Rgb{1, 2, 3});
  img.set(4, 2, {200, 100, 50});
  CHECK(decode_image_payload(encode_image_payload(img)) == img);
  CHECK(kind_of([] { decode_image_payload("AAAA"); }) == ErrorKind::Provider);
}

TEST_CASE("remote adapters speak the wire protocol") {
  FakeModelServer server;
  const RasterImage img(8, 6, Rgb{5, 5, 5});

  SUBCASE("embed") {
    RemoteEmbeddingProvider embed(HttpJsonTransport(server.url("/embed")), 3);
    const auto v = embed.embed_image(img);
    CHECK(v[0] == doctest::Approx(0.6));
    CHECK(v[1] == doctest::Approx(0.8));
    const auto req = json::parse(server.last_body());
    CHECK(req.at("kind") == "image");
    CHECK(decode_image_payload(req.at("payload").get<std::string>()) == img);
    embed.embed_text("hello");
    CHECK(json::parse(server.last_body()) == json{{"kind", "text"}, {"payload", "hello"}});
  }
  SUBCASE("embed dimension checks") {
    RemoteEmbeddingProvider wrong_dim(HttpJsonTransport(server.url("/embed")), 5);
    CHECK(kind_of([&] { wrong_dim.embed_text("x"); }) == ErrorKind::Provider);
    RemoteEmbeddingProvider lying(HttpJsonTransport(server.url("/lying")), 3);
    CHECK(kind_of([&] { lying.embed_text("x"); }) == ErrorKind::Provider);
    RemoteEmbeddingProvider schema(HttpJsonTransport(server.url("/wrong-schema")), 3);
    CHECK(kind_of([&] { schema.embed_text("x"); }) == ErrorKind::Provider);
  }
  SUBCASE("inpaint") {
    RemoteInpaintingProvider inpaint(HttpJsonTransport(server.url("/inpaint")));
    const auto out = inpaint.inpaint(img, {1, 1, 2, 2}, "a photo of a cow", 3, 99);
    REQUIRE(out.size() == 3);
    CHECK(out[2].at(1, 1) == Rgb{9, 9, 9});
    CHECK(out[2].at(0, 0) == Rgb{5, 5, 5});
    const auto req = json::parse(server.last_body());
    CHECK(req.at("mask") == json{{"x", 1}, {"y", 1}, {"w", 2}, {"h", 2}});
    CHECK(req.at("prompt") == "a photo of a cow");
    CHECK(req.at("n") == 3);
    CHECK(req.at("seed") == 99);
  }
  SUBCASE("regions come back sorted by confidence") {
    RemoteRegionProvider regions(HttpJsonTransport(server.url("/regions")));
    const auto out = regions.propose_regions(img);
    REQUIRE(out.size() == 2);
    CHECK(out[0].confidence == doctest::Approx(0.8));
    CHECK(json::parse(server.last_body()).contains("image"));
  }
  SUBCASE("vqa") {
    RemoteVqaProvider vqa(HttpJsonTransport(server.url("/vqa")));
    CHECK(vqa.answer(img, "what is odd?", {"secret-id", "secret-label"}).find("a cow") != std::string::npos);
    const auto req = json::parse(server.last_body());
    CHECK(req.at("prompt") == "what is odd?");
    CHECK(server.last_body().find("secret") == std::string::npos);
    RemoteVqaProvider blank(HttpJsonTransport(server.url("/vqa-blank")));
    CHECK(kind_of([&] { blank.answer(img, "q"); }) == ErrorKind::Provider);
  }
  SUBCASE("describe") {
    RemoteDescriptionProvider describe(HttpJsonTransport(server.url("/describe")));
    CHECK(describe.describe("cow") == "about cow");
  }
  SUBCASE("transport failures are provider errors") {
    RemoteDescriptionProvider broken(HttpJsonTransport(server.url("/broken")));
    CHECK(kind_of([&] { broken.describe("x"); }) == ErrorKind::Provider);
    RemoteDescriptionProvider garbage(HttpJsonTransport(server.url("/garbage")));
    CHECK(kind_of([&] { garbage.describe("x"); }) == ErrorKind::Provider);
    RemoteDescriptionProvider nobody(HttpJsonTransport("http://127.0.0.1:1/none", nullptr, std::chrono::seconds(2)));
    CHECK(kind_of([&] { nobody.describe("x"); }) == ErrorKind::Provider);
  }
  SUBCASE("trace log holds the exact bytes") {
    testing::TempDir dir;
    auto trace = std::make_shared<TraceLog>(dir / "trace.log");
    RemoteDescriptionProvider describe(HttpJsonTransport(server.url("/describe"), trace));
    describe.describe("cow \"quoted\"");
    const auto sent = server.last_body();
    const auto log = testing::read_file(dir / "trace.log");
    CHECK(log.find(fmt::format("> {} {}\n{}\n", server.url("/describe"), sent.size(), sent)) != std::string::npos);
    const std::string reply = json{{"description", "about cow \"quoted\""}}.dump();
    CHECK(log.find(fmt::format("< {} {}\n{}\n", server.url("/describe"), reply.size(), reply)) != std::string::npos);
  }
}
