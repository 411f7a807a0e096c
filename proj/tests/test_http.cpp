#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "hopbench/http_client.hpp"

using namespace hopbench;

namespace {

// Local chat-completions endpoint that echoes the request and fails the first
// `fail_first` calls with HTTP 503.
struct FakeServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::atomic<int> calls{0};
  int fail_first = 0;
  json last_body;
  std::string last_auth;
  std::mutex mu;

  FakeServer() {
    server.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int n = ++calls;
      {
        std::lock_guard<std::mutex> lock(mu);
        last_body = json::parse(req.body);
        last_auth = req.get_header_value("Authorization");
      }
      if (n <= fail_first) {
        res.status = 503;
        return;
      }
      const auto& content = last_body["messages"].back()["content"];
      std::string echo = content.is_string() ? content.get<std::string>() : content[0]["text"].get<std::string>();
      json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "echo: " + echo}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    server.Post("/bad/chat/completions", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("{\"nothing\": true}", "application/json");
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~FakeServer() {
    server.stop();
    thread.join();
  }
  std::string url(const std::string& path = "/v1") const { return "http://127.0.0.1:" + std::to_string(port) + path; }
};

}  // namespace

TEST(Http, Base64) {
  EXPECT_EQ(base64(""), "");
  EXPECT_EQ(base64("f"), "Zg==");
  EXPECT_EQ(base64("fo"), "Zm8=");
  EXPECT_EQ(base64("foobar"), "Zm9vYmFy");
}

TEST(Http, EndpointParsing) {
  auto e = parse_endpoint("https://api.example.org/v1/");
  EXPECT_EQ(e.origin, "https://api.example.org");
  EXPECT_EQ(e.path, "/v1");
  EXPECT_EQ(parse_endpoint("http://localhost:8080").path, "");
  EXPECT_THROW(parse_endpoint("localhost:8080"), ClientError);
}

TEST(Http, EnvironmentResolution) {
  setenv("HOPBENCH_PARAPHRASER_URL", "http://h/v1", 1);
  setenv("HOPBENCH_PARAPHRASER_MODEL", "m1", 1);
  setenv("HOPBENCH_PARAPHRASER_TOKEN", "t1", 1);
  setenv("CUSTOM_TOKEN_VAR", "t2", 1);
  auto s = resolve_http({"http", "", "", "", ""}, "paraphraser");
  EXPECT_EQ(s.url, "http://h/v1");
  EXPECT_EQ(s.model, "m1");
  EXPECT_EQ(s.token, "t1");
  s = resolve_http({"http", "http://other", "m2", "CUSTOM_TOKEN_VAR", ""}, "paraphraser");
  EXPECT_EQ(s.url, "http://other");
  EXPECT_EQ(s.model, "m2");
  EXPECT_EQ(s.token, "t2");
  s = resolve_http({"http", "http://other", "m2", "", "${CUSTOM_TOKEN_VAR}"}, "paraphraser");
  EXPECT_EQ(s.token, "t2");
  EXPECT_THROW(resolve_http({"http", "http://other", "m2", "", "sk-literal"}, "paraphraser"), ClientError);
  EXPECT_THROW(resolve_http({"http", "http://other", "m2", "", "${UNSET_HOPBENCH_VAR}"}, "paraphraser"), ClientError);
  unsetenv("HOPBENCH_PARAPHRASER_URL");
  EXPECT_THROW(resolve_http({"http", "", "m", "", ""}, "paraphraser"), ClientError);
}

TEST(Http, TextClientRequestShape) {
  FakeServer srv;
  HttpTextClient c({srv.url(), "tiny", "secret"});
  EXPECT_EQ(c.complete({"r1", "Do X.", "payload"}), "echo: payload");
  EXPECT_EQ(srv.last_auth, "Bearer secret");
  EXPECT_EQ(srv.last_body["model"], "tiny");
  EXPECT_EQ(srv.last_body["messages"][0]["role"], "system");
  EXPECT_EQ(srv.last_body["messages"][0]["content"], "Do X.");
}

TEST(Http, MultimodalParts) {
  FakeServer srv;
  HttpMultimodalClient c({srv.url(), "vis", ""}, true);
  Prompt p;
  p.parts = {PromptPart::make_text("look"), PromptPart::make_image("foobar", "image/png")};
  EXPECT_EQ(c.complete(p), "echo: look");
  const auto& content = srv.last_body["messages"][0]["content"];
  ASSERT_EQ(content.size(), 2u);
  EXPECT_EQ(content[1]["image_url"]["url"], "data:image/png;base64,Zm9vYmFy");
  EXPECT_TRUE(srv.last_auth.empty());
}

TEST(Http, TransportErrorsRetry) {
  FakeServer srv;
  srv.fail_first = 2;
  HttpTextClient c({srv.url(), "tiny", ""});
  int used = 0;
  const auto out = with_retries([&] { return c.complete({"r", "i", "x"}); }, RetryPolicy{3, std::chrono::milliseconds(1)},
                                &used);
  EXPECT_EQ(out, "echo: x");
  EXPECT_EQ(used, 3);
  srv.fail_first = 100;
  EXPECT_THROW(with_retries([&] { return c.complete({"r", "i", "x"}); }, RetryPolicy{2, std::chrono::milliseconds(1)}),
               ClientError);
}

TEST(Http, MalformedReplyIsBadResponse) {
  FakeServer srv;
  HttpTextClient c({srv.url("/bad"), "tiny", ""});
  try {
    c.complete({"r", "i", "x"});
    FAIL();
  } catch (const ClientError& e) {
    EXPECT_EQ(e.code(), ClientErrc::BadResponse);
  }
  HttpTextClient unreachable({"http://127.0.0.1:1", "tiny", "", std::chrono::seconds(2)});
  try {
    unreachable.complete({"r", "i", "x"});
    FAIL();
  } catch (const ClientError& e) {
    EXPECT_EQ(e.code(), ClientErrc::Transport);
  }
}

TEST(Http, FactoryKinds) {
  EXPECT_EQ(make_text_client({"stub:rules", "", "", "", ""}, "paraphraser")->endpoint_id(), "stub:rules");
  EXPECT_EQ(make_text_client({"stub:polarity-guard", "", "", "", ""}, "filter")->endpoint_id(), "stub:polarity-guard");
  EXPECT_THROW(make_text_client({"wizard", "", "", "", ""}, "filter"), ClientError);
}
