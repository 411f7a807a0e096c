#pragma once

// OpenAI-compatible chat-completions clients. Link hopbench_http.

#include <openssl/evp.h>

#include <cstdlib>
#include <memory>
#include <string>

#include "httplib.h"
#include "hopbench/clients.hpp"
#include "hopbench/composer.hpp"
#include "hopbench/paraphrase.hpp"
#include "hopbench/pipeline.hpp"

namespace hopbench {

inline std::string base64(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // prefix of /chat/completions, e.g. "/v1"
};

inline Endpoint parse_endpoint(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos || (url.compare(0, scheme, "http") != 0 && url.compare(0, scheme, "https") != 0)) {
    throw ClientError(ClientErrc::Config, "endpoint url needs http:// or https://: '" + url + "'");
  }
  const auto slash = url.find('/', scheme + 3);
  Endpoint e{url.substr(0, slash), slash == std::string::npos ? "" : url.substr(slash)};
  while (!e.path.empty() && e.path.back() == '/') e.path.pop_back();
  return e;
}

struct HttpSettings {
  std::string url;
  std::string model;
  std::string token;
  std::chrono::seconds timeout{120};
  std::chrono::milliseconds min_interval{0};
  int max_tokens = 512;
};

inline std::string env_or_empty(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  return v ? v : "";
}

// Expands "${VAR}" references. Text outside references is refused so that a
// config file never carries a secret itself.
inline std::string interpolate_secret(const std::string& t) {
  std::string out;
  std::size_t i = 0;
  while (i < t.size()) {
    if (t.compare(i, 2, "${") != 0) throw ClientError(ClientErrc::Config, "token must be a ${VAR} reference");
    const auto end = t.find('}', i);
    if (end == std::string::npos) throw ClientError(ClientErrc::Config, "unterminated ${ in token");
    const auto name = t.substr(i + 2, end - i - 2);
    const char* v = std::getenv(name.c_str());
    if (!v) throw ClientError(ClientErrc::Config, "token variable " + name + " is not set");
    out += v;
    i = end + 1;
  }
  return out;
}

// Fills url/model/token from HOPBENCH_<ROLE>_URL, _MODEL and _TOKEN when the
// config leaves them empty. A token reference or a named token_env wins over
// the role variable.
inline HttpSettings resolve_http(const ClientConfig& c, const std::string& role) {
  const auto env = env_or_empty;
  std::string upper;
  for (char ch : role) upper += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  HttpSettings s;
  s.url = c.url.empty() ? env("HOPBENCH_" + upper + "_URL") : c.url;
  s.model = c.model.empty() ? env("HOPBENCH_" + upper + "_MODEL") : c.model;
  s.token = !c.token.empty() ? interpolate_secret(c.token)
                             : env(c.token_env.empty() ? "HOPBENCH_" + upper + "_TOKEN" : c.token_env);
  if (s.url.empty()) throw ClientError(ClientErrc::Config, role + ": no endpoint url");
  if (s.model.empty()) throw ClientError(ClientErrc::Config, role + ": no model name");
  return s;
}

class ChatCompletionsTransport {
 public:
  explicit ChatCompletionsTransport(HttpSettings s) : s_(std::move(s)), ep_(parse_endpoint(s_.url)) {}

  std::string id() const { return "http:" + s_.model + "@" + s_.url; }
  const HttpSettings& settings() const { return s_; }

  std::string post(const json& messages) {
    RateLimiterRegistry::global().get(id(), s_.min_interval).acquire();
    json body = {{"model", s_.model}, {"messages", messages}, {"temperature", 0}, {"max_tokens", s_.max_tokens}};
    httplib::Client cli(ep_.origin);
    cli.set_connection_timeout(s_.timeout);
    cli.set_read_timeout(s_.timeout);
    cli.set_write_timeout(s_.timeout);
    httplib::Headers headers;
    if (!s_.token.empty()) headers.emplace("Authorization", "Bearer " + s_.token);
    auto res = cli.Post(ep_.path + "/chat/completions", headers, body.dump(), "application/json");
    if (!res) throw ClientError(ClientErrc::Transport, id() + ": " + httplib::to_string(res.error()));
    if (res->status == 429 || res->status >= 500) {
      throw ClientError(ClientErrc::Transport, id() + ": HTTP " + std::to_string(res->status));
    }
    if (res->status != 200) {
      throw ClientError(ClientErrc::BadResponse, id() + ": HTTP " + std::to_string(res->status) + " " +
                                                     res->body.substr(0, 200));
    }
    try {
      const auto j = json::parse(res->body);
      const auto& content = j.at("choices").at(0).at("message").at("content");
      if (content.is_string()) return content.get<std::string>();
      std::string out;
      for (const auto& part : content) {
        if (part.value("type", "") == "text") out += part.value("text", "");
      }
      return out;
    } catch (const json::exception& e) {
      throw ClientError(ClientErrc::BadResponse, id() + ": " + e.what());
    }
  }

 private:
  HttpSettings s_;
  Endpoint ep_;
};

class HttpTextClient : public TextModelClient {
 public:
  explicit HttpTextClient(HttpSettings s) : t_(std::move(s)) {}
  std::string endpoint_id() const override { return t_.id(); }
  std::string complete(const TextRequest& r) override {
    json messages = json::array();
    messages.push_back({{"role", "system"}, {"content", r.instruction}});
    messages.push_back({{"role", "user"}, {"content", r.content}});
    return t_.post(messages);
  }

 private:
  ChatCompletionsTransport t_;
};

// Image parts become data URLs in the OpenAI content-part format.
inline json chat_content(const Prompt& p) {
  json parts = json::array();
  for (const auto& part : p.parts) {
    if (part.type == PromptPart::Type::Text) {
      parts.push_back({{"type", "text"}, {"text", part.text}});
    } else {
      parts.push_back({{"type", "image_url"},
                       {"image_url", {{"url", "data:" + part.media_type + ";base64," + base64(part.bytes)}}}});
    }
  }
  return parts;
}

class HttpMultimodalClient : public MultimodalModelClient {
 public:
  HttpMultimodalClient(HttpSettings s, bool images) : t_(std::move(s)), images_(images) {}
  std::string endpoint_id() const override { return t_.id(); }
  bool accepts_images() const override { return images_; }
  std::string complete(const Prompt& p) override {
    json messages = json::array();
    messages.push_back({{"role", "user"}, {"content", chat_content(p)}});
    return t_.post(messages);
  }

 private:
  ChatCompletionsTransport t_;
  bool images_;
};

// Text clients by config kind: the built-in stubs or "http".
inline std::unique_ptr<TextModelClient> make_text_client(const ClientConfig& c, const std::string& role) {
  if (c.kind == "stub:extractive") return std::make_unique<ExtractiveFactStub>();
  if (c.kind == "stub:identity") return std::make_unique<IdentityParaphraser>();
  if (c.kind == "stub:rules") return std::make_unique<RuleParaphraser>();
  if (c.kind == "stub:polarity-guard") return std::make_unique<PolarityGuardFilter>();
  if (c.kind == "stub:always-accept") return std::make_unique<AlwaysAcceptFilter>();
  if (c.kind == "http") return std::make_unique<HttpTextClient>(resolve_http(c, role));
  throw ClientError(ClientErrc::Config, role + ": unknown client kind '" + c.kind + "'");
}

}  // namespace hopbench
