#pragma once

#include <cstdlib>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "annoteval/annotator.hpp"
#include "annoteval/error.hpp"

// Adapter for the common JSON chat-completion API shape: POST a model name
// and a list of role/content messages, read choices[0].message.content back.
// Attachments ride along by upload reference (name + base64 payload). The
// credential is read from the environment variable named in the provider
// config and never lands in transcripts or reports.

namespace annoteval {

struct ParsedUrl {
  std::string scheme;
  std::string host;
  int port = 0;
  std::string path;
};

inline ParsedUrl parse_url(const std::string& url) {
  ParsedUrl u;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw Error(ErrorCode::BadFormat, "endpoint URL lacks a scheme").with("url", url);
  u.scheme = url.substr(0, scheme_end);
  auto rest = url.substr(scheme_end + 3);
  auto slash = rest.find('/');
  std::string authority = slash == std::string::npos ? rest : rest.substr(0, slash);
  u.path = slash == std::string::npos ? "/" : rest.substr(slash);
  auto colon = authority.rfind(':');
  if (colon != std::string::npos) {
    u.host = authority.substr(0, colon);
    u.port = std::atoi(authority.c_str() + colon + 1);
  } else {
    u.host = authority;
    u.port = u.scheme == "https" ? 443 : 80;
  }
  if (u.host.empty())
    throw Error(ErrorCode::BadFormat, "endpoint URL lacks a host").with("url", url);
  return u;
}

inline nlohmann::json build_chat_request(const ProviderConfig& config,
                                         const std::vector<ChatMessage>& messages) {
  nlohmann::json req;
  req["model"] = config.model;
  auto msgs = nlohmann::json::array();
  auto attachments = nlohmann::json::array();
  for (const auto& m : messages) {
    msgs.push_back({{"role", m.role}, {"content", m.content}});
    if (!m.attachment_name.empty())
      attachments.push_back({{"name", m.attachment_name}, {"data_base64", m.attachment_b64}});
  }
  req["messages"] = std::move(msgs);
  if (!attachments.empty()) req["attachments"] = std::move(attachments);
  if (config.sampling.is_object())
    for (const auto& [k, v] : config.sampling.items()) req[k] = v;
  return req;
}

inline ChatResult parse_chat_response(const nlohmann::json& j) {
  ChatResult r;
  try {
    r.content = j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ProviderUnavailable, std::string("malformed provider response: ") + e.what());
  }
  if (j.contains("usage")) {
    const auto& u = j.at("usage");
    r.prompt_tokens = u.value("prompt_tokens", static_cast<std::int64_t>(-1));
    r.completion_tokens = u.value("completion_tokens", static_cast<std::int64_t>(-1));
  }
  return r;
}

class HttpChatProvider : public ChatProvider {
 public:
  explicit HttpChatProvider(ProviderConfig config) : config_(std::move(config)) {}

  std::string id() const override { return config_.provider_id; }

  ChatResult complete(const std::vector<ChatMessage>& messages) override {
    const char* key = std::getenv(config_.credential_env.c_str());
    if (key == nullptr || *key == '\0')
      throw Error(ErrorCode::AuthError, "credential environment variable is not set")
          .with("env", config_.credential_env);

    const ParsedUrl url = parse_url(config_.endpoint);
    const std::string body = build_chat_request(config_, messages).dump();
    httplib::Headers headers{{"Authorization", std::string("Bearer ") + key}};

    httplib::Result res;
    if (url.scheme == "https") {
#ifdef CPPHTTPLIB_OPENSSL_SUPPORT
      httplib::SSLClient cli(url.host, url.port);
      configure(cli);
      res = cli.Post(url.path, headers, body, "application/json");
#else
      throw Error(ErrorCode::ProviderUnavailable, "built without TLS support, use an http endpoint");
#endif
    } else {
      httplib::Client cli(url.host, url.port);
      configure(cli);
      res = cli.Post(url.path, headers, body, "application/json");
    }

    if (!res)
      throw Error(ErrorCode::ProviderUnavailable, "connection to provider failed")
          .with("endpoint", config_.endpoint)
          .with("transient", 1);
    const int status = res->status;
    if (status == 200) {
      try {
        return parse_chat_response(nlohmann::json::parse(res->body));
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ProviderUnavailable, std::string("provider returned invalid JSON: ") + e.what())
            .with("status", static_cast<long long>(status));
      }
    }
    if (status == 401 || status == 403)
      throw Error(ErrorCode::AuthError, "provider rejected the credential")
          .with("status", static_cast<long long>(status));
    Error err(ErrorCode::ProviderUnavailable, "provider request failed");
    err.with("status", static_cast<long long>(status));
    if (status == 408 || status == 429 || status >= 500) err.with("transient", 1);
    throw err;
  }

 private:
  template <typename Client>
  void configure(Client& cli) {
    const auto secs = static_cast<time_t>(config_.timeout_s);
    cli.set_connection_timeout(secs, 0);
    cli.set_read_timeout(secs, 0);
    cli.set_write_timeout(secs, 0);
  }

  ProviderConfig config_;
};

}  // namespace annoteval
