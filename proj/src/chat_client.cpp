// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 KGSR Contributors
#include "kgsr/chat_client.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <spdlog/spdlog.h>

#include "httplib.h"
#include "json.hpp"

#include "kgsr/error.hpp"

namespace kgsr {

void validate(const ChatClientConfig& config) {
    parse_endpoint(config.endpoint);
    if (config.model.empty()) throw ArgumentError("chat client: model name is empty");
    if (!(config.timeout_seconds > 0.0) || !std::isfinite(config.timeout_seconds))
        throw ArgumentError("chat client: timeout must be positive");
    if (config.max_retries < 0) throw ArgumentError("chat client: retries must be non-negative");
}

std::string build_chat_request(std::string_view model, std::string_view prompt) {
    nlohmann::ordered_json j;
    j["model"] = model;
    j["messages"] = nlohmann::ordered_json::array({{{"role", "user"}, {"content", prompt}}});
    return j.dump();
}

std::string parse_chat_reply(std::string_view body) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error&) {
        throw ClientError("chat reply is not JSON");
    }
    try {
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
        throw ClientError("chat reply has no choices[0].message.content string");
    }
}

ParsedUrl parse_endpoint(std::string_view url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) throw ArgumentError("endpoint '" + std::string(url) + "' has no scheme");
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https")
        throw ArgumentError("endpoint '" + std::string(url) + "' must use http or https");
    const auto host_start = scheme_end + 3;
    const auto path_start = url.find('/', host_start);
    ParsedUrl out;
    out.base = std::string(url.substr(0, path_start));
    out.path = path_start == std::string_view::npos ? "/" : std::string(url.substr(path_start));
    if (out.base.size() == host_start) throw ArgumentError("endpoint '" + std::string(url) + "' has no host");
    return out;
}

HttpChatClient::HttpChatClient(ChatClientConfig config, std::string api_key)
    : config_(std::move(config)), api_key_(std::move(api_key)) {
    validate(config_);
    url_ = parse_endpoint(config_.endpoint);
}

std::string HttpChatClient::complete(const std::string& prompt) {
    const auto body = build_chat_request(config_.model, prompt);
    const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::duration<double>(config_.timeout_seconds));
    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(250) * attempt);
        httplib::Client client(url_.base);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
        const auto res = client.Post(url_.path, headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
        } else if (res->status == 200) {
            return parse_chat_reply(res->body);
        } else {
            last_error = "HTTP status " + std::to_string(res->status);
            if (res->status != 429 && res->status < 500) break;
        }
        spdlog::debug("chat request attempt {} failed: {}", attempt + 1, last_error);
    }
    throw ClientError("chat request to " + config_.endpoint + " failed: " + last_error);
}

std::unique_ptr<ChatClient> make_chat_client_from_env(ChatClientConfig config) {
    if (const char* endpoint = std::getenv("KGSR_LLM_ENDPOINT"); endpoint != nullptr && *endpoint != '\0')
        config.endpoint = endpoint;
    const char* key = std::getenv(config.api_key_env.c_str());
    if (key == nullptr || *key == '\0')
        throw ArgumentError("environment variable " + config.api_key_env + " is not set");
    return std::make_unique<HttpChatClient>(std::move(config), key);
}

}  // namespace kgsr
