// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 KGSR Contributors
//
// Chat-completions client over HTTP(S).
#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "kgsr/llm.hpp"

namespace kgsr {

struct ChatClientConfig {
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-4o-mini";
    std::string api_key_env = "KGSR_LLM_API_KEY";
    double timeout_seconds = 60.0;
    int max_retries = 2;
};

// Throws ArgumentError unless the endpoint is an http(s) URL, timeout > 0 and
// retries >= 0.
void validate(const ChatClientConfig& config);

// {"model": ..., "messages": [{"role": "user", "content": ...}]}
std::string build_chat_request(std::string_view model, std::string_view prompt);

// Reads choices[0].message.content; throws ClientError on any other shape.
std::string parse_chat_reply(std::string_view body);

struct ParsedUrl {
    std::string base;  // scheme://host[:port]
    std::string path;  // at least "/"
};

ParsedUrl parse_endpoint(std::string_view url);

class HttpChatClient final : public ChatClient {
public:
    // An empty api_key sends no Authorization header.
    HttpChatClient(ChatClientConfig config, std::string api_key);

    std::string complete(const std::string& prompt) override;

private:
    ChatClientConfig config_;
    std::string api_key_;
    ParsedUrl url_;
};

// Applies KGSR_LLM_ENDPOINT over config.endpoint and reads the key from the
// variable named by config.api_key_env. A missing key is an ArgumentError.
std::unique_ptr<ChatClient> make_chat_client_from_env(ChatClientConfig config);

}  // namespace kgsr
