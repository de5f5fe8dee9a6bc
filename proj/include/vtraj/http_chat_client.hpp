#ifndef VTRAJ_HTTP_CHAT_CLIENT_HPP
#define VTRAJ_HTTP_CHAT_CLIENT_HPP

#include "vtraj/narrate.hpp"

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cstdlib>

namespace vtraj {

/// Splits "https://host:port/prefix" into the origin httplib connects to and the path prefix.
inline std::pair<std::string, std::string> split_base_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_start = url.find('/', host_start);
    if (path_start == std::string::npos) {
        return {url, ""};
    }
    std::string prefix = url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') {
        prefix.pop_back();
    }
    return {url.substr(0, path_start), prefix};
}

/// OpenAI-style chat-completions over HTTP(S). The API key is read from the environment
/// variable named in the model config on every call.
class HttpChatClient : public ChatClient {
public:
    ChatReply complete(const ModelConfig& cfg, const ChatMessages& messages) const override {
        const auto [origin, prefix] = split_base_url(cfg.base_url);
        httplib::Client cli(origin);
        const auto secs = static_cast<time_t>(cfg.timeout_s);
        const auto usecs = static_cast<time_t>((cfg.timeout_s - static_cast<double>(secs)) * 1e6);
        cli.set_connection_timeout(secs, usecs);
        cli.set_read_timeout(secs, usecs);
        cli.set_write_timeout(secs, usecs);

        httplib::Headers headers;
        if (!cfg.api_key_env.empty()) {
            if (const char* key = std::getenv(cfg.api_key_env.c_str()); key && *key) {
                headers.emplace("Authorization", std::string("Bearer ") + key);
            }
        }
        nlohmann::ordered_json body;
        body["model"] = cfg.model_id;
        body["messages"] = {{{"role", "system"}, {"content", messages.system}},
                            {{"role", "user"}, {"content", messages.user}}};
        body["temperature"] = cfg.temperature;

        const auto t0 = std::chrono::steady_clock::now();
        auto res = cli.Post(prefix + "/chat/completions", headers, body.dump(), "application/json");
        const double latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!res) {
            throw TransportError(cfg.base_url + ": " + httplib::to_string(res.error()));
        }
        if (res->status == 429 || res->status >= 500) {
            throw TransportError(cfg.base_url + ": HTTP " + std::to_string(res->status));
        }
        if (res->status != 200) {
            throw std::runtime_error(cfg.base_url + ": HTTP " + std::to_string(res->status) + ": " + res->body);
        }
        const auto j = nlohmann::json::parse(res->body, nullptr, false);
        if (j.is_discarded() || !j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
            throw std::runtime_error(cfg.base_url + ": response without choices");
        }
        const auto& msg = j["choices"][0].value("message", nlohmann::json::object());
        const auto content = msg.contains("content") && msg["content"].is_string() ? msg["content"].get<std::string>()
                                                                                   : std::string();
        return {content, latency};
    }
};

} // namespace vtraj

#endif // VTRAJ_HTTP_CHAT_CLIENT_HPP
