#pragma once

#include <cstdlib>
#include <string>

#include <httplib.h>

#include "hopcomp/gateway.hpp"

namespace hopcomp {

// Talks to a completions-style HTTP endpoint (POST {base_url}/v1/completions).
// Generation is a plain completion request. Scoring requests an echoed
// prompt with token log-probabilities and sums the log-probabilities of
// the tokens belonging to the forced target suffix.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(EndpointConfig cfg) : cfg_(std::move(cfg)) {}

    std::string generate_raw(const GenerationRequest& req) override {
        json body{{"model", cfg_.model_name},
                  {"prompt", req.prompt},
                  {"max_tokens", req.max_new_tokens},
                  {"temperature", req.temperature}};
        if (!req.stop_sequences.empty()) body["stop"] = req.stop_sequences;
        if (req.seed) body["seed"] = *req.seed;
        json resp = post("/v1/completions", body);
        try {
            return resp.at("choices").at(0).at("text").get<std::string>();
        } catch (const json::exception& e) {
            throw TransportError(std::string("malformed completion response: ") + e.what());
        }
    }

    ScoreResult score(const LikelihoodQuery& q) override {
        const std::string prefix = scoring_prompt_prefix(q);
        json body{{"model", cfg_.model_name},
                  {"prompt", prefix + q.target},
                  {"max_tokens", 0},
                  {"temperature", 0.0},
                  {"echo", true},
                  {"logprobs", 0}};
        json resp = post("/v1/completions", body);
        json lp;
        try {
            lp = resp.at("choices").at(0).at("logprobs");
        } catch (const json::exception&) {
            throw CapabilityError("backend response lacks token log-probabilities");
        }
        if (lp.is_null())
            throw CapabilityError("backend response lacks token log-probabilities");
        const auto& offsets = lp.at("text_offset");
        const auto& logprobs = lp.at("token_logprobs");
        if (offsets.size() != logprobs.size())
            throw GatewayError("logprob/offset length mismatch in scoring response");
        ScoreResult r{0.0, 0};
        const auto prefix_len = static_cast<long long>(prefix.size());
        for (size_t i = 0; i < offsets.size(); ++i) {
            if (offsets[i].get<long long>() < prefix_len) continue;
            if (logprobs[i].is_null())
                throw GatewayError("null log-probability inside the target span");
            r.logprob += logprobs[i].get<double>();
            ++r.target_tokens;
        }
        if (r.target_tokens == 0)
            throw GatewayError("no tokens aligned to the target span (tokenization mismatch)");
        return r;
    }

private:
    json post(const std::string& path, const json& body) {
        std::string last_error;
        for (int attempt = 0; attempt <= cfg_.retry_count; ++attempt) {
            if (attempt > 0)
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(cfg_.retry_backoff_ms * attempt));
            httplib::Client client(cfg_.base_url);
            client.set_connection_timeout(0, cfg_.timeout_ms * 1000LL);
            client.set_read_timeout(cfg_.timeout_ms / 1000, (cfg_.timeout_ms % 1000) * 1000);
            httplib::Headers headers;
            if (!cfg_.auth_token_env.empty()) {
                if (const char* token = std::getenv(cfg_.auth_token_env.c_str()))
                    headers.emplace("Authorization", std::string("Bearer ") + token);
            }
            auto res = client.Post(path, headers, body.dump(), "application/json");
            if (!res) {
                last_error = "transport failure: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status >= 500) {
                last_error = "server error " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200)
                throw TransportError("endpoint returned HTTP " + std::to_string(res->status) +
                                     ": " + res->body);
            try {
                return json::parse(res->body);
            } catch (const json::parse_error& e) {
                throw TransportError(std::string("invalid JSON from endpoint: ") + e.what());
            }
        }
        throw TransportError(cfg_.base_url + path + ": " + last_error + " after " +
                             std::to_string(cfg_.retry_count + 1) + " attempts");
    }

    EndpointConfig cfg_;
};

}  // namespace hopcomp
