#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "hopcomp/core.hpp"
#include "hopcomp/prompts.hpp"
#include "hopcomp/sentences.hpp"

namespace hopcomp {

// ---------------------------------------------------------------------------
// Requests and configuration
// ---------------------------------------------------------------------------

struct GenerationRequest {
    std::string prompt;
    int max_new_tokens = 512;
    double temperature = 0.0;
    std::vector<std::string> stop_sequences;
    std::optional<uint64_t> seed;
};

struct LikelihoodQuery {
    std::string context;  // may be empty
    std::string question;
    std::string target;
};

struct EndpointConfig {
    std::string base_url;
    std::string model_name;
    std::string auth_token_env;  // name of the env var holding the token
    int max_in_flight = 4;
    int timeout_ms = 60000;
    int retry_count = 2;
    int retry_backoff_ms = 500;
    bool mean_per_token = false;  // length-normalized likelihood comparison
};

struct GatewayError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TransportError : GatewayError {
    using GatewayError::GatewayError;
};
struct CapabilityError : GatewayError {
    using GatewayError::GatewayError;
};
struct EmptyOutputError : GatewayError {
    using GatewayError::GatewayError;
};

struct ScoreResult {
    double logprob = 0.0;  // sum of target-token log-probabilities
    int target_tokens = 1;

    double value(bool mean_per_token) const {
        return mean_per_token && target_tokens > 0 ? logprob / target_tokens : logprob;
    }
};

// Answer cue appended between the question and the forced target,
// mirroring the reader prompt layout.
inline std::string scoring_prompt_prefix(const LikelihoodQuery& q) {
    std::string p;
    if (!q.context.empty()) p += q.context + "\n";
    p += q.question + "\nAnswer: ";
    return p;
}

class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string generate_raw(const GenerationRequest& req) = 0;
    virtual ScoreResult score(const LikelihoodQuery& q) = 0;
};

inline std::string strip_stop_sequences(std::string text,
                                        const std::vector<std::string>& stops) {
    size_t cut = text.size();
    for (const auto& s : stops) {
        if (s.empty()) continue;
        size_t pos = text.find(s);
        if (pos != std::string::npos) cut = std::min(cut, pos);
    }
    text.resize(cut);
    return text;
}

inline std::string generate(Backend& backend, const GenerationRequest& req) {
    std::string out = strip_stop_sequences(backend.generate_raw(req), req.stop_sequences);
    if (trim(out).empty()) throw EmptyOutputError("backend returned an empty completion");
    return out;
}

inline double score_loglikelihood(Backend& backend, const LikelihoodQuery& q,
                                  const EndpointConfig& cfg) {
    return backend.score(q).value(cfg.mean_per_token);
}

struct ScoreOutcome {
    std::optional<ScoreResult> result;
    std::string error;

    bool ok() const { return result.has_value(); }
};

// Order-preserving, at most cfg.max_in_flight concurrent requests.
// Per-element failures land in their slot; the batch never aborts.
inline std::vector<ScoreOutcome> score_batch(Backend& backend,
                                             const std::vector<LikelihoodQuery>& queries,
                                             const EndpointConfig& cfg) {
    std::vector<ScoreOutcome> out(queries.size());
    const size_t width = std::max(1, cfg.max_in_flight);
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= queries.size()) return;
            try {
                out[i].result = backend.score(queries[i]);
            } catch (const std::exception& e) {
                out[i].error = e.what();
            }
        }
    };
    if (width == 1 || queries.size() <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (size_t t = 0; t < std::min(width, queries.size()); ++t)
            threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Mock backend
//
// A pure function of (request, seed) used as the test oracle for every
// pipeline stage. Scoring rule: score = -(number of whitespace tokens of
// the target absent from context + question), which is monotone in
// evidence coverage.
//
// Generation recognizes the pipeline's prompt families and answers each
// deterministically:
//   "echo: X"        -> "X"
//   composition      -> multi-hop question chained over the prompt's
//                       passages (first word = subject, last word = object)
//   decomposition    -> bridge entities and recovered questions re-derived
//                       from the prompt's contexts
//   propositionize   -> numbered sentence list of the passage
//   "summarize: ..." -> first sentence of the first document when it shares
//                       a content token with the question, else ""
// ---------------------------------------------------------------------------

namespace detail {

inline std::string strip_token_punct(std::string_view t) {
    size_t b = 0, e = t.size();
    while (b < e && std::ispunct(static_cast<unsigned char>(t[b]))) ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(t[e - 1]))) --e;
    std::string out(t.substr(b, e - b));
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline std::set<std::string> token_set(std::string_view text) {
    std::set<std::string> s;
    for (const auto& w : split_words(text)) {
        std::string t = strip_token_punct(w);
        if (!t.empty()) s.insert(t);
    }
    return s;
}

}  // namespace detail

class MockBackend : public Backend {
public:
    explicit MockBackend(uint64_t seed = 0) : seed_(seed) {}

    std::string generate_raw(const GenerationRequest& req) override {
        ++generate_calls_;
        if (override_generate) return override_generate(req);
        const std::string& p = req.prompt;
        if (auto pos = p.find("echo: "); pos != std::string::npos)
            return p.substr(pos + 6);
        if (p.find("generate one multi-hop question") != std::string::npos) {
            ++compose_calls_;
            return mock_compose(extract_numbered_passages(p));
        }
        if (p.find("decompose it into single-hop questions") != std::string::npos) {
            ++decompose_calls_;
            return mock_decompose(extract_contexts(p));
        }
        if (p.find("list of atomic, self-contained propositions") != std::string::npos)
            return mock_propositionize(p);
        if (p.rfind("summarize: ", 0) == 0) {
            ++compress_calls_;
            return mock_compress(p);
        }
        // reader fallback: deterministic placeholder answer
        return "unknown";
    }

    ScoreResult score(const LikelihoodQuery& q) override {
        ++score_calls_;
        auto evidence = detail::token_set(q.context);
        auto question_tokens = detail::token_set(q.question);
        evidence.insert(question_tokens.begin(), question_tokens.end());
        std::vector<std::string> target = split_words(q.target);
        int missing = 0;
        for (const auto& w : target) {
            std::string t = detail::strip_token_punct(w);
            if (!t.empty() && !evidence.count(t)) ++missing;
        }
        return {-static_cast<double>(missing), std::max<int>(1, target.size())};
    }

    long generate_calls() const { return generate_calls_; }
    long score_calls() const { return score_calls_; }
    long compose_calls() const { return compose_calls_; }
    long decompose_calls() const { return decompose_calls_; }
    long compress_calls() const { return compress_calls_; }
    void reset_counters() {
        generate_calls_ = score_calls_ = compose_calls_ = decompose_calls_ = compress_calls_ = 0;
    }

    // Tests can override all generation with a canned handler.
    std::function<std::string(const GenerationRequest&)> override_generate;

private:
    struct PassageLink {
        std::string subject;  // first word of the passage
        std::string object;   // last word of the passage
    };

    static std::vector<std::string> extract_numbered_passages(const std::string& prompt) {
        // passages follow the final "Passages:" block as "1. ...", "2. ..."
        size_t pos = prompt.rfind("Passages:");
        std::vector<std::string> out;
        if (pos == std::string::npos) return out;
        std::istringstream in(prompt.substr(pos));
        std::string line;
        std::getline(in, line);  // consume "Passages:"
        while (std::getline(in, line)) {
            std::string t = trim(line);
            if (t.empty()) break;
            size_t dot = t.find(". ");
            if (dot != std::string::npos && dot <= 3)
                out.push_back(t.substr(dot + 2));
            else if (!out.empty())
                out.back() += " " + t;
        }
        return out;
    }

    static std::vector<std::string> extract_contexts(const std::string& prompt) {
        size_t turn = prompt.rfind("Now, it's your turn.");
        std::vector<std::string> out;
        if (turn == std::string::npos) return out;
        std::istringstream in(prompt.substr(turn));
        std::string line;
        while (std::getline(in, line)) {
            std::string t = trim(line);
            if (t.rfind("Context ", 0) == 0) {
                size_t colon = t.find(':');
                if (colon != std::string::npos) out.push_back(trim(t.substr(colon + 1)));
            }
        }
        return out;
    }

    static std::vector<PassageLink> links_of(const std::vector<std::string>& passages) {
        std::vector<PassageLink> links;
        for (const auto& p : passages) {
            auto words = split_words(p);
            if (words.empty()) return {};
            links.push_back({detail::strip_token_punct(words.front()),
                             detail::strip_token_punct(words.back())});
        }
        return links;
    }

    static std::string chain_question(const std::vector<PassageLink>& links) {
        // nested paraphrase referencing only the first subject
        std::string inner = links.front().subject;
        for (size_t i = 0; i + 1 < links.size(); ++i)
            inner = "the thing linked by " + inner;
        return "What does " + inner + " link?";
    }

    std::string mock_compose(const std::vector<std::string>& passages) const {
        auto links = links_of(passages);
        if (links.size() < 2) return prompts::kRefusalSentinel;
        const std::string& answer = links.back().object;
        // refuse degenerate chains the validator would reject anyway
        std::set<std::string> seen;
        for (const auto& l : links) {
            if (l.subject.empty() || l.object.empty()) return prompts::kRefusalSentinel;
            if (!seen.insert(l.object).second) return prompts::kRefusalSentinel;
        }
        for (size_t i = 0; i + 1 < links.size(); ++i)
            if (links[i].object == answer || links[i].object == links.front().subject)
                return prompts::kRefusalSentinel;
        std::string q = chain_question(links);
        return "Relationship Chain:\n(omitted)\nMultihop Question:\n" + q + "\nAnswer:\n" +
               answer + "\n";
    }

    std::string mock_decompose(const std::vector<std::string>& contexts) const {
        auto links = links_of(contexts);
        if (links.size() < 2) return "Bridge Entity:\nRecovered Questions:\n";
        std::string bridges;
        for (size_t i = 0; i + 1 < links.size(); ++i) {
            if (i > 0) bridges += ", ";
            bridges += links[i].object;
        }
        std::string out = "Bridge Entity: " + bridges + "\nRecovered Questions:\n";
        std::string prev = links.front().subject;
        for (size_t i = 0; i < links.size(); ++i) {
            out += std::to_string(i + 1) + ". Question: What does " + prev + " link?\n";
            out += "   Answer: " + links[i].object + "\n";
            prev = links[i].object;
        }
        return out;
    }

    static std::string first_sentence(const std::string& text) {
        return first_sentence_of(text);
    }

    std::string mock_propositionize(const std::string& prompt) const {
        size_t pos = prompt.rfind("Passage:");
        std::string passage = pos == std::string::npos ? prompt : prompt.substr(pos + 8);
        auto sentences = sentence_split(trim(passage));
        std::string out;
        for (size_t i = 0; i < sentences.size(); ++i)
            out += std::to_string(i + 1) + ". " + sentences[i] + "\n";
        return out;
    }

    std::string mock_compress(const std::string& prompt) const {
        // prompt layout: "summarize: <question>\n<doc lines...>"
        size_t nl = prompt.find('\n');
        std::string question = nl == std::string::npos
                                   ? prompt.substr(11)
                                   : prompt.substr(11, nl - 11);
        std::string docs = nl == std::string::npos ? "" : prompt.substr(nl + 1);
        auto qtok = detail::token_set(question);
        auto dtok = detail::token_set(docs);
        bool overlap = false;
        for (const auto& t : qtok) {
            if (t.size() > 3 && dtok.count(t)) {
                overlap = true;
                break;
            }
        }
        if (!overlap) return "";
        // first sentence of the first non-title document line
        std::istringstream in(docs);
        std::string line;
        while (std::getline(in, line)) {
            std::string t = trim(line);
            if (t.empty() || t.rfind("Title:", 0) == 0) continue;
            return first_sentence(t);
        }
        return "";
    }

    uint64_t seed_;
    mutable std::atomic<long> generate_calls_{0};
    mutable std::atomic<long> score_calls_{0};
    mutable std::atomic<long> compose_calls_{0};
    mutable std::atomic<long> decompose_calls_{0};
    mutable std::atomic<long> compress_calls_{0};
};

}  // namespace hopcomp
