#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hopcomp/core.hpp"
#include "hopcomp/gateway.hpp"
#include "hopcomp/prompts.hpp"
#include "hopcomp/sentences.hpp"

namespace hopcomp {

// Accepts either a JSON array of strings or a numbered-line list
// ("1. ...\n2. ..."). Entries are trimmed; empties dropped.
inline std::vector<std::string> parse_proposition_output(const std::string& raw) {
    std::string t = trim(raw);
    if (!t.empty() && t.front() == '[') {
        try {
            json j = json::parse(t);
            if (j.is_array()) {
                std::vector<std::string> out;
                for (const auto& e : j) {
                    std::string s = trim(e.get<std::string>());
                    if (!s.empty()) out.push_back(std::move(s));
                }
                if (!out.empty()) return out;
            }
        } catch (const json::exception&) {
            // fall through to the numbered-line format
        }
    }
    std::vector<std::string> out;
    std::istringstream in(t);
    std::string line;
    while (std::getline(in, line)) {
        std::string s = trim(line);
        size_t i = 0;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
        if (i == 0 || i >= s.size() || (s[i] != '.' && s[i] != ')')) continue;
        std::string body = trim(s.substr(i + 1));
        if (!body.empty()) out.push_back(std::move(body));
    }
    if (out.empty()) throw ParseError("propositionizer output matches no known format");
    return out;
}

struct PropositionizeOptions {
    std::filesystem::path cache_dir;  // empty disables the cache
    std::string model_name;           // part of the cache key
    int retries = 1;
    bool* fallback_used = nullptr;    // set when the sentence-split path ran
};

namespace detail {

inline std::string cache_key_hash(const std::string& doc_id, const std::string& model) {
    uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&](std::string_view s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        h ^= 0xff;
        h *= 0x100000001b3ULL;
    };
    mix(doc_id);
    mix(model);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace detail

// Segments a document into atomic propositions via the generation
// backend; falls back to a deterministic sentence split when the
// backend output stays unparseable.
inline std::vector<Proposition> propositionize(const Document& doc, Backend& backend,
                                               const PropositionizeOptions& opts = {}) {
    if (trim(doc.text).empty()) throw DataError("propositionize: empty document " + doc.id);

    std::filesystem::path cache_file;
    if (!opts.cache_dir.empty()) {
        cache_file = opts.cache_dir /
                     (detail::cache_key_hash(doc.id, opts.model_name) + ".json");
        if (std::filesystem::exists(cache_file)) {
            std::ifstream in(cache_file);
            json j;
            in >> j;
            std::vector<Proposition> out;
            for (const auto& e : j.at("propositions"))
                out.push_back(proposition_from_json(e));
            return out;
        }
    }

    static const PromptTemplate tmpl = prompts::propositionize();
    GenerationRequest req;
    req.prompt = tmpl.render({{"passage", doc.text}});
    req.max_new_tokens = 1024;

    std::vector<std::string> texts;
    for (int attempt = 0; attempt <= opts.retries && texts.empty(); ++attempt) {
        try {
            texts = parse_proposition_output(generate(backend, req));
        } catch (const std::exception&) {
            // retry, then fall back
        }
    }
    if (texts.empty()) {
        texts = sentence_split(doc.text);
        if (opts.fallback_used) *opts.fallback_used = true;
    }

    std::vector<Proposition> out;
    out.reserve(texts.size());
    for (size_t i = 0; i < texts.size(); ++i)
        out.push_back({doc.id, static_cast<int>(i), texts[i]});

    if (!cache_file.empty()) {
        std::filesystem::create_directories(opts.cache_dir);
        json props = json::array();
        for (const auto& p : out) props.push_back(to_json(p));
        std::ofstream cache_out(cache_file);
        cache_out << json{{"doc_id", doc.id}, {"propositions", std::move(props)}}.dump() << '\n';
    }
    return out;
}

}  // namespace hopcomp
