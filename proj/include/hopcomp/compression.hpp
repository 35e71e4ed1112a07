#pragma once

#include <string>
#include <vector>

#include "hopcomp/core.hpp"
#include "hopcomp/gateway.hpp"
#include "hopcomp/prompts.hpp"
#include "hopcomp/rng.hpp"

namespace hopcomp {

// Inference-time use of a trained compressor endpoint.

struct CompressionResult {
    std::string summary;  // empty means selective augmentation
    int input_words = 0;
    int output_words = 0;
    int chunk_count = 1;

    bool selective() const { return summary.empty(); }
};

inline json to_json(const CompressionResult& r, const std::string& id) {
    return json{{"id", id},
                {"summary", r.summary},
                {"input_words", r.input_words},
                {"output_words", r.output_words},
                {"chunk_count", r.chunk_count}};
}

// Compressor input: "summarize: " prefix, the question, then the
// documents joined by newlines with an optional Title: line each.
inline std::string build_compressor_input(const std::string& question,
                                          const std::vector<Document>& docs) {
    std::string out = "summarize: " + question;
    for (const auto& d : docs) {
        out += '\n';
        if (d.title) out += "Title: " + *d.title + "\n";
        out += d.text;
    }
    return out;
}

inline CompressionResult compress(const std::string& question,
                                  const std::vector<Document>& docs, Backend& backend) {
    if (docs.empty()) throw DataError("compress: empty document set");
    GenerationRequest req;
    req.prompt = build_compressor_input(question, docs);
    req.max_new_tokens = 256;
    CompressionResult r;
    for (const auto& d : docs) r.input_words += d.word_count;
    try {
        r.summary = trim(generate(backend, req));
    } catch (const EmptyOutputError&) {
        r.summary.clear();  // valid: selective augmentation
    }
    r.output_words = count_words(r.summary);
    return r;
}

// Shuffle, partition into chunks of at most chunk_size preserving the
// shuffled order, compress each chunk, and join the non-empty chunk
// summaries with single spaces. Any chunk failure fails the whole call.
inline CompressionResult compress_chunked(const std::string& question,
                                          const std::vector<Document>& docs, int chunk_size,
                                          uint64_t seed, Backend& backend) {
    if (chunk_size < 1) throw DataError("compress_chunked: chunk_size must be >= 1");
    if (docs.empty()) throw DataError("compress_chunked: empty document set");
    std::vector<Document> shuffled = docs;
    Rng rng(seed);
    rng.shuffle(shuffled);

    CompressionResult out;
    out.chunk_count = 0;
    std::string summary;
    for (size_t start = 0; start < shuffled.size(); start += static_cast<size_t>(chunk_size)) {
        size_t end = std::min(shuffled.size(), start + static_cast<size_t>(chunk_size));
        std::vector<Document> chunk(shuffled.begin() + start, shuffled.begin() + end);
        CompressionResult c = compress(question, chunk, backend);
        out.input_words += c.input_words;
        ++out.chunk_count;
        if (!c.summary.empty()) {
            if (!summary.empty()) summary += ' ';
            summary += c.summary;
        }
    }
    out.summary = std::move(summary);
    out.output_words = count_words(out.summary);
    return out;
}

// Reader prompt: five Q/A demonstrations, then the summary block and the
// question. An empty summary omits the documents block entirely.
inline std::string build_reader_prompt(const std::string& question, const std::string& summary,
                                       const std::string& dataset,
                                       const std::vector<prompts::ReaderShot>* shots = nullptr) {
    const auto& demos = shots ? *shots : prompts::reader_shots(dataset);
    std::string out;
    for (const auto& s : demos) out += s.question + "\nAnswer: " + s.answer + "\n\n";
    if (!summary.empty()) out += summary + "\n";
    out += question + "\nAnswer:";
    return out;
}

// First line of the completion, trimmed; a "Question:" continuation is
// treated as a terminator too.
inline std::string read_answer(const std::string& raw) {
    std::string line = raw.substr(0, raw.find('\n'));
    size_t q = line.find("Question:");
    if (q != std::string::npos) line = line.substr(0, q);
    return trim(line);
}

}  // namespace hopcomp
