#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hopcomp/rng.hpp"

namespace hopcomp {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : DataError {
    using DataError::DataError;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Word counting
// ---------------------------------------------------------------------------

// A "word" is a maximal run of non-whitespace bytes.
inline int count_words(std::string_view text) {
    int n = 0;
    bool in_word = false;
    for (unsigned char c : text) {
        bool ws = std::isspace(c) != 0;
        if (!ws && !in_word) ++n;
        in_word = !ws;
    }
    return n;
}

inline std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) out.emplace_back(text.substr(start, i - start));
    }
    return out;
}

inline std::string join_words(const std::vector<std::string>& words, size_t begin, size_t end) {
    std::string out;
    for (size_t i = begin; i < end; ++i) {
        if (i > begin) out += ' ';
        out += words[i];
    }
    return out;
}

inline std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct Document {
    std::string id;
    std::optional<std::string> title;
    std::string text;
    int word_count = 0;

    static Document make(std::string id, std::string text,
                         std::optional<std::string> title = std::nullopt) {
        Document d;
        d.id = std::move(id);
        d.title = std::move(title);
        d.text = std::move(text);
        d.word_count = count_words(d.text);
        return d;
    }
};

struct PropositionRef {
    std::string doc_id;
    int index = 0;

    friend bool operator==(const PropositionRef&, const PropositionRef&) = default;
    friend auto operator<=>(const PropositionRef&, const PropositionRef&) = default;
};

struct Proposition {
    std::string doc_id;
    int index = 0;
    std::string text;

    PropositionRef ref() const { return {doc_id, index}; }
};

struct QAExample {
    std::string id;
    std::string question;
    std::vector<std::string> answers;  // non-empty
    int hop_count = 1;
    std::string source_dataset;
    std::vector<std::string> doc_ids;  // retrieved set, optional
};

struct SubQuestion {
    std::string text;
    std::string answer;
    std::optional<PropositionRef> supporting_proposition;
};

struct MultiHopCandidate {
    std::string seed_id;
    std::string question;
    std::string answer;
    std::vector<SubQuestion> sub_questions;
    std::vector<std::string> bridge_entities;
    std::vector<std::string> sampled_doc_ids;
    int hop_count = 0;
};

struct SummaryRecord {
    std::string id;
    std::string question;
    std::vector<Document> documents;
    std::string summary;  // empty string means selective augmentation
    int hop_count = 1;
    std::vector<PropositionRef> provenance;
    std::string source_dataset;
};

// ---------------------------------------------------------------------------
// JSON (de)serialization — field names are part of the file contract
// ---------------------------------------------------------------------------

inline json to_json(const Document& d) {
    json j{{"id", d.id}, {"text", d.text}};
    if (d.title) j["title"] = *d.title;
    return j;
}

inline json to_json(const PropositionRef& r) {
    return json{{"doc_id", r.doc_id}, {"index", r.index}};
}

inline json to_json(const Proposition& p) {
    return json{{"doc_id", p.doc_id}, {"index", p.index}, {"text", p.text}};
}

inline json to_json(const QAExample& q) {
    json j{{"id", q.id},
           {"question", q.question},
           {"answers", q.answers},
           {"hop_count", q.hop_count},
           {"source", q.source_dataset}};
    if (!q.doc_ids.empty()) j["doc_ids"] = q.doc_ids;
    return j;
}

inline json to_json(const SummaryRecord& r) {
    json docs = json::array();
    for (const auto& d : r.documents) docs.push_back(to_json(d));
    json prov = json::array();
    for (const auto& p : r.provenance) prov.push_back(to_json(p));
    json j{{"id", r.id},
           {"question", r.question},
           {"documents", std::move(docs)},
           {"summary", r.summary},
           {"hop_count", r.hop_count},
           {"provenance", std::move(prov)}};
    if (!r.source_dataset.empty()) j["source"] = r.source_dataset;
    return j;
}

inline json to_json(const SubQuestion& s) {
    json j{{"question", s.text}, {"answer", s.answer}};
    if (s.supporting_proposition) j["support"] = to_json(*s.supporting_proposition);
    return j;
}

inline json to_json(const MultiHopCandidate& c) {
    json subs = json::array();
    for (const auto& s : c.sub_questions) subs.push_back(to_json(s));
    return json{{"seed_id", c.seed_id},
                {"question", c.question},
                {"answer", c.answer},
                {"sub_questions", std::move(subs)},
                {"bridge_entities", c.bridge_entities},
                {"sampled_doc_ids", c.sampled_doc_ids},
                {"hop_count", c.hop_count}};
}

namespace detail {
inline const json& require(const json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end())
        throw ParseError(std::string("missing required field '") + field + "'");
    return *it;
}
}  // namespace detail

inline Document document_from_json(const json& j) {
    Document d;
    d.id = detail::require(j, "id").get<std::string>();
    d.text = detail::require(j, "text").get<std::string>();
    if (j.contains("title") && !j["title"].is_null())
        d.title = j["title"].get<std::string>();
    d.word_count = count_words(d.text);
    return d;
}

inline Proposition proposition_from_json(const json& j) {
    Proposition p;
    p.doc_id = detail::require(j, "doc_id").get<std::string>();
    p.index = detail::require(j, "index").get<int>();
    p.text = detail::require(j, "text").get<std::string>();
    return p;
}

inline PropositionRef proposition_ref_from_json(const json& j) {
    return {detail::require(j, "doc_id").get<std::string>(),
            detail::require(j, "index").get<int>()};
}

inline QAExample qa_from_json(const json& j) {
    QAExample q;
    q.id = detail::require(j, "id").get<std::string>();
    q.question = detail::require(j, "question").get<std::string>();
    q.answers = detail::require(j, "answers").get<std::vector<std::string>>();
    if (q.answers.empty()) throw ParseError("qa record has empty 'answers'");
    q.hop_count = detail::require(j, "hop_count").get<int>();
    q.source_dataset = detail::require(j, "source").get<std::string>();
    if (j.contains("doc_ids")) q.doc_ids = j["doc_ids"].get<std::vector<std::string>>();
    return q;
}

inline SubQuestion sub_question_from_json(const json& j) {
    SubQuestion s;
    s.text = detail::require(j, "question").get<std::string>();
    s.answer = detail::require(j, "answer").get<std::string>();
    if (j.contains("support")) s.supporting_proposition = proposition_ref_from_json(j["support"]);
    return s;
}

inline MultiHopCandidate candidate_from_json(const json& j) {
    MultiHopCandidate c;
    c.seed_id = detail::require(j, "seed_id").get<std::string>();
    c.question = detail::require(j, "question").get<std::string>();
    c.answer = detail::require(j, "answer").get<std::string>();
    for (const auto& s : detail::require(j, "sub_questions"))
        c.sub_questions.push_back(sub_question_from_json(s));
    c.bridge_entities = detail::require(j, "bridge_entities").get<std::vector<std::string>>();
    if (j.contains("sampled_doc_ids"))
        c.sampled_doc_ids = j["sampled_doc_ids"].get<std::vector<std::string>>();
    c.hop_count = detail::require(j, "hop_count").get<int>();
    return c;
}

inline SummaryRecord summary_record_from_json(const json& j) {
    SummaryRecord r;
    r.id = detail::require(j, "id").get<std::string>();
    r.question = detail::require(j, "question").get<std::string>();
    for (const auto& d : detail::require(j, "documents"))
        r.documents.push_back(document_from_json(d));
    r.summary = detail::require(j, "summary").get<std::string>();
    r.hop_count = detail::require(j, "hop_count").get<int>();
    for (const auto& p : detail::require(j, "provenance"))
        r.provenance.push_back(proposition_ref_from_json(p));
    if (j.contains("source")) r.source_dataset = j["source"].get<std::string>();
    return r;
}

// ---------------------------------------------------------------------------
// JSONL I/O
// ---------------------------------------------------------------------------

// Streams raw JSON values line by line; parse errors carry the 1-based
// line number.
inline void for_each_jsonl(const std::string& path,
                           const std::function<void(const json&, int)>& fn) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        try {
            fn(j, line_no);
        } catch (const ParseError& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

template <typename T, typename FromJson>
std::vector<T> read_jsonl(const std::string& path, FromJson from_json_fn) {
    std::vector<T> out;
    for_each_jsonl(path, [&](const json& j, int) { out.push_back(from_json_fn(j)); });
    return out;
}

inline std::vector<Document> read_documents(const std::string& path) {
    return read_jsonl<Document>(path, document_from_json);
}
inline std::vector<QAExample> read_qa(const std::string& path) {
    return read_jsonl<QAExample>(path, qa_from_json);
}
inline std::vector<SummaryRecord> read_summary_records(const std::string& path) {
    return read_jsonl<SummaryRecord>(path, summary_record_from_json);
}
inline std::vector<Proposition> read_propositions(const std::string& path) {
    return read_jsonl<Proposition>(path, proposition_from_json);
}

class JsonlWriter {
public:
    explicit JsonlWriter(const std::string& path, bool append = false)
        : path_(path),
          out_(path, append ? std::ios::app : std::ios::trunc) {
        if (!out_) throw IoError("cannot open " + path + " for writing");
    }

    void write(const json& j) {
        out_ << j.dump() << '\n';
        if (!out_) throw IoError("write failed on " + path_);
        ++count_;
    }

    void flush() { out_.flush(); }
    size_t count() const { return count_; }

private:
    std::string path_;
    std::ofstream out_;
    size_t count_ = 0;
};

template <typename T, typename ToJson>
size_t write_jsonl(const std::vector<T>& records, const std::string& path, ToJson to_json_fn) {
    JsonlWriter w(path);
    for (const auto& r : records) w.write(to_json_fn(r));
    return w.count();
}

// ---------------------------------------------------------------------------
// Article truncation
// ---------------------------------------------------------------------------

// Splits an article into consecutive non-overlapping windows of at most
// `limit` words. Concatenating the windows reproduces the article's
// token sequence.
inline std::vector<Document> truncate_document(const std::string& article_id,
                                               const std::string& text,
                                               int limit,
                                               std::optional<std::string> title = std::nullopt) {
    if (limit < 1) throw DataError("truncate limit must be >= 1");
    std::vector<std::string> words = split_words(text);
    std::vector<Document> out;
    for (size_t start = 0; start < words.size(); start += static_cast<size_t>(limit)) {
        size_t end = std::min(words.size(), start + static_cast<size_t>(limit));
        std::string id = article_id + "-" + std::to_string(out.size());
        out.push_back(Document::make(std::move(id), join_words(words, start, end), title));
    }
    return out;
}

}  // namespace hopcomp
