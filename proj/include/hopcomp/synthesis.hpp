#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "hopcomp/core.hpp"
#include "hopcomp/gateway.hpp"
#include "hopcomp/helpfulness.hpp"
#include "hopcomp/prompts.hpp"
#include "hopcomp/rng.hpp"

namespace hopcomp {

// ---------------------------------------------------------------------------
// Document sampling
// ---------------------------------------------------------------------------

// t distinct documents, uniform without replacement, deterministic
// under the seed. Partial Fisher-Yates over index space.
inline std::vector<Document> sample_documents(const std::vector<Document>& docs, int t,
                                              uint64_t seed) {
    if (t < 2) throw DataError("sample_documents: hop count must be >= 2");
    if (static_cast<int>(docs.size()) < t)
        throw DataError("sample_documents: need " + std::to_string(t) + " documents, have " +
                        std::to_string(docs.size()));
    std::vector<size_t> idx(docs.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(seed);
    std::vector<Document> out;
    for (int pick = 0; pick < t; ++pick) {
        size_t j = pick + rng.below(idx.size() - pick);
        std::swap(idx[pick], idx[j]);
        out.push_back(docs[idx[pick]]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Composition
// ---------------------------------------------------------------------------

struct CompositionOutcome {
    enum class Status { Ok, Refused, Empty } status = Status::Ok;
    std::string raw;
};

inline std::string render_passages(const std::vector<Document>& docs) {
    std::string out;
    for (size_t i = 0; i < docs.size(); ++i)
        out += std::to_string(i + 1) + ". " + docs[i].text + "\n";
    return out;
}

inline CompositionOutcome compose_multihop(const std::vector<Document>& sampled,
                                           Backend& backend, uint64_t seed) {
    static const PromptTemplate tmpl = prompts::compose_multihop();
    GenerationRequest req;
    req.prompt = tmpl.render({{"given_doc", render_passages(sampled)}});
    req.max_new_tokens = 512;
    req.seed = seed;
    std::string raw;
    try {
        raw = generate(backend, req);
    } catch (const EmptyOutputError&) {
        return {CompositionOutcome::Status::Empty, ""};
    }
    if (raw.find("Sorry, I cannot generate") != std::string::npos)
        return {CompositionOutcome::Status::Refused, raw};
    return {CompositionOutcome::Status::Ok, raw};
}

// Extracts the question after the last "Multihop Question:" marker and
// the first line after the following "Answer:" marker.
inline std::pair<std::string, std::string> parse_composition(const std::string& raw) {
    const std::string q_marker = "Multihop Question:";
    const std::string a_marker = "Answer:";
    size_t q_pos = raw.rfind(q_marker);
    if (q_pos == std::string::npos) throw ParseError("missing 'Multihop Question:' marker");
    size_t a_pos = raw.find(a_marker, q_pos + q_marker.size());
    if (a_pos == std::string::npos) throw ParseError("missing 'Answer:' marker");
    std::string question = trim(raw.substr(q_pos + q_marker.size(), a_pos - q_pos - q_marker.size()));
    std::string rest = trim(raw.substr(a_pos + a_marker.size()));
    std::string answer = trim(rest.substr(0, rest.find('\n')));
    if (question.empty()) throw ParseError("empty multi-hop question");
    if (answer.empty()) throw ParseError("empty answer");
    return {question, answer};
}

// ---------------------------------------------------------------------------
// Decomposition
// ---------------------------------------------------------------------------

inline std::string render_contexts(const std::vector<Document>& docs) {
    std::string out;
    for (size_t i = 0; i < docs.size(); ++i)
        out += "Context " + std::to_string(i + 1) + ": " + docs[i].text + "\n";
    return out;
}

inline std::string decompose_multihop(const std::string& question, const std::string& answer,
                                      const std::vector<Document>& contexts, Backend& backend) {
    static const PromptTemplate tmpl = prompts::decompose_multihop();
    GenerationRequest req;
    req.prompt = tmpl.render(
        {{"question", question}, {"answer", answer}, {"context", render_contexts(contexts)}});
    req.max_new_tokens = 512;
    req.temperature = 0.0;
    return generate(backend, req);
}

struct Decomposition {
    std::vector<std::string> bridge_entities;
    std::vector<SubQuestion> sub_questions;
};

// Parses "Bridge Entity:" (comma-separated for t > 2) and the numbered
// "Question:" / "Answer:" pairs. The caller checks arity against t.
inline Decomposition parse_decomposition(const std::string& raw, int expected_hops) {
    Decomposition d;
    std::istringstream in(raw);
    std::string line;
    bool saw_bridge = false;
    SubQuestion pending;
    bool have_question = false;
    while (std::getline(in, line)) {
        std::string t = trim(line);
        if (t.rfind("Bridge Entity:", 0) == 0) {
            saw_bridge = true;
            std::string rest = trim(t.substr(14));
            size_t start = 0;
            while (start <= rest.size()) {
                size_t comma = rest.find(',', start);
                std::string entity = trim(rest.substr(
                    start, comma == std::string::npos ? std::string::npos : comma - start));
                if (!entity.empty()) d.bridge_entities.push_back(entity);
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
            continue;
        }
        if (size_t qp = t.find("Question:"); qp != std::string::npos && qp <= 4) {
            if (have_question) throw ParseError("question without a following answer");
            pending.text = trim(t.substr(qp + 9));
            have_question = true;
            continue;
        }
        if (size_t ap = t.find("Answer:"); ap != std::string::npos && ap == 0 && have_question) {
            pending.answer = trim(t.substr(7));
            if (pending.text.empty() || pending.answer.empty())
                throw ParseError("empty sub-question or answer");
            d.sub_questions.push_back(pending);
            pending = {};
            have_question = false;
        }
    }
    if (!saw_bridge) throw ParseError("missing 'Bridge Entity:' marker");
    if (d.bridge_entities.empty()) throw ParseError("no bridge entity parsed");
    if (static_cast<int>(d.sub_questions.size()) != expected_hops)
        throw ParseError("expected " + std::to_string(expected_hops) + " sub-questions, parsed " +
                         std::to_string(d.sub_questions.size()));
    return d;
}

// ---------------------------------------------------------------------------
// Record assembly
// ---------------------------------------------------------------------------

struct RecordStore {
    std::map<PropositionRef, std::string> texts;

    void add(const std::vector<Proposition>& props) {
        for (const auto& p : props) texts[p.ref()] = p.text;
    }
    const std::string& text_of(const PropositionRef& r) const {
        auto it = texts.find(r);
        if (it == texts.end())
            throw DataError("unknown proposition " + r.doc_id + "#" + std::to_string(r.index));
        return it->second;
    }
};

// A validated candidate plus its bound supporting propositions becomes
// a training record. Documents field stores the full retrieved set, not
// only the sampled subset.
inline SummaryRecord build_multihop_record(const std::string& record_id,
                                           const MultiHopCandidate& c,
                                           const std::vector<Document>& retrieved,
                                           const RecordStore& store,
                                           const std::string& source_dataset) {
    SummaryRecord r;
    r.id = record_id;
    r.question = c.question;
    r.documents = retrieved;
    r.hop_count = c.hop_count;
    r.source_dataset = source_dataset;
    std::set<std::string> docs_seen;
    std::string summary;
    for (const auto& sq : c.sub_questions) {
        if (!sq.supporting_proposition)
            throw DataError("candidate has an unbound sub-question; validate first");
        const auto& ref = *sq.supporting_proposition;
        if (!docs_seen.insert(ref.doc_id).second)
            throw DataError("supporting propositions share document " + ref.doc_id);
        if (!summary.empty()) summary += ' ';
        summary += store.text_of(ref);
        r.provenance.push_back(ref);
    }
    r.summary = std::move(summary);
    return r;
}

// Single-hop record: top-k helpful propositions of the helpful document
// subset; empty summary when no document helps.
inline SummaryRecord build_singlehop_record(const QAExample& qa,
                                            const std::vector<Document>& retrieved,
                                            const std::vector<Proposition>& propositions,
                                            Backend& backend, const HelpfulnessConfig& cfg,
                                            const RecordStore& store) {
    SummaryRecord r;
    r.id = qa.id;
    r.question = qa.question;
    r.documents = retrieved;
    r.hop_count = 1;
    r.source_dataset = qa.source_dataset;

    auto [helpful_docs, report] =
        filter_helpful_documents(qa.question, qa.answers, retrieved, backend, cfg);
    if (helpful_docs.empty()) return r;  // summary stays "", provenance empty

    std::set<std::string> helpful_ids;
    for (const auto& d : helpful_docs) helpful_ids.insert(d.id);
    std::vector<Proposition> candidates;
    for (const auto& p : propositions)
        if (helpful_ids.count(p.doc_id)) candidates.push_back(p);

    auto selected = select_helpful_propositions(qa.question, qa.answers, candidates, cfg.k,
                                                backend, cfg);
    std::string summary;
    for (const auto& ref : selected) {
        if (!summary.empty()) summary += ' ';
        summary += store.text_of(ref);
        r.provenance.push_back(ref);
    }
    r.summary = std::move(summary);
    return r;
}

// ---------------------------------------------------------------------------
// Dataset statistics
// ---------------------------------------------------------------------------

struct StatsRow {
    std::string source;
    int hop_count = 0;
    size_t samples = 0;
    double mean_summary_words = 0.0;  // over non-empty summaries
    size_t empty_summaries = 0;
};

inline std::vector<StatsRow> dataset_stats(const std::vector<SummaryRecord>& records) {
    std::map<std::pair<std::string, int>, std::tuple<size_t, long long, size_t, size_t>> acc;
    for (const auto& r : records) {
        auto& [n, words, nonempty, empties] = acc[{r.source_dataset, r.hop_count}];
        ++n;
        if (r.summary.empty()) {
            ++empties;
        } else {
            words += count_words(r.summary);
            ++nonempty;
        }
    }
    std::vector<StatsRow> rows;
    for (const auto& [key, val] : acc) {
        const auto& [n, words, nonempty, empties] = val;
        StatsRow row;
        row.source = key.first;
        row.hop_count = key.second;
        row.samples = n;
        row.mean_summary_words = nonempty ? static_cast<double>(words) / nonempty : 0.0;
        row.empty_summaries = empties;
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string format_with_thousands(size_t n) {
    std::string digits = std::to_string(n);
    std::string out;
    int c = 0;
    for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
        if (c && c % 3 == 0) out += ',';
        out += *it;
        ++c;
    }
    std::reverse(out.begin(), out.end());
    return out;
}

inline std::string format_stats(const std::vector<StatsRow>& rows) {
    std::string out = "source  hop  samples  words/summary\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s %d-hop %s %.2f", r.source.c_str(), r.hop_count,
                      format_with_thousands(r.samples).c_str(), r.mean_summary_words);
        out += buf;
        if (r.empty_summaries) {
            std::snprintf(buf, sizeof buf, "  (%zu empty)", r.empty_summaries);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

}  // namespace hopcomp
