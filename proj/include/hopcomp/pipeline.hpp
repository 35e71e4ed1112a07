#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "hopcomp/compression.hpp"
#include "hopcomp/core.hpp"
#include "hopcomp/gateway.hpp"
#include "hopcomp/helpfulness.hpp"
#include "hopcomp/metrics.hpp"
#include "hopcomp/propositions.hpp"
#include "hopcomp/synthesis.hpp"
#include "hopcomp/validation.hpp"

namespace hopcomp {

// ---------------------------------------------------------------------------
// Rejection ledger: associative counters, one key per outcome or stage
// call counter. Conservation: candidates_in = accepted + rejections +
// errors for every run.
// ---------------------------------------------------------------------------

struct Ledger {
    std::map<std::string, long> counts;

    void bump(const std::string& key, long n = 1) { counts[key] += n; }
    long get(const std::string& key) const {
        auto it = counts.find(key);
        return it == counts.end() ? 0 : it->second;
    }
    void merge(const Ledger& other) {
        for (const auto& [k, v] : other.counts) counts[k] += v;
    }
    std::string format() const {
        std::string out;
        for (const auto& [k, v] : counts) out += k + " " + std::to_string(v) + "\n";
        return out;
    }
};

// ---------------------------------------------------------------------------
// Synthesis run
// ---------------------------------------------------------------------------

struct SynthesisOptions {
    uint64_t seed = 42;
    int attempts = 3;   // composition attempts per (seed example, hop count)
    int min_hops = 2;
    int max_hops = 3;   // hop cap
    bool include_singlehop = true;
    bool include_multihop = true;
    double empty_quota = 0.05;  // fraction of empty-summary records in the output
    HelpfulnessConfig helpfulness;
    PropositionizeOptions propositionize;

    // file mode (both empty = in-memory only)
    std::string output_path;
    std::string checkpoint_path;
    // test hook: stop after this many newly processed seeds (simulated kill)
    size_t stop_after_seeds = static_cast<size_t>(-1);
};

struct SynthesisResult {
    std::vector<SummaryRecord> records;  // final, quota applied
    Ledger ledger;
    bool finished = true;
};

namespace detail {

inline uint64_t attempt_seed(uint64_t root, const std::string& seed_id, int hops, int attempt) {
    return derive_seed(root, seed_id + "/h" + std::to_string(hops) + "/a" +
                                 std::to_string(attempt));
}

// Applies the selective-augmentation quota: keeps at most
// floor(q/(1-q) * nonempty) empty-summary records, in input order.
inline std::vector<SummaryRecord> apply_empty_quota(std::vector<SummaryRecord> records,
                                                    double quota) {
    if (quota >= 1.0) return records;
    size_t nonempty = 0;
    for (const auto& r : records)
        if (!r.summary.empty()) ++nonempty;
    size_t allowed = quota <= 0.0
                         ? 0
                         : static_cast<size_t>(quota / (1.0 - quota) * nonempty);
    std::vector<SummaryRecord> out;
    size_t kept_empty = 0;
    for (auto& r : records) {
        if (r.summary.empty()) {
            if (kept_empty >= allowed) continue;
            ++kept_empty;
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace detail

class SynthesisRun {
public:
    SynthesisRun(const std::vector<QAExample>& seeds, const std::vector<Document>& documents,
                 Backend& backend, SynthesisOptions opts)
        : seeds_(seeds), backend_(backend), opts_(std::move(opts)) {
        for (const auto& d : documents) docs_by_id_[d.id] = d;
    }

    SynthesisResult run() {
        SynthesisResult result;
        std::vector<SummaryRecord> staged;
        std::set<std::string> completed = load_checkpoint(staged);

        std::unique_ptr<JsonlWriter> staging;
        std::unique_ptr<std::ofstream> ckpt;
        if (!opts_.output_path.empty()) {
            staging = std::make_unique<JsonlWriter>(staging_path(), /*append=*/false);
            for (const auto& r : staged) staging->write(to_json(r));  // rewrite filtered
            staging->flush();
            ckpt = std::make_unique<std::ofstream>(opts_.checkpoint_path, std::ios::trunc);
            for (const auto& id : completed) *ckpt << json{{"id", id}}.dump() << '\n';
            ckpt->flush();
        }

        size_t newly_processed = 0;
        for (const auto& qa : seeds_) {
            if (completed.count(qa.id)) continue;
            if (newly_processed >= opts_.stop_after_seeds) {
                result.finished = false;
                break;
            }
            std::vector<SummaryRecord> seed_records = process_seed(qa, result.ledger);
            for (auto& r : seed_records) {
                if (staging) staging->write(to_json(r));
                staged.push_back(std::move(r));
            }
            if (staging) staging->flush();
            if (ckpt) {
                *ckpt << json{{"id", qa.id}}.dump() << '\n';
                ckpt->flush();
            }
            completed.insert(qa.id);
            ++newly_processed;
        }

        if (result.finished) {
            result.records = detail::apply_empty_quota(std::move(staged), opts_.empty_quota);
            if (!opts_.output_path.empty())
                write_jsonl(result.records, opts_.output_path,
                            [](const SummaryRecord& r) { return to_json(r); });
        } else {
            result.records = std::move(staged);
        }
        return result;
    }

private:
    std::string staging_path() const { return opts_.output_path + ".staging"; }

    std::set<std::string> load_checkpoint(std::vector<SummaryRecord>& staged) {
        std::set<std::string> completed;
        if (opts_.checkpoint_path.empty() ||
            !std::filesystem::exists(opts_.checkpoint_path))
            return completed;
        for_each_jsonl(opts_.checkpoint_path, [&](const json& j, int) {
            completed.insert(j.at("id").get<std::string>());
        });
        if (std::filesystem::exists(staging_path())) {
            try {
                for_each_jsonl(staging_path(), [&](const json& j, int) {
                    SummaryRecord r = summary_record_from_json(j);
                    if (completed.count(seed_of(r.id))) staged.push_back(std::move(r));
                });
            } catch (const ParseError&) {
                // a kill mid-write can truncate the final staging line;
                // everything before it is intact
            }
        }
        return completed;
    }

    static std::string seed_of(const std::string& record_id) {
        size_t pos = record_id.rfind("-h");
        if (pos != std::string::npos) {
            // multi-hop ids look like "<seed>-h<t>-a<j>"
            size_t dash = record_id.find("-a", pos);
            if (dash != std::string::npos) return record_id.substr(0, pos);
        }
        return record_id;
    }

    std::vector<Document> retrieved_for(const QAExample& qa) const {
        std::vector<Document> docs;
        if (qa.doc_ids.empty()) {
            for (const auto& [_, d] : docs_by_id_) docs.push_back(d);
        } else {
            for (const auto& id : qa.doc_ids) {
                auto it = docs_by_id_.find(id);
                if (it == docs_by_id_.end())
                    throw DataError("qa " + qa.id + " references unknown document " + id);
                docs.push_back(it->second);
            }
        }
        return docs;
    }

    std::vector<Proposition> propositions_for(const std::vector<Document>& docs,
                                              Ledger& ledger) {
        std::vector<Proposition> out;
        for (const auto& d : docs) {
            auto it = prop_cache_.find(d.id);
            if (it == prop_cache_.end()) {
                ledger.bump("propositionize_calls");
                bool fallback = false;
                PropositionizeOptions popts = opts_.propositionize;
                popts.fallback_used = &fallback;
                auto props = propositionize(d, backend_, popts);
                if (fallback) ledger.bump("propositionize_fallbacks");
                store_.add(props);
                it = prop_cache_.emplace(d.id, std::move(props)).first;
            }
            out.insert(out.end(), it->second.begin(), it->second.end());
        }
        return out;
    }

    std::vector<SummaryRecord> process_seed(const QAExample& qa, Ledger& ledger) {
        std::vector<SummaryRecord> out;
        std::vector<Document> retrieved = retrieved_for(qa);
        ledger.bump("seeds_in");

        std::optional<std::vector<Document>> helpful_docs;
        auto helpful_subset = [&]() -> const std::vector<Document>& {
            if (!helpful_docs)
                helpful_docs = filter_helpful_documents(qa.question, qa.answers, retrieved,
                                                        backend_, opts_.helpfulness)
                                   .first;
            return *helpful_docs;
        };

        if (opts_.include_singlehop) {
            // single-hop path bypasses composition and validation entirely
            try {
                std::vector<Proposition> props = propositions_for(helpful_subset(), ledger);
                SummaryRecord r = build_singlehop_record(qa, retrieved, props, backend_,
                                                         opts_.helpfulness, store_);
                if (r.summary.empty()) ledger.bump("singlehop_empty");
                ledger.bump("singlehop_records");
                out.push_back(std::move(r));
            } catch (const std::exception& e) {
                ledger.bump("errors");
            }
        }

        if (opts_.include_multihop) {
            for (int hops = opts_.min_hops; hops <= opts_.max_hops; ++hops) {
                if (static_cast<int>(retrieved.size()) < hops) {
                    ledger.bump("insufficient_documents", opts_.attempts);
                    ledger.bump("candidates_in", opts_.attempts);
                    continue;
                }
                for (int attempt = 0; attempt < opts_.attempts; ++attempt) {
                    ledger.bump("candidates_in");
                    try {
                        auto record = attempt_candidate(qa, retrieved, helpful_subset(), hops,
                                                        attempt, ledger);
                        if (record) out.push_back(std::move(*record));
                    } catch (const std::exception&) {
                        ledger.bump("errors");
                    }
                }
            }
        }
        return out;
    }

    std::optional<SummaryRecord> attempt_candidate(const QAExample& qa,
                                                   const std::vector<Document>& retrieved,
                                                   const std::vector<Document>& helpful,
                                                   int hops, int attempt, Ledger& ledger) {
        uint64_t sub_seed = detail::attempt_seed(opts_.seed, qa.id, hops, attempt);
        std::vector<Document> sampled = sample_documents(retrieved, hops, sub_seed);

        ledger.bump("compose_calls");
        CompositionOutcome comp = compose_multihop(sampled, backend_, sub_seed);
        if (comp.status == CompositionOutcome::Status::Refused) {
            ledger.bump("refused");
            return std::nullopt;
        }
        if (comp.status == CompositionOutcome::Status::Empty) {
            ledger.bump("empty_completion");
            return std::nullopt;
        }

        MultiHopCandidate cand;
        cand.seed_id = qa.id;
        cand.hop_count = hops;
        for (const auto& d : sampled) cand.sampled_doc_ids.push_back(d.id);
        try {
            std::tie(cand.question, cand.answer) = parse_composition(comp.raw);
        } catch (const ParseError&) {
            ledger.bump("reject_ParseFailure");
            return std::nullopt;
        }

        ledger.bump("decompose_calls");
        Decomposition dec;
        try {
            std::string raw = decompose_multihop(cand.question, cand.answer, sampled, backend_);
            dec = parse_decomposition(raw, hops);
        } catch (const ParseError&) {
            ledger.bump("reject_ParseFailure");
            return std::nullopt;
        } catch (const EmptyOutputError&) {
            ledger.bump("reject_ParseFailure");
            return std::nullopt;
        }
        cand.bridge_entities = std::move(dec.bridge_entities);
        cand.sub_questions = std::move(dec.sub_questions);

        // support propositions come from the helpful subset plus the
        // sampled documents themselves
        std::vector<Document> to_segment = helpful;
        for (const auto& d : sampled) {
            bool present = false;
            for (const auto& h : to_segment)
                if (h.id == d.id) present = true;
            if (!present) to_segment.push_back(d);
        }
        std::vector<Proposition> props = propositions_for(to_segment, ledger);

        ValidationVerdict verdict = validate(cand, props, backend_, opts_.helpfulness);
        if (!verdict.accepted) {
            ledger.bump(std::string("reject_") + reject_reason_name(verdict.reason));
            return std::nullopt;
        }
        ledger.bump("accepted");
        std::string record_id =
            qa.id + "-h" + std::to_string(hops) + "-a" + std::to_string(attempt);
        return build_multihop_record(record_id, cand, retrieved, store_, qa.source_dataset);
    }

    const std::vector<QAExample>& seeds_;
    Backend& backend_;
    SynthesisOptions opts_;
    std::map<std::string, Document> docs_by_id_;
    std::map<std::string, std::vector<Proposition>> prop_cache_;
    RecordStore store_;
};

inline SynthesisResult run_synthesis(const std::vector<QAExample>& seeds,
                                     const std::vector<Document>& documents, Backend& backend,
                                     const SynthesisOptions& opts) {
    SynthesisRun run(seeds, documents, backend, opts);
    return run.run();
}

// ---------------------------------------------------------------------------
// Evaluation run
// ---------------------------------------------------------------------------

struct EvalOptions {
    int chunk_size = 0;  // 0 = no chunking
    uint64_t seed = 42;
    std::string dataset = "hotpotqa";
    bool force_no_documents = false;  // the empty-summary condition
};

struct NamedBackend {
    std::string name;
    Backend* backend;
};

// One compressor, fanned out to any number of readers over the same
// summaries.
inline std::map<std::string, std::vector<EvalRow>> run_eval(
    const std::vector<QAExample>& questions, const std::vector<Document>& documents,
    Backend& compressor, const std::vector<NamedBackend>& readers, const EvalOptions& opts,
    Ledger* ledger = nullptr) {
    std::map<std::string, Document> by_id;
    for (const auto& d : documents) by_id[d.id] = d;
    std::map<std::string, std::vector<EvalRow>> out;
    for (const auto& qa : questions) {
        std::vector<Document> docs;
        for (const auto& id : qa.doc_ids) {
            auto it = by_id.find(id);
            if (it != by_id.end()) docs.push_back(it->second);
        }
        CompressionResult comp;
        try {
            if (opts.force_no_documents || docs.empty()) {
                for (const auto& d : docs) comp.input_words += d.word_count;
            } else if (opts.chunk_size > 0) {
                comp = compress_chunked(qa.question, docs, opts.chunk_size,
                                        derive_seed(opts.seed, qa.id), compressor);
            } else {
                comp = compress(qa.question, docs, compressor);
            }
        } catch (const std::exception&) {
            if (ledger) ledger->bump("eval_errors");
            continue;
        }
        std::string prompt = build_reader_prompt(qa.question, comp.summary, opts.dataset);
        for (const auto& reader : readers) {
            std::string prediction;
            try {
                GenerationRequest req;
                req.prompt = prompt;
                req.max_new_tokens = 32;
                req.stop_sequences = {"\n"};
                prediction = read_answer(reader.backend->generate_raw(req));
            } catch (const std::exception&) {
                if (ledger) ledger->bump("eval_errors");
                continue;
            }
            out[reader.name].push_back(make_eval_row(qa.id, prediction, qa.answers,
                                                     comp.input_words, comp.output_words,
                                                     qa.hop_count));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Unified dataset assembly
// ---------------------------------------------------------------------------

// Concatenates record sets; on id collision every colliding id is
// re-namespaced deterministically by its source tag.
inline std::vector<SummaryRecord> build_unified_dataset(
    const std::vector<std::pair<std::string, std::vector<SummaryRecord>>>& sources) {
    if (sources.size() < 2)
        throw DataError("build_unified_dataset needs at least two sources");
    std::map<std::string, int> id_counts;
    for (const auto& [_, records] : sources)
        for (const auto& r : records) ++id_counts[r.id];
    std::vector<SummaryRecord> out;
    for (const auto& [tag, records] : sources) {
        for (auto r : records) {
            if (id_counts[r.id] > 1) r.id = tag + "/" + r.id;
            if (r.source_dataset.empty()) r.source_dataset = tag;
            out.push_back(std::move(r));
        }
    }
    return out;
}

}  // namespace hopcomp
