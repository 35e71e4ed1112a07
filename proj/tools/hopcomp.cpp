// hopcomp command line: synthesize multi-hop compression training data
// from seed QA corpora and evaluate query-aware compressors on
// open-domain QA.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hopcomp/compression.hpp"
#include "hopcomp/core.hpp"
#include "hopcomp/gateway.hpp"
#include "hopcomp/helpfulness.hpp"
#include "hopcomp/http_backend.hpp"
#include "hopcomp/metrics.hpp"
#include "hopcomp/pipeline.hpp"
#include "hopcomp/propositions.hpp"
#include "hopcomp/synthesis.hpp"
#include "hopcomp/validation.hpp"

namespace hc = hopcomp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitEndpoint = 3;

// Configuration precedence: CLI flags > environment > config file > defaults.
struct BackendOptions {
    std::string kind = "mock";  // mock | http
    std::string base_url;
    std::string model;
    std::string token_env = "HOPCOMP_API_TOKEN";
    std::string config_file;
    int max_in_flight = 4;
    int timeout_ms = 60000;

    void add_flags(CLI::App* cmd) {
        cmd->add_option("--backend", kind, "backend kind: mock or http")
            ->envname("HOPCOMP_BACKEND");
        cmd->add_option("--endpoint", base_url, "base URL of the serving endpoint")
            ->envname("HOPCOMP_ENDPOINT");
        cmd->add_option("--model", model, "model name sent to the endpoint")
            ->envname("HOPCOMP_MODEL");
        cmd->add_option("--token-env", token_env,
                        "environment variable holding the bearer token");
        cmd->add_option("--max-in-flight", max_in_flight, "concurrent request cap");
        cmd->add_option("--timeout-ms", timeout_ms, "per-request timeout");
        cmd->add_option("--config", config_file, "JSON config file (lowest precedence)")
            ->envname("HOPCOMP_CONFIG");
    }

    void apply_config_file() {
        if (config_file.empty()) return;
        std::ifstream in(config_file);
        if (!in) throw hc::IoError("cannot open config file " + config_file);
        hc::json j;
        in >> j;
        // config file fills only fields still at their defaults
        if (base_url.empty() && j.contains("endpoint"))
            base_url = j["endpoint"].get<std::string>();
        if (model.empty() && j.contains("model")) model = j["model"].get<std::string>();
        if (kind == "mock" && j.contains("backend")) kind = j["backend"].get<std::string>();
        if (j.contains("token_env")) token_env = j["token_env"].get<std::string>();
    }

    hc::EndpointConfig endpoint() const {
        hc::EndpointConfig cfg;
        cfg.base_url = base_url;
        cfg.model_name = model;
        cfg.auth_token_env = token_env;
        cfg.max_in_flight = max_in_flight;
        cfg.timeout_ms = timeout_ms;
        return cfg;
    }

    std::unique_ptr<hc::Backend> make() {
        apply_config_file();
        if (kind == "mock") return std::make_unique<hc::MockBackend>();
        if (kind == "http") {
            if (base_url.empty())
                throw CLI::ValidationError("--endpoint is required for the http backend");
            return std::make_unique<hc::HttpBackend>(endpoint());
        }
        throw CLI::ValidationError("unknown backend kind '" + kind + "'");
    }
};

int cmd_ingest(const std::string& input, const std::string& output, int limit) {
    hc::JsonlWriter out(output);
    hc::for_each_jsonl(input, [&](const hc::json& j, int) {
        std::string id = j.at("id").get<std::string>();
        std::string text = j.at("text").get<std::string>();
        std::optional<std::string> title;
        if (j.contains("title") && !j["title"].is_null())
            title = j["title"].get<std::string>();
        for (const auto& d : hc::truncate_document(id, text, limit, title))
            out.write(hc::to_json(d));
    });
    std::cerr << "wrote " << out.count() << " documents\n";
    return kExitOk;
}

int cmd_propositionize(BackendOptions& be, const std::string& documents,
                       const std::string& output, const std::string& cache_dir,
                       bool no_cache) {
    auto backend = be.make();
    hc::PropositionizeOptions opts;
    if (!no_cache && !cache_dir.empty()) opts.cache_dir = cache_dir;
    opts.model_name = be.model;
    hc::JsonlWriter out(output);
    long fallbacks = 0;
    for (const auto& d : hc::read_documents(documents)) {
        bool fb = false;
        opts.fallback_used = &fb;
        for (const auto& p : hc::propositionize(d, *backend, opts)) out.write(hc::to_json(p));
        if (fb) ++fallbacks;
    }
    std::cerr << "wrote " << out.count() << " propositions";
    if (fallbacks) std::cerr << " (" << fallbacks << " sentence-split fallbacks)";
    std::cerr << "\n";
    return kExitOk;
}

int cmd_score(BackendOptions& be, const std::string& qa_path, const std::string& docs_path,
              const std::string& output, int k, bool max_delta) {
    auto backend = be.make();
    hc::HelpfulnessConfig cfg;
    cfg.k = k;
    cfg.max_delta_over_answers = max_delta;
    cfg.endpoint = be.endpoint();
    auto docs = hc::read_documents(docs_path);
    std::map<std::string, hc::Document> by_id;
    for (const auto& d : docs) by_id[d.id] = d;
    hc::JsonlWriter out(output);
    for (const auto& qa : hc::read_qa(qa_path)) {
        std::vector<hc::Document> retrieved;
        for (const auto& id : qa.doc_ids)
            if (auto it = by_id.find(id); it != by_id.end()) retrieved.push_back(it->second);
        if (retrieved.empty()) retrieved = docs;
        auto [_, report] =
            hc::filter_helpful_documents(qa.question, qa.answers, retrieved, *backend, cfg);
        report.example_id = qa.id;
        out.write(hc::to_json(report));
    }
    std::cerr << "wrote " << out.count() << " reports\n";
    return kExitOk;
}

int cmd_synthesize(BackendOptions& be, const std::string& qa_path,
                   const std::string& docs_path, const std::string& output,
                   const std::string& checkpoint, hc::SynthesisOptions opts) {
    auto backend = be.make();
    opts.helpfulness.endpoint = be.endpoint();
    opts.output_path = output;
    opts.checkpoint_path = checkpoint.empty() ? output + ".ckpt" : checkpoint;
    auto seeds = hc::read_qa(qa_path);
    auto docs = hc::read_documents(docs_path);
    auto result = hc::run_synthesis(seeds, docs, *backend, opts);
    std::cout << result.ledger.format();
    std::cerr << "wrote " << result.records.size() << " records to " << output << "\n";
    return kExitOk;
}

int cmd_validate(BackendOptions& be, const std::string& candidates_path,
                 const std::string& props_path, const std::string& output) {
    auto backend = be.make();
    hc::HelpfulnessConfig cfg;
    cfg.endpoint = be.endpoint();
    auto props = hc::read_propositions(props_path);
    hc::Ledger ledger;
    hc::JsonlWriter out(output);
    hc::for_each_jsonl(candidates_path, [&](const hc::json& j, int) {
        hc::MultiHopCandidate c = hc::candidate_from_json(j);
        hc::ValidationVerdict v = hc::validate(c, props, *backend, cfg);
        ledger.bump(hc::reject_reason_name(v.reason));
        out.write(hc::json{{"seed_id", c.seed_id},
                           {"question", c.question},
                           {"accepted", v.accepted},
                           {"reason", hc::reject_reason_name(v.reason)},
                           {"detail", v.detail}});
    });
    std::cout << ledger.format();
    return kExitOk;
}

int cmd_build_dataset(const std::string& records_path, const std::string& output) {
    // seq2seq convention: source = "summarize: " + question + documents,
    // target = summary (possibly empty)
    hc::JsonlWriter out(output);
    for (const auto& r : hc::read_summary_records(records_path)) {
        out.write(hc::json{{"source", hc::build_compressor_input(r.question, r.documents)},
                           {"target", r.summary}});
    }
    std::cerr << "wrote " << out.count() << " training pairs\n";
    return kExitOk;
}

int cmd_stats(const std::string& records_path) {
    auto records = hc::read_summary_records(records_path);
    std::cout << hc::format_stats(hc::dataset_stats(records));
    return kExitOk;
}

int cmd_compress(BackendOptions& be, const std::string& qa_path, const std::string& docs_path,
                 const std::string& output, int chunk_size, uint64_t seed) {
    auto backend = be.make();
    auto docs = hc::read_documents(docs_path);
    std::map<std::string, hc::Document> by_id;
    for (const auto& d : docs) by_id[d.id] = d;
    hc::JsonlWriter out(output);
    for (const auto& qa : hc::read_qa(qa_path)) {
        std::vector<hc::Document> retrieved;
        for (const auto& id : qa.doc_ids)
            if (auto it = by_id.find(id); it != by_id.end()) retrieved.push_back(it->second);
        if (retrieved.empty())
            throw hc::DataError("qa " + qa.id + " has no resolvable doc_ids");
        hc::CompressionResult r =
            chunk_size > 0
                ? hc::compress_chunked(qa.question, retrieved, chunk_size,
                                       hc::derive_seed(seed, qa.id), *backend)
                : hc::compress(qa.question, retrieved, *backend);
        out.write(hc::to_json(r, qa.id));
    }
    std::cerr << "wrote " << out.count() << " compression results\n";
    return kExitOk;
}

int cmd_evaluate(BackendOptions& be, const std::string& rows_path, const std::string& qa_path,
                 const std::string& docs_path, const std::string& rows_out,
                 const std::string& readers_csv, const std::string& dataset, int chunk_size,
                 uint64_t seed, bool no_documents, bool json_report, bool per_row_rate) {
    if (!rows_path.empty()) {
        // offline scoring of precomputed predictions
        auto rows = hc::read_jsonl<hc::EvalRow>(rows_path, hc::eval_row_from_json);
        hc::EvalReport rep = hc::aggregate(rows);
        if (json_report)
            std::cout << hc::to_json(rep).dump(2) << "\n";
        else
            std::cout << hc::format_report(rep);
        if (per_row_rate && rep.mean_row_compression_rate)
            std::printf("mean per-row rate  %.2fx\n", *rep.mean_row_compression_rate);
        if (!rows_out.empty())
            hc::write_jsonl(rows, rows_out, [](const hc::EvalRow& r) { return to_json(r); });
        return kExitOk;
    }
    auto compressor = be.make();
    std::vector<std::string> reader_names;
    std::stringstream ss(readers_csv.empty() ? std::string("reader") : readers_csv);
    std::string name;
    while (std::getline(ss, name, ',')) reader_names.push_back(name);
    // every named reader shares the configured backend; distinct URLs per
    // reader can be run as separate invocations over the same summaries
    std::vector<hc::NamedBackend> readers;
    for (auto& n : reader_names) readers.push_back({n, compressor.get()});

    hc::EvalOptions opts;
    opts.chunk_size = chunk_size;
    opts.seed = seed;
    opts.dataset = dataset;
    opts.force_no_documents = no_documents;
    auto questions = hc::read_qa(qa_path);
    auto documents = hc::read_documents(docs_path);
    hc::Ledger ledger;
    auto results = hc::run_eval(questions, documents, *compressor, readers, opts, &ledger);
    for (const auto& [rname, rows] : results) {
        std::cout << "== " << rname << " ==\n";
        hc::EvalReport rep = hc::aggregate(rows);
        if (json_report)
            std::cout << hc::to_json(rep).dump(2) << "\n";
        else
            std::cout << hc::format_report(rep);
        if (!rows_out.empty()) {
            std::string path = results.size() == 1 ? rows_out : rows_out + "." + rname;
            hc::write_jsonl(rows, path, [](const hc::EvalRow& r) { return to_json(r); });
        }
    }
    if (ledger.get("eval_errors"))
        std::cerr << "errored examples excluded: " << ledger.get("eval_errors") << "\n";
    return kExitOk;
}

int cmd_merge(const std::vector<std::string>& inputs, const std::vector<std::string>& tags,
              const std::string& output) {
    if (inputs.size() < 2) throw CLI::ValidationError("merge needs at least two --inputs");
    std::vector<std::pair<std::string, std::vector<hc::SummaryRecord>>> sources;
    for (size_t i = 0; i < inputs.size(); ++i) {
        std::string tag = i < tags.size() ? tags[i] : "src" + std::to_string(i);
        sources.emplace_back(tag, hc::read_summary_records(inputs[i]));
    }
    auto merged = hc::build_unified_dataset(sources);
    hc::write_jsonl(merged, output, [](const hc::SummaryRecord& r) { return to_json(r); });
    std::cout << hc::format_stats(hc::dataset_stats(merged));
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-hop compression data synthesis and QA evaluation toolkit"};
    app.require_subcommand(1);

    BackendOptions be;

    // ingest
    std::string in_path, out_path;
    int word_limit = 100;
    auto* ingest = app.add_subcommand("ingest", "truncate articles into fixed-size documents");
    ingest->add_option("--input", in_path)->required();
    ingest->add_option("--output", out_path)->required();
    ingest->add_option("--limit", word_limit, "words per document (default 100)");

    // propositionize
    std::string docs_path, cache_dir = "prop-cache";
    bool no_cache = false;
    auto* prop = app.add_subcommand("propositionize", "segment documents into propositions");
    be.add_flags(prop);
    prop->add_option("--documents", docs_path)->required();
    prop->add_option("--output", out_path)->required();
    prop->add_option("--cache-dir", cache_dir);
    prop->add_flag("--no-cache", no_cache);

    // score
    std::string qa_path;
    int k = 2;
    bool max_delta = false;
    auto* score = app.add_subcommand("score", "emit helpfulness reports for audit");
    be.add_flags(score);
    score->add_option("--qa", qa_path)->required();
    score->add_option("--documents", docs_path)->required();
    score->add_option("--output", out_path)->required();
    score->add_option("--k", k);
    score->add_flag("--max-delta", max_delta, "take max delta over all gold answers");

    // synthesize
    hc::SynthesisOptions sopts;
    std::string checkpoint;
    int hops = 3;
    bool single_only = false, multi_only = false;
    auto* synth = app.add_subcommand("synthesize", "run the full data synthesis pipeline");
    be.add_flags(synth);
    synth->add_option("--qa", qa_path)->required();
    synth->add_option("--documents", docs_path)->required();
    synth->add_option("--output", out_path)->required();
    synth->add_option("--checkpoint", checkpoint, "checkpoint file (default <output>.ckpt)");
    synth->add_option("--hops", hops, "maximum hop count (1 disables composition)");
    synth->add_option("--attempts", sopts.attempts, "composition attempts per seed per hop");
    synth->add_option("--k", sopts.helpfulness.k, "top-k propositions for single-hop records");
    synth->add_option("--empty-quota", sopts.empty_quota,
                      "fraction of empty-summary records kept");
    synth->add_option("--seed", sopts.seed);
    synth->add_flag("--single-hop-only", single_only);
    synth->add_flag("--multi-hop-only", multi_only);

    // validate
    std::string candidates_path, props_path;
    auto* val = app.add_subcommand("validate", "validate composed multi-hop candidates");
    be.add_flags(val);
    val->add_option("--candidates", candidates_path)->required();
    val->add_option("--propositions", props_path)->required();
    val->add_option("--output", out_path)->required();

    // build-dataset
    std::string records_path;
    auto* build = app.add_subcommand("build-dataset",
                                     "emit seq2seq source/target training pairs");
    build->add_option("--records", records_path)->required();
    build->add_option("--output", out_path)->required();

    // stats
    auto* stats = app.add_subcommand("stats", "dataset statistics table");
    stats->add_option("--records", records_path)->required();

    // compress
    int chunk_size = 0;
    uint64_t seed = 42;
    auto* comp = app.add_subcommand("compress", "compress retrieved documents per question");
    be.add_flags(comp);
    comp->add_option("--qa", qa_path)->required();
    comp->add_option("--documents", docs_path)->required();
    comp->add_option("--output", out_path)->required();
    comp->add_option("--chunk-size", chunk_size, "0 = no chunking");
    comp->add_option("--seed", seed);

    // evaluate
    std::string rows_path, rows_out, readers_csv, dataset = "hotpotqa";
    bool no_documents = false, json_report = false, per_row_rate = false;
    auto* eval = app.add_subcommand("evaluate", "score predictions or run the eval loop");
    be.add_flags(eval);
    eval->add_option("--rows", rows_path, "offline mode: precomputed prediction rows");
    eval->add_option("--qa", qa_path);
    eval->add_option("--documents", docs_path);
    eval->add_option("--rows-out", rows_out);
    eval->add_option("--readers", readers_csv, "comma-separated reader names");
    eval->add_option("--dataset", dataset, "reader prompt template name");
    eval->add_option("--chunk-size", chunk_size);
    eval->add_option("--seed", seed);
    eval->add_flag("--no-documents", no_documents, "omit the documents block");
    eval->add_flag("--json", json_report);
    eval->add_flag("--per-row-rate", per_row_rate, "also report mean of per-row ratios");

    // merge
    std::vector<std::string> merge_inputs, merge_tags;
    auto* merge = app.add_subcommand("merge", "combine record files into a unified dataset");
    merge->add_option("--inputs", merge_inputs)->required()->delimiter(',');
    merge->add_option("--tags", merge_tags)->delimiter(',');
    merge->add_option("--output", out_path)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*ingest) return cmd_ingest(in_path, out_path, word_limit);
        if (*prop) return cmd_propositionize(be, docs_path, out_path, cache_dir, no_cache);
        if (*score) return cmd_score(be, qa_path, docs_path, out_path, k, max_delta);
        if (*synth) {
            sopts.max_hops = hops;
            sopts.include_multihop = !single_only && hops >= 2;
            sopts.include_singlehop = !multi_only;
            return cmd_synthesize(be, qa_path, docs_path, out_path, checkpoint, sopts);
        }
        if (*val) return cmd_validate(be, candidates_path, props_path, out_path);
        if (*build) return cmd_build_dataset(records_path, out_path);
        if (*stats) return cmd_stats(records_path);
        if (*comp) return cmd_compress(be, qa_path, docs_path, out_path, chunk_size, seed);
        if (*eval)
            return cmd_evaluate(be, rows_path, qa_path, docs_path, rows_out, readers_csv,
                                dataset, chunk_size, seed, no_documents, json_report,
                                per_row_rate);
        if (*merge) return cmd_merge(merge_inputs, merge_tags, out_path);
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const hc::GatewayError& e) {
        std::cerr << "endpoint error: " << e.what() << "\n";
        return kExitEndpoint;
    } catch (const hc::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const hc::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
