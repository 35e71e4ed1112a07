#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hopcomp/core.hpp"

namespace hopcomp {

// ---------------------------------------------------------------------------
// Answer normalization (the standard open-domain QA convention):
// lowercase, strip punctuation, drop the articles a/an/the as whole
// tokens, collapse whitespace.
// ---------------------------------------------------------------------------

inline std::string normalize_answer(std::string_view s) {
    std::string lowered;
    lowered.reserve(s.size());
    for (unsigned char c : s) {
        if (std::ispunct(c)) continue;
        lowered += static_cast<char>(std::tolower(c));
    }
    std::vector<std::string> tokens = split_words(lowered);
    std::string out;
    for (const auto& t : tokens) {
        if (t == "a" || t == "an" || t == "the") continue;
        if (!out.empty()) out += ' ';
        out += t;
    }
    return out;
}

inline int exact_match(std::string_view prediction, const std::vector<std::string>& gold) {
    std::string p = normalize_answer(prediction);
    for (const auto& g : gold)
        if (p == normalize_answer(g)) return 1;
    return 0;
}

namespace detail {

inline double f1_single(const std::vector<std::string>& pred_tokens,
                        const std::vector<std::string>& gold_tokens) {
    if (pred_tokens.empty() && gold_tokens.empty()) return 1.0;
    if (pred_tokens.empty() || gold_tokens.empty()) return 0.0;
    std::map<std::string, int> counts;
    for (const auto& t : gold_tokens) ++counts[t];
    int overlap = 0;
    for (const auto& t : pred_tokens) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    if (overlap == 0) return 0.0;
    double precision = static_cast<double>(overlap) / pred_tokens.size();
    double recall = static_cast<double>(overlap) / gold_tokens.size();
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace detail

// Token-level F1, max over gold answers.
inline double token_f1(std::string_view prediction, const std::vector<std::string>& gold) {
    std::vector<std::string> pred_tokens = split_words(normalize_answer(prediction));
    double best = 0.0;
    for (const auto& g : gold)
        best = std::max(best, detail::f1_single(pred_tokens, split_words(normalize_answer(g))));
    return best;
}

// Words before compression over words after; empty summaries have no
// per-row rate.
inline std::optional<double> compression_rate(int input_words, int output_words) {
    if (input_words < 1) throw DataError("compression_rate: input_words must be >= 1");
    if (output_words == 0) return std::nullopt;
    return static_cast<double>(input_words) / output_words;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

struct EvalRow {
    std::string id;
    std::string prediction;
    std::vector<std::string> gold;
    int em = 0;
    double f1 = 0.0;
    int input_words = 0;
    int output_words = 0;
    int hop_count = 1;
};

inline EvalRow make_eval_row(std::string id, std::string prediction,
                             std::vector<std::string> gold, int input_words,
                             int output_words, int hop_count = 1) {
    EvalRow row;
    row.id = std::move(id);
    row.prediction = std::move(prediction);
    row.gold = std::move(gold);
    row.em = exact_match(row.prediction, row.gold);
    row.f1 = token_f1(row.prediction, row.gold);
    row.input_words = input_words;
    row.output_words = output_words;
    row.hop_count = hop_count;
    return row;
}

inline json to_json(const EvalRow& r) {
    return json{{"id", r.id},          {"prediction", r.prediction},
                {"gold", r.gold},      {"em", r.em},
                {"f1", r.f1},          {"input_words", r.input_words},
                {"output_words", r.output_words}, {"hop_count", r.hop_count}};
}

inline EvalRow eval_row_from_json(const json& j) {
    EvalRow r;
    r.id = detail::require(j, "id").get<std::string>();
    r.prediction = detail::require(j, "prediction").get<std::string>();
    r.gold = detail::require(j, "gold").get<std::vector<std::string>>();
    r.input_words = detail::require(j, "input_words").get<int>();
    r.output_words = detail::require(j, "output_words").get<int>();
    r.hop_count = j.value("hop_count", 1);
    r.em = exact_match(r.prediction, r.gold);
    r.f1 = token_f1(r.prediction, r.gold);
    return r;
}

struct EvalReport {
    size_t rows = 0;
    double em_percent = 0.0;  // mean EM, percent
    double f1_percent = 0.0;  // mean F1, percent
    // Corpus rate = total input words over total output words; rows with
    // empty summaries contribute to the numerator only.
    std::optional<double> corpus_compression_rate;
    std::optional<double> mean_row_compression_rate;  // mean of per-row ratios
    std::map<int, double> mean_summary_words_by_hop;  // over non-empty summaries
    size_t empty_summary_rows = 0;
};

inline EvalReport aggregate(const std::vector<EvalRow>& rows) {
    EvalReport rep;
    rep.rows = rows.size();
    if (rows.empty()) return rep;
    double em_sum = 0, f1_sum = 0;
    long long in_sum = 0, out_sum = 0;
    double row_rate_sum = 0;
    size_t row_rate_n = 0;
    std::map<int, std::pair<long long, size_t>> by_hop;  // hop -> (word sum, n)
    for (const auto& r : rows) {
        em_sum += r.em;
        f1_sum += r.f1;
        in_sum += r.input_words;
        out_sum += r.output_words;
        if (r.output_words > 0) {
            row_rate_sum += static_cast<double>(r.input_words) / r.output_words;
            ++row_rate_n;
            auto& [sum, n] = by_hop[r.hop_count];
            sum += r.output_words;
            ++n;
        } else {
            ++rep.empty_summary_rows;
        }
    }
    rep.em_percent = 100.0 * em_sum / rows.size();
    rep.f1_percent = 100.0 * f1_sum / rows.size();
    if (out_sum > 0)
        rep.corpus_compression_rate = static_cast<double>(in_sum) / out_sum;
    if (row_rate_n > 0)
        rep.mean_row_compression_rate = row_rate_sum / row_rate_n;
    for (const auto& [hop, acc] : by_hop)
        rep.mean_summary_words_by_hop[hop] = static_cast<double>(acc.first) / acc.second;
    return rep;
}

inline json to_json(const EvalReport& r) {
    json j{{"rows", r.rows},
           {"em", r.em_percent},
           {"f1", r.f1_percent},
           {"empty_summary_rows", r.empty_summary_rows}};
    if (r.corpus_compression_rate) j["compression_rate"] = *r.corpus_compression_rate;
    if (r.mean_row_compression_rate) j["mean_row_compression_rate"] = *r.mean_row_compression_rate;
    json hops = json::object();
    for (const auto& [hop, mean] : r.mean_summary_words_by_hop)
        hops[std::to_string(hop)] = mean;
    j["mean_summary_words_by_hop"] = std::move(hops);
    return j;
}

inline std::string format_report(const EvalReport& r) {
    char buf[256];
    std::string out;
    std::snprintf(buf, sizeof buf, "rows              %zu\n", r.rows);
    out += buf;
    std::snprintf(buf, sizeof buf, "EM                %.2f\n", r.em_percent);
    out += buf;
    std::snprintf(buf, sizeof buf, "F1                %.2f\n", r.f1_percent);
    out += buf;
    if (r.corpus_compression_rate) {
        std::snprintf(buf, sizeof buf, "compression rate  %.2fx\n", *r.corpus_compression_rate);
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "empty summaries   %zu\n", r.empty_summary_rows);
    out += buf;
    for (const auto& [hop, mean] : r.mean_summary_words_by_hop) {
        std::snprintf(buf, sizeof buf, "%d-hop words/summary  %.2f\n", hop, mean);
        out += buf;
    }
    return out;
}

}  // namespace hopcomp
