#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "hopcomp/core.hpp"
#include "hopcomp/gateway.hpp"

namespace hopcomp {

// Likelihood-delta helpfulness: a context unit is helpful iff prepending
// it strictly increases the scoring model's log-likelihood of the gold
// answer given the question.

struct HelpfulnessConfig {
    int k = 2;                            // top-k propositions for single-hop summaries
    bool max_delta_over_answers = false;  // default: score the first gold answer only
    EndpointConfig endpoint;
};

struct ItemScore {
    std::string item_id;
    double conditioned_logprob = 0.0;
    double delta = 0.0;
    bool helpful = false;
};

struct HelpfulnessReport {
    std::string example_id;
    double baseline_logprob = 0.0;  // log p(y | x) for the first gold answer
    std::vector<ItemScore> per_item;
    std::vector<std::string> selected;  // sorted by conditioned logprob desc
    int scoring_warnings = 0;           // items excluded due to scoring failures
};

inline json to_json(const HelpfulnessReport& r) {
    json items = json::array();
    for (const auto& it : r.per_item)
        items.push_back(json{{"id", it.item_id},
                             {"conditioned_logprob", it.conditioned_logprob},
                             {"delta", it.delta},
                             {"helpful", it.helpful}});
    return json{{"id", r.example_id},
                {"baseline_logprob", r.baseline_logprob},
                {"per_item", std::move(items)},
                {"selected", r.selected},
                {"scoring_warnings", r.scoring_warnings}};
}

inline std::string proposition_item_id(const PropositionRef& ref) {
    return ref.doc_id + "#" + std::to_string(ref.index);
}

namespace detail {

// Caches the context-free baseline per gold answer; computed once per
// example regardless of how many items are scored against it.
class DeltaScorer {
public:
    DeltaScorer(Backend& backend, const HelpfulnessConfig& cfg, std::string question,
                std::vector<std::string> answers)
        : backend_(backend),
          cfg_(cfg),
          question_(std::move(question)),
          answers_(std::move(answers)),
          baselines_(answers_.size()) {
        if (answers_.empty()) throw DataError("helpfulness scoring requires a gold answer");
    }

    double baseline(size_t a) {
        if (!baselines_[a])
            baselines_[a] = backend_.score({"", question_, answers_[a]})
                                .value(cfg_.endpoint.mean_per_token);
        return *baselines_[a];
    }

    // Best (conditioned, delta) over the configured answer set; nullopt
    // when every scoring attempt failed.
    std::optional<ItemScore> score_unit(const std::string& item_id, const std::string& context) {
        size_t n = cfg_.max_delta_over_answers ? answers_.size() : 1;
        std::optional<ItemScore> best;
        for (size_t a = 0; a < n; ++a) {
            try {
                double c = backend_.score({context, question_, answers_[a]})
                               .value(cfg_.endpoint.mean_per_token);
                double d = c - baseline(a);
                if (!best || d > best->delta)
                    best = ItemScore{item_id, c, d, d > 0};
            } catch (const std::exception&) {
                // the unit is unknown only if all answer variants fail
            }
        }
        return best;
    }

private:
    Backend& backend_;
    const HelpfulnessConfig& cfg_;
    std::string question_;
    std::vector<std::string> answers_;
    std::vector<std::optional<double>> baselines_;
};

inline std::string document_context(const Document& d) {
    return d.title ? "Title: " + *d.title + "\n" + d.text : d.text;
}

}  // namespace detail

// D-tilde: documents whose prepending strictly increases the answer
// likelihood. Original order preserved.
inline std::pair<std::vector<Document>, HelpfulnessReport> filter_helpful_documents(
    const std::string& question, const std::vector<std::string>& answers,
    const std::vector<Document>& docs, Backend& backend, const HelpfulnessConfig& cfg) {
    if (docs.empty()) throw DataError("filter_helpful_documents: empty document set");
    detail::DeltaScorer scorer(backend, cfg, question, answers);
    HelpfulnessReport report;
    report.baseline_logprob = scorer.baseline(0);
    std::vector<Document> helpful;
    for (const auto& d : docs) {
        auto item = scorer.score_unit(d.id, detail::document_context(d));
        if (!item) {
            ++report.scoring_warnings;
            continue;
        }
        report.per_item.push_back(*item);
        if (item->helpful) {
            helpful.push_back(d);
            report.selected.push_back(d.id);
        }
    }
    return {std::move(helpful), std::move(report)};
}

// Top-k helpful propositions ranked by conditioned log-likelihood,
// ties broken by (doc_id, index) ascending. May return fewer than k.
inline std::vector<PropositionRef> select_helpful_propositions(
    const std::string& question, const std::vector<std::string>& answers,
    const std::vector<Proposition>& propositions, int k, Backend& backend,
    const HelpfulnessConfig& cfg, HelpfulnessReport* report_out = nullptr) {
    if (k < 1) throw DataError("select_helpful_propositions: k must be >= 1");
    detail::DeltaScorer scorer(backend, cfg, question, answers);
    HelpfulnessReport report;
    report.baseline_logprob = scorer.baseline(0);

    struct Scored {
        PropositionRef ref;
        double conditioned;
    };
    std::vector<Scored> helpful;
    for (const auto& p : propositions) {
        auto item = scorer.score_unit(proposition_item_id(p.ref()), p.text);
        if (!item) {
            ++report.scoring_warnings;
            continue;
        }
        report.per_item.push_back(*item);
        if (item->helpful) helpful.push_back({p.ref(), item->conditioned_logprob});
    }
    std::sort(helpful.begin(), helpful.end(), [](const Scored& a, const Scored& b) {
        if (a.conditioned != b.conditioned) return a.conditioned > b.conditioned;
        return a.ref < b.ref;
    });
    if (helpful.size() > static_cast<size_t>(k)) helpful.resize(k);

    std::vector<PropositionRef> out;
    for (const auto& s : helpful) {
        out.push_back(s.ref);
        report.selected.push_back(proposition_item_id(s.ref));
    }
    if (report_out) *report_out = std::move(report);
    return out;
}

// Reference oracle: scores every proposition directly, one call at a
// time, and sorts. Deliberately shares no selection code with
// select_helpful_propositions.
inline std::vector<PropositionRef> brute_force_topk(
    const std::string& question, const std::vector<std::string>& answers,
    const std::vector<Proposition>& propositions, int k, Backend& backend,
    const HelpfulnessConfig& cfg) {
    std::vector<double> baselines;
    for (const auto& y : answers)
        baselines.push_back(
            backend.score({"", question, y}).value(cfg.endpoint.mean_per_token));
    std::vector<std::pair<double, PropositionRef>> ranked;
    for (const auto& p : propositions) {
        bool have = false;
        double best_delta = 0, best_cond = 0;
        size_t n = cfg.max_delta_over_answers ? answers.size() : 1;
        for (size_t a = 0; a < n; ++a) {
            try {
                double c = backend.score({p.text, question, answers[a]})
                               .value(cfg.endpoint.mean_per_token);
                double d = c - baselines[a];
                if (!have || d > best_delta) {
                    best_delta = d;
                    best_cond = c;
                    have = true;
                }
            } catch (const std::exception&) {
            }
        }
        if (have && best_delta > 0) ranked.emplace_back(best_cond, p.ref());
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<PropositionRef> out;
    for (size_t i = 0; i < ranked.size() && i < static_cast<size_t>(k); ++i)
        out.push_back(ranked[i].second);
    return out;
}

}  // namespace hopcomp
