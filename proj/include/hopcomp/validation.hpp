#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "hopcomp/core.hpp"
#include "hopcomp/helpfulness.hpp"

namespace hopcomp {

// Heuristic multi-hop validation: string-level bridge checks first,
// then likelihood-based support and the distinct-document constraint.

enum class RejectReason {
    Accepted,
    GroundTruthIsBridge,
    BridgeInQuestion,
    NoReasoningChain,
    SubQuestionUnsupported,
    SameDocumentEvidence,
    ParseFailure,
};

inline const char* reject_reason_name(RejectReason r) {
    switch (r) {
        case RejectReason::Accepted: return "Accepted";
        case RejectReason::GroundTruthIsBridge: return "GroundTruthIsBridge";
        case RejectReason::BridgeInQuestion: return "BridgeInQuestion";
        case RejectReason::NoReasoningChain: return "NoReasoningChain";
        case RejectReason::SubQuestionUnsupported: return "SubQuestionUnsupported";
        case RejectReason::SameDocumentEvidence: return "SameDocumentEvidence";
        case RejectReason::ParseFailure: return "ParseFailure";
    }
    return "?";
}

struct ValidationVerdict {
    bool accepted = false;
    RejectReason reason = RejectReason::ParseFailure;
    std::string detail;

    static ValidationVerdict accept() {
        return {true, RejectReason::Accepted, ""};
    }
    static ValidationVerdict reject(RejectReason r, std::string detail) {
        return {false, r, std::move(detail)};
    }
};

// ---------------------------------------------------------------------------
// Entity normalization: lowercase, strip surrounding quotes, strip
// punctuation, collapse whitespace, drop leading articles.
// ---------------------------------------------------------------------------

inline std::string normalize_entity(std::string_view s) {
    std::string t = trim(s);
    while (t.size() >= 2 && (t.front() == '"' || t.front() == '\'') && t.back() == t.front()) {
        t = trim(t.substr(1, t.size() - 2));
    }
    std::string stripped;
    for (unsigned char c : t) {
        if (std::ispunct(c)) continue;
        stripped += static_cast<char>(std::tolower(c));
    }
    auto tokens = split_words(stripped);
    size_t begin = 0;
    while (begin < tokens.size() &&
           (tokens[begin] == "a" || tokens[begin] == "an" || tokens[begin] == "the"))
        ++begin;
    // keep a bare article rather than normalizing to nothing
    if (begin == tokens.size() && !tokens.empty()) begin = tokens.size() - 1;
    std::string out;
    for (size_t i = begin; i < tokens.size(); ++i) {
        if (!out.empty()) out += ' ';
        out += tokens[i];
    }
    return out;
}

// Token-boundary containment of `needle` in `haystack`, both normalized.
inline bool entity_occurs_in(std::string_view needle, std::string_view haystack) {
    auto n = split_words(normalize_entity(needle));
    auto h = split_words(normalize_entity(haystack));
    if (n.empty() || n.size() > h.size()) return false;
    for (size_t i = 0; i + n.size() <= h.size(); ++i) {
        bool match = true;
        for (size_t j = 0; j < n.size(); ++j) {
            if (h[i + j] != n[j]) {
                match = false;
                break;
            }
        }
        if (match) return true;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Cheap string checks
// ---------------------------------------------------------------------------

inline bool check_bridge_not_answer(const MultiHopCandidate& c) {
    std::string answer = normalize_entity(c.answer);
    for (const auto& b : c.bridge_entities)
        if (normalize_entity(b) == answer) return false;
    return true;
}

inline bool check_bridge_not_in_question(const MultiHopCandidate& c) {
    for (const auto& b : c.bridge_entities)
        if (entity_occurs_in(b, c.question)) return false;
    return true;
}

// A reasoning path exists iff some ordering of the sub-questions chains:
// the answer of each later question occurs in the text of its
// predecessor, and the first question's answer is the ground truth.
// Exhaustive over permutations (t <= 4).
inline bool check_reasoning_chain(const MultiHopCandidate& c) {
    const size_t t = c.sub_questions.size();
    if (t < 2) return false;
    std::vector<size_t> perm(t);
    for (size_t i = 0; i < t; ++i) perm[i] = i;
    std::string ground_truth = normalize_entity(c.answer);
    do {
        if (normalize_entity(c.sub_questions[perm[0]].answer) != ground_truth) continue;
        bool ok = true;
        for (size_t i = 0; i + 1 < t; ++i) {
            const auto& next_answer = c.sub_questions[perm[i + 1]].answer;
            const auto& prev_text = c.sub_questions[perm[i]].text;
            if (!entity_occurs_in(next_answer, prev_text)) {
                ok = false;
                break;
            }
        }
        if (ok) return true;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return false;
}

// ---------------------------------------------------------------------------
// Support + distinct-document constraint
// ---------------------------------------------------------------------------

struct SupportCandidate {
    PropositionRef ref;
    double conditioned_logprob;
};

// Exact system-of-distinct-representatives test via augmenting paths:
// assign each sub-question a document so that no two share one.
inline bool distinct_document_assignment(
    const std::vector<std::vector<std::string>>& doc_choices,
    std::vector<std::string>* assignment_out = nullptr) {
    std::vector<std::string> doc_ids;
    for (const auto& choices : doc_choices)
        for (const auto& d : choices)
            if (std::find(doc_ids.begin(), doc_ids.end(), d) == doc_ids.end())
                doc_ids.push_back(d);
    std::vector<int> doc_owner(doc_ids.size(), -1);
    auto doc_index = [&](const std::string& d) {
        return std::find(doc_ids.begin(), doc_ids.end(), d) - doc_ids.begin();
    };
    std::function<bool(size_t, std::vector<bool>&)> try_assign =
        [&](size_t sq, std::vector<bool>& visited) -> bool {
        for (const auto& d : doc_choices[sq]) {
            size_t di = doc_index(d);
            if (visited[di]) continue;
            visited[di] = true;
            if (doc_owner[di] < 0 || try_assign(doc_owner[di], visited)) {
                doc_owner[di] = static_cast<int>(sq);
                return true;
            }
        }
        return false;
    };
    for (size_t sq = 0; sq < doc_choices.size(); ++sq) {
        std::vector<bool> visited(doc_ids.size(), false);
        if (!try_assign(sq, visited)) return false;
    }
    if (assignment_out) {
        assignment_out->assign(doc_choices.size(), "");
        for (size_t di = 0; di < doc_owner.size(); ++di)
            if (doc_owner[di] >= 0) (*assignment_out)[doc_owner[di]] = doc_ids[di];
    }
    return true;
}

// Finds, for each sub-question, its helpful propositions (likelihood
// increase against the sub-question's own answer), then checks that a
// pairwise-distinct document assignment exists. On success binds the
// best proposition from each assigned document into the candidate.
inline ValidationVerdict check_support_and_distinctness(
    MultiHopCandidate& c, const std::vector<Proposition>& propositions, Backend& backend,
    const HelpfulnessConfig& cfg) {
    std::vector<std::map<std::string, SupportCandidate>> best_per_doc(c.sub_questions.size());
    for (size_t i = 0; i < c.sub_questions.size(); ++i) {
        const auto& sq = c.sub_questions[i];
        detail::DeltaScorer scorer(backend, cfg, sq.text, {sq.answer});
        for (const auto& p : propositions) {
            auto item = scorer.score_unit(proposition_item_id(p.ref()), p.text);
            if (!item || !item->helpful) continue;  // failures degrade to unsupported
            auto it = best_per_doc[i].find(p.doc_id);
            if (it == best_per_doc[i].end() ||
                item->conditioned_logprob > it->second.conditioned_logprob ||
                (item->conditioned_logprob == it->second.conditioned_logprob &&
                 p.ref() < it->second.ref))
                best_per_doc[i][p.doc_id] = {p.ref(), item->conditioned_logprob};
        }
        if (best_per_doc[i].empty())
            return ValidationVerdict::reject(
                RejectReason::SubQuestionUnsupported,
                "no helpful proposition for sub-question " + std::to_string(i + 1));
    }
    std::vector<std::vector<std::string>> doc_choices(c.sub_questions.size());
    for (size_t i = 0; i < best_per_doc.size(); ++i)
        for (const auto& [doc, _] : best_per_doc[i]) doc_choices[i].push_back(doc);
    std::vector<std::string> assignment;
    if (!distinct_document_assignment(doc_choices, &assignment))
        return ValidationVerdict::reject(RejectReason::SameDocumentEvidence,
                                         "no pairwise-distinct document assignment exists");
    for (size_t i = 0; i < c.sub_questions.size(); ++i)
        c.sub_questions[i].supporting_proposition = best_per_doc[i].at(assignment[i]).ref;
    return ValidationVerdict::accept();
}

// Runs the checks cheapest-first; the first failure wins and the string
// checks never trigger a scoring call.
inline ValidationVerdict validate(MultiHopCandidate& c,
                                  const std::vector<Proposition>& propositions,
                                  Backend& backend, const HelpfulnessConfig& cfg) {
    if (!check_bridge_not_answer(c))
        return ValidationVerdict::reject(RejectReason::GroundTruthIsBridge,
                                         "ground truth equals a bridge entity");
    if (!check_bridge_not_in_question(c))
        return ValidationVerdict::reject(RejectReason::BridgeInQuestion,
                                         "a bridge entity appears in the question");
    if (!check_reasoning_chain(c))
        return ValidationVerdict::reject(RejectReason::NoReasoningChain,
                                         "no chained ordering of sub-questions found");
    return check_support_and_distinctness(c, propositions, backend, cfg);
}

}  // namespace hopcomp
