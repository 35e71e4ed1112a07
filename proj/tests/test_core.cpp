#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "hopcomp/core.hpp"
#include "hopcomp/rng.hpp"

using namespace hopcomp;

namespace {

// Tower-of-Pisa fixture passage used throughout the proposition tests.
const std::string kPisaPassage =
    "Prior to restoration work performed between 1990 and 2001, the tower leaned at an "
    "angle of 5.5 degrees, but the tower now leans at about 3.99 degrees. This means the "
    "top of the Learning Tower of Pisa is displaced horizontally 3.9 meters (12 ft 10 in) "
    "from the center.";

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("hopcomp-test-" + std::to_string(::getpid()) + "-" +
                std::to_string(reinterpret_cast<uintptr_t>(this)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string random_words(Rng& rng, int n) {
    std::string out;
    for (int i = 0; i < n; ++i) {
        if (i) out += ' ';
        int len = 1 + static_cast<int>(rng.below(8));
        for (int j = 0; j < len; ++j) out += static_cast<char>('a' + rng.below(26));
    }
    return out;
}

}  // namespace

TEST_CASE("count_words basics") {
    CHECK(count_words("") == 0);
    CHECK(count_words("head  office in   Delhi") == 4);
    CHECK(count_words("  leading and trailing  ") == 3);
    CHECK(count_words("one") == 1);
    CHECK(count_words("\t\n  ") == 0);
}

TEST_CASE("count_words on the fixture passage") {
    // hand-counted whitespace tokens of the passage
    CHECK(count_words(kPisaPassage) == 49);
}

TEST_CASE("count_words additivity") {
    Rng rng(derive_seed(7, "count-words"));
    for (int trial = 0; trial < 200; ++trial) {
        std::string a = random_words(rng, 1 + static_cast<int>(rng.below(20)));
        std::string b = random_words(rng, 1 + static_cast<int>(rng.below(20)));
        CHECK(count_words(a + " " + b) == count_words(a) + count_words(b));
    }
}

TEST_CASE("truncate_document arithmetic") {
    Rng rng(derive_seed(7, "truncate"));
    SUBCASE("250 words, limit 100 -> 100/100/50") {
        auto docs = truncate_document("a1", random_words(rng, 250), 100);
        REQUIRE(docs.size() == 3);
        CHECK(docs[0].word_count == 100);
        CHECK(docs[1].word_count == 100);
        CHECK(docs[2].word_count == 50);
        CHECK(docs[0].id == "a1-0");
        CHECK(docs[2].id == "a1-2");
    }
    SUBCASE("100 words unchanged") {
        std::string text = random_words(rng, 100);
        auto docs = truncate_document("a2", text, 100);
        REQUIRE(docs.size() == 1);
        CHECK(docs[0].text == text);
    }
    SUBCASE("1033 words -> 11 documents, reassembly equals original tokens") {
        std::string text = random_words(rng, 1033);
        auto docs = truncate_document("a3", text, 100);
        REQUIRE(docs.size() == 11);
        std::string reassembled;
        for (const auto& d : docs) {
            CHECK(d.word_count >= 1);
            if (!reassembled.empty()) reassembled += ' ';
            reassembled += d.text;
        }
        CHECK(split_words(reassembled) == split_words(text));
    }
    SUBCASE("limit < 1 rejected") {
        CHECK_THROWS_AS(truncate_document("a4", "x", 0), DataError);
    }
}

TEST_CASE("json round trips") {
    SUBCASE("document") {
        Document d = Document::make("d1", "some text here", "A Title");
        Document back = document_from_json(to_json(d));
        CHECK(back.id == d.id);
        CHECK(back.title == d.title);
        CHECK(back.text == d.text);
        CHECK(back.word_count == 3);
    }
    SUBCASE("document without title omits the field") {
        json j = to_json(Document::make("d2", "x"));
        CHECK(!j.contains("title"));
    }
    SUBCASE("qa") {
        QAExample q{"q1", "what city?", {"Delhi", "New Delhi"}, 2, "hotpotqa", {"d1", "d2"}};
        json j = to_json(q);
        CHECK(j["source"] == "hotpotqa");
        QAExample back = qa_from_json(j);
        CHECK(back.answers == q.answers);
        CHECK(back.doc_ids == q.doc_ids);
        CHECK(back.hop_count == 2);
    }
    SUBCASE("summary record with empty summary stays an empty string") {
        SummaryRecord r;
        r.id = "r1";
        r.question = "q";
        r.documents = {Document::make("d1", "text")};
        r.summary = "";
        r.hop_count = 1;
        json j = to_json(r);
        CHECK(j["summary"].is_string());
        CHECK(j["summary"] == "");
        SummaryRecord back = summary_record_from_json(j);
        CHECK(back.summary.empty());
        CHECK(back.provenance.empty());
    }
    SUBCASE("candidate") {
        MultiHopCandidate c;
        c.seed_id = "s1";
        c.question = "Q?";
        c.answer = "A";
        c.sub_questions = {{"sq1", "a1", PropositionRef{"d1", 0}}, {"sq2", "a2", std::nullopt}};
        c.bridge_entities = {"B"};
        c.sampled_doc_ids = {"d1", "d2"};
        c.hop_count = 2;
        MultiHopCandidate back = candidate_from_json(to_json(c));
        CHECK(back.sub_questions.size() == 2);
        CHECK(back.sub_questions[0].supporting_proposition == PropositionRef{"d1", 0});
        CHECK(!back.sub_questions[1].supporting_proposition);
        CHECK(back.bridge_entities == c.bridge_entities);
    }
    SUBCASE("missing field names the field") {
        json j{{"id", "x"}};
        CHECK_THROWS_WITH_AS(document_from_json(j), doctest::Contains("text"), ParseError);
    }
}

TEST_CASE("jsonl files") {
    TempDir tmp;
    SUBCASE("empty file yields empty stream") {
        std::ofstream(tmp.file("empty.jsonl"));
        CHECK(read_documents(tmp.file("empty.jsonl")).empty());
    }
    SUBCASE("missing file errors") {
        CHECK_THROWS_AS(read_documents(tmp.file("nope.jsonl")), IoError);
    }
    SUBCASE("truncated line reports the line number") {
        std::ofstream out(tmp.file("bad.jsonl"));
        out << R"({"id":"a","text":"x"})" << "\n" << R"({"id":"b","tex)" << "\n";
        out.close();
        CHECK_THROWS_WITH_AS(read_documents(tmp.file("bad.jsonl")), doctest::Contains(":2:"),
                             ParseError);
    }
    SUBCASE("three records in order") {
        JsonlWriter w(tmp.file("r.jsonl"));
        for (int i = 0; i < 3; ++i)
            w.write(to_json(Document::make("d" + std::to_string(i), "text " + std::to_string(i))));
        CHECK(w.count() == 3);
        w.flush();
        auto docs = read_documents(tmp.file("r.jsonl"));
        REQUIRE(docs.size() == 3);
        CHECK(docs[1].id == "d1");
    }
    SUBCASE("10000-record round trip preserves order and content") {
        Rng rng(derive_seed(9, "bulk"));
        std::vector<SummaryRecord> records;
        for (int i = 0; i < 10000; ++i) {
            SummaryRecord r;
            r.id = "rec" + std::to_string(i);
            r.question = random_words(rng, 3);
            r.documents = {Document::make("d" + std::to_string(i), random_words(rng, 5))};
            if (rng.below(10) == 0) {
                r.summary = "";
            } else {
                r.summary = random_words(rng, 4);
                r.provenance = {{r.documents[0].id, 0}};
            }
            records.push_back(std::move(r));
        }
        std::string path = tmp.file("bulk.jsonl");
        write_jsonl(records, path, [](const SummaryRecord& r) { return to_json(r); });
        auto back = read_summary_records(path);
        REQUIRE(back.size() == records.size());
        for (size_t i = 0; i < back.size(); ++i) {
            CHECK(back[i].id == records[i].id);
            CHECK(back[i].summary == records[i].summary);
            CHECK(to_json(back[i]).dump() == to_json(records[i]).dump());
        }
    }
}

TEST_CASE("seeded rng is deterministic and well-behaved") {
    Rng a(derive_seed(42, "stream"));
    Rng b(derive_seed(42, "stream"));
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    CHECK(derive_seed(42, "x") != derive_seed(42, "y"));
    CHECK(derive_seed(42, "x") != derive_seed(43, "x"));

    Rng c(123);
    for (int i = 0; i < 1000; ++i) {
        uint64_t v = c.below(7);
        CHECK(v < 7);
    }
    // shuffle keeps the multiset of elements
    std::vector<int> xs{1, 2, 3, 4, 5, 6, 7};
    auto ys = xs;
    Rng d(5);
    d.shuffle(ys);
    std::sort(ys.begin(), ys.end());
    CHECK(ys == xs);
}
