#include <doctest.h>

#include <filesystem>

#include "hopcomp/propositions.hpp"

using namespace hopcomp;

namespace {

const std::string kPisaPassage =
    "Prior to restoration work performed between 1990 and 2001, the tower leaned at an "
    "angle of 5.5 degrees, but the tower now leans at about 3.99 degrees. This means the "
    "top of the Learning Tower of Pisa is displaced horizontally 3.9 meters (12 ft 10 in) "
    "from the center.";

const std::string kPisaPropositions =
    "1. Prior to restoration work performed between 1990 and 2001, the Leaning Tower of "
    "Pisa leaned at an angle of 5.5 degrees.\n"
    "2. The Leaning Tower of Pisa now leans at about 3.99 degrees.\n"
    "3. The top of the Leaning Tower of Pisa is displaced horizontally 3.9 meters (12 ft "
    "10 in) from the center.";

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("hopcomp-prop-" + std::to_string(reinterpret_cast<uintptr_t>(this)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("parse_proposition_output") {
    CHECK(parse_proposition_output("[\"A.\", \"B.\"]") == std::vector<std::string>{"A.", "B."});
    CHECK(parse_proposition_output("1. A.\n2. B.") == std::vector<std::string>{"A.", "B."});
    CHECK(parse_proposition_output("1) A.\n2) B.") == std::vector<std::string>{"A.", "B."});
    CHECK(parse_proposition_output(" [\"only one\"] ") == std::vector<std::string>{"only one"});
    CHECK_THROWS_AS(parse_proposition_output("no list here"), ParseError);
    CHECK_THROWS_AS(parse_proposition_output(""), ParseError);
}

TEST_CASE("sentence_split") {
    CHECK(sentence_split("A. B.") == std::vector<std::string>{"A.", "B."});
    CHECK(sentence_split("Dr. Smith works. He retired.").size() == 2);
    CHECK(sentence_split("It is in the U.S. today. Next sentence.").size() == 2);
    CHECK(sentence_split("One sentence only") == std::vector<std::string>{"One sentence only"});
    CHECK(sentence_split("He said \"stop.\" Then left.").size() == 2);
    CHECK(sentence_split("").empty());
    // the fixture passage splits into exactly two sentences
    CHECK(sentence_split(kPisaPassage).size() == 2);
}

TEST_CASE("propositionize with a canned backend completion") {
    MockBackend mock;
    mock.override_generate = [](const GenerationRequest&) { return kPisaPropositions; };
    Document doc = Document::make("pisa", kPisaPassage);
    auto props = propositionize(doc, mock);
    REQUIRE(props.size() == 3);
    CHECK(props[1].text == "The Leaning Tower of Pisa now leans at about 3.99 degrees.");
    for (int i = 0; i < 3; ++i) {
        CHECK(props[i].doc_id == "pisa");
        CHECK(props[i].index == i);
    }
}

TEST_CASE("propositionize single sentence via the mock backend") {
    MockBackend mock;
    Document doc = Document::make("d1", "Paris links France.");
    auto props = propositionize(doc, mock);
    REQUIRE(props.size() == 1);
    CHECK(props[0].text == "Paris links France.");
}

TEST_CASE("fallback sentence split after persistent backend failure") {
    MockBackend mock;
    mock.override_generate = [](const GenerationRequest&) { return "no list here"; };
    PropositionizeOptions opts;
    bool fallback = false;
    opts.fallback_used = &fallback;
    Document doc = Document::make("pisa", kPisaPassage);
    auto props = propositionize(doc, mock, opts);
    CHECK(fallback);
    REQUIRE(props.size() == 2);  // hand-segmented sentence count of the fixture
    CHECK(mock.generate_calls() == 2);  // one try + one retry
}

TEST_CASE("propositionize never returns empty for non-empty input") {
    MockBackend mock;
    mock.override_generate = [](const GenerationRequest&) { return ""; };
    auto props = propositionize(Document::make("d", "just words no punctuation"), mock);
    CHECK(!props.empty());
    CHECK_THROWS_AS(propositionize(Document::make("d", "  "), mock), DataError);
}

TEST_CASE("cache avoids repeat backend calls and keys on model name") {
    TempDir tmp;
    MockBackend mock;
    PropositionizeOptions opts;
    opts.cache_dir = tmp.path;
    opts.model_name = "m1";
    Document doc = Document::make("d1", "Paris links France.");

    auto first = propositionize(doc, mock, opts);
    long calls_after_first = mock.generate_calls();
    auto second = propositionize(doc, mock, opts);
    CHECK(mock.generate_calls() == calls_after_first);  // served from cache
    REQUIRE(second.size() == first.size());
    CHECK(second[0].text == first[0].text);

    opts.model_name = "m2";  // different model, different cache entry
    propositionize(doc, mock, opts);
    CHECK(mock.generate_calls() == calls_after_first + 1);
}

TEST_CASE("mock propositionize is idempotent") {
    MockBackend mock;
    Document doc = Document::make("d1", "First fact. Second fact.");
    auto a = propositionize(doc, mock);
    auto b = propositionize(doc, mock);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].text == b[i].text);
}
