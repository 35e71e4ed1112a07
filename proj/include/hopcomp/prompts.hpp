#pragma once

#include <map>
#include <set>
#include <string>

#include "hopcomp/core.hpp"

namespace hopcomp {

// ---------------------------------------------------------------------------
// Prompt templates with {placeholder} syntax. Rendering is pure and
// fails unless every required placeholder is bound.
// ---------------------------------------------------------------------------

struct PromptTemplate {
    std::string name;
    std::string body;
    std::set<std::string> required_placeholders;

    std::string render(const std::map<std::string, std::string>& bindings) const {
        for (const auto& p : required_placeholders)
            if (!bindings.count(p))
                throw DataError("template '" + name + "': unbound placeholder {" + p + "}");
        std::string out;
        out.reserve(body.size());
        size_t i = 0;
        while (i < body.size()) {
            if (body[i] == '{') {
                size_t close = body.find('}', i);
                if (close != std::string::npos) {
                    std::string key = body.substr(i + 1, close - i - 1);
                    auto it = bindings.find(key);
                    if (it != bindings.end()) {
                        out += it->second;
                        i = close + 1;
                        continue;
                    }
                }
            }
            out += body[i++];
        }
        return out;
    }
};

namespace prompts {

inline const char* kRefusalSentinel =
    "Sorry, I cannot generate any multi-hop question based on the provided passages.";

// Relationship templates used inside the composition prompt to suggest
// cross-passage connections.
inline const char* kRelationshipTemplates = R"(- Which continent is [S] located in?
- What is the capital of [S]?
- What is the name of the current head of state in [S]?
- What is the name of the current head of the [S] government?
- Which city did [S] die in?
- Who is [S] married to?
- Which religion is [S] affiliated with?
- What language does [S] speak?
- Which city was [S] born in?
- Which university was [S] educated at?
- Who is [S]'s child?
- What is the country of citizenship of [S]?
- Who performed [S]?
- Who is the employer of [S]?
- Who founded [S]?
- Who is the author of [S]?
- Who was [S] created by?
- Which language was [S] written in?
- What is the official language of [S]?
- Where was [S] founded?
- Which country was [S] created in?
- What kind of work does [S] do?
- What type of music does [S] play?
- What is the original language of [S]?
- Which city did [S] work in?
- What is [S] famous for?
- Which sport is [S] associated with?
- What position does [S] play?
- Who is the head coach of [S]?
- Which city is the headquarter of [S] located in?
- Who is the developer of [S]?
- Who is the chairperson of [S]?
- Who is the chief executive officer of [S]?
- Who is the original broadcaster of [S]?
- Which company is [S] produced by?
- Who is the director of [S]?
- Who is the [S]?)";

inline PromptTemplate compose_multihop() {
    std::string body = R"(A multi-hop question requires multiple inferential steps across different pieces of information. Using the provided Wikipedia passages, generate one multi-hop question. Be sure to generate multi-hop questions that are reasonable and factually accurate based on the given articles.

Instructions:
1. **Find the Connection**: Identify relationships across separate passages. Do not use relations within a single passage. Use bridge entities [S] to connect information.
   Example relationships:
)" + std::string(kRelationshipTemplates) + R"(

2. **Locate Supporting Facts**: Ensure the question involves multiple passages. Label the source passages and the relationship chain.
   Example:
    - [Passage 1] The continent of the country of [S2] is located in [S1]. [Passage 2] The author of [S3] is [S2]. [Combine] What continent is the country of citizenship of the author of [S] located in?
    - [Passage 1] The nationality of the author of [S2] is [S1]. [Passage 2] The novel [S2] was adapted into [S3]. [Combine] What is the nationality of the author of the novel that was adapted into [S]?
    - [Passage 1] The child of the [S2] was educated in [S1]. [Passage 2] [S2] is the chairperson of [S3]. [Combine] Which university was the child of the chairperson of [S] educated?
    - [Passage 1] [S2] speaks the language [S1]. [Passage 2] [S3] was developed by [S2]. [Combine] What language does the developer of [S] speak?

3. **Question Construction Rules**:
   - Do not use more than one what/why/how/...
     - Not allowed: What kind of work does [S] do and who is [S]'s child?
     - Allowed: What kind of work does the child of [S] do?
   - Do not include the intermediate entity in the question.
     - Not allowed: What is the date of independence for [S1], which was predominantly populated by [S2]?
     - Allowed: What is the date of independence for the country that was predominantly populated by [S]?

4. **Generate Answer**: Provide an answer based on the passages.

If no meaningful multi-hop question can be generated, reply with "Sorry, I cannot generate any multi-hop question based on the provided passages."

Examples:

Passages:
1. James Henry Miller (25 January 1915 - 22 October 1989), better known by his stage name Ewan MacColl, was an English folk singer, songwriter, communist, labour activist, actor, poet, playwright and record producer.
2. Margaret "Peggy" Seeger (born June 17, 1935) is an American folksinger. She is also well known in Britain, where she has lived for more than 30 years, and was married to the singer and songwriter Ewan MacColl until his death in 1989.
Supporting Facts:
1. [Passage 1] James Henry Miller (25 January 1915 - 22 October 1989), better known by his stage name Ewan MacColl, was an English folk singer, songwriter, communist, labour activist, actor, poet, playwright and record producer.
2. [Passage 2] Margaret "Peggy" Seeger is also well known in Britain, where she has lived for more than 30 years, and was married to the singer and songwriter Ewan MacColl until his death in 1989.
3. [Passage 2] Margaret "Peggy" Seeger (born June 17, 1935) is an American folksinger.
Relationship Chain:
James Henry Miller is Ewan MacColl. Ewan MacColl is married to Margaret. Margaret is American. So, the nationality of James Henry Miller's wife is American.
Multihop Question:
What nationality was James Henry Miller's wife?
Answer:
American


Passages:
1. The Oberoi family is an Indian family that is famous for its involvement in hotels, namely through The Oberoi Group.
2. The Oberoi Group is a hotel company with its head office in Delhi. Founded in 1934, the company owns and/or operates 30+ luxury hotels and two river cruise ships in six countries, primarily under its Oberoi Hotels & Resorts and Trident Hotels brands.
Supporting Facts:
1. [Passage 1] The Oberoi family is an Indian family that is famous for its involvement in hotels, namely through The Oberoi Group.
2. [Passage 2] The Oberoi Group is a hotel company with its head office in Delhi. [Relation: The Oberoi Group's head office is in Delhi.]
Relationship Chain:
The Oberoi family involve the hotel industry through the Oberoi Group. The Oberoi Group's head office is in Delhi. So the Oberoi family is part of a hotel company that has a head office in Delhi.
Multihop Question:
The Oberoi family is part of a hotel company that has a head office in what city?
Answer:
Delhi

Now, it's your turn. Ensure there's only one what/why/how/... in your question and that the relationship chain spans multiple passages.
Passages:
{given_doc}
)";
    return PromptTemplate{"compose_multihop", std::move(body), {"given_doc"}};
}

inline PromptTemplate decompose_multihop() {
    std::string body = R"(A multi-hop question requires multiple inferential steps or accessing information from different sources. Given a multi-hop question and its context, your task is to decompose it into single-hop questions. Be sure to generate single-hop questions that are reasonable and factually accurate. Ensure that the decomposition remains true to the original multi-hop question and does not introduce any inaccuracies or hallucinations. You should decompose the multi-hop question based merely on the multi-hop question, and the context is only for the answer of the single-hop questions.

Here are some instructions:
1. Find the bridge entity: A bridge entity is the key element linking the parts of the multi-hop question. It should be the answer to one single-hop question and appear in the description of the other single-hop question. **Important: The bridge entity is not the answer to the multi-hop question and will not appear in the multi-hop question. Ensure you do not use the bridge entity as the answer to the multi-hop question.**
2. Recover questions: After identifying the bridge entity, decompose the multi-hop question into two single-hop questions. Ensure one question can be answered with the bridge entity, while the other question includes the bridge entity in its description.

Examples:
Question: What is the independence date of the country where the majority of the population is composed of Ambundu, Ovimbundu, and Bakongo peoples?
Answer: 11 November 1975
Context 1: It is thus reasonable to talk of Angola as a defined territorial entity from this point onwards. In 1961, the FNLA and the MPLA, based in neighbouring countries, began a guerrilla campaign against Portuguese rule on several fronts. The Portuguese Colonial War, which included the Angolan War of Independence, lasted until the Portuguese regime's overthrow in 1974 through a leftist military coup in Lisbon. When the timeline for independence became known, most of the roughly 500,000 ethnic Portuguese Angolans fled the territory during the weeks before or after that deadline. Portugal left behind a newly independent country whose population was mainly composed by Ambundu, Ovimbundu, and Bakongo peoples.
Context 2: This was ratified by the Alvor Agreement later that month, which called for general elections and set the country's independence date for 11 November 1975. All three factions, however, followed up on the ceasefire by taking advantage of the gradual Portuguese withdrawal to seize various strategic positions, acquire more arms, and enlarge their militant forces. The rapid influx of weapons from numerous external sources, especially the Soviet Union and the United States, as well as the escalation of tensions between the nationalist parties, fueled a new outbreak of hostilities. With tacit American and Zairean support the FNLA began massing large numbers of troops in northern Angola in an attempt to gain military superiority.

Bridge Entity: Angola
Recovered Questions:
1. Question: What is the independence date of Angola?
   Answer: 11 November 1975
2. Question: What country has a majority population of Ambundu, Ovimbundu, and Bakongo peoples?
   Answer: Angola


Question: What themes are explored in the work that inspired "2001: A Space Odyssey"?
Answer: Human evolution
Context 1: Since its premiere, "2001: A Space Odyssey" has been analyzed and interpreted by professional critics and theorists, amateur writers, and science fiction fans. Peter Kramer in his monograph for BFI analyzing the film summarized the diverse interpretations as ranging from those who saw it as darkly apocalyptic in tone to those who saw it as an optimistic reappraisal of the hopes of mankind and humanity. Questions about "2001" range from uncertainty about its implications for humanity's origins and destiny in the universe to interpreting elements of the film's more enigmatic scenes, such as the meaning of the monolith, or the fate of astronaut David Bowman.
Context 2: "2001: A Space Odyssey" (film) is a 1968 epic science fiction film produced and directed by Stanley Kubrick. The screenplay was written by Kubrick and Arthur C. Clarke and was inspired by Clarke's short story "The Sentinel". Written concurrently with the screenplay, a novel was published soon after the film was released. The film, which follows a voyage to Jupiter with the sentient computer HAL after the discovery of a mysterious black monolith affecting human evolution, deals with themes of existentialism, human evolution, technology, artificial intelligence, and the possibility of extraterrestrial life. The film is noted for its scientifically accurate depiction of spaceflight, pioneering special effects, and ambiguous imagery.

Bridge Entity: "The Sentinel"
Recovered Questions:
1. Question: What themes are explored in "The Sentinel"?
   Answer: Human evolution
2. Question: What work inspired "2001: A Space Odyssey"?
   Answer: "The Sentinel"

Now, it's your turn.
Question: {question}
Answer: {answer}
{context}
)";
    return PromptTemplate{"decompose_multihop", std::move(body),
                          {"question", "answer", "context"}};
}

inline PromptTemplate propositionize() {
    std::string body =
        R"(Decompose the following passage into a list of atomic, self-contained propositions. Each proposition must be a single declarative sentence that is interpretable out of context. Resolve pronouns and ambiguous references using the passage. Output the propositions as a numbered list, one per line, and nothing else.

Passage:
{passage}
)";
    return PromptTemplate{"propositionize", std::move(body), {"passage"}};
}

// Reader few-shot demonstrations per dataset. HotpotQA's set is shared
// by the multi-hop variants of NQ and TriviaQA.
struct ReaderShot {
    std::string question;
    std::string answer;
};

inline const std::vector<ReaderShot>& reader_shots(const std::string& dataset) {
    static const std::vector<ReaderShot> hotpot{
        {"Which magazine was started first Arthur's Magazine or First for Women?",
         "Arthur's Magazine"},
        {"The Oberoi family is part of a hotel company that has a head office in what city?",
         "Delhi"},
        {"Musician and satirist Allie Goertz wrote a song about the \"The Simpsons\" character "
         "Milhouse, who Matt Groening named after who?",
         "President Richard Nixon"},
        {"What nationality was James Henry Miller's wife?", "American"},
        {"Cadmium Chloride is slightly soluble in this chemical, it is also called what?",
         "alcohol"}};
    static const std::vector<ReaderShot> musique{
        {"Who was ordered to force a Tibetan assault into the region conquered by Yellow Tiger "
         "in the mid-17th century?",
         "Ming general Qu Neng"},
        {"What date was the start of the season of Grey's Anatomy where Eric died?",
         "September 25, 2014"},
        {"When did the publisher of Tetrisphere unveil their new systems?", "October 18, 1985"},
        {"Who is the composer of Rhapsody No. 1, named after and inspired by the county where "
         "Alfred Seaman was born?",
         "Ralph Vaughan Williams"},
        {"What region is Qaleh Now-e Khaleseh in Mahdi Tajik's birth city located?",
         "Qaleh Now Rural District"}};
    static const std::vector<ReaderShot> triviaqa{
        {"Which British politician was the first person to be made an Honorary Citizen of the "
         "United States of America?",
         "Winston Churchill"},
        {"Which event of 1962 is the subject of the 2000 film Thirteen Days starring Kevin "
         "Costner?",
         "The Cuban Missile Crisis"},
        {"Which country hosted the 1968 Summer Olympics?", "Mexico"},
        {"In which city did the assassination of Martin Luther King?", "MEMPHIS, Tennessee"},
        {"Which German rye bread is named, according to many reliable sources, from the "
         "original meaning `Devil's fart'?",
         "Pumpernickel"}};
    static const std::vector<ReaderShot> nq{
        {"who won a million on deal or no deal", "Tomorrow Rodriguez"},
        {"who is the woman washing the car in cool hand luke", "Joy Harmon"},
        {"who is the actor that plays ragnar on vikings", "Travis Fimmel"},
        {"who said it's better to have loved and lost", "Alfred , Lord Tennyson"},
        {"name the first indian woman to be crowned as miss world", "Reita Faria"}};

    if (dataset == "hotpotqa" || dataset == "multihop-nq" || dataset == "multihop-triviaqa")
        return hotpot;
    if (dataset == "musique") return musique;
    if (dataset == "triviaqa") return triviaqa;
    if (dataset == "nq") return nq;
    throw DataError("no reader prompt template registered for dataset '" + dataset + "'");
}

}  // namespace prompts

}  // namespace hopcomp
