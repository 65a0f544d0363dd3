#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "steploc/json_io.hpp"
#include "steploc/lexicon.hpp"
#include "steploc/synth.hpp"
#include "steploc/types.hpp"

using namespace steploc;

namespace {

Lexicon two_task_lexicon() {
    Lexicon lex;
    lex.domains = {{0, "d"}};
    lex.tasks = {{0, "A", 0}, {1, "B", 0}};
    lex.steps = {{0, "a0", 0}, {1, "a1", 0}, {2, "b0", 1}, {3, "b1", 1}};
    return lex;
}

std::filesystem::path temp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

} // namespace

TEST_CASE("lexicon loads with dense ids") {
    const auto path = temp_file("steploc_lexicon_ok.json");
    write_text(path, R"({"domains":[{"id":0,"name":"d"}],
        "tasks":[{"id":0,"name":"A","domain":0},{"id":1,"name":"B","domain":0}],
        "steps":[{"id":0,"label":"a0","task":0},{"id":1,"label":"a1","task":0},
                 {"id":2,"label":"b0","task":1},{"id":3,"label":"b1","task":1}]})");
    const Lexicon lex = load_lexicon(path.string());
    CHECK(lex.step_count() == 4);
    CHECK(lex.task_count() == 2);
}

TEST_CASE("lexicon rejects step with unknown task") {
    const auto path = temp_file("steploc_lexicon_unknown.json");
    write_text(path, R"({"domains":[{"id":0,"name":"d"}],
        "tasks":[{"id":0,"name":"A","domain":0}],
        "steps":[{"id":0,"label":"a0","task":7}]})");
    CHECK_THROWS_WITH(load_lexicon(path.string()), Catch::Matchers::ContainsSubstring("unknown task"));
}

TEST_CASE("lexicon rejects empty task") {
    const auto path = temp_file("steploc_lexicon_empty.json");
    write_text(path, R"({"domains":[{"id":0,"name":"d"}],
        "tasks":[{"id":0,"name":"A","domain":0},{"id":1,"name":"B","domain":0}],
        "steps":[{"id":0,"label":"a0","task":0}]})");
    CHECK_THROWS_WITH(load_lexicon(path.string()), Catch::Matchers::ContainsSubstring("empty task"));
}

TEST_CASE("lexicon rejects duplicate ids") {
    Lexicon lex = two_task_lexicon();
    lex.steps[1].id = 0;
    CHECK_THROWS_AS(validate_lexicon(lex), ValidationError);
}

TEST_CASE("membership matrix follows the lexicon") {
    Lexicon lex;
    lex.domains = {{0, "d"}};
    lex.tasks = {{0, "A", 0}, {1, "B", 0}};
    lex.steps = {{0, "a0", 0}, {1, "a1", 0}, {2, "b0", 1}};
    const MembershipMatrix m = build_membership(lex);
    REQUIRE(m.num_steps == 3);
    REQUIRE(m.num_tasks == 2);
    CHECK(m.at(0, 0) == 1);
    CHECK(m.at(0, 1) == 0);
    CHECK(m.at(1, 0) == 1);
    CHECK(m.at(2, 0) == 0);
    CHECK(m.at(2, 1) == 1);
}

TEST_CASE("membership of a single-task lexicon is an all-ones column") {
    Lexicon lex;
    lex.domains = {{0, "d"}};
    lex.tasks = {{0, "A", 0}};
    lex.steps = {{0, "a0", 0}, {1, "a1", 0}, {2, "a2", 0}};
    const MembershipMatrix m = build_membership(lex);
    for (int k = 0; k < m.num_steps; ++k) CHECK(m.at(k, 0) == 1);
}

TEST_CASE("membership rows sum to one for random lexicons") {
    SplitMix64 rng(0xC0FFEEu);
    for (int trial = 0; trial < 25; ++trial) {
        Lexicon lex;
        lex.domains = {{0, "d"}};
        const int n_tasks = 1 + static_cast<int>(rng.below(5));
        int step_id = 0;
        for (int j = 0; j < n_tasks; ++j) {
            lex.tasks.push_back({j, "t" + std::to_string(j), 0});
            const int n_steps = 1 + static_cast<int>(rng.below(6));
            for (int i = 0; i < n_steps; ++i, ++step_id)
                lex.steps.push_back({step_id, "s" + std::to_string(step_id), j});
        }
        validate_lexicon(lex);
        const MembershipMatrix m = build_membership(lex);
        for (int k = 0; k < m.num_steps; ++k) {
            int row_sum = 0;
            for (int j = 0; j < m.num_tasks; ++j) row_sum += m.at(k, j);
            REQUIRE(row_sum == 1);
        }
        for (int j = 0; j < m.num_tasks; ++j) {
            int col_sum = 0;
            for (int k = 0; k < m.num_steps; ++k) col_sum += m.at(k, j);
            REQUIRE(col_sum == m.steps_per_task[j]);
        }
    }
}

TEST_CASE("proposal validation rejects the named error cases") {
    ProposalSet set;
    set.video_id = "v";
    set.duration_s = 10.0;

    SECTION("scores length mismatch") {
        set.proposals = {{0.0, 5.0, {0.1, 0.2, 0.3}}};
        CHECK_THROWS_WITH(validate_proposal_set(set, 4), Catch::Matchers::ContainsSubstring("scores length"));
    }
    SECTION("inverted interval") {
        set.proposals = {{5.0, 5.0, {0.1}}};
        CHECK_THROWS_AS(validate_proposal_set(set, 1), ValidationError);
    }
    SECTION("negative score") {
        set.proposals = {{0.0, 5.0, {-0.1}}};
        CHECK_THROWS_WITH(validate_proposal_set(set, 1), Catch::Matchers::ContainsSubstring("negative score"));
    }
    SECTION("interval out of range") {
        set.proposals = {{0.0, 15.0, {0.1}}};
        CHECK_THROWS_WITH(validate_proposal_set(set, 1), Catch::Matchers::ContainsSubstring("out of range"));
    }
    SECTION("valid input passes") {
        set.proposals = {{0.0, 5.0, {0.1}}, {2.0, 10.0, {0.0}}};
        CHECK_NOTHROW(validate_proposal_set(set, 1));
    }
}

TEST_CASE("annotation validation enforces ordering and task membership") {
    const Lexicon lex = two_task_lexicon();
    AnnotationSet set;
    set.videos = {{"v", 0, 60.0, {{0, 0.0, 10.0}, {1, 10.0, 20.0}}}};
    CHECK_NOTHROW(validate_annotations(set, &lex));

    SECTION("foreign step") {
        set.videos[0].segments[1].step_id = 2;
        CHECK_THROWS_WITH(validate_annotations(set, &lex),
                          Catch::Matchers::ContainsSubstring("does not belong"));
    }
    SECTION("decreasing starts") {
        std::swap(set.videos[0].segments[0], set.videos[0].segments[1]);
        CHECK_THROWS_WITH(validate_annotations(set, &lex),
                          Catch::Matchers::ContainsSubstring("nondecreasing"));
    }
}

TEST_CASE("write then load round-trips generated corpora") {
    SynthConfig cfg;
    cfg.seed = 17;
    cfg.n_tasks = 2;
    cfg.steps_per_task = 3;
    cfg.n_videos = 4;
    cfg.drop_prob = 0.2;
    cfg.swap_prob = 0.2;
    cfg.jitter_s = 1.0;
    cfg.proposals_per_segment = 2;
    const Corpus corpus = generate_corpus(cfg);

    const auto dir = std::filesystem::temp_directory_path() / "steploc_roundtrip";
    write_corpus(dir.string(), corpus);

    const Lexicon lex = load_lexicon((dir / "lexicon.json").string());
    CHECK(lex == corpus.lexicon);
    const AnnotationSet train = load_annotations((dir / "train_annotations.json").string(), &lex);
    CHECK(train == corpus.train);
    const auto proposals = load_proposals((dir / "test_proposals.json").string(), lex.step_count());
    CHECK(proposals == corpus.proposals);

    // A second write of the loaded data reproduces the same bytes.
    const auto again = dir / "proposals_again.json";
    write_proposals(again.string(), proposals);
    CHECK(read_text(again) == read_text(dir / "test_proposals.json"));
}

TEST_CASE("transition model round-trips through transitions.json") {
    AnnotationSet train;
    train.videos = {{"t0", 0, 100.0, {{0, 0.0, 10.0}, {1, 10.0, 20.0}, {2, 20.0, 30.0}}},
                    {"t1", 0, 100.0, {{0, 0.0, 10.0}, {2, 10.0, 20.0}}}};
    const TransitionModel model = build_transition(train, 3);
    const auto path = temp_file("steploc_transitions.json");
    write_transitions(path.string(), model);
    const TransitionModel loaded = load_transitions(path.string());
    CHECK(loaded.num_steps == model.num_steps);
    CHECK(loaded.counts == model.counts);
    CHECK(loaded.probs == model.probs);
    CHECK(loaded.first_step_prior == model.first_step_prior);
}

TEST_CASE("number formatting is stable through a parse cycle") {
    SplitMix64 rng(42);
    for (int i = 0; i < 2000; ++i) {
        const double x = (rng.uniform() - 0.25) * std::pow(10.0, static_cast<double>(rng.below(8)));
        const std::string once = format_number(x);
        const double back = quantize_number(x);
        CHECK(format_number(back) == once);
    }
    CHECK(format_number(0.0) == "0");
    CHECK(format_number(-0.0) == "0");
}
