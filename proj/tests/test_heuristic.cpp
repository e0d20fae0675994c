#include <catch2/catch_amalgamated.hpp>

#include "cemb/heuristic.hpp"

using namespace cemb;

TEST_CASE("default grid at capacity 32 yields the canonical ladder") {
    const auto rec = recommend_pairs(100000, 16);
    REQUIRE_FALSE(rec.warning);
    REQUIRE(rec.candidates.size() == 4);
    REQUIRE(rec.candidates[0] == CandidatePair{32, 1});
    REQUIRE(rec.candidates[1] == CandidatePair{24, 1});
    REQUIRE(rec.candidates[2] == CandidatePair{16, 2});
    REQUIRE(rec.candidates[3] == CandidatePair{8, 4});
    // every candidate respects the budget
    for (const auto& c : rec.candidates) REQUIRE(c.r * c.p <= 32);
}

TEST_CASE("capacity 8 keeps only the smallest rank") {
    const auto rec = recommend_pairs(1000, 8, 8);
    REQUIRE_FALSE(rec.warning);
    REQUIRE(rec.candidates.size() == 1);
    REQUIRE(rec.candidates[0] == CandidatePair{8, 1});
}

TEST_CASE("capacity below the whole grid warns and returns nothing") {
    const auto rec = recommend_pairs(1000, 8, 4);
    REQUIRE(rec.warning);
    REQUIRE(rec.candidates.empty());
    REQUIRE_FALSE(rec.note.empty());
}

TEST_CASE("predicted bytes match the closed form") {
    // n=100: m=10, nq=10; per term (10r + 10r + 16r) floats
    REQUIRE(frobenius_param_bytes(100, 16, 2, 1) == 72 * 4);
    REQUIRE(frobenius_param_bytes(100, 16, 4, 1) == 144 * 4);
    REQUIRE(frobenius_param_bytes(100, 16, 2, 3) == 216 * 4);
    const auto rec = recommend_pairs(100, 16);
    for (const auto& c : rec.candidates)
        REQUIRE(c.predicted_bytes == frobenius_param_bytes(100, 16, c.r, c.p));
}

TEST_CASE("grid order and duplicates do not change the result") {
    const auto a = recommend_pairs(5000, 32, 32, {8, 16, 24, 32});
    const auto b = recommend_pairs(5000, 32, 32, {32, 8, 24, 16, 8, 32});
    REQUIRE(a.candidates == b.candidates);
}

TEST_CASE("default pick maximizes terms then minimizes rank") {
    const auto rec = recommend_pairs(100000, 16);
    const auto pick = select_default(rec.candidates);
    REQUIRE(pick == CandidatePair{8, 4});

    // tie on p: lower rank wins
    const std::vector<CandidatePair> tied{{16, 2, 0}, {8, 2, 0}};
    REQUIRE(select_default(tied) == CandidatePair{8, 2});

    REQUIRE_THROWS_AS(select_default(std::vector<CandidatePair>{}), param_error);
}

TEST_CASE("recommend_pairs validates input") {
    REQUIRE_THROWS_AS(recommend_pairs(0, 16), param_error);
    REQUIRE_THROWS_AS(recommend_pairs(100, 0), param_error);
    REQUIRE_THROWS_AS(recommend_pairs(100, 16, 32, {}), param_error);
}

TEST_CASE("non-standard rank grids") {
    const auto rec = recommend_pairs(100, 16, 12, {2, 4, 6});
    REQUIRE(rec.candidates.size() == 3);
    REQUIRE(rec.candidates[0] == CandidatePair{6, 2});
    REQUIRE(rec.candidates[1] == CandidatePair{4, 3});
    REQUIRE(rec.candidates[2] == CandidatePair{2, 6});
    // ranks above the budget are skipped silently
    const auto part = recommend_pairs(100, 16, 5, {2, 4, 6});
    REQUIRE(part.candidates.size() == 2);
    REQUIRE(part.candidates[0] == CandidatePair{4, 1});
    REQUIRE(part.candidates[1] == CandidatePair{2, 2});
}
