#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "spineforge/words.hpp"
#include "test_util.hpp"

using namespace spineforge;
using namespace spineforge::words;

TEST_CASE("letter serialization round-trips") {
    CHECK(letter_to_char(Letter{1, +1}) == 'a');
    CHECK(letter_to_char(Letter{2, -1}) == 'B');
    CHECK(letter_from_char('c') == Letter{3, +1});
    CHECK(letter_from_char('A') == Letter{1, -1});
    CHECK_THROWS_AS(letter_from_char('!'), Error);
    ReducedWord w = ReducedWord::parse("abAB", true);
    CHECK(w.str() == "abAB");
    CHECK(w.inverse().str() == "baBA");
}

TEST_CASE("is_reduced detects adjacent and wraparound cancellations") {
    CHECK_FALSE(is_reduced(std::vector<Letter>{{1, +1}, {1, -1}}, false));
    // x1 x2 x1^{-1} is reduced linearly but not around the circle.
    std::vector<Letter> w{{1, +1}, {2, +1}, {1, -1}};
    CHECK(is_reduced(w, false));
    CHECK_FALSE(is_reduced(w, true));
    std::vector<Letter> ok{{1, +1}, {2, +1}, {1, +1}, {2, +1}};
    CHECK(is_reduced(ok, true));
}

TEST_CASE("empty word and rank validation") {
    ReducedWord e = random_cyclically_reduced_word(2, 0, 123);
    CHECK(e.empty());
    CHECK_THROWS_AS(random_cyclically_reduced_word(1, 5, 7), Error);
}

TEST_CASE("length-3 samples lie in the enumerated cyclically reduced set") {
    auto all = enumerate_cyclically_reduced(2, 3);
    // 4*3*3 reduced words minus those whose last letter inverts the first.
    CHECK(all.size() == 28);
    std::set<std::string> allowed;
    for (const auto& w : all) allowed.insert(w.str());
    for (uint64_t seed = 0; seed < 200; ++seed) {
        CHECK(allowed.count(random_cyclically_reduced_word(2, 3, seed).str()) == 1);
        CHECK(allowed.count(random_cyclically_reduced_word_sequential(2, 3, seed).str()) == 1);
    }
}

TEST_CASE("sampled words are always cyclically reduced (fuzz)") {
    for (uint64_t seed = 0; seed < 60; ++seed) {
        for (size_t n : {1, 2, 5, 17}) {
            auto w = random_cyclically_reduced_word(3, n, seed * 1000 + n);
            CHECK(is_reduced(w, true));
            CHECK(w.size() == n);
        }
    }
}

TEST_CASE("determinism: identical seed gives identical word") {
    auto a = random_cyclically_reduced_word(3, 512, 42);
    auto b = random_cyclically_reduced_word(3, 512, 42);
    CHECK(a == b);
    auto c = random_cyclically_reduced_word(3, 512, 43);
    CHECK(a.str() != c.str());
}

TEST_CASE("letter distribution is uniform within 3 sigma per letter") {
    auto w = random_cyclically_reduced_word(2, 10000, 7);
    std::map<int, int64_t> counts;
    for (const auto& l : w.letters()) ++counts[l.packed()];
    double expected = 10000.0 / 4.0;
    double sigma = std::sqrt(10000.0 * 0.25 * 0.75);
    for (auto [packed, count] : counts) {
        (void)packed;
        CHECK(std::fabs(count - expected) <= 3.0 * sigma);
    }
}

TEST_CASE("uniformity against brute-forced enumeration (chi-square)") {
    for (size_t n : {3, 5}) {
        auto all = enumerate_cyclically_reduced(2, n);
        std::map<std::string, int64_t> counts;
        for (const auto& w : all) counts[w.str()] = 0;
        const int64_t samples = 400000;
        Rng seeder(99);
        for (int64_t i = 0; i < samples; ++i) {
            auto w = random_cyclically_reduced_word(2, n, seeder.next());
            ++counts[w.str()];
        }
        std::vector<int64_t> observed;
        std::vector<double> expected;
        for (auto& [ws, c] : counts) {
            (void)ws;
            observed.push_back(c);
            expected.push_back(static_cast<double>(samples) / all.size());
        }
        double p = testutil::chi_square_p(observed, expected);
        CHECK(p > 0.001);
    }
}

TEST_CASE("relator counts follow floor((2k-1)^{nD})") {
    CHECK(relator_count(2, 20, 0.1) == 9);      // floor(3^2)
    CHECK(relator_count(3, 30, 0.2) == 15625);  // 5^6
    CHECK(relator_count(2, 10, 1e-9) == 1);     // few-relators degenerate
    CHECK_THROWS_AS(relator_count(3, 4000, 0.49), Error);
    CHECK_THROWS_AS(relator_count(2, 10, 0.6), Error);
}

TEST_CASE("sample_presentation produces equal-length cyclically reduced relators") {
    auto p = sample_presentation(2, 20, 0.1, 1);
    CHECK(p.relators.size() == 9);
    for (const auto& r : p.relators) {
        CHECK(r.size() == 20);
        CHECK(is_reduced(r, true));
    }
    auto q = sample_presentation(2, 20, 0.1, 1);
    for (size_t i = 0; i < p.relators.size(); ++i) CHECK(p.relators[i] == q.relators[i]);
}
