#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spineforge/error.hpp"
#include "spineforge/rng.hpp"

namespace spineforge::words {

// A letter of the free group F_k: generator index in 1..k with a sign.
// Internally packed as an int: +g for x_g, -g for x_g^{-1}.
struct Letter {
    int generator = 1;   // 1..k
    int sign = +1;       // +1 or -1

    int packed() const { return sign * generator; }
    static Letter from_packed(int p) { return Letter{p < 0 ? -p : p, p < 0 ? -1 : +1}; }
    Letter inverse() const { return Letter{generator, -sign}; }
    bool operator==(const Letter& o) const = default;
};

inline bool cancels(const Letter& a, const Letter& b) {
    return a.generator == b.generator && a.sign != b.sign;
}

// Serialization alphabet: a..z for generators 1..26, A..Z for inverses.
char letter_to_char(const Letter& l);
Letter letter_from_char(char c);

class ReducedWord {
public:
    ReducedWord() = default;
    ReducedWord(std::vector<Letter> letters, bool cyclic);

    // Parse from the a..z/A..Z alphabet. Validates reducedness.
    static ReducedWord parse(const std::string& s, bool cyclic);

    const std::vector<Letter>& letters() const { return letters_; }
    bool cyclic() const { return cyclic_; }
    size_t size() const { return letters_.size(); }
    bool empty() const { return letters_.empty(); }
    const Letter& at(size_t i) const { return letters_[i]; }
    // Letter at cyclic position i (i taken mod size).
    const Letter& cyclic_at(size_t i) const { return letters_[i % letters_.size()]; }

    ReducedWord inverse() const;
    std::string str() const;
    bool operator==(const ReducedWord& o) const = default;

private:
    std::vector<Letter> letters_;
    bool cyclic_ = false;
};

struct Presentation {
    int k = 2;
    std::vector<ReducedWord> relators;
};

// True iff w has no adjacent inverse pair (and no wraparound pair when cyclic).
bool is_reduced(const std::vector<Letter>& letters, bool cyclic);
bool is_reduced(const ReducedWord& w, bool cyclic);

// Exact-uniform sample over cyclically reduced words of length n in F_k,
// by rejection from the uniform reduced-word sampler. Deterministic in
// (k, n, seed). n = 0 returns the empty word; k < 2 is an error.
ReducedWord random_cyclically_reduced_word(int k, size_t n, uint64_t seed);

// Sequential near-uniform sampler (first letter uniform over 2k, each next
// uniform over the 2k-1 non-cancelling letters, final letter resampled
// until the wraparound is clean).
ReducedWord random_cyclically_reduced_word_sequential(int k, size_t n, uint64_t seed);

// Uniform reduced (not necessarily cyclically reduced) word.
ReducedWord random_reduced_word(int k, size_t n, Rng& rng);

// floor((2k-1)^{nD}) independent relators of length n. 0 < D < 1/2.
Presentation sample_presentation(int k, size_t n, double density, uint64_t seed);

// Number of relators floor((2k-1)^{nD}); throws on overflow past 2^62.
uint64_t relator_count(int k, size_t n, double density);

// All cyclically reduced words of length n over F_k (test oracle helper;
// exponential, intended for tiny n).
std::vector<ReducedWord> enumerate_cyclically_reduced(int k, size_t n);

}  // namespace spineforge::words
