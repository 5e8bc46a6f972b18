#include "spineforge/words.hpp"

#include <algorithm>
#include <cmath>

namespace spineforge::words {

char letter_to_char(const Letter& l) {
    if (l.generator < 1 || l.generator > 26) throw Error("generator out of a..z range");
    char base = l.sign > 0 ? 'a' : 'A';
    return static_cast<char>(base + l.generator - 1);
}

Letter letter_from_char(char c) {
    if (c >= 'a' && c <= 'z') return Letter{c - 'a' + 1, +1};
    if (c >= 'A' && c <= 'Z') return Letter{c - 'A' + 1, -1};
    throw Error(std::string("invalid word character '") + c + "'");
}

ReducedWord::ReducedWord(std::vector<Letter> letters, bool cyclic)
    : letters_(std::move(letters)), cyclic_(cyclic) {
    if (!is_reduced(letters_, cyclic_)) throw Error("word is not reduced");
}

ReducedWord ReducedWord::parse(const std::string& s, bool cyclic) {
    std::vector<Letter> ls;
    ls.reserve(s.size());
    for (char c : s) ls.push_back(letter_from_char(c));
    return ReducedWord(std::move(ls), cyclic);
}

ReducedWord ReducedWord::inverse() const {
    std::vector<Letter> ls(letters_.rbegin(), letters_.rend());
    for (auto& l : ls) l = l.inverse();
    return ReducedWord(std::move(ls), cyclic_);
}

std::string ReducedWord::str() const {
    std::string s;
    s.reserve(letters_.size());
    for (const auto& l : letters_) s.push_back(letter_to_char(l));
    return s;
}

bool is_reduced(const std::vector<Letter>& letters, bool cyclic) {
    for (size_t i = 0; i + 1 < letters.size(); ++i)
        if (cancels(letters[i], letters[i + 1])) return false;
    if (cyclic && letters.size() >= 2 && cancels(letters.back(), letters.front()))
        return false;
    return true;
}

bool is_reduced(const ReducedWord& w, bool cyclic) {
    return is_reduced(w.letters(), cyclic);
}

namespace {

Letter uniform_letter(int k, Rng& rng) {
    uint64_t v = rng.below(2 * static_cast<uint64_t>(k));
    int gen = static_cast<int>(v / 2) + 1;
    return Letter{gen, (v & 1) ? -1 : +1};
}

// Uniform over the 2k-1 letters that do not cancel `prev`.
Letter uniform_noncancelling(int k, const Letter& prev, Rng& rng) {
    uint64_t v = rng.below(2 * static_cast<uint64_t>(k) - 1);
    Letter banned = prev.inverse();
    // Enumerate letters in a fixed order, skipping the banned one.
    uint64_t idx = 0;
    for (int g = 1; g <= k; ++g) {
        for (int s : {+1, -1}) {
            Letter cand{g, s};
            if (cand == banned) continue;
            if (idx == v) return cand;
            ++idx;
        }
    }
    throw Error("letter enumeration exhausted");  // unreachable
}

}  // namespace

ReducedWord random_reduced_word(int k, size_t n, Rng& rng) {
    if (k < 2) throw Error("rank too small");
    std::vector<Letter> ls;
    ls.reserve(n);
    for (size_t i = 0; i < n; ++i)
        ls.push_back(i == 0 ? uniform_letter(k, rng) : uniform_noncancelling(k, ls.back(), rng));
    return ReducedWord(std::move(ls), false);
}

ReducedWord random_cyclically_reduced_word(int k, size_t n, uint64_t seed) {
    if (k < 2) throw Error("rank too small");
    if (n == 0) return ReducedWord({}, true);
    Rng rng(seed);
    for (;;) {
        ReducedWord w = random_reduced_word(k, n, rng);
        if (is_reduced(w.letters(), true)) return ReducedWord(w.letters(), true);
    }
}

ReducedWord random_cyclically_reduced_word_sequential(int k, size_t n, uint64_t seed) {
    if (k < 2) throw Error("rank too small");
    if (n == 0) return ReducedWord({}, true);
    Rng rng(seed);
    std::vector<Letter> ls;
    ls.reserve(n);
    ls.push_back(uniform_letter(k, rng));
    for (size_t i = 1; i < n; ++i) ls.push_back(uniform_noncancelling(k, ls.back(), rng));
    // Resample the final letter until the wraparound is clean; for n = 1 a
    // single letter is always cyclically reduced.
    while (n >= 2 && cancels(ls.back(), ls.front())) ls.back() = uniform_noncancelling(k, ls[n - 2], rng);
    return ReducedWord(std::move(ls), true);
}

uint64_t relator_count(int k, size_t n, double density) {
    if (!(density > 0.0 && density < 0.5)) throw Error("density must lie in (0, 1/2)");
    long double exponent = static_cast<long double>(n) * static_cast<long double>(density);
    long double value = powl(static_cast<long double>(2 * k - 1), exponent);
    if (value >= static_cast<long double>(1ull << 62))
        throw Error("relator count overflow: (2k-1)^{nD} exceeds 2^62 (required count ~ " +
                    std::to_string(static_cast<double>(value)) + ")");
    uint64_t count = static_cast<uint64_t>(value);
    return count == 0 ? 1 : count;  // few-relators degenerate floor
}

Presentation sample_presentation(int k, size_t n, double density, uint64_t seed) {
    uint64_t count = relator_count(k, n, density);
    Presentation p;
    p.k = k;
    p.relators.reserve(count);
    Rng root(seed);
    for (uint64_t i = 0; i < count; ++i) {
        Rng child = root.split(i);
        uint64_t child_seed = child.next();
        p.relators.push_back(random_cyclically_reduced_word(k, n, child_seed));
    }
    return p;
}

std::vector<ReducedWord> enumerate_cyclically_reduced(int k, size_t n) {
    std::vector<ReducedWord> out;
    if (n == 0) {
        out.emplace_back(std::vector<Letter>{}, true);
        return out;
    }
    std::vector<Letter> alphabet;
    for (int g = 1; g <= k; ++g) {
        alphabet.push_back(Letter{g, +1});
        alphabet.push_back(Letter{g, -1});
    }
    std::vector<Letter> cur;
    auto rec = [&](auto&& self, size_t depth) -> void {
        if (depth == n) {
            if (is_reduced(cur, true)) out.emplace_back(cur, true);
            return;
        }
        for (const auto& l : alphabet) {
            if (!cur.empty() && cancels(cur.back(), l)) continue;
            cur.push_back(l);
            self(self, depth + 1);
            cur.pop_back();
        }
    };
    rec(rec, 0);
    return out;
}

}  // namespace spineforge::words
