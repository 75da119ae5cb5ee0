#include "parbmc/types.hpp"

#include <algorithm>

namespace parbmc {

NormalizeResult normalize_clause(std::vector<Lit>& lits) {
    std::sort(lits.begin(), lits.end(), [](Lit a, Lit b) {
        return a.var() != b.var() ? a.var() < b.var() : a.code < b.code;
    });
    size_t out = 0;
    for (size_t i = 0; i < lits.size(); ++i) {
        if (out > 0 && lits[i] == lits[out - 1]) continue;
        if (out > 0 && lits[i].var() == lits[out - 1].var()) return NormalizeResult::Tautology;
        lits[out++] = lits[i];
    }
    lits.resize(out);
    return lits.empty() ? NormalizeResult::Empty : NormalizeResult::Clause;
}

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

uint64_t clause_signature(const std::vector<Lit>& lits) {
    // Sum of per-literal hashes: order-independent, so callers need not sort.
    uint64_t sig = 0x51ca15e5c1a05e00ULL ^ (uint64_t)lits.size();
    for (Lit l : lits) sig += splitmix64((uint64_t)(int64_t)l.code);
    return sig;
}

}  // namespace parbmc
