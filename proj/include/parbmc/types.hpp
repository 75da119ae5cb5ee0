#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace parbmc {

// A literal in DIMACS convention: a nonzero integer, negative means negated.
// Variable indices start at 1.
struct Lit {
    int32_t code = 0;

    Lit() = default;
    explicit Lit(int32_t c) : code(c) {}

    int32_t var() const { return code < 0 ? -code : code; }
    bool negative() const { return code < 0; }
    Lit operator-() const { return Lit(-code); }

    friend bool operator==(Lit, Lit) = default;
    friend auto operator<=>(Lit, Lit) = default;
};

using Bound = int32_t;

// A clause annotated with its clause bound: the smallest formula index known
// to imply it. Problem clauses get the bound of the segment they first appear
// in; learned clauses get the maximum bound over their derivation.
struct BoundedClause {
    std::vector<Lit> lits;
    Bound cbnd = 0;

    friend bool operator==(const BoundedClause&, const BoundedClause&) = default;
};

enum class NormalizeResult {
    Clause,     // usable clause (possibly shrunk by duplicate removal)
    Tautology,  // contains a literal and its negation
    Empty,      // no literals left
};

// Sorts, removes duplicate literals, detects tautologies.
NormalizeResult normalize_clause(std::vector<Lit>& lits);

// Order-independent signature over the literal multiset, used to skip
// duplicate imports. Collisions only cost a skipped clause.
uint64_t clause_signature(const std::vector<Lit>& lits);

uint64_t splitmix64(uint64_t x);

// Raised when two threads report contradictory statuses for the same bound,
// or a reported model fails re-evaluation. Never caught by normal control
// flow: it indicates a soundness bug, not a user error.
struct InternalSoundnessError : std::exception {
    std::string message;
    explicit InternalSoundnessError(std::string m) : message(std::move(m)) {}
    const char* what() const noexcept override { return message.c_str(); }
};

}  // namespace parbmc
