#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "parbmc/types.hpp"

namespace parbmc {

struct IcnfParseError : std::exception {
    std::string message;  // includes the line number
    int line = 0;
    IcnfParseError(int ln, const std::string& what_part)
        : message("line " + std::to_string(ln) + ": " + what_part), line(ln) {}
    const char* what() const noexcept override { return message.c_str(); }
};

// A formula sequence. Segment k holds the clauses that first become part of
// the formula at bound k; cue k holds the assumption literals under which
// bound k is solved. Formulas are cumulative: bound k uses segments 0..k.
struct IcnfProblem {
    std::vector<BoundedClause> clauses;   // grouped by cbnd, ascending
    std::vector<std::vector<Lit>> cues;   // cues[k] activates bound k
    int32_t declared_vars = 0;            // from a `c vars N` comment, 0 when absent
    int32_t max_var = 0;
    bool trailing_clauses = false;        // clauses after the final cue line

    Bound num_bounds() const { return (Bound)cues.size(); }
    std::span<const BoundedClause> segment(Bound k) const;
};

// Accepts the `p inccnf` format: one clause per line terminated by 0, cue
// lines `a <lits> 0`, comments starting with `c`. Throws IcnfParseError with
// the offending line number.
IcnfProblem parse_icnf(std::istream& in);
IcnfProblem parse_icnf_file(const std::string& path);

void write_icnf(std::ostream& out, const IcnfProblem& p);
void write_icnf_file(const std::string& path, const IcnfProblem& p);

}  // namespace parbmc
