#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "parbmc/icnf.hpp"
#include "parbmc/types.hpp"

namespace parbmc {

enum class Verdict { Sat, Unsat };

// A b-bit counter starting at 0 that adds `step` (>= 1) each frame, either
// wrapping modulo 2^b or saturating at 2^b - 1. Bound k asks whether the
// counter equals `target` after exactly k steps, so every verdict is known by
// iterating the states directly. Propagation alone decides these instances;
// they exercise the incremental plumbing, not the search.
struct CounterSpec {
    int bits = 3;
    int step = 1;
    int target = 5;
    int bounds = 10;  // cues for bounds 0..bounds-1
    bool wrap = true;
};

// One pigeonhole block per bound on fresh variables, activated by that
// bound's cue. Bounds below sat_bound place holes+1 pigeons (hard
// refutations); bounds at or above it place holes pigeons (satisfiable).
// These instances generate real conflict traffic.
struct PigeonSpec {
    int holes = 5;
    int sat_bound = 3;
    int bounds = 6;
};

struct GeneratedInstance {
    std::string name;
    IcnfProblem problem;
    std::vector<Verdict> expected;  // one per bound
};

GeneratedInstance gen_counter(const CounterSpec& spec);
GeneratedInstance gen_pigeon(const PigeonSpec& spec);

// Fixed catalogs used by the test suite.
//   "smoke": 6 small instances, each solvable in well under a second.
//   "full":  counters covering wrap/saturate, unreachable targets, repeated
//            hits, plus small pigeon ladders (>= 12 instances).
// Unknown names throw std::invalid_argument.
std::vector<GeneratedInstance> gen_suite(std::string_view sizes = "full");

// Sidecar format: one `<bound> sat|unsat` line per bound.
void write_expected(std::ostream& out, const std::vector<Verdict>& expected);
std::vector<Verdict> parse_expected(std::istream& in);

}  // namespace parbmc
