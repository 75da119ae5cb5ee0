#include "parbmc/bench_gen.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace parbmc {

namespace {

void push_clause(IcnfProblem& p, std::vector<Lit> lits, Bound cbnd) {
    for (Lit l : lits) p.max_var = std::max(p.max_var, l.var());
    p.clauses.push_back(BoundedClause{std::move(lits), cbnd});
}

}  // namespace

GeneratedInstance gen_counter(const CounterSpec& spec) {
    if (spec.bits < 1 || spec.bits > 16) throw std::invalid_argument("counter bits out of [1,16]");
    if (spec.bounds < 1) throw std::invalid_argument("counter bounds must be >= 1");
    if (spec.step < 1) throw std::invalid_argument("counter step must be >= 1");
    const int mask = (1 << spec.bits) - 1;
    if (spec.target < 0 || spec.target > mask)
        throw std::invalid_argument("counter target outside the representable range");

    const int b = spec.bits, nb = spec.bounds;
    auto bit_var = [&](int frame, int j) { return Lit(frame * b + j + 1); };
    auto cue_var = [&](int k) { return Lit(nb * b + k + 1); };
    auto bit_lit = [&](int frame, int value, int j) {
        Lit v = bit_var(frame, j);
        return (value >> j) & 1 ? v : -v;
    };
    auto next_of = [&](int value) {
        return spec.wrap ? (value + spec.step) & mask : std::min(value + spec.step, mask);
    };

    GeneratedInstance out;
    {
        std::ostringstream name;
        name << "counter-b" << b << "-s" << spec.step << "-t" << spec.target << "-k" << nb
             << (spec.wrap ? "-wrap" : "-sat");
        out.name = name.str();
    }
    IcnfProblem& p = out.problem;
    p.declared_vars = nb * b + nb;

    // Frame 0 is pinned to zero.
    for (int j = 0; j < b; ++j) push_clause(p, {-bit_var(0, j)}, 0);

    for (int k = 0; k < nb; ++k) {
        if (k > 0) {
            // Transition k-1 -> k, one implication per source value and bit.
            for (int val = 0; val <= mask; ++val) {
                int next = next_of(val);
                for (int j = 0; j < b; ++j) {
                    std::vector<Lit> lits;
                    for (int i = 0; i < b; ++i) lits.push_back(-bit_lit(k - 1, val, i));
                    lits.push_back(bit_lit(k, next, j));
                    push_clause(p, std::move(lits), k);
                }
            }
        }
        // Target check, active only when the cue pulls x_k low.
        for (int j = 0; j < b; ++j)
            push_clause(p, {bit_lit(k, spec.target, j), cue_var(k)}, k);
        p.cues.push_back({-cue_var(k)});
        p.max_var = std::max(p.max_var, cue_var(k).var());
    }

    int val = 0;
    for (int k = 0; k < nb; ++k) {
        if (k > 0) val = next_of(val);
        out.expected.push_back(val == spec.target ? Verdict::Sat : Verdict::Unsat);
    }
    return out;
}

GeneratedInstance gen_pigeon(const PigeonSpec& spec) {
    if (spec.holes < 1) throw std::invalid_argument("pigeon holes must be >= 1");
    if (spec.bounds < 1) throw std::invalid_argument("pigeon bounds must be >= 1");
    if (spec.sat_bound < 0 || spec.sat_bound > spec.bounds)
        throw std::invalid_argument("pigeon sat_bound outside [0, bounds]");

    GeneratedInstance out;
    {
        std::ostringstream name;
        name << "pigeon-h" << spec.holes << "-flip" << spec.sat_bound << "-k" << spec.bounds;
        out.name = name.str();
    }
    IcnfProblem& p = out.problem;
    auto cue_var = [&](int k) { return Lit(k + 1); };
    int32_t next_var = spec.bounds + 1;

    for (int k = 0; k < spec.bounds; ++k) {
        int pigeons = k < spec.sat_bound ? spec.holes + 1 : spec.holes;
        auto pv = [&](int pg, int h) { return Lit(next_var + pg * spec.holes + h); };
        for (int pg = 0; pg < pigeons; ++pg) {
            std::vector<Lit> lits{cue_var(k)};
            for (int h = 0; h < spec.holes; ++h) lits.push_back(pv(pg, h));
            push_clause(p, std::move(lits), k);
        }
        for (int h = 0; h < spec.holes; ++h)
            for (int p1 = 0; p1 < pigeons; ++p1)
                for (int p2 = p1 + 1; p2 < pigeons; ++p2)
                    push_clause(p, {cue_var(k), -pv(p1, h), -pv(p2, h)}, k);
        next_var += pigeons * spec.holes;
        p.cues.push_back({-cue_var(k)});
        p.max_var = std::max(p.max_var, cue_var(k).var());
        out.expected.push_back(k < spec.sat_bound ? Verdict::Unsat : Verdict::Sat);
    }
    p.declared_vars = next_var - 1;
    return out;
}

std::vector<GeneratedInstance> gen_suite(std::string_view sizes) {
    std::vector<GeneratedInstance> out;
    if (sizes == "smoke") {
        out.push_back(gen_counter({.bits = 2, .step = 1, .target = 3, .bounds = 6, .wrap = true}));
        out.push_back(gen_counter({.bits = 2, .step = 1, .target = 3, .bounds = 6, .wrap = false}));
        out.push_back(gen_counter({.bits = 3, .step = 2, .target = 5, .bounds = 8, .wrap = true}));
        out.push_back(gen_counter({.bits = 3, .step = 2, .target = 6, .bounds = 8, .wrap = true}));
        out.push_back(gen_counter({.bits = 1, .step = 1, .target = 1, .bounds = 4, .wrap = true}));
        out.push_back(gen_pigeon({.holes = 4, .sat_bound = 2, .bounds = 4}));
        return out;
    }
    if (sizes != "full") throw std::invalid_argument("unknown suite size");
    out.push_back(gen_counter({.bits = 3, .step = 1, .target = 5, .bounds = 10, .wrap = false}));
    out.push_back(gen_counter({.bits = 1, .step = 1, .target = 0, .bounds = 4, .wrap = true}));
    out.push_back(gen_counter({.bits = 2, .step = 1, .target = 3, .bounds = 6, .wrap = true}));
    out.push_back(gen_counter({.bits = 2, .step = 1, .target = 3, .bounds = 6, .wrap = false}));
    out.push_back(gen_counter({.bits = 3, .step = 2, .target = 5, .bounds = 8, .wrap = true}));
    out.push_back(gen_counter({.bits = 3, .step = 2, .target = 6, .bounds = 8, .wrap = true}));
    out.push_back(gen_counter({.bits = 3, .step = 3, .target = 7, .bounds = 10, .wrap = true}));
    out.push_back(gen_counter({.bits = 4, .step = 1, .target = 15, .bounds = 12, .wrap = true}));
    out.push_back(gen_counter({.bits = 4, .step = 1, .target = 9, .bounds = 12, .wrap = false}));
    out.push_back(gen_counter({.bits = 4, .step = 5, .target = 10, .bounds = 20, .wrap = true}));
    out.push_back(gen_counter({.bits = 1, .step = 1, .target = 1, .bounds = 4, .wrap = true}));
    out.push_back(gen_counter({.bits = 2, .step = 4, .target = 0, .bounds = 3, .wrap = true}));
    out.push_back(gen_counter({.bits = 2, .step = 4, .target = 1, .bounds = 3, .wrap = true}));
    out.push_back(gen_counter({.bits = 3, .step = 7, .target = 7, .bounds = 5, .wrap = false}));
    out.push_back(gen_counter({.bits = 4, .step = 3, .target = 2, .bounds = 16, .wrap = true}));
    out.push_back(gen_counter({.bits = 2, .step = 1, .target = 0, .bounds = 5, .wrap = true}));
    out.push_back(gen_pigeon({.holes = 4, .sat_bound = 2, .bounds = 4}));
    out.push_back(gen_pigeon({.holes = 5, .sat_bound = 3, .bounds = 5}));
    out.push_back(gen_pigeon({.holes = 6, .sat_bound = 6, .bounds = 6}));
    return out;
}

void write_expected(std::ostream& out, const std::vector<Verdict>& expected) {
    for (size_t k = 0; k < expected.size(); ++k)
        out << k << ' ' << (expected[k] == Verdict::Sat ? "sat" : "unsat") << '\n';
}

std::vector<Verdict> parse_expected(std::istream& in) {
    std::vector<Verdict> out;
    std::string word;
    size_t k;
    while (in >> k >> word) {
        if (k != out.size()) throw std::runtime_error("expected-verdict lines out of order");
        if (word == "sat")
            out.push_back(Verdict::Sat);
        else if (word == "unsat")
            out.push_back(Verdict::Unsat);
        else
            throw std::runtime_error("bad verdict '" + word + "'");
    }
    return out;
}

}  // namespace parbmc
