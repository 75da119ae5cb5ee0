#include "parbmc/icnf.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace parbmc {

std::span<const BoundedClause> IcnfProblem::segment(Bound k) const {
    auto lo = std::lower_bound(clauses.begin(), clauses.end(), k,
                               [](const BoundedClause& c, Bound b) { return c.cbnd < b; });
    auto hi = std::upper_bound(clauses.begin(), clauses.end(), k,
                               [](Bound b, const BoundedClause& c) { return b < c.cbnd; });
    return {lo, hi};
}

namespace {

std::vector<std::string_view> tokenize(std::string_view line) {
    std::vector<std::string_view> out;
    size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

int32_t parse_int(std::string_view tok, int lineno) {
    int32_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
        throw IcnfParseError(lineno, "bad literal '" + std::string(tok) + "'");
    return v;
}

// Literal tokens must end in a lone terminating 0.
std::vector<Lit> parse_lits(std::span<const std::string_view> toks, int lineno) {
    std::vector<Lit> lits;
    bool terminated = false;
    for (size_t i = 0; i < toks.size(); ++i) {
        int32_t v = parse_int(toks[i], lineno);
        if (v == 0) {
            if (i + 1 != toks.size()) throw IcnfParseError(lineno, "literals after the terminating 0");
            terminated = true;
        } else {
            if (v == INT32_MIN) throw IcnfParseError(lineno, "literal out of range");
            lits.push_back(Lit(v));
        }
    }
    if (!terminated) throw IcnfParseError(lineno, "missing terminating 0");
    return lits;
}

}  // namespace

IcnfProblem parse_icnf(std::istream& in) {
    IcnfProblem p;
    std::string raw;
    int lineno = 0;
    bool header_seen = false;
    auto note_vars = [&](const std::vector<Lit>& lits) {
        for (Lit l : lits) p.max_var = std::max(p.max_var, l.var());
    };
    while (std::getline(in, raw)) {
        ++lineno;
        std::string_view line = raw;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        auto toks = tokenize(line);
        if (toks.empty()) continue;
        if (toks[0] == "c") {
            if (toks.size() == 3 && toks[1] == "vars") {
                int32_t n = parse_int(toks[2], lineno);
                if (n < 0) throw IcnfParseError(lineno, "negative variable count");
                p.declared_vars = n;
            }
            continue;
        }
        if (toks[0] == "p") {
            if (header_seen) throw IcnfParseError(lineno, "duplicate header");
            if (toks.size() != 2 || toks[1] != "inccnf")
                throw IcnfParseError(lineno, "expected 'p inccnf'");
            header_seen = true;
            continue;
        }
        if (!header_seen) throw IcnfParseError(lineno, "content before 'p inccnf' header");
        if (toks[0] == "a") {
            auto lits = parse_lits(std::span(toks).subspan(1), lineno);
            note_vars(lits);
            p.cues.push_back(std::move(lits));
            continue;
        }
        auto lits = parse_lits(toks, lineno);
        note_vars(lits);
        p.clauses.push_back(BoundedClause{std::move(lits), (Bound)p.cues.size()});
    }
    if (!header_seen) throw IcnfParseError(lineno, "missing 'p inccnf' header");
    p.trailing_clauses =
        !p.cues.empty() && !p.clauses.empty() && p.clauses.back().cbnd == (Bound)p.cues.size();
    return p;
}

IcnfProblem parse_icnf_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return parse_icnf(in);
}

void write_icnf(std::ostream& out, const IcnfProblem& p) {
    out << "p inccnf\n";
    if (p.declared_vars > 0) out << "c vars " << p.declared_vars << "\n";
    auto emit = [&out](const std::vector<Lit>& lits) {
        for (Lit l : lits) out << l.code << ' ';
        out << "0\n";
    };
    for (Bound k = 0; k <= (Bound)p.cues.size(); ++k) {
        for (const BoundedClause& c : p.segment(k)) emit(c.lits);
        if (k < (Bound)p.cues.size()) {
            out << "a ";
            emit(p.cues[(size_t)k]);
        }
    }
}

void write_icnf_file(const std::string& path, const IcnfProblem& p) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    write_icnf(out, p);
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace parbmc
