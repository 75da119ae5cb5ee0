#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <set>
#include <thread>

#include "oracles.hpp"
#include "parbmc/bench_gen.hpp"
#include "parbmc/portfolio.hpp"

using namespace parbmc;
using namespace parbmc::test;

namespace {

std::vector<Verdict> expected_up_to(const GeneratedInstance& inst, Bound horizon) {
    std::vector<Verdict> v(inst.expected.begin(), inst.expected.begin() + horizon + 1);
    return v;
}

// Earliest Sat bound, or -1.
Bound first_sat(const std::vector<Verdict>& exp) {
    for (size_t k = 0; k < exp.size(); ++k)
        if (exp[k] == Verdict::Sat) return (Bound)k;
    return -1;
}

void check_against_expected(const GeneratedInstance& inst, const RunReport& rep,
                            const StrategyConfig& cfg) {
    Bound horizon = std::min<Bound>(inst.problem.num_bounds() - 1, cfg.max_bound);
    auto exp = expected_up_to(inst, horizon);
    Bound sat = first_sat(exp);
    if (sat < 0) {
        REQUIRE(rep.verdict.kind == RunVerdict::Kind::NoCounterexampleUpTo);
        CHECK(rep.verdict.bound == horizon);
    } else {
        REQUIRE(rep.verdict.kind == RunVerdict::Kind::CounterexampleFound);
        REQUIRE(rep.verdict.bound >= 0);
        CHECK(exp[(size_t)rep.verdict.bound] == Verdict::Sat);
        if (cfg.minimal_counterexample || cfg.strategy != Strategy::MultiBound)
            CHECK(rep.verdict.bound == sat);
        CHECK(model_satisfies(up_to_bound(inst.problem.clauses, rep.verdict.bound),
                              rep.verdict.model));
    }
    // Every recorded event must agree with the oracle.
    for (const auto& e : rep.events) {
        REQUIRE(e.bound >= 0);
        REQUIRE(e.bound <= horizon);
        CHECK((e.outcome == BoundOutcome::Sat) == (exp[(size_t)e.bound] == Verdict::Sat));
    }
}

}  // namespace

TEST_CASE("share_filter implements all four policies") {
    BoundedClause len3{{Lit(1), Lit(2), Lit(3)}, 0};
    ShareStats st{.count = 1, .total_len = 3};
    CHECK_FALSE(share_filter({SharePolicy::Kind::None}, len3, st));
    CHECK(share_filter({SharePolicy::Kind::Full}, len3, st));
    CHECK(share_filter({SharePolicy::Kind::MaxLen, 4}, len3, st));
    CHECK_FALSE(share_filter({SharePolicy::Kind::MaxLen, 3}, len3, st));  // strict
}

TEST_CASE("adaptive filter sits exactly on the running average boundary") {
    SharePolicy adaptive{SharePolicy::Kind::Adaptive};
    // History [2,4,6]; candidate of length 4 makes the average exactly 4.
    ShareStats st{.count = 4, .total_len = 16};
    BoundedClause len4{{Lit(1), Lit(2), Lit(3), Lit(4)}, 0};
    CHECK(share_filter(adaptive, len4, st));
    // Candidate of length 5: history [2,4,6,5], 5*4 = 20 > 17.
    ShareStats st5{.count = 4, .total_len = 17};
    BoundedClause len5{{Lit(1), Lit(2), Lit(3), Lit(4), Lit(5)}, 0};
    CHECK_FALSE(share_filter(adaptive, len5, st5));
    // Exact integer arithmetic: no drift on values a double would round.
    ShareStats big{.count = 3, .total_len = 10};
    BoundedClause len3{{Lit(1), Lit(2), Lit(3)}, 0};
    CHECK(share_filter(adaptive, len3, big));  // 9 <= 10
    ShareStats big2{.count = 3, .total_len = 8};
    CHECK_FALSE(share_filter(adaptive, len3, big2));  // 9 > 8
}

TEST_CASE("presets expand to the documented configurations") {
    auto simple = preset("multiconv-simple", 4);
    CHECK(simple.strategy == Strategy::MultiConv);
    CHECK(simple.sharing.kind == SharePolicy::Kind::None);
    CHECK(simple.threads == 4);
    CHECK(simple.polarity_split == 0);

    auto full = preset("multiconv-full", 4);
    CHECK(full.sharing.kind == SharePolicy::Kind::Full);

    auto adaptive = preset("multiconv-adaptive", 4);
    CHECK(adaptive.sharing.kind == SharePolicy::Kind::Adaptive);
    CHECK(adaptive.polarity_split == 0);

    auto tarmo = preset("multiconv-tarmo", 4);
    CHECK(tarmo.strategy == Strategy::MultiConv);
    CHECK(tarmo.sharing.kind == SharePolicy::Kind::Adaptive);
    CHECK(tarmo.polarity_split == 1);

    auto mb = preset("multibound-tarmo", 4);
    CHECK(mb.strategy == Strategy::MultiBound);
    CHECK(mb.sharing.kind == SharePolicy::Kind::Adaptive);
    CHECK(mb.polarity_split == 1);

    auto conv = preset("conv", 4);
    CHECK(conv.strategy == Strategy::Conv);
    CHECK(conv.threads == 1);

    CHECK_THROWS_AS(preset("multiconv-best"), std::invalid_argument);
}

TEST_CASE("finalize_config pins CONV to one thread and derives seeds") {
    StrategyConfig c;
    c.strategy = Strategy::Conv;
    c.threads = 8;
    finalize_config(c);
    CHECK(c.threads == 1);
    CHECK(c.seeds.size() == 1);

    StrategyConfig m;
    m.strategy = Strategy::MultiConv;
    m.threads = 4;
    m.seeds = {7};
    finalize_config(m);
    REQUIRE(m.seeds.size() == 4);
    CHECK(m.seeds[0] == 7);
    std::set<uint64_t> uniq(m.seeds.begin(), m.seeds.end());
    CHECK(uniq.size() == 4);

    StrategyConfig bad;
    bad.strategy = Strategy::MultiConv;
    bad.threads = 0;
    CHECK_THROWS_AS(finalize_config(bad), std::invalid_argument);
    bad = {};
    bad.polarity_split = 2;
    CHECK_THROWS_AS(finalize_config(bad), std::invalid_argument);
    bad = {};
    bad.max_bound = -1;
    CHECK_THROWS_AS(finalize_config(bad), std::invalid_argument);
}

TEST_CASE("next_bound hands out fresh bounds atomically under MULTIBOUND") {
    std::atomic<Bound> max_started{3};
    CHECK(next_bound(Strategy::MultiConv, 7, max_started) == 8);
    CHECK(next_bound(Strategy::Conv, 0, max_started) == 1);
    CHECK(max_started.load() == 3);
    CHECK(next_bound(Strategy::MultiBound, 1, max_started) == 4);
    CHECK(max_started.load() == 4);

    max_started.store(-1);
    std::vector<std::thread> ts;
    std::vector<std::vector<Bound>> got(8);
    for (int t = 0; t < 8; ++t)
        ts.emplace_back([&, t] {
            for (int i = 0; i < 500; ++i)
                got[(size_t)t].push_back(next_bound(Strategy::MultiBound, 0, max_started));
        });
    for (auto& t : ts) t.join();
    std::set<Bound> all;
    for (auto& v : got)
        for (Bound b : v) CHECK(all.insert(b).second);
    CHECK(all.size() == 4000);
    CHECK(*all.rbegin() == 3999);
}

TEST_CASE("finalize_verdict aggregates scripted event timelines") {
    VerdictSemantics sem;
    sem.horizon_last = 20;

    SUBCASE("unsat prefix then sat") {
        std::vector<BoundEvent> ev{
            {0.1, 0, 0, BoundOutcome::Unsat, {}},
            {0.2, 0, 1, BoundOutcome::Unsat, {}},
            {0.3, 0, 2, BoundOutcome::Sat, {false, true}},
        };
        auto v = finalize_verdict(ev, sem);
        CHECK(v.kind == RunVerdict::Kind::CounterexampleFound);
        CHECK(v.bound == 2);
        CHECK(v.model == std::vector<bool>{false, true});
    }
    SUBCASE("all bounds refuted") {
        std::vector<BoundEvent> ev;
        for (Bound k = 0; k <= 20; ++k) ev.push_back({0.0, 0, k, BoundOutcome::Unsat, {}});
        auto v = finalize_verdict(ev, sem);
        CHECK(v.kind == RunVerdict::Kind::NoCounterexampleUpTo);
        CHECK(v.bound == 20);
    }
    SUBCASE("a hole leaves the run inconclusive") {
        std::vector<BoundEvent> ev;
        for (Bound k = 0; k <= 20; ++k)
            if (k != 13) ev.push_back({0.0, 0, k, BoundOutcome::Unsat, {}});
        auto v = finalize_verdict(ev, sem);
        CHECK(v.kind == RunVerdict::Kind::Inconclusive);
    }
    SUBCASE("minimal semantics wait for the bounds below the witness") {
        sem.minimal_counterexample = true;
        std::vector<BoundEvent> ev{{1.0, 2, 3, BoundOutcome::Sat, {true}}};
        CHECK(finalize_verdict(ev, sem).kind == RunVerdict::Kind::Inconclusive);
        ev.push_back({1.1, 0, 0, BoundOutcome::Unsat, {}});
        ev.push_back({1.2, 1, 1, BoundOutcome::Unsat, {}});
        ev.push_back({1.3, 0, 2, BoundOutcome::Unsat, {}});
        auto v = finalize_verdict(ev, sem);
        CHECK(v.kind == RunVerdict::Kind::CounterexampleFound);
        CHECK(v.bound == 3);
    }
    SUBCASE("minimal semantics prefer the smaller of two witnesses") {
        sem.minimal_counterexample = true;
        std::vector<BoundEvent> ev{
            {1.0, 2, 5, BoundOutcome::Sat, {true}},
            {1.5, 1, 2, BoundOutcome::Sat, {false}},
            {1.6, 0, 0, BoundOutcome::Unsat, {}},
            {1.7, 0, 1, BoundOutcome::Unsat, {}},
        };
        auto v = finalize_verdict(ev, sem);
        CHECK(v.bound == 2);
        CHECK(v.model == std::vector<bool>{false});
    }
    SUBCASE("default semantics take the first sat event in arrival order") {
        std::vector<BoundEvent> ev{
            {1.0, 2, 5, BoundOutcome::Sat, {true}},
            {1.5, 1, 2, BoundOutcome::Sat, {false}},
        };
        auto v = finalize_verdict(ev, sem);
        CHECK(v.bound == 5);
    }
    SUBCASE("contradictory events are a soundness failure") {
        std::vector<BoundEvent> ev{
            {0.1, 0, 4, BoundOutcome::Unsat, {}},
            {0.2, 1, 4, BoundOutcome::Sat, {true}},
        };
        CHECK_THROWS_AS(finalize_verdict(ev, sem), InternalSoundnessError);
    }
    SUBCASE("no events at all") {
        auto v = finalize_verdict({}, sem);
        CHECK(v.kind == RunVerdict::Kind::Inconclusive);
        sem.horizon_last = -1;
        CHECK(finalize_verdict({}, sem).kind == RunVerdict::Kind::Inconclusive);
    }
}

TEST_CASE("CONV reproduces the oracle on a counter with a reachable target") {
    auto inst = gen_counter({.bits = 3, .step = 1, .target = 5, .bounds = 10, .wrap = false});
    auto cfg = preset("conv");
    auto rep = run_portfolio(inst.problem, cfg);
    REQUIRE(rep.verdict.kind == RunVerdict::Kind::CounterexampleFound);
    CHECK(rep.verdict.bound == 5);
    check_against_expected(inst, rep, cfg);
    // Bounds 0..4 each refuted before the witness.
    std::set<Bound> unsat_bounds;
    for (auto& e : rep.events)
        if (e.outcome == BoundOutcome::Unsat) unsat_bounds.insert(e.bound);
    CHECK(unsat_bounds == std::set<Bound>{0, 1, 2, 3, 4});
    CHECK(rep.threads.size() == 1);
    CHECK(rep.threads[0].bounds_attempted == 6);
}

TEST_CASE("an unreachable target is refuted up to the bound cap on every strategy") {
    auto inst = gen_counter({.bits = 3, .step = 2, .target = 3, .bounds = 21, .wrap = true});
    for (const char* name : {"conv", "multiconv-simple", "multiconv-full", "multiconv-adaptive",
                             "multiconv-tarmo", "multibound-tarmo"}) {
        CAPTURE(name);
        auto cfg = preset(name, 3);
        cfg.max_bound = 20;
        auto rep = run_portfolio(inst.problem, cfg);
        REQUIRE(rep.verdict.kind == RunVerdict::Kind::NoCounterexampleUpTo);
        CHECK(rep.verdict.bound == 20);
    }
}

TEST_CASE("every strategy and sharing policy agrees with the oracle on the smoke suite") {
    auto suite = gen_suite("smoke");
    std::vector<StrategyConfig> cfgs;
    cfgs.push_back(preset("conv"));
    cfgs.push_back(preset("multiconv-simple", 2));
    cfgs.push_back(preset("multiconv-full", 3));
    cfgs.push_back(preset("multiconv-tarmo", 2));
    cfgs.push_back(preset("multibound-tarmo", 3));
    {
        StrategyConfig len;
        len.strategy = Strategy::MultiConv;
        len.threads = 2;
        len.sharing = {SharePolicy::Kind::MaxLen, 5};
        cfgs.push_back(len);
    }
    for (const auto& inst : suite) {
        for (auto cfg : cfgs) {
            CAPTURE(inst.name);
            CAPTURE((int)cfg.strategy);
            CAPTURE((int)cfg.sharing.kind);
            auto rep = run_portfolio(inst.problem, cfg);
            check_against_expected(inst, rep, cfg);
        }
    }
}

TEST_CASE("minimal mode reports the smallest satisfiable bound under MULTIBOUND") {
    // Satisfiable at bounds 2 and 6: a MULTIBOUND thread may hit 6 first.
    auto inst = gen_counter({.bits = 2, .step = 1, .target = 2, .bounds = 8, .wrap = true});
    REQUIRE(inst.expected[2] == Verdict::Sat);
    REQUIRE(inst.expected[6] == Verdict::Sat);
    for (uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
        auto cfg = preset("multibound-tarmo", 4);
        cfg.minimal_counterexample = true;
        cfg.seeds = {seed};
        auto rep = run_portfolio(inst.problem, cfg);
        REQUIRE(rep.verdict.kind == RunVerdict::Kind::CounterexampleFound);
        CHECK(rep.verdict.bound == 2);
    }
}

TEST_CASE("sharing traffic flows and every shared clause is implied at its bound") {
    auto inst = gen_pigeon({.holes = 5, .sat_bound = 3, .bounds = 5});
    auto cfg = preset("multiconv-full", 2);
    std::mutex m;
    std::vector<BoundedClause> shared;
    uint64_t imported = 0;
    PortfolioHooks hooks;
    hooks.on_share = [&](int, const BoundedClause& c) {
        std::lock_guard g(m);
        shared.push_back(c);
    };
    hooks.on_import = [&](int, const BoundedClause&) {
        std::lock_guard g(m);
        ++imported;
    };
    auto rep = run_portfolio(inst.problem, cfg);
    check_against_expected(inst, rep, cfg);

    rep = run_portfolio(inst.problem, cfg, hooks);
    check_against_expected(inst, rep, cfg);
    CHECK(shared.size() > 50);
    CHECK(imported > 0);
    CHECK(rep.db_pushed >= shared.size());

    // Refutation oracle on a sample: a fresh solver must prove
    // slice(cbnd) together with the negated clause unsatisfiable.
    size_t stride = std::max<size_t>(1, shared.size() / 60);
    size_t checked = 0;
    for (size_t i = 0; i < shared.size(); i += stride) {
        const auto& c = shared[i];
        Solver fresh;
        for (const auto& pc : inst.problem.clauses)
            if (pc.cbnd <= c.cbnd) fresh.add_problem_clause(pc);
        for (Lit l : c.lits) fresh.add_problem_clause(BoundedClause{{-l}, c.cbnd});
        CHECK(fresh.solve({}).status == SolveStatus::Unsat);
        ++checked;
    }
    CHECK(checked > 10);
}

TEST_CASE("shared clauses on a brute-forceable instance are implied at their bound") {
    auto inst = gen_pigeon({.holes = 2, .sat_bound = 2, .bounds = 3});
    REQUIRE(inst.problem.max_var <= 24);
    std::mutex m;
    std::vector<BoundedClause> shared;
    PortfolioHooks hooks;
    hooks.on_share = [&](int, const BoundedClause& c) {
        std::lock_guard g(m);
        shared.push_back(c);
    };
    auto cfg = preset("multiconv-full", 2);
    for (uint64_t seed = 1; shared.empty() && seed <= 8; ++seed) {
        cfg.seeds = {seed, seed + 100};
        run_portfolio(inst.problem, cfg, hooks);
    }
    for (const auto& c : shared)
        CHECK(implied_by(up_to_bound(inst.problem.clauses, c.cbnd), c.lits, inst.problem.max_var));
}

TEST_CASE("sharing policy none shares nothing") {
    auto inst = gen_pigeon({.holes = 4, .sat_bound = 2, .bounds = 4});
    auto cfg = preset("multiconv-simple", 2);
    auto rep = run_portfolio(inst.problem, cfg);
    check_against_expected(inst, rep, cfg);
    CHECK(rep.db_pushed == 0);
    for (auto& t : rep.threads) {
        CHECK(t.shared_out == 0);
        CHECK(t.received_in == 0);
    }
}

TEST_CASE("an external stop flag yields an inconclusive verdict") {
    auto inst = gen_pigeon({.holes = 7, .sat_bound = 6, .bounds = 6});
    std::atomic<bool> stop{true};  // raised before the run even starts
    PortfolioHooks hooks;
    hooks.external_stop = &stop;
    auto cfg = preset("multiconv-full", 2);
    auto rep = run_portfolio(inst.problem, cfg, hooks);
    CHECK(rep.verdict.kind == RunVerdict::Kind::Inconclusive);
    CHECK(rep.verdict.reason == "interrupted");
}

TEST_CASE("a time limit yields an inconclusive verdict") {
    auto inst = gen_pigeon({.holes = 9, .sat_bound = 9, .bounds = 9});
    auto cfg = preset("conv");
    cfg.time_limit_s = 0.05;
    auto rep = run_portfolio(inst.problem, cfg);
    CHECK(rep.verdict.kind == RunVerdict::Kind::Inconclusive);
    CHECK(rep.verdict.reason == "time limit reached");
    CHECK(rep.wall_s < 5.0);
}

TEST_CASE("stats csv has one row per thread, a total row, and wall time last") {
    auto inst = gen_counter({.bits = 2, .step = 1, .target = 3, .bounds = 6, .wrap = true});
    auto cfg = preset("multiconv-full", 3);
    auto rep = run_portfolio(inst.problem, cfg);
    auto csv = stats_csv(rep);
    std::vector<std::string> lines;
    size_t pos = 0;
    while (pos < csv.size()) {
        size_t nl = csv.find('\n', pos);
        lines.push_back(csv.substr(pos, nl - pos));
        pos = nl + 1;
    }
    REQUIRE(lines.size() == 5);  // header + 3 threads + total
    CHECK(lines[0].starts_with("row,thread,"));
    CHECK(lines[0].ends_with(",wall_s"));
    CHECK(lines[1].starts_with("thread,0,"));
    CHECK(lines[4].starts_with("total,3,"));
    size_t header_cols = (size_t)std::count(lines[0].begin(), lines[0].end(), ',');
    for (auto& l : lines) CHECK((size_t)std::count(l.begin(), l.end(), ',') == header_cols);
}

TEST_CASE("identical seeds give identical reports, different seeds may differ") {
    auto inst = gen_pigeon({.holes = 5, .sat_bound = 3, .bounds = 5});
    auto cfg = preset("conv");
    cfg.seeds = {123};
    auto a = run_portfolio(inst.problem, cfg);
    auto b = run_portfolio(inst.problem, cfg);
    CHECK(a.threads[0].solver.conflicts == b.threads[0].solver.conflicts);
    CHECK(a.threads[0].solver.decisions == b.threads[0].solver.decisions);
    CHECK(a.verdict.kind == b.verdict.kind);
    CHECK(a.verdict.bound == b.verdict.bound);
    CHECK(a.verdict.model == b.verdict.model);
    // The CSV minus the wall-time column is byte-identical.
    auto strip_wall = [](std::string csv) {
        std::string out;
        size_t pos = 0;
        while (pos < csv.size()) {
            size_t nl = csv.find('\n', pos);
            std::string line = csv.substr(pos, nl - pos);
            out += line.substr(0, line.rfind(','));
            out += '\n';
            pos = nl + 1;
        }
        return out;
    };
    CHECK(strip_wall(stats_csv(a)) == strip_wall(stats_csv(b)));
}

TEST_CASE("a sequence without cues is rejected") {
    IcnfProblem p;
    p.clauses.push_back(BoundedClause{{Lit(1)}, 0});
    CHECK_THROWS_AS(run_portfolio(p, preset("conv")), std::invalid_argument);
}
