#include "parbmc/portfolio.hpp"

#include <chrono>
#include <cstdio>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <unordered_map>

namespace parbmc {

bool share_filter(const SharePolicy& policy, const BoundedClause& c, const ShareStats& stats) {
    switch (policy.kind) {
        case SharePolicy::Kind::None:
            return false;
        case SharePolicy::Kind::Full:
            return true;
        case SharePolicy::Kind::MaxLen:
            return (int64_t)c.lits.size() < (int64_t)policy.max_len;
        case SharePolicy::Kind::Adaptive:
            return stats.count > 0 && (uint64_t)c.lits.size() * stats.count <= stats.total_len;
    }
    return false;
}

StrategyConfig preset(std::string_view name, int threads) {
    StrategyConfig c;
    c.threads = threads;
    if (name == "conv") {
        c.strategy = Strategy::Conv;
        c.threads = 1;
        c.sharing.kind = SharePolicy::Kind::None;
    } else if (name == "multiconv-simple") {
        c.strategy = Strategy::MultiConv;
        c.sharing.kind = SharePolicy::Kind::None;
    } else if (name == "multiconv-full") {
        c.strategy = Strategy::MultiConv;
        c.sharing.kind = SharePolicy::Kind::Full;
    } else if (name == "multiconv-adaptive") {
        c.strategy = Strategy::MultiConv;
        c.sharing.kind = SharePolicy::Kind::Adaptive;
    } else if (name == "multiconv-tarmo") {
        c.strategy = Strategy::MultiConv;
        c.sharing.kind = SharePolicy::Kind::Adaptive;
        c.polarity_split = 1;
    } else if (name == "multibound-tarmo") {
        c.strategy = Strategy::MultiBound;
        c.sharing.kind = SharePolicy::Kind::Adaptive;
        c.polarity_split = 1;
    } else {
        throw std::invalid_argument("unknown preset");
    }
    return c;
}

void finalize_config(StrategyConfig& cfg) {
    if (cfg.strategy == Strategy::Conv) cfg.threads = 1;
    if (cfg.threads < 1) throw std::invalid_argument("threads must be >= 1");
    if (cfg.polarity_split < 0 || cfg.polarity_split > cfg.threads)
        throw std::invalid_argument("polarity_split outside [0, threads]");
    if (cfg.max_bound < 0) throw std::invalid_argument("max_bound must be >= 0");
    if (cfg.sharing.kind == SharePolicy::Kind::MaxLen && cfg.sharing.max_len < 1)
        throw std::invalid_argument("sharing length limit must be >= 1");
    uint64_t base = cfg.seeds.empty() ? 91648253ull : cfg.seeds[0];
    while ((int)cfg.seeds.size() < cfg.threads)
        cfg.seeds.push_back(splitmix64(base + 0x9e3779b97f4a7c15ull * (uint64_t)cfg.seeds.size()));
    cfg.seeds.resize((size_t)cfg.threads);
}

Bound next_bound(Strategy strategy, Bound finished, std::atomic<Bound>& max_started) {
    if (strategy == Strategy::MultiBound)
        return max_started.fetch_add(1, std::memory_order_relaxed) + 1;
    return finished + 1;
}

RunVerdict finalize_verdict(std::span<const BoundEvent> events, const VerdictSemantics& sem) {
    std::unordered_map<Bound, BoundOutcome> status;
    const BoundEvent* first_sat = nullptr;
    const BoundEvent* min_sat = nullptr;
    for (const BoundEvent& e : events) {
        auto [it, fresh] = status.emplace(e.bound, e.outcome);
        if (!fresh && it->second != e.outcome)
            throw InternalSoundnessError("bound " + std::to_string(e.bound) +
                                         " reported both satisfiable and unsatisfiable");
        if (e.outcome == BoundOutcome::Sat) {
            if (!first_sat) first_sat = &e;
            if (!min_sat || e.bound < min_sat->bound) min_sat = &e;
        }
    }
    RunVerdict v;
    if (sem.minimal_counterexample && min_sat) {
        for (Bound k = 0; k < min_sat->bound; ++k) {
            if (!status.contains(k)) {
                v.kind = RunVerdict::Kind::Inconclusive;
                v.reason = sem.inconclusive_reason;
                return v;
            }
        }
        v.kind = RunVerdict::Kind::CounterexampleFound;
        v.bound = min_sat->bound;
        v.model = min_sat->model;
        return v;
    }
    if (!sem.minimal_counterexample && first_sat) {
        v.kind = RunVerdict::Kind::CounterexampleFound;
        v.bound = first_sat->bound;
        v.model = first_sat->model;
        return v;
    }
    bool all = sem.horizon_last >= 0;
    for (Bound k = 0; all && k <= sem.horizon_last; ++k) all = status.contains(k);
    if (all) {
        v.kind = RunVerdict::Kind::NoCounterexampleUpTo;
        v.bound = sem.horizon_last;
        return v;
    }
    v.kind = RunVerdict::Kind::Inconclusive;
    v.reason = sem.inconclusive_reason;
    return v;
}

namespace {

using Clock = std::chrono::steady_clock;

struct ThreadCtx {
    int id = 0;
    std::atomic<bool> stop{false};
    std::atomic<Bound> sbnd{-1};
    Solver solver;
    ShareStats share_stats;
    std::vector<BoundedClause> local_stack;
    Bound loaded_to = -1;
    ThreadReport report;
};

struct RunState {
    const IcnfProblem* seq = nullptr;
    const StrategyConfig* cfg = nullptr;
    const PortfolioHooks* hooks = nullptr;
    SharedClauseDb* db = nullptr;
    Bound horizon = -1;
    Clock::time_point t0;
    std::vector<std::unique_ptr<ThreadCtx>> ctxs;
    std::atomic<Bound> max_started{-1};
    std::atomic<bool> done{false};

    std::mutex ev_m;
    std::vector<BoundEvent> events;
    std::unordered_map<Bound, BoundOutcome> status;
    bool sat_seen = false;
    Bound sat_min = -1;
    std::string stop_reason;

    double now() const { return std::chrono::duration<double>(Clock::now() - t0).count(); }

    void stop_all_locked(const char* reason) {
        if (stop_reason.empty() && reason) stop_reason = reason;
        done.store(true, std::memory_order_relaxed);
        for (auto& c : ctxs) c->stop.store(true, std::memory_order_relaxed);
    }

    void request_stop(const char* reason) {
        std::lock_guard g(ev_m);
        stop_all_locked(reason);
    }

    // Re-runs the termination conditions; call with ev_m held after any
    // status change.
    void check_completion_locked() {
        if (sat_seen && !cfg->minimal_counterexample) {
            stop_all_locked(nullptr);
            return;
        }
        if (sat_seen) {
            for (Bound k = 0; k < sat_min; ++k)
                if (!status.contains(k)) return;
            stop_all_locked(nullptr);
            return;
        }
        for (Bound k = 0; k <= horizon; ++k)
            if (!status.contains(k)) return;
        stop_all_locked(nullptr);
    }

    void record(int tid, Bound b, BoundOutcome oc, std::vector<bool> model) {
        std::lock_guard g(ev_m);
        auto [it, fresh] = status.emplace(b, oc);
        if (!fresh && it->second != oc)
            throw InternalSoundnessError("bound " + std::to_string(b) +
                                         " reported both satisfiable and unsatisfiable");
        if (fresh || oc == BoundOutcome::Sat)
            events.push_back(BoundEvent{now(), tid, b, oc, std::move(model)});
        if (oc == BoundOutcome::Sat) {
            if (!sat_seen || b < sat_min) {
                sat_seen = true;
                sat_min = b;
            }
            if (cfg->minimal_counterexample) {
                // Only work below the witness still matters.
                for (auto& c : ctxs)
                    if (c->sbnd.load(std::memory_order_relaxed) >= sat_min)
                        c->stop.store(true, std::memory_order_relaxed);
            }
        }
        check_completion_locked();
    }

    // A permanently unsatisfiable formula refutes every remaining bound at once.
    void record_unsat_from(int tid, Bound from) {
        std::lock_guard g(ev_m);
        for (Bound k = std::max<Bound>(from, 0); k <= horizon; ++k) {
            auto [it, fresh] = status.emplace(k, BoundOutcome::Unsat);
            if (!fresh && it->second != BoundOutcome::Unsat)
                throw InternalSoundnessError("bound " + std::to_string(k) +
                                             " reported both satisfiable and unsatisfiable");
            if (fresh) events.push_back(BoundEvent{now(), tid, k, BoundOutcome::Unsat, {}});
        }
        check_completion_locked();
    }
};

void verify_model(const RunState& st, Bound b, const std::vector<bool>& model) {
    auto lit_true = [&](Lit l) {
        int32_t v = l.var();
        bool val = v < (int32_t)model.size() ? model[(size_t)v] : false;
        return l.negative() ? !val : val;
    };
    for (const BoundedClause& c : st.seq->clauses) {
        if (c.cbnd > b) break;  // clauses are grouped by cbnd ascending
        bool sat = false;
        for (Lit l : c.lits) sat = sat || lit_true(l);
        if (!sat)
            throw InternalSoundnessError("model for bound " + std::to_string(b) +
                                         " violates a clause of bound " + std::to_string(c.cbnd));
    }
    for (Lit a : st.seq->cues[(size_t)b])
        if (!lit_true(a))
            throw InternalSoundnessError("model for bound " + std::to_string(b) +
                                         " violates its own assumption");
}

void sync_now(RunState& st, ThreadCtx& cx) {
    auto drained = cx.solver.drain_learned();
    for (auto& c : drained) {
        cx.share_stats.count++;
        cx.share_stats.total_len += c.lits.size();
        if (share_filter(st.cfg->sharing, c, cx.share_stats))
            cx.local_stack.push_back(std::move(c));
        else
            cx.report.filtered_out++;
    }
    Bound sbnd = std::max<Bound>(cx.sbnd.load(std::memory_order_relaxed), 0);
    auto received = st.db->sync((SharedClauseDb::ReaderId)cx.id, sbnd, cx.local_stack);
    cx.report.shared_out += cx.local_stack.size();
    if (st.hooks->on_share)
        for (const auto& c : cx.local_stack) st.hooks->on_share(cx.id, c);
    cx.local_stack.clear();
    for (const auto& c : received)
        if (c.cbnd > sbnd)
            throw InternalSoundnessError("sync delivered a clause above the solver bound");
    cx.report.received_in += received.size();
    if (!received.empty()) {
        cx.solver.import_clauses(received);
        if (st.hooks->on_import)
            for (const auto& c : received) st.hooks->on_import(cx.id, c);
    }
}

void thread_main(RunState& st, ThreadCtx& cx, Bound initial) {
    const StrategyConfig& cfg = *st.cfg;
    SolverConfig scfg;
    scfg.seed = cfg.seeds[(size_t)cx.id];
    scfg.polarity =
        cx.id >= cfg.threads - cfg.polarity_split ? Polarity::Positive : Polarity::Negative;
    cx.solver.configure(scfg);
    cx.solver.set_stop_flag(&cx.stop);
    cx.solver.set_restart_hook([&] { sync_now(st, cx); });
    cx.report.seed = scfg.seed;
    cx.report.polarity = scfg.polarity;
    cx.sbnd.store(std::min(initial, st.horizon), std::memory_order_relaxed);

    Bound k = initial;
    while (!cx.stop.load(std::memory_order_relaxed) && k <= st.horizon) {
        {
            std::lock_guard g(st.ev_m);
            if (st.sat_seen && cfg.minimal_counterexample && k >= st.sat_min) break;
        }
        cx.sbnd.store(k, std::memory_order_relaxed);
        while (cx.loaded_to < k) {
            ++cx.loaded_to;
            for (const auto& c : st.seq->segment(cx.loaded_to)) cx.solver.add_problem_clause(c);
        }
        sync_now(st, cx);
        if (st.hooks->on_bound_start) st.hooks->on_bound_start(cx.id, k);
        cx.report.last_bound = k;
        cx.report.bounds_attempted++;
        auto out = cx.solver.solve(std::span<const Lit>(st.seq->cues[(size_t)k]));
        if (out.status == SolveStatus::Interrupted) break;
        if (out.status == SolveStatus::Sat) {
            verify_model(st, k, out.model);
            st.record(cx.id, k, BoundOutcome::Sat, std::move(out.model));
            break;  // later bounds cannot improve on this thread's witness
        }
        st.record(cx.id, k, BoundOutcome::Unsat, {});
        if (cx.solver.permanently_unsat()) {
            st.record_unsat_from(cx.id, cx.solver.unsat_bound());
            break;
        }
        k = next_bound(cfg.strategy, k, st.max_started);
    }

    // Stay registered as a pure sharing participant until the whole run ends:
    // clauses keep flowing and the database can keep collecting.
    while (!st.done.load(std::memory_order_relaxed)) {
        sync_now(st, cx);
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
    sync_now(st, cx);  // final flush so nothing drained stays local
    cx.report.solver = cx.solver.stats();
}

}  // namespace

RunReport run_portfolio(const IcnfProblem& seq, const StrategyConfig& cfg_in,
                        const PortfolioHooks& hooks) {
    StrategyConfig cfg = cfg_in;
    finalize_config(cfg);
    if (seq.num_bounds() < 1) throw std::invalid_argument("sequence has no cue lines");

    SharedClauseDb own_db;
    RunState st;
    st.seq = &seq;
    st.cfg = &cfg;
    st.hooks = &hooks;
    st.db = hooks.db ? hooks.db : &own_db;
    st.horizon = std::min<Bound>(seq.num_bounds() - 1, cfg.max_bound);
    st.t0 = Clock::now();
    st.max_started.store(cfg.strategy == Strategy::MultiBound ? cfg.threads - 1 : 0);

    for (int i = 0; i < cfg.threads; ++i) {
        auto cx = std::make_unique<ThreadCtx>();
        cx->id = i;
        cx->report.thread_id = i;
        st.ctxs.push_back(std::move(cx));
    }
    for (int i = 0; i < cfg.threads; ++i) {
        Bound initial = cfg.strategy == Strategy::MultiBound ? (Bound)i : 0;
        st.db->register_reader((SharedClauseDb::ReaderId)i, std::min(initial, st.horizon));
    }

    std::exception_ptr first_error;
    std::mutex err_m;
    auto guarded = [&](ThreadCtx& cx, Bound initial) {
        try {
            thread_main(st, cx, initial);
        } catch (...) {
            {
                std::lock_guard g(err_m);
                if (!first_error) first_error = std::current_exception();
            }
            st.request_stop("internal error");
        }
    };

    std::vector<std::thread> threads;
    threads.reserve((size_t)cfg.threads);
    for (int i = 0; i < cfg.threads; ++i) {
        Bound initial = cfg.strategy == Strategy::MultiBound ? (Bound)i : 0;
        threads.emplace_back(guarded, std::ref(*st.ctxs[(size_t)i]), initial);
    }

    while (!st.done.load(std::memory_order_relaxed)) {
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
        if (cfg.time_limit_s > 0 && st.now() > cfg.time_limit_s) {
            st.request_stop("time limit reached");
            break;
        }
        if (hooks.external_stop && hooks.external_stop->load(std::memory_order_relaxed)) {
            st.request_stop("interrupted");
            break;
        }
    }
    for (auto& t : threads) t.join();
    for (int i = 0; i < cfg.threads; ++i) st.db->deregister_reader((SharedClauseDb::ReaderId)i);
    if (first_error) std::rethrow_exception(first_error);

    RunReport rep;
    rep.wall_s = st.now();
    rep.events = std::move(st.events);
    for (auto& cx : st.ctxs) rep.threads.push_back(cx->report);
    rep.db_pushed = st.db->total_pushed();
    rep.db_delivered = st.db->total_delivered();
    VerdictSemantics sem;
    sem.horizon_last = st.horizon;
    sem.minimal_counterexample = cfg.minimal_counterexample;
    if (!st.stop_reason.empty()) sem.inconclusive_reason = st.stop_reason;
    rep.verdict = finalize_verdict(rep.events, sem);
    return rep;
}

std::string stats_csv(const RunReport& report) {
    std::string out =
        "row,thread,seed,polarity,last_bound,bounds_attempted,conflicts,decisions,"
        "propagations,restarts,learned,learned_literals,shared_out,received_in,filtered_out,"
        "imported,import_skipped,verdict,bound,wall_s\n";
    char buf[512];
    uint64_t attempted = 0, conflicts = 0, decisions = 0, props = 0, restarts = 0;
    uint64_t learned = 0, lits = 0, shared = 0, recv = 0, filt = 0, imp = 0, skip = 0;
    Bound last = -1;
    for (const ThreadReport& t : report.threads) {
        snprintf(buf, sizeof buf,
                 "thread,%d,%llu,%s,%d,%llu,%llu,%llu,%llu,%llu,%llu,%llu,%llu,%llu,%llu,%llu,"
                 "%llu,,,\n",
                 t.thread_id, (unsigned long long)t.seed,
                 t.polarity == Polarity::Positive ? "pos" : "neg", t.last_bound,
                 (unsigned long long)t.bounds_attempted, (unsigned long long)t.solver.conflicts,
                 (unsigned long long)t.solver.decisions, (unsigned long long)t.solver.propagations,
                 (unsigned long long)t.solver.restarts, (unsigned long long)t.solver.learned,
                 (unsigned long long)t.solver.learned_literals, (unsigned long long)t.shared_out,
                 (unsigned long long)t.received_in, (unsigned long long)t.filtered_out,
                 (unsigned long long)t.solver.imported,
                 (unsigned long long)t.solver.import_skipped);
        out += buf;
        attempted += t.bounds_attempted;
        conflicts += t.solver.conflicts;
        decisions += t.solver.decisions;
        props += t.solver.propagations;
        restarts += t.solver.restarts;
        learned += t.solver.learned;
        lits += t.solver.learned_literals;
        shared += t.shared_out;
        recv += t.received_in;
        filt += t.filtered_out;
        imp += t.solver.imported;
        skip += t.solver.import_skipped;
        last = std::max(last, t.last_bound);
    }
    const char* verdict = report.verdict.kind == RunVerdict::Kind::CounterexampleFound ? "SAT"
                          : report.verdict.kind == RunVerdict::Kind::NoCounterexampleUpTo
                              ? "UNSAT"
                              : "INDET";
    snprintf(buf, sizeof buf,
             "total,%zu,,,%d,%llu,%llu,%llu,%llu,%llu,%llu,%llu,%llu,%llu,%llu,%llu,%llu,%s,%d,"
             "%.6f\n",
             report.threads.size(), last, (unsigned long long)attempted,
             (unsigned long long)conflicts, (unsigned long long)decisions,
             (unsigned long long)props, (unsigned long long)restarts, (unsigned long long)learned,
             (unsigned long long)lits, (unsigned long long)shared, (unsigned long long)recv,
             (unsigned long long)filt, (unsigned long long)imp, (unsigned long long)skip, verdict,
             report.verdict.bound, report.wall_s);
    out += buf;
    return out;
}

}  // namespace parbmc
