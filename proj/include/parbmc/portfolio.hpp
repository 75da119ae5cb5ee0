#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "parbmc/icnf.hpp"
#include "parbmc/shared_db.hpp"
#include "parbmc/solver.hpp"
#include "parbmc/types.hpp"

namespace parbmc {

enum class Strategy {
    Conv,        // one thread walking bounds 0,1,2,...
    MultiConv,   // every thread walks all bounds, diversified by seed/polarity
    MultiBound,  // threads own disjoint bounds, taking the smallest unstarted one
};

struct SharePolicy {
    enum class Kind { None, Full, MaxLen, Adaptive };
    Kind kind = Kind::Full;
    int max_len = 8;  // MaxLen only
};

// Running totals over every clause this thread ever learned, shared or not.
struct ShareStats {
    uint64_t count = 0;
    uint64_t total_len = 0;
};

// none: nothing. full: everything. max_len: strictly shorter than the limit.
// adaptive: no longer than the running average, in exact integer arithmetic
// (len * count <= total). The stats must already include the candidate.
bool share_filter(const SharePolicy& policy, const BoundedClause& c, const ShareStats& stats);

struct StrategyConfig {
    Strategy strategy = Strategy::Conv;
    int threads = 1;
    SharePolicy sharing{};
    int polarity_split = 0;       // trailing threads that branch positive first
    std::vector<uint64_t> seeds;  // per thread; missing entries are derived
    Bound max_bound = 500;
    bool minimal_counterexample = false;
    double time_limit_s = 0.0;  // <= 0 means none
};

// Named configurations from the experiment families; `threads` fills in N.
//   conv, multiconv-simple (no sharing), multiconv-full, multiconv-adaptive,
//   multiconv-tarmo (adaptive + one positive-polarity thread),
//   multibound-tarmo. Throws std::invalid_argument on unknown names.
StrategyConfig preset(std::string_view name, int threads = 4);

// Normalizes and validates: CONV pins threads to 1, seeds are extended to one
// per thread, ranges are checked. Throws std::invalid_argument.
void finalize_config(StrategyConfig& cfg);

enum class BoundOutcome { Sat, Unsat };

struct BoundEvent {
    double t_s = 0.0;  // seconds since run start
    int thread_id = 0;
    Bound bound = 0;
    BoundOutcome outcome = BoundOutcome::Unsat;
    std::vector<bool> model;  // Sat events only
};

struct RunVerdict {
    enum class Kind { CounterexampleFound, NoCounterexampleUpTo, Inconclusive };
    Kind kind = Kind::Inconclusive;
    Bound bound = -1;         // witness bound, or highest refuted bound
    std::vector<bool> model;  // CounterexampleFound only
    std::string reason;       // Inconclusive only
    friend bool operator==(const RunVerdict&, const RunVerdict&) = default;
};

struct VerdictSemantics {
    Bound horizon_last = -1;  // highest bound the run was asked to decide
    bool minimal_counterexample = false;
    std::string inconclusive_reason = "bounds left unresolved";
};

// Deterministic aggregation of the event timeline. Default semantics report
// the first Sat seen; minimal_counterexample reports the smallest Sat bound
// and only once every bound below it is refuted. The same bound appearing
// with both outcomes is a soundness bug: throws InternalSoundnessError.
RunVerdict finalize_verdict(std::span<const BoundEvent> events, const VerdictSemantics& sem);

// MULTIBOUND hands out the smallest bound no thread has started, atomically;
// the other strategies move one past the bound just finished.
Bound next_bound(Strategy strategy, Bound finished, std::atomic<Bound>& max_started);

struct ThreadReport {
    int thread_id = 0;
    uint64_t seed = 0;
    Polarity polarity = Polarity::Negative;
    Bound last_bound = -1;
    uint64_t bounds_attempted = 0;
    uint64_t shared_out = 0;   // clauses pushed to the database
    uint64_t received_in = 0;  // clauses handed back by sync
    uint64_t filtered_out = 0;  // drained but withheld by the policy
    SolverStats solver;
};

struct RunReport {
    RunVerdict verdict;
    double wall_s = 0.0;
    std::vector<ThreadReport> threads;
    std::vector<BoundEvent> events;
    uint64_t db_pushed = 0;
    uint64_t db_delivered = 0;
};

struct PortfolioHooks {
    // Fires after a thread loaded segments up to sbnd and synchronized, just
    // before solving that bound. Distributed workers key global syncs off it.
    std::function<void(int thread_id, Bound sbnd)> on_bound_start;
    std::function<void(int thread_id, const BoundedClause&)> on_share;
    std::function<void(int thread_id, const BoundedClause&)> on_import;
    const std::atomic<bool>* external_stop = nullptr;
    // Externally owned database (distributed workers register the uplink
    // reader in it). Internal when null.
    SharedClauseDb* db = nullptr;
};

// Runs the whole portfolio to a verdict. The sequence needs at least one cue;
// bounds beyond min(#cues - 1, cfg.max_bound) are not attempted.
RunReport run_portfolio(const IcnfProblem& seq, const StrategyConfig& cfg,
                        const PortfolioHooks& hooks = {});

// One row per thread plus a total row; wall-clock seconds is the last column
// so byte-level determinism checks can strip it.
std::string stats_csv(const RunReport& report);

}  // namespace parbmc
