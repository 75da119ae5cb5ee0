#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <span>
#include <unordered_set>
#include <vector>

#include "parbmc/types.hpp"

namespace parbmc {

enum class Polarity { Negative, Positive };

struct RestartPolicy {
    int initial_conflicts = 100;
    double growth = 1.5;
};

struct SolverConfig {
    uint64_t seed = 91648253;
    Polarity polarity = Polarity::Negative;
    RestartPolicy restart;
    double var_decay = 0.95;
    double clause_decay = 0.999;
    double random_branch_freq = 0.02;
};

enum class SolveStatus { Sat, Unsat, Interrupted };

struct SolveOutcome {
    SolveStatus status = SolveStatus::Interrupted;
    // Total assignment over variables 1..num_vars (index 0 unused), present iff Sat.
    // Variables the search never touched default to false.
    std::vector<bool> model;
    // Set when Unsat was returned without search because the assumptions
    // contained a complementary pair.
    bool assumptions_inconsistent = false;
};

struct SolverStats {
    uint64_t conflicts = 0;
    uint64_t decisions = 0;
    uint64_t propagations = 0;
    uint64_t restarts = 0;
    uint64_t learned = 0;          // clauses produced by conflict analysis (incl. units)
    uint64_t learned_literals = 0;
    uint64_t imported = 0;         // foreign clauses accepted by import_clauses
    uint64_t import_skipped = 0;   // duplicates / satisfied-at-root clauses
};

// Conflict-driven clause-learning SAT solver with incremental solving under
// assumptions. Clauses carry a bound index; conflict analysis propagates the
// maximum bound over every clause that participates in a derivation, so any
// learned clause with bound b is implied by the problem clauses of bound b
// alone.
//
// A solver instance is single-threaded; cross-thread clause traffic goes
// through drain_learned / import_clauses.
class Solver {
  public:
    Solver();
    ~Solver();
    Solver(const Solver&) = delete;
    Solver& operator=(const Solver&) = delete;

    // Full reconfiguration is only allowed before the first solve; afterwards
    // only seed and polarity may change. Throws std::invalid_argument on
    // out-of-range values, std::logic_error on a late change of anything else.
    void configure(const SolverConfig& cfg);
    const SolverConfig& config() const { return cfg_; }

    // Declares variables 1..v. Adding clauses or assumptions auto-declares.
    void ensure_var(int32_t v);
    int32_t num_vars() const { return (int32_t)assigns_.size(); }

    // The clause becomes permanent. Duplicate literals are merged, tautologies
    // dropped. An empty clause puts the solver into a permanently-Unsat state.
    void add_problem_clause(const BoundedClause& clause);

    SolveOutcome solve(std::span<const Lit> assumptions);
    SolveOutcome solve(std::initializer_list<Lit> assumptions) {
        return solve(std::span<const Lit>(assumptions.begin(), assumptions.end()));
    }

    // Returns every clause learned since the previous drain, each annotated
    // with the maximum bound over its derivation. Clauses awaiting a drain are
    // protected from learned-clause deletion.
    std::vector<BoundedClause> drain_learned();

    // Enters foreign clauses into the (deletable) learned database. Unknown
    // variables are auto-declared; duplicates are skipped. Must not be called
    // mid-solve; the restart hook is a safe point. Returns the number of
    // clauses actually entered.
    int import_clauses(std::span<const BoundedClause> clauses);

    // True once the problem clauses alone are contradictory. unsat_bound() is
    // a bound whose formula already derives the empty clause: every bound >=
    // it is Unsat regardless of assumptions.
    bool permanently_unsat() const { return !ok_; }
    Bound unsat_bound() const { return unsat_bound_; }

    // Invoked at every restart, with the trail backtracked to the root level.
    // Importing clauses from inside the hook is allowed.
    void set_restart_hook(std::function<void()> hook) { restart_hook_ = std::move(hook); }

    // Polled during search; when it reads true the current solve returns
    // Interrupted at the next conflict/decision boundary.
    void set_stop_flag(const std::atomic<bool>* stop) { stop_ = stop; }

    const SolverStats& stats() const { return stats_; }

  private:
    // Internal literal encoding: var*2 + sign, vars 0-based.
    using ILit = int32_t;
    using CRef = uint32_t;
    static constexpr CRef kCRefUndef = UINT32_MAX;
    enum : uint8_t { kTrue = 0, kFalse = 1, kUndef = 2 };

    static ILit ilit(Lit l) { return (l.var() - 1) * 2 + (l.negative() ? 1 : 0); }
    static Lit elit(ILit p) { return Lit((p & 1) ? -(p / 2 + 1) : (p / 2 + 1)); }
    static int32_t ivar(ILit p) { return p >> 1; }
    static ILit neg(ILit p) { return p ^ 1; }
    static ILit mk_ilit(int32_t var0, bool sign) { return var0 * 2 + (sign ? 1 : 0); }

    // Clause layout in the arena, in 32-bit words:
    //   [0] size<<3 | flags (bit0 learnt, bit1 pending drain, bit2 relocated)
    //   [1] cbnd
    //   [2] activity (float bits)
    //   [3..3+size) literals
    struct ClauseView {
        uint32_t* base;
        uint32_t size() const { return base[0] >> 3; }
        bool learnt() const { return base[0] & 1; }
        bool pending() const { return base[0] & 2; }
        void set_pending(bool b) { base[0] = b ? (base[0] | 2) : (base[0] & ~2u); }
        Bound cbnd() const { return (Bound)base[1]; }
        float activity() const;
        void set_activity(float a);
        ILit& operator[](uint32_t i) { return reinterpret_cast<ILit*>(base + 3)[i]; }
        ILit operator[](uint32_t i) const { return reinterpret_cast<const ILit*>(base + 3)[i]; }
    };

    struct Watcher {
        CRef cref;
        ILit blocker;
    };

    struct VarData {
        CRef reason = kCRefUndef;
        int32_t level = 0;
        Bound cbnd = 0;  // derivation bound of the assignment (root-level: exact fold)
    };

    // --- arena ---
    std::vector<uint32_t> arena_;
    uint64_t arena_wasted_ = 0;
    CRef alloc_clause(std::span<const ILit> lits, bool learnt, Bound cbnd);
    ClauseView clause(CRef c) { return ClauseView{arena_.data() + c}; }
    void free_clause(CRef c);
    void garbage_collect();
    void reloc(CRef& c, std::vector<uint32_t>& to);

    // --- state ---
    SolverConfig cfg_;
    bool solve_started_ = false;
    bool ok_ = true;
    Bound unsat_bound_ = 0;

    std::vector<CRef> problem_clauses_;
    std::vector<CRef> learnts_;
    std::vector<std::vector<Watcher>> watches_;  // indexed by ILit
    std::vector<uint8_t> assigns_;               // per var: kTrue/kFalse/kUndef
    std::vector<VarData> vardata_;
    std::vector<ILit> trail_;
    std::vector<int32_t> trail_lim_;
    size_t qhead_ = 0;

    // activity heap
    std::vector<double> activity_;
    std::vector<int32_t> heap_;      // binary max-heap of vars
    std::vector<int32_t> heap_pos_;  // var -> position in heap_, -1 if absent
    double var_inc_ = 1.0;
    double cla_inc_ = 1.0;

    uint64_t rng_state_ = 0;
    const std::atomic<bool>* stop_ = nullptr;
    std::function<void()> restart_hook_;

    std::vector<ILit> assumptions_;
    SolverStats stats_;

    // drain bookkeeping
    std::vector<CRef> pending_clauses_;
    std::vector<BoundedClause> pending_small_;  // learned units (and binaries learned at root)
    std::unordered_set<uint64_t> signatures_;

    // analyze scratch
    std::vector<uint8_t> seen_;
    std::vector<ILit> analyze_stack_;
    std::vector<ILit> analyze_toclear_;

    // --- core procedures ---
    int32_t decision_level() const { return (int32_t)trail_lim_.size(); }
    uint8_t value(ILit p) const {
        uint8_t v = assigns_[ivar(p)];
        return v == kUndef ? kUndef : v ^ (uint8_t)(p & 1);
    }
    bool locked(CRef c);
    void new_decision_level() { trail_lim_.push_back((int32_t)trail_.size()); }
    void attach_clause(CRef c);
    void detach_clause(CRef c);
    void remove_clause(CRef c);
    void unchecked_enqueue(ILit p, CRef from);
    bool enqueue_root(ILit p, Bound cbnd);
    CRef propagate();
    void cancel_until(int32_t level);
    void analyze(CRef confl, std::vector<ILit>& out_learnt, int32_t& out_btlevel, Bound& out_cbnd);
    bool lit_redundant(ILit p, uint32_t abstract_levels, Bound& cbnd_acc);
    ILit pick_branch_lit();
    void var_bump(int32_t v);
    void var_decay_all();
    void cla_bump(ClauseView c);
    void cla_decay_all();
    void heap_insert(int32_t v);
    int32_t heap_pop();
    void heap_up(int32_t i);
    void heap_down(int32_t i);
    void reduce_db();
    void record_learnt(std::span<const ILit> lits, Bound cbnd);
    void mark_unsat(Bound b);
    Bound conflict_cbnd_at_root(CRef confl);
    double rand_double();
    uint8_t search(int64_t conflict_budget, int64_t learnt_cap, bool& stopped);
};

}  // namespace parbmc
