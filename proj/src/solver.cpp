#include "parbmc/solver.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace parbmc {

float Solver::ClauseView::activity() const { return std::bit_cast<float>(base[2]); }
void Solver::ClauseView::set_activity(float a) { base[2] = std::bit_cast<uint32_t>(a); }

Solver::Solver() { rng_state_ = cfg_.seed; }
Solver::~Solver() = default;

void Solver::configure(const SolverConfig& cfg) {
    if (cfg.restart.initial_conflicts < 1) throw std::invalid_argument("restart interval must be >= 1");
    if (!(cfg.restart.growth > 1.0)) throw std::invalid_argument("restart growth must be > 1");
    if (!(cfg.var_decay > 0.0 && cfg.var_decay <= 1.0)) throw std::invalid_argument("var_decay out of (0,1]");
    if (!(cfg.clause_decay > 0.0 && cfg.clause_decay <= 1.0))
        throw std::invalid_argument("clause_decay out of (0,1]");
    if (!(cfg.random_branch_freq >= 0.0 && cfg.random_branch_freq <= 1.0))
        throw std::invalid_argument("random_branch_freq out of [0,1]");
    if (solve_started_) {
        if (cfg.restart.initial_conflicts != cfg_.restart.initial_conflicts ||
            cfg.restart.growth != cfg_.restart.growth || cfg.var_decay != cfg_.var_decay ||
            cfg.clause_decay != cfg_.clause_decay || cfg.random_branch_freq != cfg_.random_branch_freq)
            throw std::logic_error("only seed and polarity may change after the first solve");
        cfg_.seed = cfg.seed;
        cfg_.polarity = cfg.polarity;
    } else {
        cfg_ = cfg;
    }
    rng_state_ = cfg_.seed;
}

void Solver::ensure_var(int32_t v) {
    assert(v >= 1);
    while (num_vars() < v) {
        assigns_.push_back(kUndef);
        vardata_.push_back(VarData{});
        activity_.push_back(0.0);
        heap_pos_.push_back(-1);
        seen_.push_back(0);
        watches_.emplace_back();
        watches_.emplace_back();
        heap_insert((int32_t)assigns_.size() - 1);
    }
}

// --- arena ---

Solver::CRef Solver::alloc_clause(std::span<const ILit> lits, bool learnt, Bound cbnd) {
    assert(lits.size() >= 2);
    CRef cr = (CRef)arena_.size();
    arena_.push_back(((uint32_t)lits.size() << 3) | (learnt ? 1u : 0u));
    arena_.push_back((uint32_t)cbnd);
    arena_.push_back(std::bit_cast<uint32_t>(0.0f));
    for (ILit q : lits) arena_.push_back((uint32_t)q);
    return cr;
}

void Solver::free_clause(CRef c) { arena_wasted_ += 3 + clause(c).size(); }

void Solver::reloc(CRef& c, std::vector<uint32_t>& to) {
    uint32_t* h = arena_.data() + c;
    if (h[0] & 4u) {  // already moved; forwarding address lives in the cbnd slot
        c = h[1];
        return;
    }
    CRef nc = (CRef)to.size();
    uint32_t words = 3 + (h[0] >> 3);
    to.insert(to.end(), h, h + words);
    h[0] |= 4u;
    h[1] = nc;
    c = nc;
}

void Solver::garbage_collect() {
    std::vector<uint32_t> to;
    to.reserve(arena_.size() > arena_wasted_ ? arena_.size() - arena_wasted_ : 0);
    for (CRef& c : problem_clauses_) reloc(c, to);
    for (CRef& c : learnts_) reloc(c, to);
    for (CRef& c : pending_clauses_) reloc(c, to);
    for (ILit p : trail_) {
        CRef& r = vardata_[ivar(p)].reason;
        if (r != kCRefUndef) reloc(r, to);
    }
    arena_ = std::move(to);
    arena_wasted_ = 0;
    for (auto& wl : watches_) wl.clear();
    for (CRef c : problem_clauses_) attach_clause(c);
    for (CRef c : learnts_) attach_clause(c);
}

// --- watches / assignment ---

void Solver::attach_clause(CRef cr) {
    ClauseView c = clause(cr);
    watches_[neg(c[0])].push_back(Watcher{cr, c[1]});
    watches_[neg(c[1])].push_back(Watcher{cr, c[0]});
}

void Solver::detach_clause(CRef cr) {
    ClauseView c = clause(cr);
    for (ILit w : {c[0], c[1]}) {
        auto& wl = watches_[neg(w)];
        for (size_t i = 0; i < wl.size(); ++i) {
            if (wl[i].cref == cr) {
                wl.erase(wl.begin() + (ptrdiff_t)i);
                break;
            }
        }
    }
}

bool Solver::locked(CRef cr) {
    ClauseView c = clause(cr);
    return value(c[0]) == kTrue && vardata_[ivar(c[0])].reason == cr;
}

void Solver::remove_clause(CRef cr) {
    assert(!locked(cr) && !clause(cr).pending());
    detach_clause(cr);
    free_clause(cr);
}

void Solver::unchecked_enqueue(ILit p, CRef from) {
    int32_t v = ivar(p);
    assert(assigns_[v] == kUndef);
    assigns_[v] = (uint8_t)(p & 1);
    VarData& vd = vardata_[v];
    vd.reason = from;
    vd.level = decision_level();
    vd.cbnd = 0;
    if (vd.level == 0 && from != kCRefUndef) {
        // Root assignments record their full derivation bound so that later
        // analyses can skip them while still folding in what they depended on.
        ClauseView c = clause(from);
        Bound b = c.cbnd();
        for (uint32_t i = 0; i < c.size(); ++i) {
            int32_t u = ivar(c[i]);
            if (u != v) b = std::max(b, vardata_[u].cbnd);
        }
        vd.cbnd = b;
    }
    trail_.push_back(p);
}

bool Solver::enqueue_root(ILit p, Bound cbnd) {
    assert(decision_level() == 0);
    int32_t v = ivar(p);
    uint8_t val = value(p);
    if (val == kTrue) {
        vardata_[v].cbnd = std::min(vardata_[v].cbnd, cbnd);
        return true;
    }
    if (val == kFalse) {
        mark_unsat(std::max(cbnd, vardata_[v].cbnd));
        return false;
    }
    assigns_[v] = (uint8_t)(p & 1);
    vardata_[v] = VarData{kCRefUndef, 0, cbnd};
    trail_.push_back(p);
    return true;
}

void Solver::cancel_until(int32_t level) {
    if (decision_level() <= level) return;
    for (size_t i = trail_.size(); i-- > (size_t)trail_lim_[level];) {
        int32_t v = ivar(trail_[i]);
        assigns_[v] = kUndef;
        if (heap_pos_[v] == -1) heap_insert(v);
    }
    qhead_ = (size_t)trail_lim_[level];
    trail_.resize((size_t)trail_lim_[level]);
    trail_lim_.resize((size_t)level);
}

Solver::CRef Solver::propagate() {
    CRef confl = kCRefUndef;
    while (qhead_ < trail_.size()) {
        ILit p = trail_[qhead_++];
        stats_.propagations++;
        auto& ws = watches_[p];
        size_t i = 0, j = 0;
        while (i < ws.size()) {
            Watcher w = ws[i];
            if (value(w.blocker) == kTrue) {
                ws[j++] = ws[i++];
                continue;
            }
            CRef cr = w.cref;
            ClauseView c = clause(cr);
            ILit false_lit = neg(p);
            if (c[0] == false_lit) {
                c[0] = c[1];
                c[1] = false_lit;
            }
            assert(c[1] == false_lit);
            ++i;
            ILit first = c[0];
            Watcher nw{cr, first};
            if (first != w.blocker && value(first) == kTrue) {
                ws[j++] = nw;
                continue;
            }
            uint32_t sz = c.size();
            bool moved = false;
            for (uint32_t k = 2; k < sz; ++k) {
                if (value(c[k]) != kFalse) {
                    c[1] = c[k];
                    c[k] = false_lit;
                    watches_[neg(c[1])].push_back(nw);
                    moved = true;
                    break;
                }
            }
            if (moved) continue;
            ws[j++] = nw;
            if (value(first) == kFalse) {
                confl = cr;
                qhead_ = trail_.size();
                while (i < ws.size()) ws[j++] = ws[i++];
            } else {
                unchecked_enqueue(first, cr);
            }
        }
        ws.resize(j);
    }
    return confl;
}

// --- conflict analysis ---

namespace {
inline uint32_t abstract_level(int32_t level) { return 1u << (level & 31); }
}  // namespace

void Solver::analyze(CRef confl, std::vector<ILit>& out_learnt, int32_t& out_btlevel, Bound& out_cbnd) {
    int32_t pathc = 0;
    ILit p = -1;
    out_learnt.clear();
    out_learnt.push_back(-1);  // slot for the asserting literal
    int64_t index = (int64_t)trail_.size() - 1;
    out_cbnd = 0;

    do {
        assert(confl != kCRefUndef);
        ClauseView c = clause(confl);
        if (c.learnt()) cla_bump(c);
        out_cbnd = std::max(out_cbnd, c.cbnd());
        for (uint32_t j = (p == -1) ? 0 : 1; j < c.size(); ++j) {
            ILit q = c[j];
            int32_t v = ivar(q);
            if (seen_[v]) continue;
            if (vardata_[v].level > 0) {
                seen_[v] = 1;
                var_bump(v);
                if (vardata_[v].level >= decision_level())
                    pathc++;
                else
                    out_learnt.push_back(q);
            } else {
                // Root literals drop out of the clause but their derivation
                // bound stays part of this one's.
                out_cbnd = std::max(out_cbnd, vardata_[v].cbnd);
            }
        }
        while (!seen_[ivar(trail_[(size_t)index--])]) {}
        p = trail_[(size_t)(index + 1)];
        confl = vardata_[ivar(p)].reason;
        seen_[ivar(p)] = 0;
        pathc--;
    } while (pathc > 0);
    out_learnt[0] = neg(p);

    // Deep minimization: a literal is dropped when its reason chain stays
    // within the levels already present in the clause. Bounds of reasons used
    // by a successful proof are committed; failed proofs leave no trace.
    analyze_toclear_.assign(out_learnt.begin(), out_learnt.end());
    uint32_t levels = 0;
    for (size_t i = 1; i < out_learnt.size(); ++i)
        levels |= abstract_level(vardata_[ivar(out_learnt[i])].level);
    size_t i, j;
    for (i = j = 1; i < out_learnt.size(); ++i) {
        ILit q = out_learnt[i];
        if (vardata_[ivar(q)].reason == kCRefUndef) {
            out_learnt[j++] = q;
        } else {
            Bound acc = out_cbnd;
            if (lit_redundant(q, levels, acc))
                out_cbnd = acc;
            else
                out_learnt[j++] = q;
        }
    }
    out_learnt.resize(j);

    if (out_learnt.size() == 1) {
        out_btlevel = 0;
    } else {
        size_t max_i = 1;
        for (size_t k = 2; k < out_learnt.size(); ++k)
            if (vardata_[ivar(out_learnt[k])].level > vardata_[ivar(out_learnt[max_i])].level) max_i = k;
        std::swap(out_learnt[1], out_learnt[max_i]);
        out_btlevel = vardata_[ivar(out_learnt[1])].level;
    }

    for (ILit q : analyze_toclear_) seen_[ivar(q)] = 0;
}

bool Solver::lit_redundant(ILit p, uint32_t abstract_levels, Bound& cbnd_acc) {
    analyze_stack_.clear();
    analyze_stack_.push_back(p);
    size_t top = analyze_toclear_.size();
    while (!analyze_stack_.empty()) {
        ILit q = analyze_stack_.back();
        analyze_stack_.pop_back();
        CRef rcr = vardata_[ivar(q)].reason;
        assert(rcr != kCRefUndef);
        ClauseView c = clause(rcr);
        cbnd_acc = std::max(cbnd_acc, c.cbnd());
        for (uint32_t k = 1; k < c.size(); ++k) {
            ILit r = c[k];
            int32_t v = ivar(r);
            if (seen_[v]) continue;
            if (vardata_[v].level == 0) {
                cbnd_acc = std::max(cbnd_acc, vardata_[v].cbnd);
                continue;
            }
            if (vardata_[v].reason != kCRefUndef && (abstract_level(vardata_[v].level) & abstract_levels)) {
                seen_[v] = 1;
                analyze_stack_.push_back(r);
                analyze_toclear_.push_back(r);
            } else {
                for (size_t m = top; m < analyze_toclear_.size(); ++m) seen_[ivar(analyze_toclear_[m])] = 0;
                analyze_toclear_.resize(top);
                return false;
            }
        }
    }
    return true;
}

Bound Solver::conflict_cbnd_at_root(CRef confl) {
    ClauseView c = clause(confl);
    Bound b = c.cbnd();
    for (uint32_t i = 0; i < c.size(); ++i) b = std::max(b, vardata_[ivar(c[i])].cbnd);
    return b;
}

void Solver::mark_unsat(Bound b) {
    if (!ok_) {
        if (b < unsat_bound_) {
            unsat_bound_ = b;
            pending_small_.push_back(BoundedClause{{}, b});
        }
        return;
    }
    ok_ = false;
    unsat_bound_ = b;
    pending_small_.push_back(BoundedClause{{}, b});
}

// --- activities ---

void Solver::var_bump(int32_t v) {
    if ((activity_[v] += var_inc_) > 1e100) {
        for (double& a : activity_) a *= 1e-100;
        var_inc_ *= 1e-100;
    }
    if (heap_pos_[v] != -1) heap_up(heap_pos_[v]);
}

void Solver::var_decay_all() { var_inc_ *= 1.0 / cfg_.var_decay; }

void Solver::cla_bump(ClauseView c) {
    double a = (double)c.activity() + cla_inc_;
    if (a > 1e20) {
        for (CRef cr : learnts_) {
            ClauseView lc = clause(cr);
            lc.set_activity((float)(lc.activity() * 1e-20));
        }
        cla_inc_ *= 1e-20;
        a = (double)c.activity() + cla_inc_;
    }
    c.set_activity((float)a);
}

void Solver::cla_decay_all() { cla_inc_ *= 1.0 / cfg_.clause_decay; }

// --- decision heap (max-heap on activity) ---

void Solver::heap_insert(int32_t v) {
    heap_pos_[v] = (int32_t)heap_.size();
    heap_.push_back(v);
    heap_up(heap_pos_[v]);
}

void Solver::heap_up(int32_t i) {
    int32_t v = heap_[i];
    while (i > 0) {
        int32_t parent = (i - 1) >> 1;
        if (activity_[heap_[parent]] >= activity_[v]) break;
        heap_[i] = heap_[parent];
        heap_pos_[heap_[i]] = i;
        i = parent;
    }
    heap_[i] = v;
    heap_pos_[v] = i;
}

void Solver::heap_down(int32_t i) {
    int32_t v = heap_[i];
    int32_t n = (int32_t)heap_.size();
    for (;;) {
        int32_t child = 2 * i + 1;
        if (child >= n) break;
        if (child + 1 < n && activity_[heap_[child + 1]] > activity_[heap_[child]]) child++;
        if (activity_[heap_[child]] <= activity_[v]) break;
        heap_[i] = heap_[child];
        heap_pos_[heap_[i]] = i;
        i = child;
    }
    heap_[i] = v;
    heap_pos_[v] = i;
}

int32_t Solver::heap_pop() {
    int32_t v = heap_[0];
    heap_pos_[v] = -1;
    int32_t last = heap_.back();
    heap_.pop_back();
    if (!heap_.empty()) {
        heap_[0] = last;
        heap_pos_[last] = 0;
        heap_down(0);
    }
    return v;
}

double Solver::rand_double() {
    rng_state_ += 0x9e3779b97f4a7c15ULL;
    // splitmix64 adds the increment itself; feed it distinct states anyway.
    return (double)(splitmix64(rng_state_) >> 11) * 0x1.0p-53;
}

Solver::ILit Solver::pick_branch_lit() {
    int32_t v = -1;
    if (cfg_.random_branch_freq > 0.0 && rand_double() < cfg_.random_branch_freq && !heap_.empty()) {
        size_t idx = (size_t)(rand_double() * (double)heap_.size());
        if (idx >= heap_.size()) idx = heap_.size() - 1;
        int32_t cand = heap_[idx];
        if (assigns_[cand] == kUndef) v = cand;
    }
    while (v == -1 || assigns_[v] != kUndef) {
        if (heap_.empty()) return -1;
        v = heap_pop();
    }
    return mk_ilit(v, cfg_.polarity == Polarity::Negative);
}

// --- learned database ---

void Solver::record_learnt(std::span<const ILit> lits, Bound cbnd) {
    stats_.learned++;
    stats_.learned_literals += lits.size();
    std::vector<Lit> ext;
    ext.reserve(lits.size());
    for (ILit q : lits) ext.push_back(elit(q));
    normalize_clause(ext);  // canonical order; learned clauses have no dups
    signatures_.insert(clause_signature(ext));
    if (lits.size() == 1) {
        pending_small_.push_back(BoundedClause{std::move(ext), cbnd});
        enqueue_root(lits[0], cbnd);
        return;
    }
    CRef cr = alloc_clause(lits, true, cbnd);
    ClauseView c = clause(cr);
    c.set_pending(true);
    cla_bump(c);
    attach_clause(cr);
    learnts_.push_back(cr);
    pending_clauses_.push_back(cr);
    unchecked_enqueue(lits[0], cr);
}

void Solver::reduce_db() {
    double extra_lim = cla_inc_ / std::max<size_t>(learnts_.size(), 1);
    std::sort(learnts_.begin(), learnts_.end(), [this](CRef a, CRef b) {
        ClauseView x = clause(a), y = clause(b);
        return x.size() > 2 && (y.size() == 2 || x.activity() < y.activity());
    });
    size_t i, j;
    size_t half = learnts_.size() / 2;
    for (i = j = 0; i < learnts_.size(); ++i) {
        ClauseView c = clause(learnts_[i]);
        if (c.size() > 2 && !locked(learnts_[i]) && !c.pending() &&
            (i < half || (double)c.activity() < extra_lim))
            remove_clause(learnts_[i]);
        else
            learnts_[j++] = learnts_[i];
    }
    learnts_.resize(j);
    if (arena_wasted_ > arena_.size() / 5) garbage_collect();
}

std::vector<BoundedClause> Solver::drain_learned() {
    std::vector<BoundedClause> out = std::move(pending_small_);
    pending_small_.clear();
    for (CRef cr : pending_clauses_) {
        ClauseView c = clause(cr);
        BoundedClause bc;
        bc.cbnd = c.cbnd();
        bc.lits.reserve(c.size());
        for (uint32_t i = 0; i < c.size(); ++i) bc.lits.push_back(elit(c[i]));
        normalize_clause(bc.lits);
        c.set_pending(false);
        out.push_back(std::move(bc));
    }
    pending_clauses_.clear();
    return out;
}

int Solver::import_clauses(std::span<const BoundedClause> clauses) {
    if (decision_level() != 0)
        throw InternalSoundnessError("import_clauses called away from the root level");
    int added = 0;
    for (const BoundedClause& bc : clauses) {
        for (Lit l : bc.lits) ensure_var(l.var());
        std::vector<Lit> lits = bc.lits;
        NormalizeResult nr = normalize_clause(lits);
        if (nr == NormalizeResult::Tautology) {
            stats_.import_skipped++;
            continue;
        }
        if (nr == NormalizeResult::Empty) {
            mark_unsat(bc.cbnd);
            stats_.imported++;
            added++;
            continue;
        }
        if (!signatures_.insert(clause_signature(lits)).second) {
            stats_.import_skipped++;
            continue;
        }
        // Root simplification. Satisfied clauses are dropped only when the
        // satisfying assignment's bound does not exceed the clause's, so a
        // low-bound clause is never replaced by a higher-bound fact.
        Bound cbnd = bc.cbnd;
        std::vector<ILit> ilits;
        ilits.reserve(lits.size());
        bool satisfied = false;
        for (Lit l : lits) {
            ILit q = ilit(l);
            uint8_t val = value(q);
            int32_t v = ivar(q);
            if (val == kTrue && vardata_[v].level == 0 && vardata_[v].cbnd <= cbnd) {
                satisfied = true;
                break;
            }
            if (val == kFalse && vardata_[v].level == 0) {
                cbnd = std::max(cbnd, vardata_[v].cbnd);
                continue;
            }
            ilits.push_back(q);
        }
        if (satisfied) {
            stats_.import_skipped++;
            continue;
        }
        stats_.imported++;
        added++;
        if (ilits.empty()) {
            mark_unsat(cbnd);
        } else if (ilits.size() == 1) {
            enqueue_root(ilits[0], cbnd);
        } else {
            CRef cr = alloc_clause(ilits, true, cbnd);
            cla_bump(clause(cr));
            attach_clause(cr);
            learnts_.push_back(cr);
        }
    }
    return added;
}

// --- problem clauses ---

void Solver::add_problem_clause(const BoundedClause& bc) {
    if (decision_level() != 0)
        throw InternalSoundnessError("add_problem_clause called away from the root level");
    for (Lit l : bc.lits) ensure_var(l.var());
    std::vector<Lit> lits = bc.lits;
    NormalizeResult nr = normalize_clause(lits);
    if (nr == NormalizeResult::Tautology) return;
    if (nr == NormalizeResult::Empty) {
        mark_unsat(bc.cbnd);
        return;
    }
    signatures_.insert(clause_signature(lits));
    if (!ok_) return;
    Bound cbnd = bc.cbnd;
    std::vector<ILit> ilits;
    ilits.reserve(lits.size());
    for (Lit l : lits) {
        ILit q = ilit(l);
        uint8_t val = value(q);
        int32_t v = ivar(q);
        if (val == kTrue && vardata_[v].level == 0 && vardata_[v].cbnd <= cbnd) return;
        if (val == kFalse && vardata_[v].level == 0) {
            cbnd = std::max(cbnd, vardata_[v].cbnd);
            continue;
        }
        ilits.push_back(q);
    }
    if (ilits.empty()) {
        mark_unsat(cbnd);
    } else if (ilits.size() == 1) {
        enqueue_root(ilits[0], cbnd);
    } else {
        CRef cr = alloc_clause(ilits, false, cbnd);
        attach_clause(cr);
        problem_clauses_.push_back(cr);
    }
}

// --- search ---

uint8_t Solver::search(int64_t conflict_budget, int64_t learnt_cap, bool& stopped) {
    int64_t conflicts_here = 0;
    std::vector<ILit> learnt_clause;
    for (;;) {
        if (stop_ && stop_->load(std::memory_order_relaxed)) {
            stopped = true;
            cancel_until(0);
            return kUndef;
        }
        CRef confl = propagate();
        if (confl != kCRefUndef) {
            stats_.conflicts++;
            conflicts_here++;
            if (decision_level() == 0) {
                mark_unsat(conflict_cbnd_at_root(confl));
                return kFalse;
            }
            int32_t btlevel;
            Bound cbnd;
            analyze(confl, learnt_clause, btlevel, cbnd);
            cancel_until(btlevel);
            record_learnt(learnt_clause, cbnd);
            if (!ok_) return kFalse;
            var_decay_all();
            cla_decay_all();
        } else {
            if (conflicts_here >= conflict_budget) {
                cancel_until(0);
                return kUndef;
            }
            if ((int64_t)learnts_.size() - (int64_t)trail_.size() >= learnt_cap) reduce_db();
            ILit next = -1;
            while (decision_level() < (int32_t)assumptions_.size()) {
                ILit p = assumptions_[decision_level()];
                if (value(p) == kTrue) {
                    new_decision_level();
                } else if (value(p) == kFalse) {
                    return kFalse;
                } else {
                    next = p;
                    break;
                }
            }
            if (next == -1) {
                stats_.decisions++;
                next = pick_branch_lit();
                if (next == -1) return kTrue;
            }
            new_decision_level();
            unchecked_enqueue(next, kCRefUndef);
        }
    }
}

SolveOutcome Solver::solve(std::span<const Lit> assumptions) {
    solve_started_ = true;
    SolveOutcome out;
    if (!ok_) {
        out.status = SolveStatus::Unsat;
        return out;
    }
    assumptions_.clear();
    {
        std::unordered_set<int32_t> codes;
        for (Lit l : assumptions) {
            ensure_var(l.var());
            if (codes.count(-l.code)) {
                out.status = SolveStatus::Unsat;
                out.assumptions_inconsistent = true;
                return out;
            }
            codes.insert(l.code);
            assumptions_.push_back(ilit(l));
        }
    }
    if (CRef confl = propagate(); confl != kCRefUndef) {
        mark_unsat(conflict_cbnd_at_root(confl));
        out.status = SolveStatus::Unsat;
        return out;
    }

    double budget = (double)cfg_.restart.initial_conflicts;
    double learnt_cap = std::max((double)problem_clauses_.size() / 3.0, 2000.0);
    for (;;) {
        bool stopped = false;
        uint8_t st = search((int64_t)budget, (int64_t)learnt_cap, stopped);
        if (stopped) {
            out.status = SolveStatus::Interrupted;
            break;
        }
        if (st == kTrue) {
            out.status = SolveStatus::Sat;
            out.model.assign((size_t)num_vars() + 1, false);
            for (int32_t v = 0; v < num_vars(); ++v)
                out.model[(size_t)v + 1] = (assigns_[v] == kTrue);
            break;
        }
        if (st == kFalse) {
            out.status = SolveStatus::Unsat;
            break;
        }
        stats_.restarts++;
        budget *= cfg_.restart.growth;
        learnt_cap *= 1.1;
        if (restart_hook_) restart_hook_();
        if (!ok_) {
            out.status = SolveStatus::Unsat;
            break;
        }
    }
    cancel_until(0);
    return out;
}

}  // namespace parbmc
