#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "parbmc/types.hpp"

namespace parbmc {

// Queue index a clause is pushed to: its own bound, unless every reader has
// already moved past that bound, in which case the lowest bound still being
// solved.
Bound effective_queue(Bound cbnd, Bound current_minbnd);

// Clause exchange between solver threads: one queue per bound, clause indices
// counting from 1, and a cursor per (queue, reader) marking the highest index
// that reader has seen. A clause is physically dropped by the last reader to
// pass it. Thread safety is a two-level protocol: a database-wide
// readers-writer lock (exclusive only while creating queues) plus one mutex
// per queue, taken one at a time in ascending queue order.
class SharedClauseDb {
  public:
    using ReaderId = uint64_t;
    using ClauseIndex = uint64_t;

    SharedClauseDb() = default;
    SharedClauseDb(const SharedClauseDb&) = delete;
    SharedClauseDb& operator=(const SharedClauseDb&) = delete;

    // A reader joining late starts each existing queue at its current maximum
    // index: it is not owed clauses pushed before it registered. Queues
    // created afterwards start it (like everyone registered) at 0.
    void register_reader(ReaderId id, Bound initial_bound);

    // Removes the reader's cursors so it can no longer hold up collection,
    // and drops whatever only it was still owed.
    void deregister_reader(ReaderId id);

    // Queues 0..k exist afterwards. Takes the exclusive database lock only
    // when creation is actually needed.
    void ensure_queue(Bound k);

    // One synchronization round for a reader currently solving bound sbnd:
    // walks queues 0..sbnd in ascending order; from each, collects the
    // clauses past the reader's cursor, then appends the local clauses whose
    // effective queue is this one (the reader's cursor moves past its own
    // pushes, so nothing is ever echoed back), then drops every clause all
    // registered readers have passed. Returns the collected clauses; the
    // caller is expected to clear its local stack.
    // Throws std::logic_error for an unregistered reader or a local clause
    // with cbnd > sbnd.
    std::vector<BoundedClause> sync(ReaderId id, Bound sbnd, std::span<const BoundedClause> local_stack);

    // Lowest solver bound over registered readers; 0 when none.
    Bound current_minbnd() const;

    // Highest existing queue index, -1 when no queue exists yet.
    Bound max_queue() const;

    uint64_t total_pushed() const { return pushed_.load(std::memory_order_relaxed); }
    uint64_t total_delivered() const { return delivered_.load(std::memory_order_relaxed); }

    // Test and logging support.
    struct QueueSnapshot {
        ClauseIndex base = 0;        // every index <= base has been dropped
        ClauseIndex next_index = 1;  // index the next push will get
        std::vector<std::pair<ReaderId, ClauseIndex>> cursors;  // sorted by reader
        std::vector<BoundedClause> clauses;                     // retained, oldest first
    };
    QueueSnapshot inspect_queue(Bound k) const;

  private:
    struct Queue {
        mutable std::mutex m;
        std::deque<BoundedClause> clauses;
        ClauseIndex base = 0;
        ClauseIndex next_index = 1;
        std::unordered_map<ReaderId, ClauseIndex> cursors;

        void drop_consumed();
    };

    mutable std::shared_mutex db_m_;
    std::vector<std::unique_ptr<Queue>> queues_;

    mutable std::mutex registry_m_;
    std::unordered_map<ReaderId, Bound> registry_;

    std::atomic<uint64_t> pushed_{0};
    std::atomic<uint64_t> delivered_{0};
};

}  // namespace parbmc
