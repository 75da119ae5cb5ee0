#include "parbmc/shared_db.hpp"

#include <algorithm>
#include <stdexcept>

namespace parbmc {

Bound effective_queue(Bound cbnd, Bound current_minbnd) { return std::max(cbnd, current_minbnd); }

void SharedClauseDb::Queue::drop_consumed() {
    // A clause stays until the slowest registered cursor passes it. With no
    // cursors left nobody is owed anything.
    ClauseIndex newmin = next_index - 1;
    for (const auto& [r, c] : cursors) newmin = std::min(newmin, c);
    while (base < newmin && !clauses.empty()) {
        clauses.pop_front();
        ++base;
    }
}

void SharedClauseDb::register_reader(ReaderId id, Bound initial_bound) {
    std::shared_lock db(db_m_);
    {
        std::lock_guard reg(registry_m_);
        if (!registry_.emplace(id, initial_bound).second)
            throw std::logic_error("reader id already registered");
    }
    for (auto& qp : queues_) {
        std::lock_guard q(qp->m);
        qp->cursors[id] = qp->next_index - 1;
    }
}

void SharedClauseDb::deregister_reader(ReaderId id) {
    std::shared_lock db(db_m_);
    {
        std::lock_guard reg(registry_m_);
        registry_.erase(id);
    }
    for (auto& qp : queues_) {
        std::lock_guard q(qp->m);
        qp->cursors.erase(id);
        qp->drop_consumed();
    }
}

void SharedClauseDb::ensure_queue(Bound k) {
    if (k < 0) return;
    {
        std::shared_lock db(db_m_);
        if ((Bound)queues_.size() > k) return;
    }
    std::unique_lock db(db_m_);
    std::lock_guard reg(registry_m_);
    while ((Bound)queues_.size() <= k) {
        auto q = std::make_unique<Queue>();
        for (const auto& [id, sbnd] : registry_) q->cursors.emplace(id, 0);
        queues_.push_back(std::move(q));
    }
}

std::vector<BoundedClause> SharedClauseDb::sync(ReaderId id, Bound sbnd,
                                                std::span<const BoundedClause> local_stack) {
    for (const BoundedClause& c : local_stack)
        if (c.cbnd > sbnd) throw std::logic_error("local clause with cbnd above the solver bound");
    ensure_queue(sbnd);

    std::vector<BoundedClause> received;
    std::shared_lock db(db_m_);
    Bound minbnd;
    {
        std::lock_guard reg(registry_m_);
        auto it = registry_.find(id);
        if (it == registry_.end()) throw std::logic_error("sync from unregistered reader");
        it->second = sbnd;
        minbnd = sbnd;
        for (const auto& [r, b] : registry_) minbnd = std::min(minbnd, b);
    }

    for (Bound k = 0; k <= sbnd && k < (Bound)queues_.size(); ++k) {
        Queue& q = *queues_[(size_t)k];
        std::lock_guard lk(q.m);
        ClauseIndex& cursor = q.cursors.at(id);
        // Collect before pushing, so this reader's own clauses never come back.
        for (ClauseIndex idx = cursor + 1; idx < q.next_index; ++idx)
            received.push_back(q.clauses[(size_t)(idx - q.base - 1)]);
        delivered_.fetch_add(q.next_index - 1 - cursor, std::memory_order_relaxed);
        for (const BoundedClause& c : local_stack) {
            if (effective_queue(c.cbnd, minbnd) != k) continue;
            q.clauses.push_back(c);
            q.next_index++;
            pushed_.fetch_add(1, std::memory_order_relaxed);
        }
        cursor = q.next_index - 1;
        q.drop_consumed();
    }
    return received;
}

Bound SharedClauseDb::current_minbnd() const {
    std::lock_guard reg(registry_m_);
    Bound minbnd = 0;
    bool first = true;
    for (const auto& [r, b] : registry_) {
        minbnd = first ? b : std::min(minbnd, b);
        first = false;
    }
    return first ? 0 : minbnd;
}

Bound SharedClauseDb::max_queue() const {
    std::shared_lock db(db_m_);
    return (Bound)queues_.size() - 1;
}

SharedClauseDb::QueueSnapshot SharedClauseDb::inspect_queue(Bound k) const {
    std::shared_lock db(db_m_);
    if (k < 0 || k >= (Bound)queues_.size()) throw std::out_of_range("no such queue");
    const Queue& q = *queues_[(size_t)k];
    std::lock_guard lk(q.m);
    QueueSnapshot s;
    s.base = q.base;
    s.next_index = q.next_index;
    s.cursors.assign(q.cursors.begin(), q.cursors.end());
    std::sort(s.cursors.begin(), s.cursors.end());
    s.clauses.assign(q.clauses.begin(), q.clauses.end());
    return s;
}

}  // namespace parbmc
