#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

#include "parbmc/icnf.hpp"
#include "parbmc/portfolio.hpp"

namespace parbmc {

struct DipConfig {
    std::string host = "127.0.0.1";
    uint16_t port = 0;  // 0 picks an ephemeral port
    // Seq-numbered event log, one line per handled frame; the strictly
    // increasing numbers are the observable proof of serialized service.
    std::ostream* log = nullptr;
    const std::atomic<bool>* stop = nullptr;
    double exchange_timeout_s = 10.0;  // patience for one worker's batch reply
    std::function<void(uint16_t)> on_listening;  // invoked with the bound port
};

// Runs the global clause database service: a single-threaded loop that owns a
// SharedClauseDb with workers as readers. Serves until a result has been
// recorded and every worker has disconnected, or the stop flag rises.
// Returns the recorded verdict, if any.
std::optional<RunVerdict> dip_serve(const DipConfig& cfg);

struct WorkerConfig {
    std::string host = "127.0.0.1";
    uint16_t port = 0;
    uint64_t worker_id = 0;  // self-chosen, must be unique across workers
    StrategyConfig strategy;
    // Clause traffic log: `uplink-send`, `uplink-recv`, `share`, `import`
    // lines with literal lists, greppable across workers.
    std::ostream* log = nullptr;
    const std::atomic<bool>* stop = nullptr;
    double connect_timeout_s = 10.0;
    double exchange_timeout_s = 10.0;
};

struct WorkerResult {
    RunVerdict verdict;            // what this worker reports
    RunReport local_report;        // the portfolio run underneath
    bool verdict_is_remote = false;  // another worker finished first
};

// Solves the sequence as one worker of a distributed pool: the portfolio runs
// locally while a communication thread mirrors the local database with the
// global one, triggered every time a solver thread moves to a higher bound.
// Loss of the connection degrades to standalone solving rather than failing.
WorkerResult run_worker(const IcnfProblem& seq, const WorkerConfig& cfg);

}  // namespace parbmc
