#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "parbmc/bench_gen.hpp"
#include "parbmc/dip.hpp"
#include "parbmc/icnf.hpp"
#include "parbmc/portfolio.hpp"
#include "parbmc/solver.hpp"

using namespace parbmc;

namespace {

std::atomic<bool> g_stop{false};

void on_interrupt(int) { g_stop.store(true); }

void install_interrupt() {
    std::signal(SIGINT, on_interrupt);
    std::signal(SIGTERM, on_interrupt);
}

int verdict_exit_code(const RunVerdict& v) {
    switch (v.kind) {
        case RunVerdict::Kind::CounterexampleFound: return 10;
        case RunVerdict::Kind::NoCounterexampleUpTo: return 20;
        default: return 0;
    }
}

// First line matches ^(SAT [0-9]+|UNSAT [0-9]+|INDET)$. A counterexample is
// followed by one line of DIMACS literals, cut to the declared variable count
// when the file carries one.
void print_verdict(std::ostream& out, const RunVerdict& v, const IcnfProblem& prob) {
    switch (v.kind) {
        case RunVerdict::Kind::CounterexampleFound: {
            out << "SAT " << v.bound << '\n';
            int32_t nvars = prob.declared_vars > 0 ? prob.declared_vars : prob.max_var;
            // Model slot 0 is unused; literals are indexed by DIMACS variable.
            nvars = std::min<int32_t>(nvars, (int32_t)v.model.size() - 1);
            for (int32_t var = 1; var <= nvars; ++var) {
                if (var > 1) out << ' ';
                out << (v.model[(size_t)var] ? var : -var);
            }
            out << '\n';
            break;
        }
        case RunVerdict::Kind::NoCounterexampleUpTo:
            out << "UNSAT " << v.bound << '\n';
            break;
        default:
            out << "INDET\n";
            break;
    }
    out.flush();
}

struct StrategyFlags {
    std::string variant;
    std::string strategy = "conv";
    int threads = 1;
    std::string share = "full";
    int polarity_split = 0;
    uint64_t seed = 0;
    Bound max_bound = 500;
    bool minimal = false;
    double time_limit = 0.0;
};

void add_strategy_flags(CLI::App* cmd, StrategyFlags& f) {
    cmd->add_option("--variant", f.variant,
                    "named preset: conv, multiconv-simple, multiconv-full, "
                    "multiconv-adaptive, multiconv-tarmo, multibound-tarmo");
    cmd->add_option("--strategy", f.strategy, "conv, multiconv or multibound")
        ->check(CLI::IsMember({"conv", "multiconv", "multibound"}));
    cmd->add_option("--threads", f.threads, "solver threads")->check(CLI::PositiveNumber);
    cmd->add_option("--share", f.share, "sharing policy: none, full, len:L, adaptive");
    cmd->add_option("--polarity-split", f.polarity_split,
                    "trailing threads that branch positive first");
    cmd->add_option("--seed", f.seed, "base random seed");
    cmd->add_option("--max-bound", f.max_bound, "highest bound to attempt");
    cmd->add_flag("--minimal", f.minimal, "prove the reported counterexample minimal");
    cmd->add_option("--time-limit", f.time_limit, "wall-clock limit in seconds");
}

StrategyConfig build_strategy(const CLI::App* cmd, const StrategyFlags& f) {
    StrategyConfig cfg;
    if (!f.variant.empty())
        cfg = preset(f.variant, cmd->count("--threads") ? f.threads : 4);

    if (cmd->count("--strategy")) {
        if (f.strategy == "conv") cfg.strategy = Strategy::Conv;
        else if (f.strategy == "multiconv") cfg.strategy = Strategy::MultiConv;
        else cfg.strategy = Strategy::MultiBound;
    }
    if (cmd->count("--threads")) cfg.threads = f.threads;
    if (cmd->count("--share")) {
        if (f.share == "none") cfg.sharing.kind = SharePolicy::Kind::None;
        else if (f.share == "full") cfg.sharing.kind = SharePolicy::Kind::Full;
        else if (f.share == "adaptive") cfg.sharing.kind = SharePolicy::Kind::Adaptive;
        else if (f.share.rfind("len:", 0) == 0) {
            cfg.sharing.kind = SharePolicy::Kind::MaxLen;
            cfg.sharing.max_len = std::stoi(f.share.substr(4));
        } else {
            throw CLI::ValidationError("--share", "expected none, full, len:L or adaptive");
        }
    }
    if (cmd->count("--polarity-split")) cfg.polarity_split = f.polarity_split;
    if (cmd->count("--seed")) cfg.seeds = {f.seed};
    if (cmd->count("--max-bound")) cfg.max_bound = f.max_bound;
    if (cmd->count("--minimal")) cfg.minimal_counterexample = true;
    if (cmd->count("--time-limit")) cfg.time_limit_s = f.time_limit;
    return cfg;
}

IcnfProblem load_problem(const std::string& path) {
    try {
        return parse_icnf_file(path);
    } catch (const IcnfParseError& e) {
        std::cerr << path << ": " << e.what() << '\n';
        std::exit(3);
    } catch (const std::exception& e) {
        std::cerr << path << ": " << e.what() << '\n';
        std::exit(3);
    }
}

void write_stats(const std::string& path, const RunReport& rep) {
    if (path.empty()) return;
    std::ofstream out(path);
    if (!out) {
        std::cerr << path << ": cannot write\n";
        std::exit(3);
    }
    out << stats_csv(rep);
}

bool split_endpoint(const std::string& ep, std::string& host, uint16_t& port) {
    auto colon = ep.rfind(':');
    if (colon == std::string::npos || colon + 1 >= ep.size()) return false;
    host = ep.substr(0, colon);
    try {
        int p = std::stoi(ep.substr(colon + 1));
        if (p < 0 || p > 65535) return false;
        port = (uint16_t)p;
    } catch (const std::exception&) {
        return false;
    }
    return host.size() > 0;
}

void write_instance(const GeneratedInstance& inst, const std::string& icnf_path,
                    const std::string& expect_path) {
    try {
        write_icnf_file(icnf_path, inst.problem);
    } catch (const std::exception& e) {
        std::cerr << icnf_path << ": " << e.what() << '\n';
        std::exit(3);
    }
    if (expect_path.empty()) return;
    std::ofstream out(expect_path);
    if (!out) {
        std::cerr << expect_path << ": cannot write\n";
        std::exit(3);
    }
    write_expected(out, inst.expected);
}

int run_solve(const CLI::App* cmd, const std::string& file, const StrategyFlags& flags,
              const std::string& stats_path) {
    auto prob = load_problem(file);
    auto cfg = build_strategy(cmd, flags);
    install_interrupt();
    PortfolioHooks hooks;
    hooks.external_stop = &g_stop;
    auto rep = run_portfolio(prob, cfg, hooks);
    write_stats(stats_path, rep);
    print_verdict(std::cout, rep.verdict, prob);
    return verdict_exit_code(rep.verdict);
}

int run_dip(const std::string& listen, const std::string& log_path) {
    std::string host;
    uint16_t port = 0;
    if (!split_endpoint(listen, host, port))
        throw CLI::ValidationError("--listen", "expected HOST:PORT");
    std::ofstream log_file;
    if (!log_path.empty()) {
        log_file.open(log_path);
        if (!log_file) {
            std::cerr << log_path << ": cannot write\n";
            return 3;
        }
    }
    install_interrupt();
    DipConfig cfg;
    cfg.host = host;
    cfg.port = port;
    cfg.stop = &g_stop;
    cfg.log = log_path.empty() ? nullptr : &log_file;
    cfg.on_listening = [](uint16_t p) { std::cout << "listening " << p << '\n' << std::flush; };
    auto verdict = dip_serve(cfg);
    if (!verdict) {
        std::cout << "INDET\n";
        return 0;
    }
    IcnfProblem none;  // the service has no variable declaration to truncate by
    print_verdict(std::cout, *verdict, none);
    return verdict_exit_code(*verdict);
}

int run_worker_cmd(const CLI::App* cmd, const std::string& file, const std::string& dip_ep,
                   uint64_t id, bool id_given, const StrategyFlags& flags,
                   const std::string& stats_path, const std::string& log_path) {
    auto prob = load_problem(file);
    WorkerConfig wc;
    if (!split_endpoint(dip_ep, wc.host, wc.port))
        throw CLI::ValidationError("--dip", "expected HOST:PORT");
    wc.strategy = build_strategy(cmd, flags);
    wc.worker_id = id_given ? id : std::random_device{}();
    std::ofstream log_file;
    if (!log_path.empty()) {
        log_file.open(log_path);
        if (!log_file) {
            std::cerr << log_path << ": cannot write\n";
            return 3;
        }
        wc.log = &log_file;
    }
    install_interrupt();
    wc.stop = &g_stop;
    auto res = run_worker(prob, wc);
    write_stats(stats_path, res.local_report);
    print_verdict(std::cout, res.verdict, prob);
    return verdict_exit_code(res.verdict);
}

int run_check(const std::string& file, Bound bound, const std::string& model_path) {
    auto prob = load_problem(file);
    if (bound < 0 || bound >= prob.num_bounds()) {
        std::cerr << "bound " << bound << " outside 0.." << prob.num_bounds() - 1 << '\n';
        return 2;
    }
    std::ifstream min(model_path);
    if (!min) {
        std::cerr << model_path << ": cannot read\n";
        return 3;
    }
    std::vector<Lit> fixed;
    long long code;
    while (min >> code) {
        if (code == 0) continue;
        if (code > prob.max_var || -code > prob.max_var) continue;  // past any solver var
        fixed.push_back(Lit((int32_t)code));
    }

    // A model is a counterexample at the bound iff the slice plus its cue is
    // satisfiable with the model literals pinned; a truncated model line only
    // leaves auxiliary variables open.
    Solver s;
    s.ensure_var(prob.max_var);
    for (const auto& c : prob.clauses)
        if (c.cbnd <= bound) s.add_problem_clause(c);
    std::vector<Lit> assume = prob.cues[(size_t)bound];
    assume.insert(assume.end(), fixed.begin(), fixed.end());
    auto out = s.solve(assume);
    if (out.status == SolveStatus::Sat) {
        std::cout << "OK\n";
        return 0;
    }
    std::cout << "FAIL\n";
    return 1;
}

int run_gen(const std::string& family, const CounterSpec& cspec, const PigeonSpec& pspec,
            const std::string& suite, const std::string& out, const std::string& expect,
            const std::string& out_dir) {
    if (!suite.empty()) {
        if (out_dir.empty()) throw CLI::ValidationError("--out-dir", "required with --suite");
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        std::vector<GeneratedInstance> insts;
        try {
            insts = gen_suite(suite);
        } catch (const std::invalid_argument& e) {
            throw CLI::ValidationError("--suite", e.what());
        }
        for (const auto& inst : insts) {
            auto base = out_dir + "/" + inst.name;
            write_instance(inst, base + ".icnf", base + ".expect");
            std::cout << inst.name << '\n';
        }
        return 0;
    }
    if (out.empty()) throw CLI::ValidationError("--out", "required without --suite");
    GeneratedInstance inst;
    if (family == "counter") inst = gen_counter(cspec);
    else if (family == "pigeon") inst = gen_pigeon(pspec);
    else throw CLI::ValidationError("--family", "expected counter or pigeon");
    write_instance(inst, out, expect);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"incremental bounded model checking with parallel clause sharing"};
    app.require_subcommand(1);

    std::string file, stats_path, log_path, listen, dip_ep;
    StrategyFlags flags;

    auto* solve = app.add_subcommand("solve", "run the portfolio on an iCNF sequence");
    solve->add_option("file", file, "iCNF input")->required();
    add_strategy_flags(solve, flags);
    solve->add_option("--stats", stats_path, "write per-thread statistics CSV");

    auto* dip = app.add_subcommand("dip", "serve the global clause database");
    dip->add_option("--listen", listen, "HOST:PORT to bind")->required();
    dip->add_option("--log", log_path, "write the sequenced request log");

    auto* worker = app.add_subcommand("worker", "solve as part of a distributed pool");
    worker->add_option("file", file, "iCNF input")->required();
    worker->add_option("--dip", dip_ep, "HOST:PORT of the database service")->required();
    uint64_t worker_id = 0;
    auto* id_opt = worker->add_option("--id", worker_id, "unique worker id (default: random)");
    add_strategy_flags(worker, flags);
    worker->add_option("--stats", stats_path, "write per-thread statistics CSV");
    worker->add_option("--log", log_path, "write the clause traffic log");

    auto* gen = app.add_subcommand("gen", "emit benchmark sequences with known verdicts");
    std::string family = "counter", suite, out, expect, out_dir;
    CounterSpec cspec;
    PigeonSpec pspec;
    gen->add_option("--family", family, "counter or pigeon");
    gen->add_option("--bits", cspec.bits, "counter width");
    gen->add_option("--step", cspec.step, "counter increment");
    gen->add_option("--target", cspec.target, "value the property watches for");
    gen->add_option("--bounds", cspec.bounds, "number of cue bounds")
        ->check(CLI::PositiveNumber);
    gen->add_flag("--wrap,!--no-wrap", cspec.wrap, "wrap around instead of saturating");
    gen->add_option("--holes", pspec.holes, "pigeonhole size");
    gen->add_option("--sat-bound", pspec.sat_bound, "first satisfiable bound");
    gen->add_option("--out", out, "iCNF output path");
    gen->add_option("--expect", expect, "also write `bound status` sidecar");
    gen->add_option("--suite", suite, "emit a whole catalog: smoke or full");
    gen->add_option("--out-dir", out_dir, "directory for --suite output");

    auto* check = app.add_subcommand("check", "evaluate a model against one bound");
    check->add_option("file", file, "iCNF input")->required();
    Bound check_bound = 0;
    std::string model_path;
    check->add_option("--bound", check_bound, "bound the model claims to witness")->required();
    check->add_option("--model", model_path, "file of DIMACS literals")->required();

    try {
        app.parse(argc, argv);

        if (solve->parsed()) return run_solve(solve, file, flags, stats_path);
        if (dip->parsed()) return run_dip(listen, log_path);
        if (worker->parsed())
            return run_worker_cmd(worker, file, dip_ep, worker_id, id_opt->count() > 0,
                                  flags, stats_path, log_path);
        if (gen->parsed()) {
            if (gen->count("--bounds")) pspec.bounds = cspec.bounds;  // shared flag
            return run_gen(family, cspec, pspec, suite, out, expect, out_dir);
        }
        if (check->parsed()) return run_check(file, check_bound, model_path);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const IcnfParseError& e) {
        std::cerr << e.what() << '\n';
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return 1;
    }
    return 2;
}
