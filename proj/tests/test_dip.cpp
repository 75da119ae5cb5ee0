#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <future>
#include <sstream>
#include <thread>
#include <vector>

#include "parbmc/bench_gen.hpp"
#include "parbmc/dip.hpp"
#include "parbmc/wire.hpp"

#include "oracles.hpp"

using namespace parbmc;
using namespace parbmc::test;

namespace {

// Blocking test-side client speaking the worker protocol by hand.
struct RawClient {
    int fd = -1;
    FrameReader reader;

    explicit RawClient(uint16_t port) {
        fd = socket(AF_INET, SOCK_STREAM, 0);
        REQUIRE(fd >= 0);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(port);
        inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
        REQUIRE(connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
    }
    ~RawClient() {
        if (fd >= 0) close(fd);
    }

    void send_raw(const std::vector<uint8_t>& bytes) {
        size_t off = 0;
        while (off < bytes.size()) {
            ssize_t n = send(fd, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
            REQUIRE(n > 0);
            off += static_cast<size_t>(n);
        }
    }
    void send_msg(const WireMessage& m) { send_raw(encode(m)); }

    WireMessage recv_msg(double timeout_s = 5.0) {
        auto t0 = std::chrono::steady_clock::now();
        for (;;) {
            if (auto f = reader.next()) return decode_frame(f->tag, f->payload);
            double left = timeout_s - std::chrono::duration<double>(
                                          std::chrono::steady_clock::now() - t0)
                                          .count();
            REQUIRE(left > 0);
            pollfd p{fd, POLLIN, 0};
            poll(&p, 1, 200);
            uint8_t chunk[4096];
            ssize_t n = recv(fd, chunk, sizeof chunk, MSG_DONTWAIT);
            if (n > 0) reader.feed({chunk, static_cast<size_t>(n)});
            REQUIRE(n != 0);  // peer must not hang up mid-conversation
        }
    }

    // True when the service closed this connection.
    bool closed_by_peer(double timeout_s = 5.0) {
        auto t0 = std::chrono::steady_clock::now();
        for (;;) {
            pollfd p{fd, POLLIN, 0};
            poll(&p, 1, 200);
            uint8_t chunk[4096];
            ssize_t n = recv(fd, chunk, sizeof chunk, MSG_DONTWAIT);
            if (n == 0) return true;
            if (n > 0) reader.feed({chunk, static_cast<size_t>(n)});
            if (std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                    .count() > timeout_s)
                return false;
        }
    }
};

struct ServiceUnderTest {
    std::promise<uint16_t> port_promise;
    uint16_t port = 0;
    std::atomic<bool> stop{false};
    std::ostringstream log;
    std::thread thread;
    std::optional<RunVerdict> verdict;

    ServiceUnderTest() {
        auto fut = port_promise.get_future();
        thread = std::thread([this] {
            DipConfig cfg;
            cfg.log = &log;
            cfg.stop = &stop;
            cfg.exchange_timeout_s = 2.0;
            cfg.on_listening = [this](uint16_t p) { port_promise.set_value(p); };
            verdict = dip_serve(cfg);
        });
        port = fut.get();
    }
    ~ServiceUnderTest() {
        stop.store(true);
        if (thread.joinable()) thread.join();
    }
    void join() { thread.join(); }
};

BoundedClause mk(Bound cbnd, std::initializer_list<int> codes) {
    BoundedClause c;
    c.cbnd = cbnd;
    for (int x : codes) c.lits.push_back(Lit(x));
    return c;
}

// One serialized exchange: request, absorb the gathered batch, reply ours.
std::vector<BoundedClause> exchange(RawClient& c, Bound maxbnd,
                                    std::vector<BoundedClause> push = {}) {
    c.send_msg(SyncReq{maxbnd});
    auto reply = c.recv_msg();
    auto* batch = std::get_if<ClauseBatch>(&reply);
    REQUIRE(batch != nullptr);
    c.send_msg(make_clause_batch(std::move(push)));
    return batch->clauses;
}

std::vector<std::string> grep_lines(const std::string& text, const std::string& needle) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
        if (line.find(needle) != std::string::npos) out.push_back(line);
    return out;
}

}  // namespace

TEST_CASE("hello handshake and empty syncs") {
    ServiceUnderTest sv;
    RawClient a(sv.port);
    a.send_msg(Hello{17, 0});
    CHECK(a.recv_msg() == WireMessage{Hello{17, 0}});

    CHECK(exchange(a, 0).empty());
    CHECK(exchange(a, 2).empty());

    ResultMsg res;
    res.verdict.kind = RunVerdict::Kind::NoCounterexampleUpTo;
    res.verdict.bound = 2;
    a.send_msg(res);
    CHECK(a.recv_msg() == WireMessage{res});
    a.send_msg(Bye{});

    sv.join();
    REQUIRE(sv.verdict.has_value());
    CHECK(sv.verdict->kind == RunVerdict::Kind::NoCounterexampleUpTo);
    CHECK(sv.verdict->bound == 2);
}

TEST_CASE("clause relay is exactly-once and bounded by the reported maximum") {
    ServiceUnderTest sv;
    RawClient a(sv.port), b(sv.port);
    a.send_msg(Hello{1, 0});
    a.recv_msg();
    b.send_msg(Hello{2, 0});
    b.recv_msg();

    // A contributes one clause at bound 2 and one at bound 9.
    CHECK(exchange(a, 9, {mk(2, {1, -2}), mk(9, {3, 4, 5})}).empty());

    // B at maxbnd 5: only the bound-2 clause is eligible.
    auto got = exchange(b, 5);
    REQUIRE(got.size() == 1);
    CHECK(got[0] == mk(2, {1, -2}));

    // Repeating at the same bound delivers nothing new (cursor moved).
    CHECK(exchange(b, 5).empty());

    // Raising the bound releases the withheld clause, exactly once.
    auto later = exchange(b, 9);
    REQUIRE(later.size() == 1);
    CHECK(later[0] == mk(9, {3, 4, 5}));
    CHECK(exchange(b, 9).empty());

    // The pusher never sees its own clauses.
    CHECK(exchange(a, 9).empty());

    ResultMsg res;
    res.verdict.kind = RunVerdict::Kind::NoCounterexampleUpTo;
    res.verdict.bound = 9;
    a.send_msg(res);
    a.recv_msg();
    a.send_msg(Bye{});

    // B's next request is answered with the recorded verdict.
    b.send_msg(SyncReq{9});
    CHECK(b.recv_msg() == WireMessage{res});
    b.send_msg(Bye{});
    sv.join();

    // The request log carries strictly increasing sequence numbers.
    auto lines = grep_lines(sv.log.str(), "seq=");
    REQUIRE(lines.size() > 4);
    long prev = 0;
    for (const auto& l : lines) {
        long s = std::stol(l.substr(4));
        CHECK(s == prev + 1);
        prev = s;
    }
}

TEST_CASE("duplicate worker ids are rejected, late joiners get the verdict") {
    ServiceUnderTest sv;
    RawClient a(sv.port);
    a.send_msg(Hello{7, 0});
    a.recv_msg();

    RawClient imposter(sv.port);
    imposter.send_msg(Hello{7, 0});
    CHECK(imposter.closed_by_peer());

    ResultMsg res;
    res.verdict.kind = RunVerdict::Kind::CounterexampleFound;
    res.verdict.bound = 3;
    res.verdict.model = {true, false, true};
    a.send_msg(res);
    a.recv_msg();
    a.send_msg(Bye{});

    RawClient late(sv.port);
    late.send_msg(Hello{8, 0});
    CHECK(late.recv_msg() == WireMessage{res});
    late.send_msg(Bye{});
    sv.join();
    REQUIRE(sv.verdict.has_value());
    CHECK(sv.verdict->model == std::vector<bool>{true, false, true});
}

TEST_CASE("malformed traffic drops the connection but not the service") {
    ServiceUnderTest sv;

    RawClient junk(sv.port);
    junk.send_msg(Hello{40, 0});
    junk.recv_msg();
    junk.send_raw({9, 0, 0, 0, 42, 1, 2, 3, 4, 5, 6, 7, 8, 9});  // unknown tag
    CHECK(junk.closed_by_peer());

    RawClient rude(sv.port);
    rude.send_msg(SyncReq{0});  // no hello first
    CHECK(rude.closed_by_peer());

    RawClient silent(sv.port);
    silent.send_msg(Hello{41, 0});
    silent.recv_msg();
    silent.send_msg(SyncReq{1});
    silent.recv_msg();  // gathered batch arrives...
    // ...but the batch reply never does; the exchange times out and the
    // worker is deregistered.
    CHECK(silent.closed_by_peer(6.0));

    // The service still works for a well-behaved worker.
    RawClient ok(sv.port);
    ok.send_msg(Hello{42, 1});
    ok.recv_msg();
    CHECK(exchange(ok, 1, {mk(1, {2})}).empty());
    ResultMsg res;
    res.verdict.kind = RunVerdict::Kind::NoCounterexampleUpTo;
    res.verdict.bound = 1;
    ok.send_msg(res);
    ok.recv_msg();
    ok.send_msg(Bye{});
    sv.join();
    CHECK(sv.verdict.has_value());

    auto drops = grep_lines(sv.log.str(), "drop");
    CHECK(drops.size() >= 3);
}

TEST_CASE("service retention: a clause is kept until every registered worker has it") {
    ServiceUnderTest sv;
    RawClient a(sv.port), b(sv.port), c(sv.port);
    a.send_msg(Hello{1, 0});
    a.recv_msg();
    b.send_msg(Hello{2, 0});
    b.recv_msg();
    c.send_msg(Hello{3, 0});
    c.recv_msg();

    CHECK(exchange(a, 4, {mk(4, {1, 2})}).empty());
    auto got_b = exchange(b, 4);
    REQUIRE(got_b.size() == 1);

    // C drops out without ever fetching; its deregistration must unwedge
    // the queue rather than strand the clause.
    c.send_msg(Bye{});

    auto got_b2 = exchange(b, 4);
    CHECK(got_b2.empty());

    ResultMsg res;
    res.verdict.kind = RunVerdict::Kind::NoCounterexampleUpTo;
    res.verdict.bound = 4;
    a.send_msg(res);
    a.recv_msg();
    a.send_msg(Bye{});
    b.send_msg(SyncReq{4});
    b.recv_msg();
    b.send_msg(Bye{});
    sv.join();
}

TEST_CASE("worker pair solves through the service and cross-imports clauses") {
    auto inst = gen_counter({.bits = 3, .step = 2, .target = 6, .bounds = 8, .wrap = true});

    ServiceUnderTest sv;
    std::ostringstream log_a, log_b;
    WorkerResult ra, rb;

    std::thread ta([&] {
        WorkerConfig wc;
        wc.port = sv.port;
        wc.worker_id = 100;
        wc.log = &log_a;
        wc.strategy.strategy = Strategy::MultiConv;
        wc.strategy.threads = 2;
        wc.strategy.sharing.kind = SharePolicy::Kind::Full;
        wc.strategy.seeds = {11};
        ra = run_worker(inst.problem, wc);
    });
    std::thread tb([&] {
        WorkerConfig wc;
        wc.port = sv.port;
        wc.worker_id = 200;
        wc.log = &log_b;
        wc.strategy.strategy = Strategy::MultiConv;
        wc.strategy.threads = 2;
        wc.strategy.sharing.kind = SharePolicy::Kind::Full;
        wc.strategy.seeds = {22};
        rb = run_worker(inst.problem, wc);
    });
    ta.join();
    tb.join();
    sv.join();

    // Counter walks 0,2,4,6: the target first appears at step 3.
    REQUIRE(sv.verdict.has_value());
    CHECK(sv.verdict->kind == RunVerdict::Kind::CounterexampleFound);
    CHECK(sv.verdict->bound == 3);
    CHECK(ra.verdict == *sv.verdict);
    CHECK(rb.verdict == *sv.verdict);
    CHECK(model_satisfies(up_to_bound(inst.problem.clauses, 3), sv.verdict->model));

    // Both workers spoke to the service.
    CHECK(!grep_lines(sv.log.str(), "worker=100").empty());
    CHECK(!grep_lines(sv.log.str(), "worker=200").empty());
}

TEST_CASE("clauses travel across workers into remote import logs") {
    // Unsatisfiable ladder: both workers grind through every bound, so the
    // sharing path sees real traffic in both directions.
    auto inst = gen_pigeon({.holes = 4, .sat_bound = 5, .bounds = 5});

    ServiceUnderTest sv;
    std::ostringstream log_a, log_b;
    WorkerResult ra, rb;

    std::thread ta([&] {
        WorkerConfig wc;
        wc.port = sv.port;
        wc.worker_id = 100;
        wc.log = &log_a;
        wc.strategy.strategy = Strategy::MultiConv;
        wc.strategy.threads = 2;
        wc.strategy.sharing.kind = SharePolicy::Kind::Full;
        wc.strategy.seeds = {5};
        ra = run_worker(inst.problem, wc);
    });
    std::thread tb([&] {
        WorkerConfig wc;
        wc.port = sv.port;
        wc.worker_id = 200;
        wc.log = &log_b;
        wc.strategy.strategy = Strategy::MultiConv;
        wc.strategy.threads = 2;
        wc.strategy.sharing.kind = SharePolicy::Kind::Full;
        wc.strategy.seeds = {6};
        rb = run_worker(inst.problem, wc);
    });
    ta.join();
    tb.join();
    sv.join();

    REQUIRE(sv.verdict.has_value());
    CHECK(sv.verdict->kind == RunVerdict::Kind::NoCounterexampleUpTo);
    CHECK(ra.verdict == *sv.verdict);
    CHECK(rb.verdict == *sv.verdict);

    // At least one clause sent up by A appears in B's import log (or the
    // mirror image); lits are canonical so the text matches byte for byte.
    auto lits_of = [](const std::vector<std::string>& lines) {
        std::vector<std::string> out;
        for (const auto& l : lines) {
            auto p = l.find("lits=");
            if (p != std::string::npos) out.push_back(l.substr(p));
        }
        return out;
    };
    auto sent_a = lits_of(grep_lines(log_a.str(), "uplink-send"));
    auto sent_b = lits_of(grep_lines(log_b.str(), "uplink-send"));
    auto imp_a = lits_of(grep_lines(log_a.str(), "import"));
    auto imp_b = lits_of(grep_lines(log_b.str(), "import"));

    auto crossed = [](const std::vector<std::string>& sent,
                      const std::vector<std::string>& imported) {
        for (const auto& s : sent)
            for (const auto& i : imported)
                if (s == i) return true;
        return false;
    };
    bool a_to_b = crossed(sent_a, imp_b);
    bool b_to_a = crossed(sent_b, imp_a);
    CHECK((a_to_b || b_to_a));
}

TEST_CASE("worker degrades to standalone when the service dies mid-run") {
    auto inst = gen_counter({.bits = 3, .step = 1, .target = 6, .bounds = 7, .wrap = false});

    ServiceUnderTest sv;
    // Kill the service early; the worker should still produce the verdict.
    std::thread killer([&] {
        std::this_thread::sleep_for(std::chrono::milliseconds(30));
        sv.stop.store(true);
    });

    WorkerConfig wc;
    wc.port = sv.port;
    wc.worker_id = 300;
    wc.strategy.strategy = Strategy::Conv;
    wc.exchange_timeout_s = 1.0;
    auto r = run_worker(inst.problem, wc);
    killer.join();

    CHECK(r.verdict.kind == RunVerdict::Kind::CounterexampleFound);
    CHECK(r.verdict.bound == 6);
    CHECK(!r.verdict_is_remote);
}
