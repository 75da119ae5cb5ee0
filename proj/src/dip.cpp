#include "parbmc/dip.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <map>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "parbmc/shared_db.hpp"
#include "parbmc/wire.hpp"

namespace parbmc {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void set_nonblocking(int fd) {
    int flags = fcntl(fd, F_GETFL, 0);
    if (flags >= 0) fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

void set_nodelay(int fd) {
    int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

// Writes the whole buffer, polling through EAGAIN. False on a dead peer.
bool send_all(int fd, const std::vector<uint8_t>& buf) {
    size_t off = 0;
    while (off < buf.size()) {
        ssize_t n = send(fd, buf.data() + off, buf.size() - off, MSG_NOSIGNAL);
        if (n > 0) {
            off += static_cast<size_t>(n);
            continue;
        }
        if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
            pollfd p{fd, POLLOUT, 0};
            poll(&p, 1, 100);
            continue;
        }
        if (n < 0 && errno == EINTR) continue;
        return false;
    }
    return true;
}

bool send_msg(int fd, const WireMessage& m) { return send_all(fd, encode(m)); }

// Drains everything currently readable into the defragmenter.
// Returns false once the peer has closed or errored.
bool read_available(int fd, FrameReader& reader) {
    uint8_t chunk[65536];
    for (;;) {
        ssize_t n = recv(fd, chunk, sizeof chunk, 0);
        if (n > 0) {
            reader.feed({chunk, static_cast<size_t>(n)});
            if (static_cast<size_t>(n) < sizeof chunk) return true;
            continue;
        }
        if (n == 0) return false;
        if (errno == EAGAIN || errno == EWOULDBLOCK) return true;
        if (errno == EINTR) continue;
        return false;
    }
}

// Blocks (bounded) until one full frame is available on this fd alone.
std::optional<FrameReader::Frame> await_frame(int fd, FrameReader& reader,
                                              double timeout_s) {
    auto t0 = Clock::now();
    for (;;) {
        if (auto f = reader.next()) return f;
        double left = timeout_s - seconds_since(t0);
        if (left <= 0) return std::nullopt;
        pollfd p{fd, POLLIN, 0};
        int rc = poll(&p, 1, std::max(1, static_cast<int>(left * 1000)));
        if (rc < 0 && errno != EINTR) return std::nullopt;
        if (rc > 0 && !read_available(fd, reader)) {
            // Peer closed; whatever it sent first may still complete a frame.
            if (auto f = reader.next()) return f;
            return std::nullopt;
        }
    }
}

int listen_on(const std::string& host, uint16_t port, uint16_t* actual) {
    int fd = socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw std::runtime_error("socket: " + std::string(strerror(errno)));
    int one = 1;
    setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        close(fd);
        throw std::runtime_error("bad listen address: " + host);
    }
    if (bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 ||
        listen(fd, 16) < 0) {
        int e = errno;
        close(fd);
        throw std::runtime_error("bind/listen: " + std::string(strerror(e)));
    }
    sockaddr_in got{};
    socklen_t len = sizeof got;
    getsockname(fd, reinterpret_cast<sockaddr*>(&got), &len);
    *actual = ntohs(got.sin_port);
    set_nonblocking(fd);
    return fd;
}

int connect_to(const std::string& host, uint16_t port, double timeout_s) {
    auto t0 = Clock::now();
    for (;;) {
        int fd = socket(AF_INET, SOCK_STREAM, 0);
        if (fd < 0) return -1;
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(port);
        if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
            close(fd);
            return -1;
        }
        if (connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0) {
            set_nodelay(fd);
            set_nonblocking(fd);
            return fd;
        }
        close(fd);
        if (seconds_since(t0) >= timeout_s) return -1;
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
}

std::string lits_text(const std::vector<Lit>& lits) {
    std::string s;
    for (size_t i = 0; i < lits.size(); ++i) {
        if (i) s += ' ';
        s += std::to_string(lits[i].code);
    }
    return s;
}

const char* kind_name(RunVerdict::Kind k) {
    switch (k) {
        case RunVerdict::Kind::CounterexampleFound: return "cex";
        case RunVerdict::Kind::NoCounterexampleUpTo: return "no-cex";
        default: return "inconclusive";
    }
}

// ---------------------------------------------------------------------------
// Service side.

struct ServiceConn {
    int fd = -1;
    FrameReader reader;
    bool helloed = false;
    bool registered = false;
    uint64_t worker_id = 0;
};

struct Service {
    const DipConfig& cfg;
    SharedClauseDb db;
    std::vector<ServiceConn> conns;
    std::optional<RunVerdict> result;
    uint64_t seq = 0;

    explicit Service(const DipConfig& c) : cfg(c) {}

    void log_line(const std::string& text) {
        if (cfg.log) *cfg.log << "seq=" << ++seq << ' ' << text << '\n' << std::flush;
        else ++seq;
    }

    void drop(ServiceConn& c, const char* why) {
        log_line("worker=" + std::to_string(c.worker_id) + " drop reason=" + why);
        if (c.registered) db.deregister_reader(c.worker_id);
        if (c.fd >= 0) close(c.fd);
        c.fd = -1;
    }

    // False ends the connection (protocol violation or goodbye).
    bool handle(ServiceConn& c, const FrameReader::Frame& f) {
        WireMessage msg;
        try {
            msg = decode_frame(f.tag, f.payload);
        } catch (const WireError& e) {
            drop(c, e.what());
            return false;
        }

        if (auto* h = std::get_if<Hello>(&msg)) {
            if (c.helloed) {
                drop(c, "duplicate hello");
                return false;
            }
            c.helloed = true;
            c.worker_id = h->worker_id;
            if (result) {
                // Too late to join; hand over the verdict and wait for BYE.
                log_line("worker=" + std::to_string(h->worker_id) + " hello after result");
                return send_msg(c.fd, ResultMsg{*result});
            }
            for (const auto& other : conns)
                if (&other != &c && other.fd >= 0 && other.registered &&
                    other.worker_id == h->worker_id) {
                    drop(c, "worker id already in use");
                    return false;
                }
            db.register_reader(h->worker_id, h->maxbnd);
            c.registered = true;
            log_line("worker=" + std::to_string(h->worker_id) +
                     " hello maxbnd=" + std::to_string(h->maxbnd));
            return send_msg(c.fd, *h);
        }

        if (!c.helloed) {
            drop(c, "frame before hello");
            return false;
        }

        if (auto* s = std::get_if<SyncReq>(&msg)) {
            if (result) {
                log_line("worker=" + std::to_string(c.worker_id) + " sync-req -> result");
                return send_msg(c.fd, ResultMsg{*result});
            }
            auto out = db.sync(c.worker_id, s->maxbnd, {});
            log_line("worker=" + std::to_string(c.worker_id) +
                     " sync-req maxbnd=" + std::to_string(s->maxbnd) +
                     " sent=" + std::to_string(out.size()));
            if (!send_msg(c.fd, make_clause_batch(std::move(out)))) {
                drop(c, "send failed");
                return false;
            }
            // The exchange is serialized: nothing else is served until this
            // worker's own batch lands.
            auto reply = await_frame(c.fd, c.reader, cfg.exchange_timeout_s);
            if (!reply) {
                drop(c, "no batch reply");
                return false;
            }
            WireMessage rm;
            try {
                rm = decode_frame(reply->tag, reply->payload);
            } catch (const WireError& e) {
                drop(c, e.what());
                return false;
            }
            auto* batch = std::get_if<ClauseBatch>(&rm);
            if (!batch) {
                drop(c, "expected clause batch");
                return false;
            }
            for (const auto& cl : batch->clauses)
                if (cl.cbnd > s->maxbnd) {
                    drop(c, "clause bound above declared maximum");
                    return false;
                }
            auto extra = db.sync(c.worker_id, s->maxbnd, batch->clauses);
            if (!extra.empty())
                throw InternalSoundnessError("sync exchange interleaved at the service");
            log_line("worker=" + std::to_string(c.worker_id) +
                     " batch received=" + std::to_string(batch->clauses.size()));
            return true;
        }

        if (auto* r = std::get_if<ResultMsg>(&msg)) {
            if (!result) {
                result = r->verdict;
                log_line("worker=" + std::to_string(c.worker_id) + " result kind=" +
                         kind_name(r->verdict.kind) +
                         " bound=" + std::to_string(r->verdict.bound));
            } else {
                log_line("worker=" + std::to_string(c.worker_id) + " result duplicate");
            }
            return send_msg(c.fd, ResultMsg{*result});
        }

        if (std::holds_alternative<Bye>(msg)) {
            drop(c, "bye");
            return false;
        }

        drop(c, "unexpected frame");
        return false;
    }
};

}  // namespace

std::optional<RunVerdict> dip_serve(const DipConfig& cfg) {
    uint16_t port = 0;
    int lfd = listen_on(cfg.host, cfg.port, &port);
    if (cfg.on_listening) cfg.on_listening(port);

    Service sv(cfg);
    sv.log_line("listening port=" + std::to_string(port));

    for (;;) {
        if (cfg.stop && cfg.stop->load()) break;
        sv.conns.erase(std::remove_if(sv.conns.begin(), sv.conns.end(),
                                      [](const ServiceConn& c) { return c.fd < 0; }),
                       sv.conns.end());
        if (sv.result && sv.conns.empty()) break;

        std::vector<pollfd> pfds;
        pfds.push_back({lfd, POLLIN, 0});
        for (auto& c : sv.conns) pfds.push_back({c.fd, POLLIN, 0});
        int rc = poll(pfds.data(), pfds.size(), 100);
        if (rc < 0 && errno != EINTR)
            throw std::runtime_error("poll: " + std::string(strerror(errno)));
        if (rc <= 0) continue;

        if (pfds[0].revents & POLLIN) {
            for (;;) {
                int fd = accept(lfd, nullptr, nullptr);
                if (fd < 0) break;
                set_nodelay(fd);
                set_nonblocking(fd);
                // List mutation invalidates this round's pollfd pairing, so
                // fresh sockets are served from the next iteration.
                ServiceConn c;
                c.fd = fd;
                sv.conns.push_back(std::move(c));
            }
            continue;
        }

        for (size_t i = 0; i < sv.conns.size(); ++i) {
            auto& c = sv.conns[i];
            if (!(pfds[i + 1].revents & (POLLIN | POLLHUP | POLLERR))) continue;
            bool alive = read_available(c.fd, c.reader);
            try {
                while (c.fd >= 0) {
                    auto f = c.reader.next();
                    if (!f) break;
                    if (!sv.handle(c, *f)) break;
                }
            } catch (const WireError& e) {
                if (c.fd >= 0) sv.drop(c, e.what());
            }
            if (!alive && c.fd >= 0) sv.drop(c, "disconnect");
        }
    }

    for (auto& c : sv.conns)
        if (c.fd >= 0) sv.drop(c, "shutdown");
    close(lfd);
    sv.log_line(sv.result ? "done result=" + std::string(kind_name(sv.result->kind))
                          : "done result=none");
    return sv.result;
}

// ---------------------------------------------------------------------------
// Worker side.

namespace {

// Cursor id the communication thread uses inside the worker-local database;
// far above any portfolio thread id.
constexpr SharedClauseDb::ReaderId kUplinkReader = 1'000'000;

struct Uplink {
    int fd = -1;
    FrameReader reader;
    double timeout_s;

    bool send(const WireMessage& m) { return fd >= 0 && send_msg(fd, m); }

    std::optional<WireMessage> recv() {
        if (fd < 0) return std::nullopt;
        auto f = await_frame(fd, reader, timeout_s);
        if (!f) return std::nullopt;
        try {
            return decode_frame(f->tag, f->payload);
        } catch (const WireError&) {
            return std::nullopt;
        }
    }

    void shut() {
        if (fd >= 0) close(fd);
        fd = -1;
    }
};

}  // namespace

WorkerResult run_worker(const IcnfProblem& seq, const WorkerConfig& cfg) {
    std::mutex log_m;
    auto log_line = [&](const std::string& text) {
        if (!cfg.log) return;
        std::lock_guard<std::mutex> lk(log_m);
        *cfg.log << "worker=" << cfg.worker_id << ' ' << text << '\n' << std::flush;
    };

    Uplink up;
    up.timeout_s = cfg.exchange_timeout_s;
    up.fd = connect_to(cfg.host, cfg.port, cfg.connect_timeout_s);
    if (up.fd < 0) throw std::runtime_error("worker: cannot reach the database service");

    if (!up.send(Hello{cfg.worker_id, 0}))
        throw std::runtime_error("worker: handshake send failed");
    auto ack = up.recv();
    if (!ack) throw std::runtime_error("worker: handshake reply missing");
    if (auto* r = std::get_if<ResultMsg>(&*ack)) {
        // The pool already finished; report its verdict without solving.
        log_line("joined after result");
        up.send(Bye{});
        up.shut();
        return {r->verdict, {}, true};
    }
    if (!std::holds_alternative<Hello>(*ack))
        throw std::runtime_error("worker: unexpected handshake reply");
    log_line("connected");

    SharedClauseDb db;
    db.register_reader(kUplinkReader, 0);

    std::atomic<bool> stop_all{false};
    std::atomic<Bound> maxbnd{0};
    std::mutex mu;
    std::condition_variable cv;
    int ticks = 0;
    bool finishing = false;
    std::optional<RunVerdict> remote_result;
    std::vector<BoundedClause> holdback;  // cbnd above maxbnd, kept until eligible

    // One serialized exchange with the service. False stops the mirroring
    // (dead link or a remote verdict); solving itself never depends on it.
    auto global_sync = [&]() -> bool {
        Bound mb = maxbnd.load();
        if (!up.send(SyncReq{mb})) return false;
        auto reply = up.recv();
        if (!reply) return false;
        if (auto* r = std::get_if<ResultMsg>(&*reply)) {
            {
                std::lock_guard<std::mutex> lk(mu);
                remote_result = r->verdict;
            }
            log_line("remote result kind=" + std::string(kind_name(r->verdict.kind)));
            stop_all.store(true);
            return false;
        }
        auto* batch = std::get_if<ClauseBatch>(&*reply);
        if (!batch) return false;

        std::vector<BoundedClause> eligible;
        holdback.swap(eligible);
        for (auto& cl : batch->clauses) {
            log_line("uplink-recv cbnd=" + std::to_string(cl.cbnd) +
                     " lits=" + lits_text(cl.lits));
            eligible.push_back(std::move(cl));
        }
        auto keep = std::partition(eligible.begin(), eligible.end(),
                                   [&](const BoundedClause& cl) { return cl.cbnd <= mb; });
        holdback.assign(std::make_move_iterator(keep),
                        std::make_move_iterator(eligible.end()));
        eligible.erase(keep, eligible.end());

        auto out = db.sync(kUplinkReader, mb, eligible);
        for (const auto& cl : out)
            log_line("uplink-send cbnd=" + std::to_string(cl.cbnd) +
                     " lits=" + lits_text(cl.lits));
        return up.send(make_clause_batch(std::move(out)));
    };

    PortfolioHooks hooks;
    hooks.db = &db;
    hooks.external_stop = &stop_all;
    hooks.on_bound_start = [&](int thread, Bound b) {
        Bound prev = maxbnd.load();
        while (b > prev && !maxbnd.compare_exchange_weak(prev, b)) {
        }
        {
            std::lock_guard<std::mutex> lk(mu);
            ++ticks;
        }
        cv.notify_one();
        log_line("bound thread=" + std::to_string(thread) + " k=" + std::to_string(b));
    };
    hooks.on_share = [&](int thread, const BoundedClause& cl) {
        log_line("share thread=" + std::to_string(thread) +
                 " cbnd=" + std::to_string(cl.cbnd) + " lits=" + lits_text(cl.lits));
    };
    hooks.on_import = [&](int thread, const BoundedClause& cl) {
        log_line("import thread=" + std::to_string(thread) +
                 " cbnd=" + std::to_string(cl.cbnd) + " lits=" + lits_text(cl.lits));
    };

    std::atomic<bool> uplink_live{true};
    std::thread comms([&] {
        for (;;) {
            std::unique_lock<std::mutex> lk(mu);
            cv.wait_for(lk, std::chrono::milliseconds(50),
                        [&] { return ticks > 0 || finishing; });
            if (finishing) return;
            bool due = ticks > 0;
            if (due) ticks = 0;  // coalesce: one exchange covers queued ticks
            lk.unlock();
            if (cfg.stop && cfg.stop->load()) stop_all.store(true);
            if (stop_all.load()) return;
            if (!due) continue;
            if (!global_sync()) {
                if (stop_all.load()) return;  // remote verdict, normal stop
                // Dead link: solving continues standalone. Retire the uplink
                // cursor so it stops pinning clauses in the local database.
                log_line("uplink lost, continuing standalone");
                db.deregister_reader(kUplinkReader);
                uplink_live.store(false);
                up.shut();
                return;
            }
        }
    });

    RunReport report;
    std::exception_ptr run_error;
    try {
        report = run_portfolio(seq, cfg.strategy, hooks);
    } catch (...) {
        run_error = std::current_exception();
    }
    {
        std::lock_guard<std::mutex> lk(mu);
        finishing = true;
    }
    cv.notify_one();
    comms.join();
    if (run_error) {
        up.send(Bye{});
        up.shut();
        std::rethrow_exception(run_error);
    }

    std::optional<RunVerdict> remote;
    {
        std::lock_guard<std::mutex> lk(mu);
        remote = remote_result;
    }

    if (!remote && uplink_live.load()) {
        // Final flush: push what the threads left behind, then hand in the
        // verdict. Either step may surface a remote result instead.
        if (global_sync() || remote_result) {
            std::lock_guard<std::mutex> lk(mu);
            remote = remote_result;
        }
        if (!remote && up.fd >= 0) {
            log_line("result kind=" + std::string(kind_name(report.verdict.kind)) +
                     " bound=" + std::to_string(report.verdict.bound));
            if (up.send(ResultMsg{report.verdict})) {
                auto ackr = up.recv();
                if (ackr) {
                    if (auto* r = std::get_if<ResultMsg>(&*ackr);
                        r && !(r->verdict == report.verdict))
                        remote = r->verdict;  // someone else got there first
                }
            }
        }
    }

    up.send(Bye{});
    up.shut();

    if (remote) return {*remote, std::move(report), true};
    return {report.verdict, std::move(report), false};
}

}  // namespace parbmc
