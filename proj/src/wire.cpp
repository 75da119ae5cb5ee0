#include "parbmc/wire.hpp"

#include <algorithm>
#include <cstring>

namespace parbmc {

namespace {

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back((uint8_t)(v & 0xff));
    out.push_back((uint8_t)((v >> 8) & 0xff));
    out.push_back((uint8_t)((v >> 16) & 0xff));
    out.push_back((uint8_t)((v >> 24) & 0xff));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
    put_u32(out, (uint32_t)(v & 0xffffffffull));
    put_u32(out, (uint32_t)(v >> 32));
}

void put_i32(std::vector<uint8_t>& out, int32_t v) { put_u32(out, (uint32_t)v); }

void put_string(std::vector<uint8_t>& out, const std::string& s) {
    put_u32(out, (uint32_t)s.size());
    out.insert(out.end(), s.begin(), s.end());
}

struct Cursor {
    std::span<const uint8_t> data;
    size_t pos = 0;

    void need(size_t n) const {
        if (data.size() - pos < n) throw WireError("truncated payload");
    }
    uint32_t u32() {
        need(4);
        uint32_t v = (uint32_t)data[pos] | ((uint32_t)data[pos + 1] << 8) |
                     ((uint32_t)data[pos + 2] << 16) | ((uint32_t)data[pos + 3] << 24);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        uint64_t lo = u32();
        return lo | ((uint64_t)u32() << 32);
    }
    int32_t i32() { return (int32_t)u32(); }
    uint8_t u8() {
        need(1);
        return data[pos++];
    }
    std::string str() {
        uint32_t n = u32();
        need(n);
        std::string s((const char*)data.data() + pos, n);
        pos += n;
        return s;
    }
    void done() const {
        if (pos != data.size()) throw WireError("trailing bytes in payload");
    }
};

Bound checked_bound(uint32_t v) {
    if (v > (uint32_t)INT32_MAX) throw WireError("bound out of range");
    return (Bound)v;
}

void put_bound(std::vector<uint8_t>& out, Bound b) {
    if (b < 0) throw WireError("negative bound is not encodable");
    put_u32(out, (uint32_t)b);
}

}  // namespace

ClauseBatch make_clause_batch(std::vector<BoundedClause> clauses) {
    std::stable_sort(clauses.begin(), clauses.end(),
                     [](const BoundedClause& a, const BoundedClause& b) { return a.cbnd < b.cbnd; });
    return ClauseBatch{std::move(clauses)};
}

std::vector<uint8_t> encode(const WireMessage& m) {
    std::vector<uint8_t> payload;
    uint8_t tag = 0;
    if (const Hello* h = std::get_if<Hello>(&m)) {
        tag = (uint8_t)WireTag::Hello;
        put_u64(payload, h->worker_id);
        put_bound(payload, h->maxbnd);
    } else if (const SyncReq* s = std::get_if<SyncReq>(&m)) {
        tag = (uint8_t)WireTag::SyncReq;
        put_bound(payload, s->maxbnd);
    } else if (const ClauseBatch* b = std::get_if<ClauseBatch>(&m)) {
        tag = (uint8_t)WireTag::ClauseBatch;
        put_u32(payload, (uint32_t)b->clauses.size());
        Bound prev = -1;
        for (const BoundedClause& c : b->clauses) {
            if (c.cbnd < prev) throw WireError("clause batch not sorted by bound");
            prev = c.cbnd;
            put_bound(payload, c.cbnd);
            put_u32(payload, (uint32_t)c.lits.size());
            for (Lit l : c.lits) {
                if (l.code == 0) throw WireError("zero literal in clause");
                put_i32(payload, l.code);
            }
        }
    } else if (const ResultMsg* r = std::get_if<ResultMsg>(&m)) {
        tag = (uint8_t)WireTag::Result;
        switch (r->verdict.kind) {
            case RunVerdict::Kind::CounterexampleFound: {
                payload.push_back(0);
                put_bound(payload, r->verdict.bound);
                put_u32(payload, (uint32_t)r->verdict.model.size());
                for (bool v : r->verdict.model) payload.push_back(v ? 1 : 0);
                break;
            }
            case RunVerdict::Kind::NoCounterexampleUpTo:
                payload.push_back(1);
                put_bound(payload, r->verdict.bound);
                break;
            case RunVerdict::Kind::Inconclusive:
                payload.push_back(2);
                put_string(payload, r->verdict.reason);
                break;
        }
    } else {
        tag = (uint8_t)WireTag::Bye;
    }
    if (payload.size() > kMaxPayload) throw WireError("payload exceeds the frame limit");

    std::vector<uint8_t> frame;
    frame.reserve(payload.size() + 5);
    put_u32(frame, (uint32_t)payload.size());
    frame.push_back(tag);
    frame.insert(frame.end(), payload.begin(), payload.end());
    return frame;
}

WireMessage decode_frame(uint8_t tag, std::span<const uint8_t> payload) {
    Cursor c{payload};
    switch (tag) {
        case (uint8_t)WireTag::Hello: {
            Hello h;
            h.worker_id = c.u64();
            h.maxbnd = checked_bound(c.u32());
            c.done();
            return h;
        }
        case (uint8_t)WireTag::SyncReq: {
            SyncReq s;
            s.maxbnd = checked_bound(c.u32());
            c.done();
            return s;
        }
        case (uint8_t)WireTag::ClauseBatch: {
            ClauseBatch b;
            uint32_t n = c.u32();
            Bound prev = -1;
            for (uint32_t i = 0; i < n; ++i) {
                BoundedClause cl;
                cl.cbnd = checked_bound(c.u32());
                if (cl.cbnd < prev) throw WireError("clause batch not sorted by bound");
                prev = cl.cbnd;
                uint32_t nlits = c.u32();
                if ((size_t)nlits * 4 > payload.size()) throw WireError("clause length implausible");
                cl.lits.reserve(nlits);
                for (uint32_t j = 0; j < nlits; ++j) {
                    int32_t code = c.i32();
                    if (code == 0) throw WireError("zero literal in clause");
                    cl.lits.push_back(Lit(code));
                }
                b.clauses.push_back(std::move(cl));
            }
            c.done();
            return b;
        }
        case (uint8_t)WireTag::Result: {
            ResultMsg r;
            uint8_t kind = c.u8();
            if (kind == 0) {
                r.verdict.kind = RunVerdict::Kind::CounterexampleFound;
                r.verdict.bound = checked_bound(c.u32());
                uint32_t n = c.u32();
                if ((size_t)n > payload.size()) throw WireError("model length implausible");
                r.verdict.model.resize(n);
                for (uint32_t i = 0; i < n; ++i) {
                    uint8_t v = c.u8();
                    if (v > 1) throw WireError("model byte out of range");
                    r.verdict.model[i] = v == 1;
                }
            } else if (kind == 1) {
                r.verdict.kind = RunVerdict::Kind::NoCounterexampleUpTo;
                r.verdict.bound = checked_bound(c.u32());
            } else if (kind == 2) {
                r.verdict.kind = RunVerdict::Kind::Inconclusive;
                r.verdict.bound = -1;
                r.verdict.reason = c.str();
            } else {
                throw WireError("unknown result kind");
            }
            c.done();
            return r;
        }
        case (uint8_t)WireTag::Bye: {
            c.done();
            return Bye{};
        }
        default:
            throw WireError("unknown message tag " + std::to_string((int)tag));
    }
}

void FrameReader::feed(std::span<const uint8_t> bytes) {
    if (pos_ > 0 && pos_ == buf_.size()) {
        buf_.clear();
        pos_ = 0;
    }
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

std::optional<FrameReader::Frame> FrameReader::next() {
    size_t avail = buf_.size() - pos_;
    if (avail < 5) return std::nullopt;
    uint32_t len = (uint32_t)buf_[pos_] | ((uint32_t)buf_[pos_ + 1] << 8) |
                   ((uint32_t)buf_[pos_ + 2] << 16) | ((uint32_t)buf_[pos_ + 3] << 24);
    if (len > kMaxPayload) throw WireError("frame length exceeds the limit");
    if (avail < 5 + (size_t)len) return std::nullopt;
    Frame f;
    f.tag = buf_[pos_ + 4];
    f.payload.assign(buf_.begin() + (ptrdiff_t)(pos_ + 5), buf_.begin() + (ptrdiff_t)(pos_ + 5 + len));
    pos_ += 5 + len;
    if (pos_ == buf_.size()) {
        buf_.clear();
        pos_ = 0;
    }
    return f;
}

}  // namespace parbmc
