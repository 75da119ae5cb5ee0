#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "parbmc/portfolio.hpp"
#include "parbmc/types.hpp"

namespace parbmc {

// Framing: 4-byte unsigned little-endian payload length, 1-byte message tag,
// payload. Literals travel as 32-bit little-endian signed DIMACS codes,
// bounds as 32-bit unsigned, strings length-prefixed.
struct WireError : std::exception {
    std::string message;
    explicit WireError(std::string m) : message(std::move(m)) {}
    const char* what() const noexcept override { return message.c_str(); }
};

inline constexpr uint32_t kMaxPayload = 64u << 20;

enum class WireTag : uint8_t {
    Hello = 1,
    SyncReq = 2,
    ClauseBatch = 3,
    Result = 4,
    Bye = 5,
};

struct Hello {
    uint64_t worker_id = 0;
    Bound maxbnd = 0;
    friend bool operator==(const Hello&, const Hello&) = default;
};

struct SyncReq {
    Bound maxbnd = 0;
    friend bool operator==(const SyncReq&, const SyncReq&) = default;
};

struct ClauseBatch {
    std::vector<BoundedClause> clauses;  // sorted by cbnd ascending
    friend bool operator==(const ClauseBatch&, const ClauseBatch&) = default;
};

struct ResultMsg {
    RunVerdict verdict;
    friend bool operator==(const ResultMsg&, const ResultMsg&) = default;
};

struct Bye {
    friend bool operator==(const Bye&, const Bye&) = default;
};

using WireMessage = std::variant<Hello, SyncReq, ClauseBatch, ResultMsg, Bye>;

// Stable-sorts by cbnd; the relative order of clauses with equal bounds is
// what the queue walk produced.
ClauseBatch make_clause_batch(std::vector<BoundedClause> clauses);

// Produces a complete frame. Throws WireError on an unsortable batch or an
// oversized payload.
std::vector<uint8_t> encode(const WireMessage& m);

// Decodes one payload. Throws WireError on unknown tags, truncation, trailing
// bytes, or invariant violations.
WireMessage decode_frame(uint8_t tag, std::span<const uint8_t> payload);

// Incremental defragmenter for a byte stream. Feed what the socket produced,
// then pop frames until empty. Oversized length prefixes throw immediately.
class FrameReader {
  public:
    struct Frame {
        uint8_t tag = 0;
        std::vector<uint8_t> payload;
    };

    void feed(std::span<const uint8_t> bytes);
    std::optional<Frame> next();
    size_t buffered() const { return buf_.size() - pos_; }

  private:
    std::vector<uint8_t> buf_;
    size_t pos_ = 0;
};

}  // namespace parbmc
