#ifndef ALGOTHERMO_VM_HPP
#define ALGOTHERMO_VM_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "algothermo/bits.hpp"

namespace algothermo {

// Identifies the concrete machine; halting records are only comparable
// between builds that agree on this id.
inline constexpr std::string_view kMachineId = "bitvm1";

// The seven instructions of the register machine.  The codewords below form
// a complete prefix code (Kraft sum exactly 1), so decoding a bit stream is
// total: every position either yields a unique token or runs out of bits.
//
//   INC=00  DEC=01  SWAP=100  ADD=101  WHILE=110  WEND=1110  HALT=1111
enum class TokenKind : uint8_t { Inc, Dec, Swap, Add, While, Wend, Halt };

std::string_view token_name(TokenKind k);
std::string_view token_codeword(TokenKind k);

// Incremental decoder for walking a bit stream one bit at a time.  State is
// the partial codeword consumed since the last token boundary.
class TokenDfa {
 public:
  // Consumes one bit; returns the completed token if this bit finishes a
  // codeword, otherwise nullopt with the state advanced mid-codeword.
  std::optional<TokenKind> feed(int bit);

  bool at_boundary() const { return state_ == 0; }
  int pending_bits() const;
  void reset() { state_ = 0; }

 private:
  uint8_t state_ = 0;
};

struct DecodedToken {
  TokenKind kind;
  int next;  // index just past the codeword
};

// Decodes the token whose codeword starts at bits[pos].  Returns nullopt iff
// bits[pos..] is a proper prefix of some codeword (needs more bits); no
// failure case exists because the code is complete.
std::optional<DecodedToken> decode_token(const BitString& bits, int pos);

enum class ParseStatus : uint8_t { Program, NeedsMoreBits, NotAProgram };

struct ParseResult {
  ParseStatus status = ParseStatus::NotAProgram;
  std::vector<TokenKind> tokens;  // populated only when status == Program
  int consumed = 0;               // last token boundary reached
};

// Decodes tokens left to right.  A program must consume every bit, end with
// its first HALT, and have balanced WHILE/WEND nesting.  Unbalance is
// detected as early as possible: a WEND with no open WHILE dooms every
// extension, so the string is NotAProgram even if bits remain to be read.
ParseResult parse_program(const BitString& bits);

enum class RunStatus : uint8_t { Halted, StillRunning, NeedsMoreBits, NotAProgram };

struct RunOutcome {
  RunStatus status = RunStatus::NotAProgram;
  uint64_t output = 0;    // N(x), valid when Halted
  uint64_t steps = 0;     // Halted: t(x) >= 1; StillRunning: steps executed
  int consumed = 0;       // Halted: V(x); NeedsMoreBits: boundary reached

  bool halted() const { return status == RunStatus::Halted; }
};

struct RunLimits {
  uint64_t max_steps = 1;
  // Inclusive cap on register values; an operation that would exceed it
  // aborts the run as StillRunning (undecided), never a wrong Halted.
  uint64_t register_limit = UINT64_MAX;
};

// Executes the program on registers (A, B) = (0, 0).  Every executed token
// event costs one step, including each WHILE test, each WEND jump, and the
// final HALT, so t(x) >= 1.  State repeats (same pc, A, B) are detected with
// Brent's algorithm and cut short as StillRunning: a repeated state can
// never halt, and stopping early keeps the outcome independent of budget.
RunOutcome run(const BitString& program, const RunLimits& limits);
RunOutcome run(const BitString& program, uint64_t max_steps);

// E(x) = log2 t(x), in bits; zero for one-step programs.
inline double log_runtime(uint64_t steps) { return std::log2(static_cast<double>(steps)); }

}  // namespace algothermo

#endif  // ALGOTHERMO_VM_HPP
