#include "algothermo/vm.hpp"

#include <utility>

namespace algothermo {

namespace {

// DFA over partial codewords.  States: 0 = boundary, 1 = "0", 2 = "1",
// 3 = "10", 4 = "11", 5 = "111".  Transition entries either complete a
// token (token set) or move to the next partial state.
struct Transition {
  int8_t next_state;      // -1 when a token completes
  TokenKind token;        // valid when next_state == -1
};

constexpr Transition kDfa[6][2] = {
    /* 0: ""    */ {{1, TokenKind::Inc}, {2, TokenKind::Inc}},
    /* 1: "0"   */ {{-1, TokenKind::Inc}, {-1, TokenKind::Dec}},
    /* 2: "1"   */ {{3, TokenKind::Inc}, {4, TokenKind::Inc}},
    /* 3: "10"  */ {{-1, TokenKind::Swap}, {-1, TokenKind::Add}},
    /* 4: "11"  */ {{-1, TokenKind::While}, {5, TokenKind::Inc}},
    /* 5: "111" */ {{-1, TokenKind::Wend}, {-1, TokenKind::Halt}},
};

constexpr int kPendingBits[6] = {0, 1, 1, 2, 2, 3};

}  // namespace

std::string_view token_name(TokenKind k) {
  switch (k) {
    case TokenKind::Inc: return "INC";
    case TokenKind::Dec: return "DEC";
    case TokenKind::Swap: return "SWAP";
    case TokenKind::Add: return "ADD";
    case TokenKind::While: return "WHILE";
    case TokenKind::Wend: return "WEND";
    case TokenKind::Halt: return "HALT";
  }
  return "?";
}

std::string_view token_codeword(TokenKind k) {
  switch (k) {
    case TokenKind::Inc: return "00";
    case TokenKind::Dec: return "01";
    case TokenKind::Swap: return "100";
    case TokenKind::Add: return "101";
    case TokenKind::While: return "110";
    case TokenKind::Wend: return "1110";
    case TokenKind::Halt: return "1111";
  }
  return "";
}

std::optional<TokenKind> TokenDfa::feed(int bit) {
  const Transition& t = kDfa[state_][bit];
  if (t.next_state < 0) {
    state_ = 0;
    return t.token;
  }
  state_ = static_cast<uint8_t>(t.next_state);
  return std::nullopt;
}

int TokenDfa::pending_bits() const { return kPendingBits[state_]; }

std::optional<DecodedToken> decode_token(const BitString& bits, int pos) {
  TokenDfa dfa;
  for (int i = pos; i < bits.size(); ++i) {
    if (auto tok = dfa.feed(bits.bit(i))) return DecodedToken{*tok, i + 1};
  }
  return std::nullopt;
}

ParseResult parse_program(const BitString& bits) {
  ParseResult result;
  TokenDfa dfa;
  int depth = 0;
  int boundary = 0;
  for (int i = 0; i < bits.size(); ++i) {
    auto tok = dfa.feed(bits.bit(i));
    if (!tok) continue;
    const int next = i + 1;
    switch (*tok) {
      case TokenKind::While:
        ++depth;
        break;
      case TokenKind::Wend:
        if (depth == 0) {
          // No extension can rebalance; the whole subtree diverges.
          result.status = ParseStatus::NotAProgram;
          result.tokens.clear();
          return result;
        }
        --depth;
        break;
      case TokenKind::Halt:
        if (next != bits.size() || depth != 0) {
          result.status = ParseStatus::NotAProgram;
          result.tokens.clear();
          return result;
        }
        result.tokens.push_back(TokenKind::Halt);
        result.status = ParseStatus::Program;
        result.consumed = next;
        return result;
      default:
        break;
    }
    result.tokens.push_back(*tok);
    boundary = next;
  }
  result.status = ParseStatus::NeedsMoreBits;
  result.tokens.clear();
  result.consumed = boundary;
  return result;
}

namespace {

struct MachineState {
  uint32_t pc = 0;
  uint64_t a = 0;
  uint64_t b = 0;
  friend bool operator==(const MachineState&, const MachineState&) = default;
};

// WHILE -> index of matching WEND, WEND -> index of matching WHILE.
std::vector<uint32_t> match_table(const std::vector<TokenKind>& tokens) {
  std::vector<uint32_t> match(tokens.size(), 0);
  std::vector<uint32_t> stack;
  for (uint32_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == TokenKind::While) {
      stack.push_back(i);
    } else if (tokens[i] == TokenKind::Wend) {
      match[i] = stack.back();
      match[stack.back()] = i;
      stack.pop_back();
    }
  }
  return match;
}

}  // namespace

RunOutcome run(const BitString& program, const RunLimits& limits) {
  ParseResult parsed = parse_program(program);
  if (parsed.status == ParseStatus::NotAProgram)
    return {RunStatus::NotAProgram, 0, 0, 0};
  if (parsed.status == ParseStatus::NeedsMoreBits)
    return {RunStatus::NeedsMoreBits, 0, 0, parsed.consumed};

  const std::vector<TokenKind>& code = parsed.tokens;
  const std::vector<uint32_t> match = match_table(code);

  MachineState st;
  uint64_t steps = 0;

  // Brent cycle detection over the full machine state.
  MachineState checkpoint = st;
  uint64_t power = 1, lam = 0;

  while (true) {
    if (steps == limits.max_steps) return {RunStatus::StillRunning, 0, steps, 0};
    switch (code[st.pc]) {
      case TokenKind::Inc:
        if (st.a == limits.register_limit)
          return {RunStatus::StillRunning, 0, steps, 0};
        ++st.a;
        ++st.pc;
        break;
      case TokenKind::Dec:
        if (st.a > 0) --st.a;
        ++st.pc;
        break;
      case TokenKind::Swap:
        std::swap(st.a, st.b);
        ++st.pc;
        break;
      case TokenKind::Add:
        if (st.b > limits.register_limit - st.a)
          return {RunStatus::StillRunning, 0, steps, 0};
        st.a += st.b;
        ++st.pc;
        break;
      case TokenKind::While:
        st.pc = (st.a == 0) ? match[st.pc] + 1 : st.pc + 1;
        break;
      case TokenKind::Wend:
        st.pc = match[st.pc];
        break;
      case TokenKind::Halt:
        return {RunStatus::Halted, st.a, steps + 1, program.size()};
    }
    ++steps;
    ++lam;
    if (st == checkpoint) return {RunStatus::StillRunning, 0, steps, 0};
    if (lam == power) {
      checkpoint = st;
      power <<= 1;
      lam = 0;
    }
  }
}

RunOutcome run(const BitString& program, uint64_t max_steps) {
  return run(program, RunLimits{max_steps, UINT64_MAX});
}

}  // namespace algothermo
