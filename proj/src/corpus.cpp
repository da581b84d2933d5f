#include "algothermo/corpus.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <fstream>
#include <sstream>
#include <thread>

namespace algothermo {

namespace {

struct Sink {
  std::vector<HaltingRecord> records;
  std::vector<RunningString> running;
  std::vector<BitString> live;

  void absorb(Sink&& other) {
    records.insert(records.end(), other.records.begin(), other.records.end());
    running.insert(running.end(), other.running.begin(), other.running.end());
    live.insert(live.end(), other.live.begin(), other.live.end());
  }
};

struct Subtree {
  BitString prefix;
  TokenDfa dfa;
  int loop_depth = 0;
};

// Depth-first walk of the prefix tree.  Invariant at entry: `s` is still
// undecided (mid-token or at a boundary before any HALT, loop depth >= 0).
// Complete programs and doomed subtrees are classified at the edge and never
// descended into.  When `tasks` is set, undecided nodes at `cutoff` depth are
// handed over instead of being explored.
void explore(const BitString& s, TokenDfa dfa, int loop_depth, int max_len,
             const RunLimits& limits, Sink& out, int cutoff,
             std::vector<Subtree>* tasks) {
  if (tasks && s.size() == cutoff) {
    tasks->push_back({s, dfa, loop_depth});
    return;
  }
  if (s.size() == max_len) {
    out.live.push_back(s);
    return;
  }
  for (int b = 0; b < 2; ++b) {
    const BitString c = s.child(b);
    TokenDfa next = dfa;
    const auto tok = next.feed(b);
    if (!tok) {
      explore(c, next, loop_depth, max_len, limits, out, cutoff, tasks);
      continue;
    }
    switch (*tok) {
      case TokenKind::While:
        explore(c, next, loop_depth + 1, max_len, limits, out, cutoff, tasks);
        break;
      case TokenKind::Wend:
        // WEND with no open WHILE dooms every extension.
        if (loop_depth > 0)
          explore(c, next, loop_depth - 1, max_len, limits, out, cutoff, tasks);
        break;
      case TokenKind::Halt:
        if (loop_depth == 0) {
          const RunOutcome r = run(c, limits);
          if (r.halted())
            out.records.push_back({c, r.steps, r.output});
          else
            out.running.push_back({c, r.steps});
        }
        break;  // extensions past the first HALT are never programs
      default:
        explore(c, next, loop_depth, max_len, limits, out, cutoff, tasks);
        break;
    }
  }
}

void check_caps(int max_len, uint64_t max_steps, int len_hard,
                const EnumLimits& limits) {
  if (max_len < 0 || max_len > len_hard)
    throw CapError("max_len " + std::to_string(max_len) +
                   " exceeds the hard limit " + std::to_string(len_hard) +
                   "; raise EnumLimits deliberately if you mean it");
  if (max_steps < 1 || max_steps > limits.max_steps_hard)
    throw CapError("max_steps " + std::to_string(max_steps) +
                   " outside [1, " + std::to_string(limits.max_steps_hard) + "]");
}

CorpusSnapshot finish(Sink&& sink, int max_len, uint64_t max_steps) {
  CorpusSnapshot snap;
  snap.max_len = max_len;
  snap.max_steps = max_steps;
  snap.records = std::move(sink.records);
  snap.running = std::move(sink.running);
  snap.live_prefixes = std::move(sink.live);
  snap.sort_canonical();
  return snap;
}

}  // namespace

CorpusSnapshot dovetail_enumerate(int max_len, uint64_t max_steps, int threads,
                                  const EnumLimits& limits) {
  check_caps(max_len, max_steps, limits.max_len_hard, limits);
  const RunLimits run_limits{max_steps, limits.register_limit};

  Sink base;
  if (threads <= 1 || max_len <= 4) {
    explore(BitString{}, TokenDfa{}, 0, max_len, run_limits, base, -1, nullptr);
    return finish(std::move(base), max_len, max_steps);
  }

  // Serial split at a fixed depth, then a pool over independent subtrees.
  // Determinism comes from the final canonical sort.
  std::vector<Subtree> tasks;
  const int cutoff = std::min(max_len, 11);
  explore(BitString{}, TokenDfa{}, 0, max_len, run_limits, base, cutoff, &tasks);

  std::vector<Sink> per_task(tasks.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i; (i = next.fetch_add(1)) < tasks.size();) {
      explore(tasks[i].prefix, tasks[i].dfa, tasks[i].loop_depth, max_len,
              run_limits, per_task[i], -1, nullptr);
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  for (auto& s : per_task) base.absorb(std::move(s));
  return finish(std::move(base), max_len, max_steps);
}

CorpusSnapshot brute_force_oracle(int max_len, uint64_t max_steps,
                                  const EnumLimits& limits) {
  check_caps(max_len, max_steps, limits.brute_force_len_hard, limits);
  const RunLimits run_limits{max_steps, limits.register_limit};

  Sink sink;
  for (int len = 0; len <= max_len; ++len) {
    const uint64_t count = uint64_t{1} << len;
    for (uint64_t value = 0; value < count; ++value) {
      const BitString s = BitString::from_index(value, len);
      const ParseResult parsed = parse_program(s);
      switch (parsed.status) {
        case ParseStatus::Program: {
          const RunOutcome r = run(s, run_limits);
          if (r.halted())
            sink.records.push_back({s, r.steps, r.output});
          else
            sink.running.push_back({s, r.steps});
          break;
        }
        case ParseStatus::NeedsMoreBits:
          if (len == max_len) sink.live.push_back(s);
          break;
        case ParseStatus::NotAProgram:
          break;
      }
    }
  }
  return finish(std::move(sink), max_len, max_steps);
}

void CorpusSnapshot::sort_canonical() {
  std::sort(records.begin(), records.end(),
            [](const HaltingRecord& a, const HaltingRecord& b) { return a.bits < b.bits; });
  std::sort(running.begin(), running.end(),
            [](const RunningString& a, const RunningString& b) { return a.bits < b.bits; });
  std::sort(live_prefixes.begin(), live_prefixes.end());
}

unsigned __int128 CorpusSnapshot::kraft_units() const {
  unsigned __int128 total = 0;
  const auto units = [](int len) {
    return static_cast<unsigned __int128>(1) << (64 - len);
  };
  for (const auto& r : records) total += units(r.bits.size());
  for (const auto& x : running) total += units(x.bits.size());
  for (const auto& p : live_prefixes) total += units(p.size());
  return total;
}

double CorpusSnapshot::kraft_sum() const {
  return static_cast<double>(kraft_units()) / 18446744073709551616.0;  // 2^64
}

bool CorpusSnapshot::prefix_free() const {
  std::vector<BitString> all;
  all.reserve(records.size() + running.size() + live_prefixes.size());
  for (const auto& r : records) all.push_back(r.bits);
  for (const auto& x : running) all.push_back(x.bits);
  for (const auto& p : live_prefixes) all.push_back(p);
  std::sort(all.begin(), all.end());
  // Quadratic-free check: look up every proper prefix of every member.
  for (const auto& s : all) {
    BitString prefix;
    for (int i = 0; i < s.size(); ++i) {
      if (std::binary_search(all.begin(), all.end(), prefix)) return false;
      prefix.push_back(s.bit(i));
    }
  }
  return true;
}

namespace {

uint64_t parse_u64(std::string_view text, int line, const char* what) {
  uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw FileFormatError(std::string("bad ") + what + " '" + std::string(text) + "'", line);
  return value;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  size_t pos = 0;
  while (pos < line.size()) {
    const size_t space = line.find(' ', pos);
    const size_t end = (space == std::string_view::npos) ? line.size() : space;
    if (end > pos) fields.push_back(line.substr(pos, end - pos));
    pos = end + 1;
  }
  return fields;
}

// The empty bit string (the L=0 live prefix) is spelled "-" on disk so that
// field splitting stays trivial.
BitString parse_bits(std::string_view text, int line) {
  if (text == "-") return {};
  try {
    return BitString::from_string(text);
  } catch (const std::exception& e) {
    throw FileFormatError(std::string("bad bit string: ") + e.what(), line);
  }
}

std::string render_bits(const BitString& bits) {
  return bits.empty() ? "-" : bits.str();
}

}  // namespace

void save_corpus(const CorpusSnapshot& snapshot, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);  // binary: LF endings everywhere
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << "#ALGTHERMO v1 machine=" << snapshot.machine_id << " L=" << snapshot.max_len
      << " Tmax=" << snapshot.max_steps << "\n";
  for (const auto& r : snapshot.records)
    out << "R " << render_bits(r.bits) << " " << r.steps << " " << r.output << "\n";
  for (const auto& x : snapshot.running)
    out << "X " << render_bits(x.bits) << " " << x.steps_so_far << "\n";
  for (const auto& p : snapshot.live_prefixes) out << "P " << render_bits(p) << "\n";
  if (!out.flush()) throw Error("write to '" + path.string() + "' failed");
}

CorpusSnapshot load_corpus(const std::filesystem::path& path, bool verify_records) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");

  std::string line;
  int line_no = 1;
  if (!std::getline(in, line)) throw FileFormatError("missing header", 1);

  auto fields = split_fields(line);
  if (fields.size() != 5 || fields[0] != "#ALGTHERMO")
    throw FileFormatError("expected '#ALGTHERMO v1 machine=... L=... Tmax=...'", 1);
  if (fields[1] != "v1")
    throw FileFormatError("unsupported format version '" + std::string(fields[1]) + "'", 1);
  if (!fields[2].starts_with("machine=") || !fields[3].starts_with("L=") ||
      !fields[4].starts_with("Tmax="))
    throw FileFormatError("malformed header fields", 1);

  CorpusSnapshot snap;
  snap.machine_id = std::string(fields[2].substr(8));
  if (snap.machine_id != kMachineId)
    throw FileFormatError("corpus built for machine '" + snap.machine_id +
                              "' but this build is '" + std::string(kMachineId) + "'",
                          1);
  const uint64_t header_len = parse_u64(fields[3].substr(2), 1, "L");
  if (header_len > static_cast<uint64_t>(BitString::kMaxBits))
    throw FileFormatError("header L=" + std::to_string(header_len) +
                              " exceeds the representable program length " +
                              std::to_string(BitString::kMaxBits),
                          1);
  snap.max_len = static_cast<int>(header_len);
  snap.max_steps = parse_u64(fields[4].substr(5), 1, "Tmax");

  int section = 0;  // 0=R, 1=X, 2=P; only forward transitions allowed
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    fields = split_fields(line);
    const std::string_view tag = fields[0];
    int want;
    if (tag == "R") want = 0;
    else if (tag == "X") want = 1;
    else if (tag == "P") want = 2;
    else throw FileFormatError("unknown line tag '" + std::string(tag) + "'", line_no);
    if (want < section)
      throw FileFormatError("sections must appear in order R, X, P", line_no);
    section = want;

    const auto check_len = [&](const BitString& bits) {
      if (bits.size() > snap.max_len)
        throw FileFormatError("bit string longer than the header L=" +
                                  std::to_string(snap.max_len),
                              line_no);
    };

    if (tag == "R") {
      if (fields.size() != 4) throw FileFormatError("R line needs: R <bits> <t> <N>", line_no);
      HaltingRecord r;
      r.bits = parse_bits(fields[1], line_no);
      check_len(r.bits);
      r.steps = parse_u64(fields[2], line_no, "t");
      r.output = parse_u64(fields[3], line_no, "N");
      if (r.steps < 1) throw FileFormatError("t must be >= 1", line_no);
      if (r.steps > snap.max_steps)
        throw FileFormatError("record claims t beyond the header Tmax=" +
                                  std::to_string(snap.max_steps),
                              line_no);
      if (verify_records) {
        const RunOutcome check = run(r.bits, r.steps);
        if (!check.halted() || check.steps != r.steps || check.output != r.output)
          throw FileFormatError("record fails re-run: '" + r.bits.str() +
                                    "' does not halt with t=" + std::to_string(r.steps) +
                                    " N=" + std::to_string(r.output),
                                line_no);
      }
      snap.records.push_back(std::move(r));
    } else if (tag == "X") {
      if (fields.size() != 3) throw FileFormatError("X line needs: X <bits> <steps>", line_no);
      RunningString x;
      x.bits = parse_bits(fields[1], line_no);
      check_len(x.bits);
      x.steps_so_far = parse_u64(fields[2], line_no, "steps");
      snap.running.push_back(std::move(x));
    } else {
      if (fields.size() != 2) throw FileFormatError("P line needs: P <bits>", line_no);
      BitString p = parse_bits(fields[1], line_no);
      check_len(p);
      snap.live_prefixes.push_back(p);
    }
  }
  snap.sort_canonical();
  return snap;
}

}  // namespace algothermo
