#ifndef ALGOTHERMO_CORPUS_HPP
#define ALGOTHERMO_CORPUS_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "algothermo/bits.hpp"
#include "algothermo/errors.hpp"
#include "algothermo/vm.hpp"

namespace algothermo {

// One halting program with its observables: V = length, t = steps, N = output.
struct HaltingRecord {
  BitString bits;
  uint64_t steps = 1;
  uint64_t output = 0;

  int length() const { return bits.size(); }
  double log_runtime() const { return algothermo::log_runtime(steps); }

  friend bool operator==(const HaltingRecord&, const HaltingRecord&) = default;
};

// A complete parsed program still undecided at the step cap.
struct RunningString {
  BitString bits;
  uint64_t steps_so_far = 0;

  friend bool operator==(const RunningString&, const RunningString&) = default;
};

struct EnumLimits {
  int max_len_hard = 26;
  uint64_t max_steps_hard = uint64_t{1} << 30;
  int brute_force_len_hard = 24;
  uint64_t register_limit = UINT64_MAX;
};

// The decided/undecided state of enumeration up to caps (L, Tmax).
//
// records and running are complete programs; live_prefixes are the maximal
// undecided prefixes (length exactly L, parse ended needing more bits).
// Together the three sets are prefix-free, so their Kraft mass is <= 1.
// All three vectors are kept in length-lexicographic order.
class CorpusSnapshot {
 public:
  std::string machine_id{kMachineId};
  int max_len = 0;         // L
  uint64_t max_steps = 0;  // Tmax
  std::vector<HaltingRecord> records;
  std::vector<RunningString> running;
  std::vector<BitString> live_prefixes;

  // Exact Kraft mass in units of 2^-64 (1.0 == 2^64 units).
  unsigned __int128 kraft_units() const;
  double kraft_sum() const;
  static constexpr unsigned __int128 kraft_one() {
    return static_cast<unsigned __int128>(1) << 64;
  }

  // Exhaustive pairwise prefix check across all three sets; test use only.
  bool prefix_free() const;

  void sort_canonical();

  friend bool operator==(const CorpusSnapshot&, const CorpusSnapshot&) = default;
};

// Decides every bit string of length <= max_len against the step budget by
// walking the prefix tree, never descending past a decided string.  The
// result is identical for any thread count.
CorpusSnapshot dovetail_enumerate(int max_len, uint64_t max_steps, int threads = 1,
                                  const EnumLimits& limits = {});

// Runs every bit string of length <= max_len independently, no tree pruning.
// Verification oracle for dovetail_enumerate; intended for small max_len.
CorpusSnapshot brute_force_oracle(int max_len, uint64_t max_steps,
                                  const EnumLimits& limits = {});

// Line-oriented text format:
//   #ALGTHERMO v1 machine=bitvm1 L=<int> Tmax=<int>
//   R <bits> <t> <N>
//   X <bits> <steps_so_far>
//   P <bits>
// Sections in order R, X, P; lines length-lexicographic within each section.
void save_corpus(const CorpusSnapshot& snapshot, const std::filesystem::path& path);

// verify_records re-runs each R line and refuses the file on any (t, N)
// mismatch against this build's machine.
CorpusSnapshot load_corpus(const std::filesystem::path& path,
                           bool verify_records = false);

}  // namespace algothermo

#endif  // ALGOTHERMO_CORPUS_HPP
