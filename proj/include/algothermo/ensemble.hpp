#ifndef ALGOTHERMO_ENSEMBLE_HPP
#define ALGOTHERMO_ENSEMBLE_HPP

#include <array>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <vector>

#include "algothermo/corpus.hpp"
#include "algothermo/errors.hpp"

namespace algothermo {

// Conjugate variables of (E, V, N).  Enclosures are only certified where the
// full sum provably converges: gamma >= ln 2 and beta, delta >= 0.
struct EnsembleParams {
  double beta = 0;
  double gamma = 0;
  double delta = 0;

  bool certified() const {
    return beta >= 0 && delta >= 0 && gamma >= std::numbers::ln2;
  }

  double& coord(int i) { return i == 0 ? beta : (i == 1 ? gamma : delta); }
  double coord(int i) const { return i == 0 ? beta : (i == 1 ? gamma : delta); }

  friend bool operator==(const EnsembleParams&, const EnsembleParams&) = default;
};

// Certified interval around the (uncomputable) full partition sum at the
// given truncation: z_lo counts decided programs, the tails bound everything
// still undecided.
struct PartitionEnclosure {
  double z_lo = 0;
  double z_hi = 0;
  double tail_unexplored = 0;  // extensions of live prefixes
  double tail_running = 0;     // budget-undecided complete programs
};

// Moments of the truncated Gibbs measure over the record set.
struct EnsembleStats {
  double mean_E = 0, mean_V = 0, mean_N = 0;
  double var_E = 0, var_V = 0, var_N = 0;
  double cov_EV = 0, cov_EN = 0, cov_VN = 0;
  double entropy = 0;  // nats
  double z_trunc = 0;
};

struct Interval {
  double lo = 0;
  double hi = 0;
};

struct EntropyInterval {
  Interval nats;
  Interval bits;
  bool has_witness = false;  // without a witness only the lower endpoint holds
};

struct ComplexityProxies {
  uint64_t k_proxy = 0;    // min length over records with this output
  double levin_proxy = 0;  // min length + log2 runtime over the same records
};

// Gibbs weight e^{-beta E - gamma V - delta N} of one record.
double weight(const HaltingRecord& record, const EnsembleParams& params);

// Precomputed observable columns for fast repeated evaluation at many
// parameter points.  All methods are const and safe to call concurrently.
class GibbsCalculator {
 public:
  explicit GibbsCalculator(const CorpusSnapshot& corpus);

  size_t record_count() const { return v_.size(); }

  // Truncated partition sum over records, compensated, canonical order.
  double z_trunc(const EnsembleParams& params) const;
  double ln_z_trunc(const EnsembleParams& params) const;

  // Certified enclosure; throws RegionError outside the certified region.
  PartitionEnclosure enclosure(const EnsembleParams& params) const;

  // Lower bound only, available at any parameters (explicitly uncertified).
  double uncertified_lower_bound(const EnsembleParams& params) const;

  // Truncated Gibbs moments; throws on an empty record set.  Internally
  // verifies S = ln Z + beta E + gamma V + delta N to 1e-9 relative.
  EnsembleStats stats(const EnsembleParams& params) const;

  // Interval for the pushforward output probability q(n); certified region.
  Interval pushforward(const EnsembleParams& params, uint64_t n) const;

  // Interval for -ln sum_{N(x)=n} e^{-gamma |x|}; gamma >= ln 2 required.
  EntropyInterval algorithmic_entropy(double gamma, uint64_t n) const;

  std::optional<ComplexityProxies> complexity_proxies(uint64_t n) const;

  // Distinct outputs among records, ascending.
  std::vector<uint64_t> witnessed_outputs() const;

 private:
  double tail_running(const EnsembleParams& params) const;
  double tail_unexplored(const EnsembleParams& params) const;

  std::vector<double> e_, v_, n_;   // observables, canonical record order
  std::vector<uint64_t> outputs_;  // exact outputs for witness matching
  std::vector<uint64_t> running_count_by_len_, live_count_by_len_;
  double log2_max_steps_ = 0;
};

// One-shot convenience wrappers over a freshly built calculator.
PartitionEnclosure partition_enclosure(const CorpusSnapshot& corpus,
                                       const EnsembleParams& params);
EnsembleStats gibbs_stats(const CorpusSnapshot& corpus, const EnsembleParams& params);
Interval pushforward_measure(const CorpusSnapshot& corpus, const EnsembleParams& params,
                             uint64_t n);
EntropyInterval algorithmic_entropy(const CorpusSnapshot& corpus, double gamma,
                                    uint64_t n);
std::optional<ComplexityProxies> complexity_proxies(const CorpusSnapshot& corpus,
                                                    uint64_t n);

// Finitely supported measure on the naturals.
class FiniteMeasure {
 public:
  FiniteMeasure() = default;
  static FiniteMeasure point_mass(uint64_t outcome);

  void set(uint64_t outcome, double mass);
  double mass(uint64_t outcome) const;
  double total() const;
  bool is_probability(double tol = 1e-12) const;
  FiniteMeasure normalized() const;
  const std::map<uint64_t, double>& masses() const { return mass_; }

 private:
  std::map<uint64_t, double> mass_;
};

// -sum p ln(p/q) in nats: minus the Kullback-Leibler divergence, so always
// <= 0 with equality iff p == q.  Requires q > 0 wherever p > 0.
double relative_entropy(const FiniteMeasure& p, const FiniteMeasure& q);

}  // namespace algothermo

#endif  // ALGOTHERMO_ENSEMBLE_HPP
