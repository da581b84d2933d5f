#include "algothermo/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "algothermo/stable_sum.hpp"

namespace algothermo {

namespace {

void require_certified(const EnsembleParams& p) {
  if (!p.certified())
    throw RegionError(
        "partition sum not certified at (beta=" + std::to_string(p.beta) +
        ", gamma=" + std::to_string(p.gamma) + ", delta=" + std::to_string(p.delta) +
        "): need gamma >= ln 2 and beta, delta >= 0 (the full sum diverges or is "
        "unproven elsewhere); pass uncertified explicitly for a lower bound only");
}

}  // namespace

double weight(const HaltingRecord& record, const EnsembleParams& params) {
  return std::exp(-params.beta * record.log_runtime() -
                  params.gamma * record.length() - params.delta * record.output);
}

GibbsCalculator::GibbsCalculator(const CorpusSnapshot& corpus) {
  e_.reserve(corpus.records.size());
  v_.reserve(corpus.records.size());
  n_.reserve(corpus.records.size());
  outputs_.reserve(corpus.records.size());
  for (const auto& r : corpus.records) {
    e_.push_back(r.log_runtime());
    v_.push_back(static_cast<double>(r.bits.size()));
    n_.push_back(static_cast<double>(r.output));
    outputs_.push_back(r.output);
  }
  const size_t buckets = static_cast<size_t>(corpus.max_len) + 1;
  running_count_by_len_.assign(buckets, 0);
  live_count_by_len_.assign(buckets, 0);
  for (const auto& x : corpus.running) ++running_count_by_len_[x.bits.size()];
  for (const auto& p : corpus.live_prefixes) ++live_count_by_len_[p.size()];
  log2_max_steps_ = std::log2(static_cast<double>(corpus.max_steps));
}

double GibbsCalculator::z_trunc(const EnsembleParams& params) const {
  StableSum z;
  for (size_t i = 0; i < e_.size(); ++i)
    z.add(std::exp(-params.beta * e_[i] - params.gamma * v_[i] - params.delta * n_[i]));
  return z.value();
}

double GibbsCalculator::ln_z_trunc(const EnsembleParams& params) const {
  return std::log(z_trunc(params));
}

double GibbsCalculator::tail_running(const EnsembleParams& params) const {
  // Any future halt takes t > Tmax steps, so E > log2 Tmax; N >= 0 and
  // delta >= 0 make e^{-delta N} <= 1.
  StableSum tail;
  const double budget_factor = std::exp(-params.beta * log2_max_steps_);
  for (size_t len = 0; len < running_count_by_len_.size(); ++len) {
    if (running_count_by_len_[len] == 0) continue;
    tail.add(static_cast<double>(running_count_by_len_[len]) * budget_factor *
             std::exp(-params.gamma * static_cast<double>(len)));
  }
  return tail.value();
}

double GibbsCalculator::tail_unexplored(const EnsembleParams& params) const {
  // Halting extensions of a live prefix p form a prefix-free subtree with
  // Kraft mass <= 2^-|p|, and e^{-gamma|x|} = 2^{-|x|} (2 e^{-gamma})^{|x|}
  // with |x| >= |p|+1 and 2 e^{-gamma} <= 1.  The min keeps the bound sound
  // when 2 e^{-gamma} rounds to just above 1 at gamma == ln 2.
  StableSum tail;
  const double shrink = 2.0 * std::exp(-params.gamma);
  for (size_t len = 0; len < live_count_by_len_.size(); ++len) {
    if (live_count_by_len_[len] == 0) continue;
    const double kraft = std::ldexp(1.0, -static_cast<int>(len));
    const double bound =
        std::min(kraft, kraft * std::pow(shrink, static_cast<double>(len + 1)));
    tail.add(static_cast<double>(live_count_by_len_[len]) * bound);
  }
  return tail.value();
}

PartitionEnclosure GibbsCalculator::enclosure(const EnsembleParams& params) const {
  require_certified(params);
  PartitionEnclosure enc;
  enc.z_lo = z_trunc(params);
  enc.tail_running = tail_running(params);
  enc.tail_unexplored = tail_unexplored(params);
  enc.z_hi = enc.z_lo + enc.tail_unexplored + enc.tail_running;
  return enc;
}

double GibbsCalculator::uncertified_lower_bound(const EnsembleParams& params) const {
  return z_trunc(params);
}

EnsembleStats GibbsCalculator::stats(const EnsembleParams& params) const {
  if (e_.empty()) throw Error("gibbs_stats: corpus has no halting records");

  const size_t n = e_.size();
  std::vector<double> w(n), logw(n);
  StableSum zsum;
  for (size_t i = 0; i < n; ++i) {
    logw[i] = -params.beta * e_[i] - params.gamma * v_[i] - params.delta * n_[i];
    w[i] = std::exp(logw[i]);
    zsum.add(w[i]);
  }
  const double z = zsum.value();
  if (!(z > 0) || !std::isfinite(z))
    throw Error("gibbs_stats: truncated partition sum is " + std::to_string(z) +
                " at these parameters (weights under- or overflowed)");
  const double lnz = std::log(z);

  EnsembleStats out;
  out.z_trunc = z;

  StableSum me, mv, mn, ent;
  for (size_t i = 0; i < n; ++i) {
    const double p = w[i] / z;
    me.add(p * e_[i]);
    mv.add(p * v_[i]);
    mn.add(p * n_[i]);
    if (p > 0) ent.add(-p * (logw[i] - lnz));
  }
  out.mean_E = me.value();
  out.mean_V = mv.value();
  out.mean_N = mn.value();
  out.entropy = ent.value();

  StableSum vee, vvv, vnn, cev, cen, cvn;
  for (size_t i = 0; i < n; ++i) {
    const double p = w[i] / z;
    const double de = e_[i] - out.mean_E;
    const double dv = v_[i] - out.mean_V;
    const double dn = n_[i] - out.mean_N;
    vee.add(p * de * de);
    vvv.add(p * dv * dv);
    vnn.add(p * dn * dn);
    cev.add(p * de * dv);
    cen.add(p * de * dn);
    cvn.add(p * dv * dn);
  }
  out.var_E = vee.value();
  out.var_V = vvv.value();
  out.var_N = vnn.value();
  out.cov_EV = cev.value();
  out.cov_EN = cen.value();
  out.cov_VN = cvn.value();

  // Exact identity of the truncated Gibbs family; a violation means a bug.
  const double rhs = lnz + params.beta * out.mean_E + params.gamma * out.mean_V +
                     params.delta * out.mean_N;
  if (std::abs(out.entropy - rhs) > 1e-9 * std::max(1.0, std::abs(out.entropy)))
    throw Error("gibbs_stats: entropy identity violated (S=" +
                std::to_string(out.entropy) + " vs " + std::to_string(rhs) + ")");
  return out;
}

Interval GibbsCalculator::pushforward(const EnsembleParams& params, uint64_t n) const {
  const PartitionEnclosure enc = enclosure(params);
  if (enc.z_lo <= 0)
    throw Error("pushforward: no halting records yet, z lower bound is zero");
  StableSum num;
  for (size_t i = 0; i < outputs_.size(); ++i) {
    if (outputs_[i] == n)
      num.add(std::exp(-params.beta * e_[i] - params.gamma * v_[i] -
                       params.delta * n_[i]));
  }
  const double num_lo = num.value();
  const double tails = enc.tail_unexplored + enc.tail_running;
  return {num_lo / enc.z_hi, std::min(1.0, (num_lo + tails) / enc.z_lo)};
}

EntropyInterval GibbsCalculator::algorithmic_entropy(double gamma, uint64_t n) const {
  if (gamma < std::numbers::ln2)
    throw RegionError("algorithmic entropy requires gamma >= ln 2; the length "
                      "sum diverges below it");
  const EnsembleParams length_only{0.0, gamma, 0.0};
  StableSum witnessed_sum;
  for (size_t i = 0; i < outputs_.size(); ++i) {
    if (outputs_[i] == n) witnessed_sum.add(std::exp(-gamma * v_[i]));
  }
  const double witnessed = witnessed_sum.value();
  const double tails = tail_running(length_only) + tail_unexplored(length_only);

  EntropyInterval out;
  out.has_witness = witnessed > 0;
  out.nats.lo = -std::log(witnessed + tails);
  out.nats.hi = out.has_witness ? -std::log(witnessed)
                                : std::numeric_limits<double>::infinity();
  out.bits.lo = out.nats.lo / std::numbers::ln2;
  out.bits.hi = out.nats.hi / std::numbers::ln2;
  return out;
}

std::optional<ComplexityProxies> GibbsCalculator::complexity_proxies(uint64_t n) const {
  std::optional<ComplexityProxies> out;
  for (size_t i = 0; i < outputs_.size(); ++i) {
    if (outputs_[i] != n) continue;
    const double levin = v_[i] + e_[i];
    if (!out) {
      out = ComplexityProxies{static_cast<uint64_t>(v_[i]), levin};
    } else {
      out->k_proxy = std::min(out->k_proxy, static_cast<uint64_t>(v_[i]));
      out->levin_proxy = std::min(out->levin_proxy, levin);
    }
  }
  return out;
}

std::vector<uint64_t> GibbsCalculator::witnessed_outputs() const {
  std::vector<uint64_t> outs(outputs_);
  std::sort(outs.begin(), outs.end());
  outs.erase(std::unique(outs.begin(), outs.end()), outs.end());
  return outs;
}

PartitionEnclosure partition_enclosure(const CorpusSnapshot& corpus,
                                       const EnsembleParams& params) {
  return GibbsCalculator(corpus).enclosure(params);
}

EnsembleStats gibbs_stats(const CorpusSnapshot& corpus, const EnsembleParams& params) {
  return GibbsCalculator(corpus).stats(params);
}

Interval pushforward_measure(const CorpusSnapshot& corpus, const EnsembleParams& params,
                             uint64_t n) {
  return GibbsCalculator(corpus).pushforward(params, n);
}

EntropyInterval algorithmic_entropy(const CorpusSnapshot& corpus, double gamma,
                                    uint64_t n) {
  return GibbsCalculator(corpus).algorithmic_entropy(gamma, n);
}

std::optional<ComplexityProxies> complexity_proxies(const CorpusSnapshot& corpus,
                                                    uint64_t n) {
  return GibbsCalculator(corpus).complexity_proxies(n);
}

FiniteMeasure FiniteMeasure::point_mass(uint64_t outcome) {
  FiniteMeasure m;
  m.set(outcome, 1.0);
  return m;
}

void FiniteMeasure::set(uint64_t outcome, double mass) {
  if (mass < 0 || !std::isfinite(mass))
    throw std::invalid_argument("FiniteMeasure: mass must be finite and >= 0");
  mass_[outcome] = mass;
}

double FiniteMeasure::mass(uint64_t outcome) const {
  const auto it = mass_.find(outcome);
  return it == mass_.end() ? 0.0 : it->second;
}

double FiniteMeasure::total() const {
  StableSum t;
  for (const auto& [_, m] : mass_) t.add(m);
  return t.value();
}

bool FiniteMeasure::is_probability(double tol) const {
  return std::abs(total() - 1.0) <= tol;
}

FiniteMeasure FiniteMeasure::normalized() const {
  const double t = total();
  if (t <= 0) throw Error("FiniteMeasure: cannot normalize zero measure");
  FiniteMeasure out;
  for (const auto& [x, m] : mass_) out.set(x, m / t);
  return out;
}

double relative_entropy(const FiniteMeasure& p, const FiniteMeasure& q) {
  if (!p.is_probability() || !q.is_probability())
    throw std::invalid_argument("relative_entropy: both arguments must be "
                                "probability measures (masses summing to 1)");
  StableSum s;
  for (const auto& [x, px] : p.masses()) {
    if (px <= 0) continue;
    const double qx = q.mass(x);
    if (qx <= 0)
      throw Error("relative_entropy: q vanishes at outcome " + std::to_string(x) +
                  " inside the support of p");
    s.add(-px * std::log(px / qx));
  }
  return s.value();
}

}  // namespace algothermo
