// Command-line surface: enumeration, ensemble statistics, enclosures,
// algorithmic entropy, identity checks, and heat-engine cycles.
//
// Exit codes: 0 success, 1 validation/region/file error, 2 numerical
// condition error (ill-conditioned Jacobian or failed continuation).

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "algothermo/corpus.hpp"
#include "algothermo/ensemble.hpp"
#include "algothermo/thermo.hpp"

namespace at = algothermo;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// CSV output is buffered and written only after the command succeeds, so a
// failing run never leaves a partial file behind.
class CsvBuffer {
 public:
  explicit CsvBuffer(std::string path) : path_(std::move(path)) {}

  void row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) body_ << ',';
      body_ << cells[i];
    }
    body_ << '\n';
  }

  void flush() {
    if (path_.empty()) return;
    std::ofstream out(path_, std::ios::binary);
    if (!out) throw at::Error("cannot open CSV target '" + path_ + "'");
    out << body_.str();
    if (!out.flush()) throw at::Error("write to CSV target '" + path_ + "' failed");
  }

  bool enabled() const { return !path_.empty(); }

 private:
  std::string path_;
  std::ostringstream body_;
};

at::CorpusSnapshot load_or_die(const std::string& path) {
  return at::load_corpus(path);
}

void print_enclosure(const at::PartitionEnclosure& enc) {
  std::cout << "  Z lower bound      : " << fmt(enc.z_lo) << "\n"
            << "  Z upper bound      : " << fmt(enc.z_hi) << "\n"
            << "  enclosure width    : " << fmt(enc.z_hi - enc.z_lo) << "\n"
            << "  tail (unexplored)  : " << fmt(enc.tail_unexplored) << "\n"
            << "  tail (running)     : " << fmt(enc.tail_running) << "\n";
}

void print_stats(const at::EnsembleStats& st) {
  std::cout << "  mean E (log2 runtime) : " << fmt(st.mean_E) << "\n"
            << "  mean V (length)       : " << fmt(st.mean_V) << "\n"
            << "  mean N (output)       : " << fmt(st.mean_N) << "\n"
            << "  var E / V / N         : " << fmt(st.var_E) << " / " << fmt(st.var_V)
            << " / " << fmt(st.var_N) << "\n"
            << "  cov EV / EN / VN      : " << fmt(st.cov_EV) << " / "
            << fmt(st.cov_EN) << " / " << fmt(st.cov_VN) << "\n"
            << "  entropy S             : " << fmt(st.entropy) << " nats = "
            << fmt(st.entropy / std::numbers::ln2) << " bits\n"
            << "  truncated Z           : " << fmt(st.z_trunc) << "\n";
}

int cmd_enumerate(int max_len, uint64_t max_steps, int threads,
                  const std::string& out_path, bool verify) {
  const auto snapshot = at::dovetail_enumerate(max_len, max_steps, threads);
  at::save_corpus(snapshot, out_path);
  std::cout << "enumerated machine " << snapshot.machine_id << " up to L=" << max_len
            << ", Tmax=" << max_steps << "\n"
            << "  halting records    : " << snapshot.records.size() << "\n"
            << "  running (undecided): " << snapshot.running.size() << "\n"
            << "  live prefixes      : " << snapshot.live_prefixes.size() << "\n"
            << "  Kraft mass         : " << fmt(snapshot.kraft_sum()) << "\n"
            << "  wrote " << out_path << "\n";
  if (verify) {
    const auto reloaded = at::load_corpus(out_path, /*verify_records=*/true);
    if (!(reloaded == snapshot)) throw at::Error("verify: reloaded snapshot differs");
    std::cout << "  verify: all records re-ran identically\n";
  }
  return kExitOk;
}

int cmd_stats(const std::string& corpus_path, double beta, double gamma, double delta,
              const std::string& csv_path, bool uncertified) {
  const auto corpus = load_or_die(corpus_path);
  const at::GibbsCalculator calc(corpus);
  const at::EnsembleParams params{beta, gamma, delta};

  std::optional<at::PartitionEnclosure> enc;
  if (!uncertified) {
    enc = calc.enclosure(params);  // throws RegionError outside certified region
  } else {
    std::cout << "UNCERTIFIED: lower bounds only at (beta=" << fmt(beta)
              << ", gamma=" << fmt(gamma) << ", delta=" << fmt(delta) << ")\n";
  }
  const auto st = calc.stats(params);
  const double z_lo = enc ? enc->z_lo : calc.uncertified_lower_bound(params);

  std::cout << "ensemble at beta=" << fmt(beta) << " gamma=" << fmt(gamma)
            << " delta=" << fmt(delta) << " (corpus L=" << corpus.max_len
            << ", Tmax=" << corpus.max_steps << ", records=" << corpus.records.size()
            << ")\n";
  if (params.beta > 0) {
    const auto cj = at::conjugates(params);
    std::cout << "  T=" << fmt(cj.temperature) << "  P=" << fmt(cj.pressure)
              << "  mu=" << fmt(cj.potential) << "\n";
  }
  if (enc) print_enclosure(*enc);
  else std::cout << "  Z lower bound      : " << fmt(z_lo) << " (no upper bound)\n";
  std::cout << "truncated Gibbs ensemble over " << corpus.records.size()
            << " records:\n";
  print_stats(st);

  CsvBuffer csv(csv_path);
  if (csv.enabled()) {
    csv.row({"beta", "gamma", "delta", "z_lo", "z_hi", "z_trunc", "mean_E", "mean_V",
             "mean_N", "var_E", "var_V", "var_N", "cov_EV", "cov_EN", "cov_VN",
             "entropy_nats", "entropy_bits"});
    csv.row({fmt(beta), fmt(gamma), fmt(delta), fmt(z_lo),
             enc ? fmt(enc->z_hi) : "nan", fmt(st.z_trunc), fmt(st.mean_E),
             fmt(st.mean_V), fmt(st.mean_N), fmt(st.var_E), fmt(st.var_V),
             fmt(st.var_N), fmt(st.cov_EV), fmt(st.cov_EN), fmt(st.cov_VN),
             fmt(st.entropy), fmt(st.entropy / std::numbers::ln2)});
    csv.flush();
  }
  return kExitOk;
}

int cmd_omega(const std::string& corpus_path) {
  const auto corpus = load_or_die(corpus_path);
  const at::GibbsCalculator calc(corpus);
  const at::EnsembleParams omega_point{0.0, std::numbers::ln2, 0.0};
  const auto enc = calc.enclosure(omega_point);
  std::cout << "halting-probability enclosure at (beta=0, gamma=ln 2, delta=0), "
            << "corpus L=" << corpus.max_len << " Tmax=" << corpus.max_steps << ":\n";
  print_enclosure(enc);
  std::cout << "  -log2(Z_hi) .. -log2(Z_lo): " << fmt(-std::log2(enc.z_hi)) << " .. "
            << fmt(-std::log2(enc.z_lo)) << " bits\n";
  return kExitOk;
}

int cmd_entropy(const std::string& corpus_path, double gamma, uint64_t n) {
  const auto corpus = load_or_die(corpus_path);
  const at::GibbsCalculator calc(corpus);
  const auto interval = calc.algorithmic_entropy(gamma, n);
  std::cout << "algorithmic entropy of output " << n << " at gamma=" << fmt(gamma)
            << " (corpus L=" << corpus.max_len << "):\n";
  if (!interval.has_witness)
    std::cout << "  NO WITNESS at this truncation; lower endpoint only\n";
  std::cout << "  nats : [" << fmt(interval.nats.lo) << ", " << fmt(interval.nats.hi)
            << "]\n"
            << "  bits : [" << fmt(interval.bits.lo) << ", " << fmt(interval.bits.hi)
            << "]\n";
  if (const auto proxies = calc.complexity_proxies(n)) {
    std::cout << "  shortest witness (Kolmogorov proxy) : " << proxies->k_proxy
              << " bits\n"
              << "  min length + log2 runtime (Levin proxy) : "
              << fmt(proxies->levin_proxy) << " bits\n";
  }
  return kExitOk;
}

int cmd_relations(const std::string& corpus_path, double beta, double gamma,
                  double delta, double h, const std::string& csv_path) {
  const auto corpus = load_or_die(corpus_path);
  const at::GibbsCalculator calc(corpus);
  const at::EnsembleParams params{beta, gamma, delta};
  if (params.beta <= 0)
    throw at::RegionError("relations needs beta > 0 for the conjugate variables");
  if (!params.certified())
    throw at::RegionError("relations: point outside the certified region");

  const auto st = calc.stats(params);
  const auto gh = at::lnz_derivatives(calc, params, h);

  const auto rel = [](double a, double b) {
    return std::abs(a - b) / std::max(1.0, std::abs(b));
  };
  const double grad_resid = std::max(
      {rel(gh.grad[0], -st.mean_E), rel(gh.grad[1], -st.mean_V),
       rel(gh.grad[2], -st.mean_N)});

  const double cov[3][3] = {{st.var_E, st.cov_EV, st.cov_EN},
                            {st.cov_EV, st.var_V, st.cov_VN},
                            {st.cov_EN, st.cov_VN, st.var_N}};
  double hess_resid = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double scale = std::max(1e-12, std::sqrt(cov[i][i] * cov[j][j]));
      hess_resid = std::max(hess_resid, std::abs(gh.hess[i][j] - cov[i][j]) / scale);
    }

  const double entropy_resid =
      std::abs(st.entropy - (std::log(st.z_trunc) + beta * st.mean_E +
                             gamma * st.mean_V + delta * st.mean_N)) /
      std::max(1.0, std::abs(st.entropy));

  const auto cj = at::conjugates(params);
  const double ds_de = at::constrained_partial(calc, at::Quantity::S, at::Quantity::E,
                                               {at::Quantity::V, at::Quantity::N},
                                               params, h);
  const double de_dv = at::constrained_partial(calc, at::Quantity::E, at::Quantity::V,
                                               {at::Quantity::S, at::Quantity::N},
                                               params, h);
  const double de_dn = at::constrained_partial(calc, at::Quantity::E, at::Quantity::N,
                                               {at::Quantity::S, at::Quantity::V},
                                               params, h);
  const double dt_dv = at::constrained_partial(calc, at::Quantity::T, at::Quantity::V,
                                               {at::Quantity::S, at::Quantity::N},
                                               params, h);
  const double dp_ds = at::constrained_partial(calc, at::Quantity::P, at::Quantity::S,
                                               {at::Quantity::V, at::Quantity::N},
                                               params, h);

  const double resid_ds_de = std::abs(ds_de - beta) / std::abs(beta);
  const double resid_de_dv = std::abs(de_dv + cj.pressure) /
                             std::max(1e-12, std::abs(cj.pressure));
  const double resid_de_dn = std::abs(de_dn - cj.potential) /
                             std::max(1e-12, std::abs(cj.potential));
  const double maxwell_scale = std::max({std::abs(dt_dv), std::abs(dp_ds), 1e-12});
  const double resid_maxwell = std::abs(dt_dv + dp_ds) / maxwell_scale;

  double fund_resid = 0;
  const at::Vec3 dirs[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  for (const auto& d : dirs)
    fund_resid = std::max(fund_resid, at::fundamental_residual(calc, params, d, h));

  std::cout << "identity residuals at beta=" << fmt(beta) << " gamma=" << fmt(gamma)
            << " delta=" << fmt(delta) << " (h=" << fmt(h) << "):\n"
            << "  grad ln Z vs -(E,V,N) means        : " << fmt(grad_resid) << "\n"
            << "  hess ln Z vs covariance matrix     : " << fmt(hess_resid) << "\n"
            << "  S = ln Z + bE + gV + dN            : " << fmt(entropy_resid) << "\n"
            << "  dS/dE|V,N = beta                   : " << fmt(resid_ds_de) << "\n"
            << "  dE/dV|S,N = -P                     : " << fmt(resid_de_dv) << "\n"
            << "  dE/dN|S,V = mu                     : " << fmt(resid_de_dn) << "\n"
            << "  Maxwell dT/dV|S,N = -dP/dS|V,N     : " << fmt(resid_maxwell) << "\n"
            << "  fundamental dE = TdS - PdV + mu dN : " << fmt(fund_resid) << "\n";

  CsvBuffer csv(csv_path);
  if (csv.enabled()) {
    csv.row({"beta", "gamma", "delta", "h", "grad_resid", "hess_resid",
             "entropy_resid", "ds_de_resid", "de_dv_resid", "de_dn_resid",
             "maxwell_resid", "fundamental_resid"});
    csv.row({fmt(beta), fmt(gamma), fmt(delta), fmt(h), fmt(grad_resid),
             fmt(hess_resid), fmt(entropy_resid), fmt(resid_ds_de), fmt(resid_de_dv),
             fmt(resid_de_dn), fmt(resid_maxwell), fmt(fund_resid)});
    csv.flush();
  }
  return kExitOk;
}

// Loop-spec grammar, one directive per line ('#' starts a comment):
//   START <beta> <gamma> <delta>
//   ISO_V <beta_target>     hold mean length and mean output, drive beta
//   ISO_S <gamma_target>    hold entropy and mean output, drive gamma
//   ISO_V MATCH_S           drive beta until entropy returns to its START value
std::pair<at::EnsembleParams, std::vector<at::LegSpec>> parse_loop_spec(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw at::Error("cannot open loop spec '" + path + "'");
  std::optional<at::EnsembleParams> start;
  std::vector<at::LegSpec> legs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string op;
    if (!(ss >> op)) continue;
    if (op == "START") {
      at::EnsembleParams p;
      if (!(ss >> p.beta >> p.gamma >> p.delta))
        throw at::FileFormatError("START needs three numbers", line_no);
      start = p;
    } else if (op == "ISO_V" || op == "ISO_S") {
      at::LegSpec leg;
      leg.kind = (op == "ISO_V") ? at::LegKind::IsoV : at::LegKind::IsoS;
      std::string arg;
      if (!(ss >> arg)) throw at::FileFormatError(op + " needs a target", line_no);
      if (arg == "MATCH_S") {
        leg.match_start_entropy = true;
      } else {
        try {
          leg.target = std::stod(arg);
        } catch (const std::exception&) {
          throw at::FileFormatError("bad target '" + arg + "'", line_no);
        }
      }
      legs.push_back(leg);
    } else {
      throw at::FileFormatError("unknown directive '" + op + "'", line_no);
    }
  }
  if (!start) throw at::Error("loop spec has no START line");
  if (legs.size() < 3) throw at::Error("loop spec needs at least 3 legs");
  return {*start, legs};
}

int cmd_cycle(const std::string& corpus_path, const std::string& spec_path,
              int refinement, const std::string& csv_path) {
  const auto corpus = load_or_die(corpus_path);
  const at::GibbsCalculator calc(corpus);
  const auto [start, legspecs] = parse_loop_spec(spec_path);

  const auto loop = at::build_loop(calc, start, legspecs);
  std::cout << "loop with " << loop.vertices.size() << " vertices:\n";
  for (size_t i = 0; i < loop.vertices.size(); ++i) {
    const auto& v = loop.vertices[i];
    const auto st = calc.stats(v);
    std::cout << "  vertex " << i << ": beta=" << fmt(v.beta)
              << " gamma=" << fmt(v.gamma) << " delta=" << fmt(v.delta)
              << "  S=" << fmt(st.entropy) << " V=" << fmt(st.mean_V)
              << " N=" << fmt(st.mean_N) << "\n";
  }

  const auto report = at::cycle_integrals(calc, loop, refinement);
  std::cout << "cycle integrals at refinement " << refinement << ":\n"
            << "  heat    (loop T dS)  : " << fmt(report.delta_q) << " nats-scale\n"
            << "  work    (loop P dV)  : " << fmt(report.work_term) << "\n"
            << "  mu term (loop mu dN) : " << fmt(report.mu_term) << "\n"
            << "  closure |Q - (W - M)|: " << fmt(report.closure_residual) << "\n";

  CsvBuffer csv(csv_path);
  if (csv.enabled()) {
    csv.row({"leg", "kind", "segment", "beta", "gamma", "delta", "T", "P", "mu", "S",
             "V", "N"});
    const size_t n = loop.vertices.size();
    for (size_t i = 0; i < n; ++i) {
      const auto& a = loop.vertices[i];
      const auto& b = loop.vertices[(i + 1) % n];
      // Re-trace each leg at the CSV granularity: one row per segment end.
      const at::Leg& leg = loop.legs[i];
      const char* kind = leg.kind == at::LegKind::IsoV
                             ? "ISO_V"
                             : (leg.kind == at::LegKind::IsoS ? "ISO_S" : "PARAM");
      std::vector<at::EnsembleParams> pts;
      if (leg.kind == at::LegKind::Parametric) {
        for (int k = 0; k <= refinement; ++k) {
          const double u = static_cast<double>(k) / refinement;
          at::EnsembleParams p;
          for (int c = 0; c < 3; ++c)
            p.coord(c) = (1 - u) * a.coord(c) + u * b.coord(c);
          pts.push_back(p);
        }
      } else {
        const at::Quantity hold =
            leg.kind == at::LegKind::IsoV ? at::Quantity::V : at::Quantity::S;
        at::IsolineOptions opts;
        opts.step = std::max(1e-9, std::abs(b.coord(leg.drive) - a.coord(leg.drive)) /
                                       refinement);
        pts = at::trace_isoline(calc, hold, a, leg.drive, b.coord(leg.drive), opts);
      }
      for (size_t k = 0; k < pts.size(); ++k) {
        const auto st = calc.stats(pts[k]);
        const auto cj = at::conjugates(pts[k]);
        csv.row({std::to_string(i), kind, std::to_string(k), fmt(pts[k].beta),
                 fmt(pts[k].gamma), fmt(pts[k].delta), fmt(cj.temperature),
                 fmt(cj.pressure), fmt(cj.potential), fmt(st.entropy), fmt(st.mean_V),
                 fmt(st.mean_N)});
      }
    }
    csv.flush();
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"algorithmic-thermodynamics toolbox: enumerate a prefix-free "
               "register machine, bound its partition function, and verify "
               "thermodynamic identities on the resulting Gibbs ensembles"};
  app.require_subcommand(1);

  // enumerate
  auto* enumerate = app.add_subcommand("enumerate", "build a halting-record corpus");
  int max_len = 22;
  uint64_t max_steps = uint64_t{1} << 20;
  int threads = static_cast<int>(std::thread::hardware_concurrency());
  std::string out_path;
  bool verify = false;
  enumerate->add_option("--max-len", max_len, "max program length L in bits")
      ->capture_default_str();
  enumerate->add_option("--max-steps", max_steps, "step budget Tmax per program")
      ->capture_default_str();
  enumerate->add_option("--threads", threads, "worker threads (result is identical)")
      ->capture_default_str();
  enumerate->add_option("--out", out_path, "corpus output path")->required();
  enumerate->add_flag("--verify", verify, "re-run every record after writing");

  // shared corpus/param options
  std::string corpus_path, csv_path;
  double beta = 0, gamma = 0, delta = 0, h = 1e-4;
  bool uncertified = false;

  auto* stats = app.add_subcommand("stats", "ensemble statistics and Z enclosure");
  stats->add_option("--corpus", corpus_path, "corpus file")->required();
  stats->add_option("--beta", beta, "conjugate of E (log2 runtime)")->required();
  stats->add_option("--gamma", gamma, "conjugate of V (length)")->required();
  stats->add_option("--delta", delta, "conjugate of N (output)")->required();
  stats->add_option(
      "--csv", csv_path,
      "write one row per parameter point with columns beta,gamma,delta,z_lo,z_hi,"
      "z_trunc,mean_E,mean_V,mean_N,var_E,var_V,var_N,cov_EV,cov_EN,cov_VN,"
      "entropy_nats,entropy_bits");
  stats->add_flag("--uncertified", uncertified,
                  "allow parameters outside the certified region (lower bounds only)");

  auto* omega = app.add_subcommand(
      "omega", "halting-probability enclosure (stats at beta=0, gamma=ln 2, delta=0)");
  omega->add_option("--corpus", corpus_path, "corpus file")->required();

  auto* entropy = app.add_subcommand("entropy", "algorithmic entropy of one output");
  uint64_t output_value = 0;
  entropy->add_option("--corpus", corpus_path, "corpus file")->required();
  entropy->add_option("--gamma", gamma, "length weight, must be >= ln 2")->required();
  entropy->add_option("--output-value", output_value, "output n to score")->required();

  auto* relations =
      app.add_subcommand("relations", "run all derivative/Maxwell identity checks");
  relations->set_help_flag("--help", "print help");  // frees --h for the FD step
  relations->add_option("--corpus", corpus_path, "corpus file")->required();
  relations->add_option("--beta", beta, "conjugate of E")->required();
  relations->add_option("--gamma", gamma, "conjugate of V")->required();
  relations->add_option("--delta", delta, "conjugate of N")->required();
  relations->add_option("--h", h, "finite-difference step scale")
      ->capture_default_str();
  relations->add_option(
      "--csv", csv_path,
      "write one row per parameter point with columns beta,gamma,delta,h,"
      "grad_resid,hess_resid,entropy_resid,ds_de_resid,de_dv_resid,de_dn_resid,"
      "maxwell_resid,fundamental_resid");

  auto* cycle = app.add_subcommand("cycle", "integrate a heat-engine loop");
  std::string spec_path;
  int refinement = 256;
  cycle->add_option("--corpus", corpus_path, "corpus file")->required();
  cycle
      ->add_option("--spec", spec_path,
                   "loop spec file; one directive per line: 'START <beta> <gamma> "
                   "<delta>', then legs 'ISO_V <beta_target>' (hold mean length and "
                   "output), 'ISO_S <gamma_target>' (hold entropy and output), or "
                   "'ISO_V MATCH_S' (drive beta until entropy returns to its START "
                   "value); '#' comments")
      ->required();
  cycle->add_option("--refinement", refinement, "segments per leg")
      ->capture_default_str();
  cycle->add_option(
      "--csv", csv_path,
      "write one row per leg sample with columns leg,kind,segment,beta,gamma,"
      "delta,T,P,mu,S,V,N");

  CLI11_PARSE(app, argc, argv);

  try {
    if (enumerate->parsed())
      return cmd_enumerate(max_len, max_steps, threads, out_path, verify);
    if (stats->parsed())
      return cmd_stats(corpus_path, beta, gamma, delta, csv_path, uncertified);
    if (omega->parsed()) return cmd_omega(corpus_path);
    if (entropy->parsed()) return cmd_entropy(corpus_path, gamma, output_value);
    if (relations->parsed())
      return cmd_relations(corpus_path, beta, gamma, delta, h, csv_path);
    if (cycle->parsed()) return cmd_cycle(corpus_path, spec_path, refinement, csv_path);
  } catch (const at::ConditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const at::ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}
