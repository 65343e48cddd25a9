// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
//
// Set MFLM_ENERGY_CSV to the appliances energy CSV to also evaluate the
// selected set of the energy application.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "energy_fixture.hpp"
#include "mflm/covariance.hpp"
#include "mflm/debias.hpp"
#include "mflm/energy.hpp"
#include "mflm/pipeline.hpp"
#include "mflm/simulate.hpp"
#include "mflm/solver.hpp"
#include "oracles.hpp"

using namespace mflm;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

std::string set_str(const std::vector<std::size_t>& s) {
  std::string o = "{";
  for (std::size_t k = 0; k < s.size(); ++k) o += (k ? "," : "") + std::to_string(s[k] + 1);
  return o + "}";
}

bool subset_of(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

// Small instance of criterion 1: p <= 4 scalar or low-dimensional vector blocks, n <= 30.
Dataset small_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<Index> nn(8, 30);
  const auto space = oracle::random_space(rng, 4, false);
  return prepare(oracle::random_dataset(rng, space, nn(rng)));
}

// ---------------------------------------------------------------------------

Outcome solver_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> frac(0.02, 0.95);
  double worst_rel = 0.0;
  double worst_kkt = 0.0;
  int bad = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const Dataset data = small_instance(rng);
    const double rmax = r_max(data);
    const auto w = penalty_weights(data, frac(rng) * rmax);
    const FitResult fit = gpd_fit(data, w, Coefficient(data.space()));
    const auto ref = oracle::prox_gradient(data, w.lambda);
    const double rel = std::abs(fit.objective - ref.objective) / std::abs(ref.objective);
    const double kkt = oracle::kkt_gap(data, w.lambda, fit.beta) / rmax;
    worst_rel = std::max(worst_rel, rel);
    worst_kkt = std::max(worst_kkt, kkt);
    if (!(rel <= 1e-8) || !(kkt <= 1e-6) || !fit.converged) ++bad;
  }
  const double secs = seconds_since(t0);
  return {bad == 0 && secs < 10.0,
          fmt("50 instances, max rel objective diff %.2e, max KKT/r_max %.2e, %.2f s", worst_rel, worst_kkt, secs)};
}

Outcome zero_at_rmax() {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<Index> nn(10, 200);
  int zero = 0;
  for (int inst = 0; inst < 20; ++inst) {
    const auto space = oracle::random_space(rng, 6, true);
    const Dataset data = prepare(oracle::random_dataset(rng, space, nn(rng)));
    const FitResult fit = gpd_fit(data, penalty_weights(data, r_max(data)), Coefficient(data.space()));
    bool all_zero = true;
    for (const auto& b : fit.beta.blocks()) all_zero = all_zero && (b.array() == 0.0).all();
    zero += all_zero ? 1 : 0;
  }
  return {zero == 20, fmt("%d/20 fits exactly zero at r_max", zero)};
}

Outcome monotone_updates() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> frac(0.01, 0.8);
  long updates = 0;
  long violations = 0;
  double worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const auto space = oracle::random_space(rng, 5, true);
    const Dataset data = prepare(oracle::random_dataset(rng, space, 40));
    const auto w = penalty_weights(data, frac(rng) * r_max(data));
    double prev = objective(data, w, Coefficient(data.space()));
    SolverOptions o;
    o.on_update = [&](const BlockUpdateEvent& e) {
      ++updates;
      const double rise = e.objective - prev;
      worst = std::max(worst, rise);
      if (rise > 1e-12) ++violations;
      prev = e.objective;
    };
    gpd_fit(data, w, Coefficient(data.space()), o);
  }
  return {violations == 0, fmt("%ld block updates, %ld increases > 1e-12, largest increase %.2e", updates, violations, worst)};
}

struct McRun {
  MonteCarloSummary summary;
  double seconds = 0.0;
};

McRun montecarlo(int example, RuleMethod rule, bool project, bool debias, std::uint64_t seed) {
  MonteCarloOptions mc;
  mc.sim = SimConfig{example, 1000, 0.01, 100, seed, false};
  mc.reps = 20;
  mc.pipeline.rule = rule;
  mc.pipeline.project = project;
  mc.pipeline.kappa = 2.0;
  mc.pipeline.debias = debias;
  const auto t0 = std::chrono::steady_clock::now();
  McRun out{run_montecarlo(mc), 0.0};
  out.seconds = seconds_since(t0);
  return out;
}

Outcome support_recovery() {
  const McRun e1 = montecarlo(1, RuleMethod::SigmaHat, true, false, 1000);
  const McRun e2 = montecarlo(2, RuleMethod::SigmaHat, true, false, 2000);
  const McRun cv = montecarlo(1, RuleMethod::CV, false, false, 3000);
  const bool ok = e1.summary.failures == 0 && e2.summary.failures == 0 && cv.summary.failures == 0 &&
                  e1.summary.recovery_plain >= 95.0 && e1.summary.recovery_projected >= 95.0 &&
                  e2.summary.recovery_plain >= 95.0 && e2.summary.recovery_projected >= 95.0 &&
                  cv.summary.recovery_plain <= 50.0;
  return {ok, fmt("sigma rule R=20: ex1 plain %.0f%% projected %.0f%%, ex2 plain %.0f%% projected %.0f%%; "
                  "CV ex1 plain %.0f%%; failures %d/%d/%d; %.0f/%.0f/%.0f s",
                  e1.summary.recovery_plain, e1.summary.recovery_projected, e2.summary.recovery_plain,
                  e2.summary.recovery_projected, cv.summary.recovery_plain, e1.summary.failures, e2.summary.failures,
                  cv.summary.failures, e1.seconds, e2.seconds, cv.seconds)};
}

Outcome path_support_inclusion() {
  std::string detail;
  bool ok = true;
  for (int example : {1, 2}) {
    const Simulation sim = simulate(SimConfig{example, 1000, 0.01, 100, static_cast<std::uint64_t>(500 + example), false});
    const Dataset data = prepare(sim.data);
    const PathResult path = fit_path(data);
    int converged = 0;
    int outside = 0;
    std::size_t first_bad = 0;
    for (std::size_t k = 0; k < path.fits.size(); ++k) {
      if (!path.fits[k].converged) continue;
      ++converged;
      if (!subset_of(path.fits[k].support, sim.support)) {
        if (outside++ == 0) first_bad = k;
      }
    }
    ok = ok && outside == 0 && converged > 0;
    detail += fmt("ex%d: %d converged fits, %d with support outside J*", example, converged, outside);
    if (outside > 0) {
      detail += fmt(" (first at r/r_max=%.3g, support %s)", path.grid[first_bad] / path.grid.front(),
                    set_str(path.fits[first_bad].support).c_str());
    }
    detail += example == 1 ? "; " : "";
  }
  return {ok, detail};
}

Outcome tikhonov() {
  // Gradient descent vs direct solve, rho in [0.5, 2] * lambda_max(Gamma_J).
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> mult(0.5, 2.0);
  double worst = 0.0;
  int close = 0;
  for (int inst = 0; inst < 20; ++inst) {
    const auto space = oracle::random_space(rng, 4, true);
    const Dataset data = prepare(oracle::random_dataset(rng, space, 30));
    std::vector<std::size_t> J(data.p());
    for (std::size_t j = 0; j < J.size(); ++j) J[j] = j;
    const auto wz = oracle::whiten(data);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(wz.Z.transpose() * wz.Z / static_cast<double>(data.n()),
                                                      Eigen::EigenvaluesOnly);
    const double rho = mult(rng) * es.eigenvalues().maxCoeff();
    const auto gd = tikhonov_fit(data, J, rho, Coefficient(data.space()));
    const double err = norm(gd.beta_tilde - oracle::ridge(data, J, rho));
    worst = std::max(worst, err);
    close += err <= 1e-4 ? 1 : 0;
  }

  const McRun mc = montecarlo(1, RuleMethod::SigmaHat, false, true, 4000);
  int improved = 0;
  double before = 0.0, after = 0.0;
  for (const auto& r : mc.summary.records) {
    if (!r.ok) continue;
    improved += r.error_block1_debiased < r.error_block1 ? 1 : 0;
    before += r.error_block1 / 20.0;
    after += r.error_block1_debiased / 20.0;
  }
  const bool ok = close == 20 && mc.summary.failures == 0 && improved >= 18;
  return {ok, fmt("%d/20 within 1e-4 of the direct solve (max %.2e); ridge refit improved block 1 in %d/20 ex1 reps "
                  "(mean error %.4f -> %.4f), %.0f s",
                  close, worst, improved, before, after, mc.seconds)};
}

Outcome projection_nesting() {
  std::mt19937_64 rng(707);
  std::vector<Dataset> sets;
  sets.push_back(prepare(simulate(SimConfig{2, 40, 0.01, 20, 7, false}).data));
  for (int k = 0; k < 4; ++k) {
    const auto space = oracle::random_space(rng, 5, true);
    sets.push_back(prepare(oracle::random_dataset(rng, space, 6 + 8 * k)));
  }
  long checks = 0;
  long failures = 0;
  for (int c = 0; c < 100; ++c) {
    const Dataset& data = sets[static_cast<std::size_t>(c) % sets.size()];
    const PcaBasis basis = pca_basis(data);
    const Coefficient beta = oracle::random_coefficient(rng, data.space(), 0.4);
    const auto full = beta.support();
    auto prev = project(beta, basis, 0).support();
    for (std::size_t m = 1; m <= basis.size(); ++m) {
      const auto cur = project(beta, basis, m).support();
      ++checks;
      if (!subset_of(prev, cur) || !subset_of(cur, full)) ++failures;
      prev = cur;
    }
  }
  return {failures == 0, fmt("100 coefficients, %ld (m, m+1) pairs, %ld nesting violations", checks, failures)};
}

Outcome kappa_checks() {
  std::mt19937_64 rng(808);
  std::vector<Dataset> sets;
  sets.push_back(prepare(simulate(SimConfig{1, 40, 0.01, 20, 8, false}).data));  // D = 67 > n
  sets.push_back(prepare(simulate(SimConfig{2, 120, 0.01, 20, 9, false}).data));
  for (int k = 0; k < 8; ++k) {
    const auto space = oracle::random_space(rng, 5, true);
    sets.push_back(prepare(oracle::random_dataset(rng, space, 4 + 5 * k)));
  }
  double worst_diff = 0.0;
  double worst_rise = 0.0;
  int mn_violations = 0;
  int size_mismatch = 0;
  for (const auto& data : sets) {
    const PcaBasis basis = pca_basis(data);
    const auto eigs = oracle::restricted_min_eigs(data, kDefaultRankTol);
    if (eigs.size() != basis.size()) ++size_mismatch;
    const std::size_t Mn = m_max(data, basis);
    if (Mn > static_cast<std::size_t>(data.n())) ++mn_violations;
    double prev = INFINITY;
    for (std::size_t m = 1; m <= basis.size(); ++m) {
      const double k = kappa_n(data, basis, m);
      worst_rise = std::max(worst_rise, k - prev);
      prev = k;
      if (m <= Mn && m <= eigs.size()) {
        worst_diff = std::max(worst_diff, std::abs(k - std::sqrt(std::max(0.0, eigs[m - 1]))));
      }
    }
  }
  const bool ok = worst_diff <= 1e-9 && worst_rise <= 0.0 && mn_violations == 0 && size_mismatch == 0;
  return {ok, fmt("%zu datasets: max |kappa - oracle| %.2e (m <= M_n), max increase in m %.2e, M_n > n in %d, "
                  "basis size mismatches %d",
                  sets.size(), worst_diff, worst_rise, mn_violations, size_mismatch)};
}

Outcome energy() {
  using namespace std::chrono;
  const fs::path dir = fs::temp_directory_path() / ("mflm_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const fs::path fixture_file = dir / "energydata_layout.csv";
  // Same time span and row count as the published file.
  fixture::write_energy_csv(fixture_file, sys_days{year{2016} / 1 / 11} + hours{17}, 19735, 9);

  auto check_prep = [](const EnergyData& e, std::string& detail) {
    double worst = 0.0;
    for (std::size_t j = 0; j < e.data.p(); ++j) {
      const Eigen::MatrixXd scaled = e.data.block(j).rowwise() + e.data.centering().block_means[j].transpose();
      worst = std::max(worst, std::abs(scaled.maxCoeff() - scaled.minCoeff() - 1.0));
    }
    detail += fmt("n=%ld p=%zu max |range-1| %.1e", static_cast<long>(e.data.n()), e.data.p(), worst);
    return e.data.n() == 136 && e.data.p() == 24 && worst <= 1e-12;
  };

  EnergyConfig cfg;
  cfg.raw_csv_path = fixture_file;
  std::string detail = "layout fixture (19735 rows): ";
  bool ok = check_prep(prepare_energy(cfg), detail);
  fs::remove_all(dir);

  const char* real = std::getenv("MFLM_ENERGY_CSV");
  if (real == nullptr || !fs::exists(real)) {
    detail += "; selected-set check not run: MFLM_ENERGY_CSV not set to the published data file";
    return {ok, detail};
  }
  cfg.raw_csv_path = real;
  const EnergyData e = prepare_energy(cfg);
  detail += "; published file: ";
  ok = check_prep(e, detail) && ok;
  const PipelineResult res = run_pipeline(e.data, PipelineOptions{});
  std::vector<std::string> names;
  bool has_appliances = false;
  for (std::size_t j : res.lasso.support) {
    names.push_back(e.data.names()[j]);
    has_appliances = has_appliances || names.back() == "Appliances";
  }
  std::string sel;
  for (const auto& n : names) sel += (sel.empty() ? "" : ",") + n;
  const bool exact = names == std::vector<std::string>{"Appliances", "T3", "T8"};
  detail += fmt("; selected {%s}, exact reference match: %s", sel.c_str(), exact ? "yes" : "no");
  ok = ok && names.size() <= 5 && has_appliances;
  return {ok, detail};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "solver oracle equivalence", solver_oracle},
      {2, "zero fit at r_max", zero_at_rmax},
      {3, "majorization monotonicity", monotone_updates},
      {4, "support recovery", support_recovery},
      {5, "path support inside J*", path_support_inclusion},
      {6, "ridge refit", tikhonov},
      {7, "projection support nesting", projection_nesting},
      {8, "restricted eigenvalues", kappa_checks},
      {9, "energy preprocessing", energy},
  };
  bool all = true;
  bool core = true;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %d (%s): %s - %s\n", c.id, c.name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    all = all && o.pass;
    if (c.id <= 8) core = core && o.pass;
  }
  std::printf("criterion 10 (theory constants via property suite): %s - covered by criteria 1-8\n",
              core ? "PASS" : "FAIL");
  return all && core ? 0 : 1;
}
