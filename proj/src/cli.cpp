#include "mflm/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mflm/data.hpp"
#include "mflm/energy.hpp"
#include "mflm/errors.hpp"
#include "mflm/kernels.hpp"
#include "mflm/pipeline.hpp"

namespace mflm {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// Bad flag values detected after parsing; reported like parse errors.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out_dir = ".";
  double tol = 1e-8;
  int max_iter = 10000;
};

struct InputFlags {
  std::string data;
  int example = 0;
  Index n = 1000;
  double sigma = 0.01;
  Index grid = 100;
};

struct PathFlags {
  double delta = 1e-3;
  int n_r = 100;
  std::size_t project = 0;
};

struct FitFlags {
  std::string select = "sigma";
  std::string project;
  double kappa = 2.0;
  bool debias = false;
  double alpha = 0.05;
  int folds = 5;
  std::string cap = "mn";
};

void add_input(CLI::App* cmd, InputFlags& f) {
  auto* data = cmd->add_option("--data", f.data, "Dataset manifest to load");
  auto* ex = cmd->add_option("--example", f.example, "Simulate this example (1 or 2) instead of loading");
  data->excludes(ex);
  cmd->add_option("--n", f.n, "Simulated sample size")->capture_default_str();
  cmd->add_option("--sigma", f.sigma, "Simulated noise standard deviation")->capture_default_str();
  cmd->add_option("--grid", f.grid, "Simulated curve grid size")->capture_default_str();
}

void add_path(CLI::App* cmd, PathFlags& f) {
  cmd->add_option("--delta", f.delta, "r_min / r_max")->capture_default_str();
  cmd->add_option("--n-r", f.n_r, "Number of grid values")->capture_default_str();
}

void add_fit(CLI::App* cmd, FitFlags& f) {
  cmd->add_option("--select", f.select, "r selection rule: cv, sigma or bic")->capture_default_str();
  cmd->add_option("--project", f.project, "Projected estimator: 'auto' or a dimension m");
  cmd->add_option("--kappa", f.kappa, "Dimension-selection constant")->capture_default_str();
  cmd->add_flag("--debias", f.debias, "Ridge refit on the selected support");
  cmd->add_option("--alpha", f.alpha, "Level in the sigma-hat rule")->capture_default_str();
  cmd->add_option("--folds", f.folds, "Folds for cross-validation")->capture_default_str();
  cmd->add_option("--cap", f.cap, "Dimension range: 'mn' (1..M_n) or 'nn' (1..min(N_n, M_n))")->capture_default_str();
}

SimConfig sim_config(const InputFlags& f, const Globals& g) {
  if (f.example != 1 && f.example != 2) throw UsageError("--example must be 1 or 2");
  if (f.n < 2) throw UsageError("--n must be >= 2");
  if (!(f.sigma >= 0.0)) throw UsageError("--sigma must be >= 0");
  if (f.grid < 2) throw UsageError("--grid must be >= 2");
  return SimConfig{f.example, f.n, f.sigma, f.grid, g.seed, false};
}

struct Input {
  Dataset raw;
  std::optional<Simulation> sim;
};

Input load_input(const InputFlags& f, const Globals& g) {
  if (!f.data.empty()) return Input{load_dataset(f.data), std::nullopt};
  if (f.example == 0) throw UsageError("one of --data or --example is required");
  Simulation sim = simulate(sim_config(f, g));
  Dataset raw = sim.data;
  return Input{std::move(raw), std::move(sim)};
}

SolverOptions solver_options(const Globals& g) {
  if (!(g.tol > 0.0)) throw UsageError("--tol must be > 0");
  if (g.max_iter < 1) throw UsageError("--max-iter must be >= 1");
  SolverOptions s;
  s.tol = g.tol;
  s.max_iter = g.max_iter;
  return s;
}

PathOptions path_options(const PathFlags& f, const Globals& g) {
  if (!(f.delta > 0.0 && f.delta <= 1.0)) throw UsageError("--delta must lie in (0, 1]");
  if (f.n_r < 1) throw UsageError("--n-r must be >= 1");
  PathOptions p;
  p.delta = f.delta;
  p.n_r = f.n_r;
  p.solver = solver_options(g);
  return p;
}

PipelineOptions pipeline_options(const FitFlags& f, const PathFlags& pf, const Globals& g) {
  PipelineOptions o;
  try {
    o.rule = parse_rule(f.select);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  o.alpha = f.alpha;
  o.folds = f.folds;
  o.path = path_options(pf, g);
  o.kappa = f.kappa;
  if (!(f.kappa > 0.0)) throw UsageError("--kappa must be > 0");
  if (!(f.alpha > 0.0 && f.alpha < 1.0)) throw UsageError("--alpha must lie in (0, 1)");
  if (f.folds < 2) throw UsageError("--folds must be >= 2");
  if (f.cap == "mn") {
    o.cap = DimensionCap::MnOnly;
  } else if (f.cap == "nn") {
    o.cap = DimensionCap::EmpiricalNn;
  } else {
    throw UsageError("--cap must be 'mn' or 'nn'");
  }
  if (!f.project.empty()) {
    o.project = true;
    if (f.project != "auto") {
      std::size_t pos = 0;
      long m = 0;
      try {
        m = std::stol(f.project, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != f.project.size() || m < 1) throw UsageError("--project must be 'auto' or a positive integer");
      o.project_m = static_cast<std::size_t>(m);
    }
  }
  o.debias = f.debias;
  return o;
}

fs::path output_dir(const Globals& g) {
  fs::path dir(g.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void write_path_csv(const PathResult& path, const fs::path& file) {
  auto out = open_out(file);
  out << "r,block,norm,converged\n";
  for (std::size_t k = 0; k < path.grid.size(); ++k) {
    for (Index j = 0; j < path.block_norms.cols(); ++j) {
      out << format_double(path.grid[k]) << ',' << j + 1 << ',' << format_double(path.block_norms(static_cast<Index>(k), j))
          << ',' << (path.fits[k].converged ? 1 : 0) << "\n";
    }
  }
  if (!out) throw IoError("failed writing " + file.string());
}

json support_json(const std::vector<std::size_t>& support, const std::vector<std::string>& names) {
  json blocks = json::array();
  json labels = json::array();
  for (std::size_t j : support) {
    blocks.push_back(j + 1);
    labels.push_back(j < names.size() ? names[j] : "X" + std::to_string(j + 1));
  }
  return json{{"blocks", blocks}, {"names", labels}};
}

json fit_json(const FitResult& fit, const std::vector<std::string>& names) {
  return json{{"support", support_json(fit.support, names)},
              {"objective", fit.objective},
              {"iterations", fit.n_iterations},
              {"converged", fit.converged},
              {"kkt_gap", fit.kkt_gap}};
}

json truth_errors(const Coefficient& beta, const Simulation& sim) {
  json per_block = json::array();
  for (std::size_t j = 0; j < beta.p(); ++j) {
    per_block.push_back(weighted_norm((*beta.space())[j].weights(), beta.block(j) - sim.beta_star.block(j)));
  }
  return json{{"norm", norm(beta - sim.beta_star)}, {"per_block", per_block}};
}

json path_summary(const PathResult& path) {
  json s{{"r_max", path.grid.front()}, {"n_r", path.grid.size()}};
  s["r_min_feasible"] = path.r_min_feasible ? json(*path.r_min_feasible) : json(nullptr);
  s["first_failure"] = path.first_failure ? json(*path.first_failure + 1) : json(nullptr);
  return s;
}

struct Report {
  std::string command;
  json config = json::object();
  json seconds = json::object();
  json outputs = json::array();
  json summary = json::object();

  void output(const fs::path& p) { outputs.push_back(p.string()); }

  void write(const fs::path& dir, const Globals& g, std::ostream& out) {
    json doc{{"command", command}, {"seed", g.seed}, {"config", config}, {"seconds", seconds}};
    const fs::path file = dir / (command + "_report.json");
    outputs.push_back(file.string());
    doc["outputs"] = outputs;
    doc["summary"] = summary;
    auto f = open_out(file);
    f << doc.dump(2) << "\n";
    if (!f) throw IoError("failed writing " + file.string());
    out << file.string() << "\n";
  }
};

json globals_json(const Globals& g) {
  return json{{"seed", g.seed}, {"threads", g.threads}, {"out_dir", g.out_dir}, {"tol", g.tol}, {"max_iter", g.max_iter}};
}

json input_json(const InputFlags& f) {
  if (!f.data.empty()) return json{{"data", f.data}};
  return json{{"example", f.example}, {"n", f.n}, {"sigma", f.sigma}, {"grid", f.grid}};
}

json path_flags_json(const PathFlags& f) { return json{{"delta", f.delta}, {"n_r", f.n_r}}; }

json fit_flags_json(const FitFlags& f) {
  return json{{"select", f.select}, {"project", f.project.empty() ? json(nullptr) : json(f.project)},
              {"kappa", f.kappa},   {"debias", f.debias},
              {"alpha", f.alpha},   {"folds", f.folds},
              {"cap", f.cap}};
}

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

void cmd_simulate(const InputFlags& in, const std::string& name, const Globals& g, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const Simulation sim = simulate(sim_config(in, g));
  const fs::path dir = output_dir(g);
  Report rep;
  rep.command = "simulate";
  rep.config = globals_json(g);
  rep.config.update(input_json(in));
  rep.config["name"] = name;
  const fs::path manifest = dir / (name + ".manifest");
  save_dataset(sim.data, manifest);
  rep.output(manifest);
  rep.output(dir / (name + ".csv"));
  const fs::path truth = dir / (name + "_truth.csv");
  save_coefficient(sim.beta_star, sim.data.names(), truth);
  rep.output(truth);
  rep.seconds["simulate"] = since(t0);
  rep.summary = json{{"n", sim.data.n()}, {"p", sim.data.p()}, {"true_support", support_json(sim.support, sim.data.names())}};
  rep.write(dir, g, out);
}

void cmd_path(const InputFlags& in, const PathFlags& pf, const Globals& g, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const Input input = load_input(in, g);
  const Dataset data = prepare(input.raw);
  PathOptions opts = path_options(pf, g);
  std::optional<PcaBasis> basis;
  if (pf.project > 0) {
    basis = pca_basis(data);
    if (pf.project > basis->size()) throw UsageError("--project exceeds the basis size " + std::to_string(basis->size()));
    opts.basis = &*basis;
    opts.m = pf.project;
  }
  Report rep;
  rep.command = "path";
  rep.config = globals_json(g);
  rep.config.update(input_json(in));
  rep.config.update(path_flags_json(pf));
  rep.config["project"] = pf.project > 0 ? json(pf.project) : json(nullptr);
  rep.seconds["load"] = since(t0);
  const auto t1 = std::chrono::steady_clock::now();
  const PathResult path = fit_path(data, opts);
  rep.seconds["path"] = since(t1);

  const fs::path dir = output_dir(g);
  const fs::path file = dir / "path.csv";
  write_path_csv(path, file);
  rep.output(file);
  rep.summary = path_summary(path);
  if (input.sim) rep.summary["true_support"] = support_json(input.sim->support, data.names());
  rep.write(dir, g, out);
}

void cmd_fit(const InputFlags& in, const PathFlags& pf, const FitFlags& ff, const Globals& g, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const PipelineOptions opts = pipeline_options(ff, pf, g);
  const Input input = load_input(in, g);
  const Dataset data = prepare(input.raw);
  Report rep;
  rep.command = "fit";
  rep.config = globals_json(g);
  rep.config.update(input_json(in));
  rep.config.update(path_flags_json(pf));
  rep.config.update(fit_flags_json(ff));
  rep.seconds["load"] = since(t0);

  const PipelineResult res = run_pipeline(data, opts);
  for (const auto& [k, v] : res.seconds) rep.seconds[k] = v;

  const fs::path dir = output_dir(g);
  const auto& names = data.names();
  auto save = [&](const Coefficient& beta, const std::string& file) {
    save_coefficient(beta, names, dir / file);
    rep.output(dir / file);
  };
  write_path_csv(res.path, dir / "path.csv");
  rep.output(dir / "path.csv");
  {
    auto f = open_out(dir / "fit_scores.csv");
    f << "r,score\n";
    for (const auto& row : res.selection.score_table) f << format_double(row.r) << ',' << format_double(row.score) << "\n";
    rep.output(dir / "fit_scores.csv");
  }
  save(res.lasso.beta, "fit_coef_lasso.csv");

  json s = path_summary(res.path);
  s["rule"] = to_string(res.selection.method);
  s["sigma_hat2"] = res.selection.sigma_hat2 ? json(*res.selection.sigma_hat2) : json(nullptr);
  s["chosen_r"] = res.selection.chosen_r;
  s["refit_r"] = res.selection.refit_r;
  s["lasso"] = fit_json(res.lasso, names);
  if (res.projected) {
    save(res.projected->beta, "fit_coef_projected.csv");
    s["chosen_m"] = *res.selection.chosen_m;
    s["kappa"] = res.selection.kappa_pen;
    s["projected"] = fit_json(*res.projected, names);
    if (res.dimension) {
      s["m_n"] = res.dimension->m_n;
      s["n_n_empirical"] = res.dimension->n_n_emp;
      s["m_upper"] = res.dimension->upper;
    }
  }
  s["support"] = support_json(res.estimate().support, names);
  if (res.debiased) {
    save(res.debiased->beta_tilde, "fit_coef_debiased.csv");
    s["debias"] = json{{"rho", res.debiased->rho},
                       {"steps", res.debiased->n_steps},
                       {"gradient_norm", res.debiased->gradient_norm},
                       {"alpha1", res.debiased->alpha1},
                       {"converged", res.debiased->converged}};
  }
  if (input.sim) {
    s["true_support"] = support_json(input.sim->support, names);
    s["error_lasso"] = truth_errors(res.lasso.beta, *input.sim);
    if (res.projected) s["error_projected"] = truth_errors(res.projected->beta, *input.sim);
    if (res.debiased) s["error_debiased"] = truth_errors(res.debiased->beta_tilde, *input.sim);
  }
  rep.summary = s;
  rep.write(dir, g, out);
}

void cmd_montecarlo(const InputFlags& in, int reps, const PathFlags& pf, const FitFlags& ff, const Globals& g,
                    std::ostream& out) {
  if (reps < 1) throw UsageError("--reps must be >= 1");
  MonteCarloOptions mc;
  mc.sim = sim_config(in, g);
  mc.reps = reps;
  mc.pipeline = pipeline_options(ff, pf, g);
  Report rep;
  rep.command = "montecarlo";
  rep.config = globals_json(g);
  rep.config.update(input_json(in));
  rep.config.update(path_flags_json(pf));
  rep.config.update(fit_flags_json(ff));
  rep.config["reps"] = reps;

  const auto t0 = std::chrono::steady_clock::now();
  const MonteCarloSummary sum = run_montecarlo(mc);
  rep.seconds["replications"] = since(t0);

  const fs::path dir = output_dir(g);
  auto join = [](const std::vector<std::size_t>& s) {
    std::string o;
    for (std::size_t j : s) o += (o.empty() ? "" : " ") + std::to_string(j + 1);
    return o;
  };
  {
    auto f = open_out(dir / "montecarlo_reps.csv");
    f << "rep,seed,ok,support_plain,exact_plain,support_projected,exact_projected,sigma_hat2,chosen_r,refit_r,chosen_m,"
         "error_block1,error_block1_debiased,error\n";
    for (const auto& r : sum.records) {
      std::string msg = r.error;
      for (char& c : msg) {
        if (c == ',' || c == '\n') c = ';';
      }
      f << r.rep + 1 << ',' << r.seed << ',' << r.ok << ',' << join(r.support_plain) << ',' << r.exact_plain << ','
        << join(r.support_projected) << ',' << r.exact_projected << ',' << format_double(r.sigma_hat2) << ','
        << format_double(r.chosen_r) << ',' << format_double(r.refit_r) << ',' << r.chosen_m << ','
        << format_double(r.error_block1) << ',' << format_double(r.error_block1_debiased) << ',' << msg << "\n";
    }
    rep.output(dir / "montecarlo_reps.csv");
  }
  {
    auto f = open_out(dir / "montecarlo_summary.csv");
    f << "estimator,rule,recovery_percent\n";
    f << "plain," << ff.select << ',' << format_double(sum.recovery_plain) << "\n";
    if (mc.pipeline.project) f << "projected," << ff.select << ',' << format_double(sum.recovery_projected) << "\n";
    rep.output(dir / "montecarlo_summary.csv");
  }
  rep.summary = json{{"reps", reps},
                     {"failures", sum.failures},
                     {"recovery_plain_percent", sum.recovery_plain},
                     {"recovery_projected_percent", mc.pipeline.project ? json(sum.recovery_projected) : json(nullptr)},
                     {"debias_improved_percent", mc.pipeline.debias ? json(sum.debias_improved) : json(nullptr)}};
  rep.write(dir, g, out);
}

void cmd_energy(const std::string& raw, bool strict_days, const PathFlags& pf, const FitFlags& ff, const Globals& g,
                std::ostream& out) {
  if (raw.empty()) throw UsageError("--raw is required");
  if (!fs::exists(raw)) throw IoError("raw energy file not found: " + raw);
  const auto t0 = std::chrono::steady_clock::now();
  EnergyConfig cfg;
  cfg.raw_csv_path = raw;
  cfg.partial_response_day = !strict_days;
  const EnergyData ed = prepare_energy(cfg);
  Report rep;
  rep.command = "energy";
  rep.config = globals_json(g);
  rep.config["raw"] = raw;
  rep.config["strict_days"] = strict_days;
  rep.config.update(path_flags_json(pf));
  rep.config.update(fit_flags_json(ff));
  rep.seconds["prepare"] = since(t0);

  const PipelineResult res = run_pipeline(ed.data, pipeline_options(ff, pf, g));
  for (const auto& [k, v] : res.seconds) rep.seconds[k] = v;

  const fs::path dir = output_dir(g);
  write_path_csv(res.path, dir / "energy_path.csv");
  rep.output(dir / "energy_path.csv");
  const FitResult& est = res.estimate();
  {
    auto f = open_out(dir / "energy_coef.csv");
    f << "block,name,t,value\n";
    for (std::size_t j : est.support) {
      const auto& grid = (*ed.data.space())[j].grid();
      for (Index k = 0; k < grid.size(); ++k) {
        f << j + 1 << ',' << ed.data.names()[j] << ',' << format_double(grid[k]) << ','
          << format_double(est.beta.block(j)[k]) << "\n";
      }
    }
    rep.output(dir / "energy_coef.csv");
  }
  const std::vector<std::string> reference = {"Appliances", "T3", "T8"};
  std::vector<std::string> selected;
  for (std::size_t j : est.support) selected.push_back(ed.data.names()[j]);
  json s = path_summary(res.path);
  s["n"] = ed.data.n();
  s["p"] = ed.data.p();
  s["days_seen"] = ed.days_seen;
  s["incomplete_days"] = ed.incomplete_days;
  s["sigma_hat2"] = res.selection.sigma_hat2 ? json(*res.selection.sigma_hat2) : json(nullptr);
  s["chosen_r"] = res.selection.chosen_r;
  s["refit_r"] = res.selection.refit_r;
  s["support"] = support_json(est.support, ed.data.names());
  s["reference_support"] = reference;
  s["matches_reference"] = selected == reference;
  rep.summary = s;
  rep.write(dir, g, out);
}

std::string error_kind(const std::exception& e) {
  if (const auto* m = dynamic_cast<const Error*>(&e)) return m->kind();
  return "internal";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse estimation for multivariate functional linear models"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0: all available)")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Output directory")->capture_default_str();
  app.add_option("--tol", g.tol, "Solver tolerance on max_j N_j ||delta beta_j||^2")->capture_default_str();
  app.add_option("--max-iter", g.max_iter, "Solver cycle limit per fit")->capture_default_str();

  InputFlags in;
  PathFlags pf;
  FitFlags ff;
  std::string sim_name = "sim";
  int reps = 20;
  std::string raw;
  bool strict_days = false;

  auto* sim = app.add_subcommand("simulate", "Write a simulated dataset and its true coefficient");
  sim->add_option("--example", in.example, "Example 1 or 2")->required();
  sim->add_option("--n", in.n, "Sample size")->capture_default_str();
  sim->add_option("--sigma", in.sigma, "Noise standard deviation")->capture_default_str();
  sim->add_option("--grid", in.grid, "Curve grid size")->capture_default_str();
  sim->add_option("--name", sim_name, "Output file stem")->capture_default_str();

  auto* path = app.add_subcommand("path", "Block norms along the r grid");
  add_input(path, in);
  add_path(path, pf);
  path->add_option("--project", pf.project, "Fit the projected estimator with this dimension");

  auto* fit = app.add_subcommand("fit", "Path, r selection, optional projection and ridge refit");
  add_input(fit, in);
  add_path(fit, pf);
  add_fit(fit, ff);

  auto* mc = app.add_subcommand("montecarlo", "Support recovery over seeded replications");
  mc->add_option("--example", in.example, "Example 1 or 2")->required();
  mc->add_option("--n", in.n, "Sample size")->capture_default_str();
  mc->add_option("--sigma", in.sigma, "Noise standard deviation")->capture_default_str();
  mc->add_option("--grid", in.grid, "Curve grid size")->capture_default_str();
  mc->add_option("--reps", reps, "Replications")->capture_default_str();
  add_path(mc, pf);
  add_fit(mc, ff);

  auto* energy = app.add_subcommand("energy", "Appliances energy application");
  energy->add_option("--raw", raw, "UCI appliances energy CSV")->required();
  energy->add_flag("--strict-days", strict_days, "Require complete response days");
  add_path(energy, pf);
  add_fit(energy, ff);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << e.what() << "\n";
    return 2;
  }

  try {
    if (g.threads < 0) throw UsageError("--threads must be >= 0");
    kernels::set_threads(g.threads);
    if (sim->parsed()) {
      cmd_simulate(in, sim_name, g, out);
    } else if (path->parsed()) {
      cmd_path(in, pf, g, out);
    } else if (fit->parsed()) {
      cmd_fit(in, pf, ff, g, out);
    } else if (mc->parsed()) {
      cmd_montecarlo(in, reps, pf, ff, g, out);
    } else if (energy->parsed()) {
      cmd_energy(raw, strict_days, pf, ff, g, out);
    }
  } catch (const UsageError& e) {
    err << "error: usage: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << error_kind(e) << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace mflm
