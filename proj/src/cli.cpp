#include "anisotikh/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "anisotikh/bench.hpp"
#include "anisotikh/config.hpp"
#include "anisotikh/io.hpp"
#include "anisotikh/upper.hpp"

namespace anisotikh {
namespace {

// central finite differences of the upper objective against the analytic
// gradient on a tiny instance of the configured problem
int run_grad_check(const RunConfig& cfg) {
  ExperimentPreset p = cfg.preset;
  p.grid = Grid(4, 4);
  p.lower_opts = CgOptions(1e-12, 0);

  const Phantom phantom = make_phantom(p.phantom, p.grid);
  const auto forward = make_preset_operator(p);
  const Vector clean = forward->apply(phantom.image.values);
  auto [data, eps] = add_noise(DataVector(clean), p.noise_level, p.seed);
  const double bound = std::max(eps, 1e-12 * std::max(1.0, clean.norm()));

  const UpperParams params(p.alpha, p.beta, p.delta, bound);
  const UpperProblem prob(*forward, data, p.grid, p.weights, params,
                          p.lower_opts);

  std::mt19937_64 rng(p.seed);
  auto uniform = [&rng]() {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
  };
  const Index n = p.grid.n();
  Vector gamma(n + 1);
  for (Index i = 0; i < n; ++i) gamma[i] = (2.0 * uniform() - 1.0) * 0.45 * kPi;
  gamma[n] = 0.1 + 1.9 * uniform();

  const UpperEval ev = prob.gradient(unpack_gamma(p.grid, gamma));
  Vector fd(n + 1);
  for (Index i = 0; i <= n; ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(gamma[i]));
    Vector gp = gamma, gm = gamma;
    gp[i] += h;
    gm[i] -= h;
    const double up = prob.value(unpack_gamma(p.grid, gp)).value;
    const double um = prob.value(unpack_gamma(p.grid, gm)).value;
    fd[i] = (up - um) / (2.0 * h);
  }
  const double floor = 1e-6 * std::max(1.0, fd.cwiseAbs().maxCoeff());
  double worst = 0.0;
  for (Index i = 0; i <= n; ++i) {
    const double denom = std::max(std::abs(fd[i]), floor);
    worst = std::max(worst, std::abs(ev.gradient[i] - fd[i]) / denom);
  }
  std::printf("grad-check: max relative discrepancy %.3e (tolerance 1.0e-04)\n",
              worst);
  return worst <= 1e-4 ? 0 : 3;
}

int run_solve(const RunConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec)
    throw IoError("cannot create output directory " + cfg.out_dir + ": " +
                  ec.message());

  if (cfg.verbosity >= 1)
    std::cout << "running " << to_string(cfg.preset.problem) << " on "
              << cfg.preset.grid.n_x << "x" << cfg.preset.grid.n_z
              << " (phantom " << to_string(cfg.preset.phantom.kind)
              << ", noise level " << cfg.preset.noise_level << ")\n";

  const ExperimentResult res = run_experiment(cfg.preset);

  write_image_set(cfg.out_dir, "model_aniso", res.model_aniso, cfg.write_pgm,
                  cfg.write_f64);
  write_image_set(cfg.out_dir, "model_iso", res.model_iso, cfg.write_pgm,
                  cfg.write_f64);
  const ModelImage theta_img(res.theta.grid, res.theta.theta);
  write_image_set(cfg.out_dir, "theta", theta_img, cfg.write_pgm, cfg.write_f64,
                  std::make_pair(-kHalfPi, kHalfPi));
  write_history_csv(cfg.out_dir + "/history.csv", res.history);
  write_text_file(cfg.out_dir + "/config_echo.txt", dump_config(cfg));

  if (cfg.verbosity >= 2) {
    std::printf("%6s %14s %14s %12s %10s\n", "iter", "U", "sq_discrepancy",
                "mu", "relerr");
    for (const HistoryRecord& r : res.history.records)
      std::printf("%6d %14.6e %14.6e %12.5e %10.4f\n", r.iteration,
                  r.upper_value, r.sq_discrepancy, r.mu,
                  r.rel_error.value_or(std::nan("")));
  }
  if (cfg.verbosity >= 1) {
    std::printf("noise bound: %.6g  (eps^2 %.6g, final sq %.6g)\n",
                res.noise_norm, res.noise_norm * res.noise_norm,
                res.sq_discrepancy);
    std::printf("isotropic:   mu %.6g  rel_error %.4f\n", res.mu_iso,
                res.rel_error_iso);
    std::printf("anisotropic: mu %.6g  rel_error %.4f  U %.6e  (%s, %lld steps)\n",
                res.mu_aniso, res.rel_error_aniso, res.upper_value,
                to_string(res.status),
                static_cast<long long>(res.outer_iterations));
    std::printf("theta median error: %.4f rad (%.2f deg)\n",
                res.theta_median_error, res.theta_median_error * 180.0 / kPi);
    std::cout << "outputs written to " << cfg.out_dir << "\n";
  }
  return 0;
}

int run_cli_impl(const std::vector<std::string>& args) {
  CLI::App app{"local anisotropic Tikhonov regularization with learned "
               "orientation and regularization strength"};
  app.require_subcommand(1);

  CLI::App* solve = app.add_subcommand(
      "solve", "run one experiment (isotropic baseline + anisotropic solve)");
  std::string problem, config_path, out_dir, preset_name;
  std::uint64_t seed = 0;
  bool grad_check = false;
  std::vector<std::string> overrides;
  CLI::Option* problem_opt =
      solve->add_option("--problem", problem,
                        "problem kind: denoise, deblur, tomo or dix");
  CLI::Option* config_opt =
      solve->add_option("--config", config_path, "flat key = value config file");
  CLI::Option* out_opt = solve->add_option("--out", out_dir, "output directory");
  CLI::Option* seed_opt = solve->add_option("--seed", seed, "noise seed");
  solve->add_flag("--grad-check", grad_check,
                  "check the analytic gradient on a 4x4 instance and exit");
  CLI::Option* preset_opt =
      solve->add_option("--preset", preset_name, "named experiment preset");
  solve->add_option("overrides", overrides, "key=value parameter overrides");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  }

  std::vector<ConfigEntry> file_entries;
  if (config_opt->count() > 0) file_entries = read_config_file(config_path);

  std::vector<ConfigEntry> entries, params;
  for (ConfigEntry& e : file_entries) {
    if (e.key == "preset" || e.key == "problem")
      entries.push_back(std::move(e));
    else
      params.push_back(std::move(e));
  }
  if (preset_opt->count() > 0)
    entries.push_back({"preset", preset_name, "flag --preset"});
  if (problem_opt->count() > 0)
    entries.push_back({"problem", problem, "flag --problem"});
  if (entries.empty())
    throw ConfigError(
        "no problem selected: pass --problem or --preset, or name one in the "
        "config file");
  for (ConfigEntry& e : params) entries.push_back(std::move(e));
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("override '" + kv + "': expected key=value");
    entries.push_back({kv.substr(0, eq), kv.substr(eq + 1), "override " + kv});
  }
  if (out_opt->count() > 0)
    entries.push_back({"out_dir", out_dir, "flag --out"});
  if (seed_opt->count() > 0)
    entries.push_back({"seed", std::to_string(seed), "flag --seed"});
  if (grad_check) entries.push_back({"grad_check", "true", "flag --grad-check"});

  const RunConfig cfg = parse_config_entries(entries);
  if (cfg.grad_check) return run_grad_check(cfg);
  return run_solve(cfg);
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  try {
    return run_cli_impl(args);
  } catch (const CLI::ParseError& e) {
    std::cerr << "argument error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ParameterError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const DimensionError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace anisotikh
