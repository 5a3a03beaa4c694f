// normtop command-line driver.
//
//   normtop run     --problem <preset> --objective <quadratic|l2|l1> [...]
//   normtop compare --problem <preset> --out DIR [...]
//
// Exit codes: 0 converged, 2 stopped at the iteration cap, 1 error.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "normtop/runner.hpp"

namespace {

struct CliOptions {
  normtop::RunConfig cfg;
  std::string objective = "quadratic";
  std::string config_file;
};

void add_common_flags(CLI::App* cmd, CliOptions& opt) {
  cmd->add_option("--config", opt.config_file,
                  "config file with key = value lines; explicit flags win");
  cmd->add_option("--problem", opt.cfg.problem,
                  "preset: bridge, cantilever1, cantilever2, mbb-half, "
                  "mbb-full");
  cmd->add_option("--nelx", opt.cfg.nelx, "elements along x (0 = preset)");
  cmd->add_option("--nely", opt.cfg.nely, "elements along y (0 = preset)");
  cmd->add_option("--volfrac", opt.cfg.volfrac, "target volume fraction");
  cmd->add_option("--penal", opt.cfg.penal, "SIMP penalization exponent");
  cmd->add_option("--rmin", opt.cfg.rmin, "sensitivity filter radius");
  cmd->add_option("--move", opt.cfg.move, "OC move limit");
  cmd->add_option("--eta", opt.cfg.eta, "OC damping exponent");
  cmd->add_option("--epsilon", opt.cfg.epsilon,
                  "eigenvalue truncation threshold, relative to max |eig|");
  cmd->add_option("--threshold", opt.cfg.threshold,
                  "convergence threshold on the change metric");
  cmd->add_option("--max-iters", opt.cfg.max_iterations, "iteration cap");
  cmd->add_option("--out", opt.cfg.out_dir, "output directory");
  cmd->add_option("--snapshot-every", opt.cfg.snapshot_every,
                  "write a density snapshot every J iterations (0 = off)");
  cmd->add_option("--seed", opt.cfg.seed, "recorded in config.echo");
}

int status_code(normtop::RunStatus status) {
  switch (status) {
    case normtop::RunStatus::Converged: return 0;
    case normtop::RunStatus::MaxIterations: return 2;
    case normtop::RunStatus::Error: return 1;
  }
  return 1;
}

void print_iteration(const normtop::IterationRecord& rec,
                     const normtop::DesignField&) {
  std::printf(" It.:%5d Obj.:%14.6f Vol.:%7.4f ch.:%8.5f\n", rec.loop,
              rec.objective, rec.volume, rec.change);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"norm-based compliance topology optimization on a 2D grid"};
  app.require_subcommand(1);

  CliOptions run_opt;
  CLI::App* run_cmd = app.add_subcommand("run", "optimize one objective");
  add_common_flags(run_cmd, run_opt);
  run_cmd->add_option("--objective", run_opt.objective,
                      "quadratic, l2 or l1");

  CliOptions cmp_opt;
  CLI::App* cmp_cmd = app.add_subcommand(
      "compare", "run all three objectives and tabulate metrics");
  add_common_flags(cmp_cmd, cmp_opt);

  CLI11_PARSE(app, argc, argv);

  try {
    CliOptions& opt = run_cmd->parsed() ? run_opt : cmp_opt;
    CLI::App* cmd = run_cmd->parsed() ? run_cmd : cmp_cmd;

    if (!opt.config_file.empty()) {
      // Load file values, then re-apply explicit flags on top.
      normtop::RunConfig from_file = normtop::RunConfig{};
      normtop::apply_config_file(from_file, opt.config_file);
      auto keep = [&](const std::string& flag) {
        return cmd->count(flag) > 0;
      };
      normtop::RunConfig merged = from_file;
      if (keep("--problem")) merged.problem = opt.cfg.problem;
      if (keep("--nelx")) merged.nelx = opt.cfg.nelx;
      if (keep("--nely")) merged.nely = opt.cfg.nely;
      if (keep("--volfrac")) merged.volfrac = opt.cfg.volfrac;
      if (keep("--penal")) merged.penal = opt.cfg.penal;
      if (keep("--rmin")) merged.rmin = opt.cfg.rmin;
      if (keep("--move")) merged.move = opt.cfg.move;
      if (keep("--eta")) merged.eta = opt.cfg.eta;
      if (keep("--epsilon")) merged.epsilon = opt.cfg.epsilon;
      if (keep("--threshold")) merged.threshold = opt.cfg.threshold;
      if (keep("--max-iters")) merged.max_iterations = opt.cfg.max_iterations;
      if (keep("--out")) merged.out_dir = opt.cfg.out_dir;
      if (keep("--snapshot-every"))
        merged.snapshot_every = opt.cfg.snapshot_every;
      if (keep("--seed")) merged.seed = opt.cfg.seed;
      opt.cfg = merged;
    }

    if (run_cmd->parsed()) {
      if (run_cmd->count("--objective") > 0 || opt.config_file.empty()) {
        const auto kind = normtop::objective_from_string(run_opt.objective);
        if (!kind) {
          std::cerr << "error: unknown objective '" << run_opt.objective
                    << "' (expected quadratic, l2 or l1)\n";
          return 1;
        }
        opt.cfg.objective = *kind;
      }
      const normtop::RunResult result =
          normtop::run(opt.cfg, print_iteration);
      if (result.status == normtop::RunStatus::Error)
        std::cerr << "error: " << result.message << '\n';
      else
        std::printf("%s after %zu iterations\n",
                    normtop::to_string(result.status).c_str(),
                    result.history.size());
      return status_code(result.status);
    }

    if (opt.cfg.out_dir.empty()) {
      std::cerr << "error: compare requires --out DIR\n";
      return 1;
    }
    const auto rows = normtop::run_compare(opt.cfg);
    bool any_error = false, any_capped = false;
    std::printf("%-10s %-14s %5s %14s %8s %8s %8s\n", "objective", "status",
                "iters", "objective", "gray", "solid", "discr");
    for (const auto& row : rows) {
      std::printf("%-10s %-14s %5d %14.6f %8.4f %8.4f %8.4f\n",
                  row.objective.c_str(),
                  normtop::to_string(row.status).c_str(), row.iterations,
                  row.final_objective, row.metrics.gray_fraction,
                  row.metrics.solid_fraction, row.metrics.discreteness);
      any_error |= row.status == normtop::RunStatus::Error;
      any_capped |= row.status == normtop::RunStatus::MaxIterations;
    }
    return any_error ? 1 : (any_capped ? 2 : 0);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
}
