#pragma once

// Optimization driver: the classical OC loop (initialize at volfrac,
// solve / evaluate / filter / update until the change metric drops below
// the threshold), iteration logging, and the file artifacts
// density.txt, density.pgm, log.csv and config.echo.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "normtop/errors.hpp"
#include "normtop/filter_update.hpp"
#include "normtop/grid_fem.hpp"
#include "normtop/objectives.hpp"
#include "normtop/problems.hpp"
#include "normtop/spectral.hpp"

namespace normtop {

struct RunConfig {
  std::string problem = "mbb-half";
  ObjectiveKind objective = ObjectiveKind::Quadratic;
  int nelx = 0;  // 0 = preset default
  int nely = 0;
  double volfrac = 0.5;
  double penal = 3.0;
  double rmin = 1.5;
  double move = 0.2;
  double eta = 0.5;
  double epsilon = kTruncationRelDefault;  // truncation, relative to max |eig|
  double threshold = 0.01;                 // convergence on rchange
  int max_iterations = 300;
  std::string out_dir;     // empty: no artifacts written
  int snapshot_every = 0;  // 0: final design only
  std::uint64_t seed = 0;  // recorded in config.echo; the pipeline is
                           // deterministic and does not consume it
};

struct IterationRecord {
  int loop = 0;
  double objective = 0.0;
  double volume = 0.0;  // mean density after the OC update
  double change = 0.0;  // rchange
  double elapsed_ms = 0.0;
};

enum class RunStatus { Converged, MaxIterations, Error };

inline std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Converged: return "converged";
    case RunStatus::MaxIterations: return "max-iterations";
    case RunStatus::Error: return "error";
  }
  return "?";
}

struct RunResult {
  DesignField design;
  std::vector<IterationRecord> history;
  RunStatus status = RunStatus::Error;
  std::string message;  // diagnostic on error
};

// Called after every completed iteration with the record and the
// post-update design.
using IterationCallback =
    std::function<void(const IterationRecord&, const DesignField&)>;

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path& path,
                              std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  return out;
}

}  // namespace detail

// Writes <stem>.txt (nely rows by nelx columns, top row first, 6-decimal
// fixed point) and <stem>.pgm (binary 8-bit graymap, 0 = solid, 255 = void)
// into `directory`.
inline void export_density(const DesignField& x, const GridMesh& mesh,
                           const std::filesystem::path& directory,
                           const std::string& stem = "density") {
  if (x.size() != mesh.element_count())
    throw ParameterError("design field length does not match element count");
  std::filesystem::create_directories(directory);

  auto txt = detail::open_out(directory / (stem + ".txt"));
  for (int row = 0; row < mesh.nely; ++row) {
    for (int col = 0; col < mesh.nelx; ++col) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.6f", x[col * mesh.nely + row]);
      txt << (col ? " " : "") << buf;
    }
    txt << '\n';
  }
  txt.close();
  if (!txt) throw std::runtime_error("write failed for " + stem + ".txt");

  auto pgm = detail::open_out(directory / (stem + ".pgm"), std::ios::binary);
  pgm << "P5\n" << mesh.nelx << " " << mesh.nely << "\n255\n";
  std::vector<unsigned char> bytes(
      static_cast<std::size_t>(mesh.element_count()));
  for (int row = 0; row < mesh.nely; ++row)
    for (int col = 0; col < mesh.nelx; ++col) {
      const double gray = 255.0 * (1.0 - x[col * mesh.nely + row]);
      const long v = std::lround(std::clamp(gray, 0.0, 255.0));
      bytes[static_cast<std::size_t>(row) * mesh.nelx + col] =
          static_cast<unsigned char>(v);
    }
  pgm.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  pgm.close();
  if (!pgm) throw std::runtime_error("write failed for " + stem + ".pgm");
}

// log.csv: header plus one full-precision row per iteration.
inline void export_log(const std::vector<IterationRecord>& history,
                       const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  out << "iter,objective,volume,change,ms\n";
  for (const auto& rec : history)
    out << rec.loop << ',' << detail::format_double(rec.objective) << ','
        << detail::format_double(rec.volume) << ','
        << detail::format_double(rec.change) << ','
        << detail::format_double(rec.elapsed_ms) << '\n';
  out.close();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

struct SparsityMetrics {
  double gray_fraction = 0.0;   // share of elements with x in (0.1, 0.9)
  double solid_fraction = 0.0;  // share with x >= 0.9
  double discreteness = 0.0;    // (4/N) sum x(1-x), 0 = black/white design
};

inline SparsityMetrics sparsity_metrics(const DesignField& x) {
  if (x.size() == 0) throw ParameterError("empty design field");
  const double n = static_cast<double>(x.size());
  SparsityMetrics m;
  for (Eigen::Index e = 0; e < x.size(); ++e) {
    if (x[e] > 0.1 && x[e] < 0.9) m.gray_fraction += 1.0;
    if (x[e] >= 0.9) m.solid_fraction += 1.0;
    m.discreteness += x[e] * (1.0 - x[e]);
  }
  m.gray_fraction /= n;
  m.solid_fraction /= n;
  m.discreteness *= 4.0 / n;
  return m;
}

// Flat key = value echo of the effective configuration; the file is itself
// a valid config file.
inline void write_config_echo(const RunConfig& cfg,
                              const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  out << "problem = " << cfg.problem << '\n'
      << "objective = " << to_string(cfg.objective) << '\n'
      << "nelx = " << cfg.nelx << '\n'
      << "nely = " << cfg.nely << '\n'
      << "volfrac = " << detail::format_double(cfg.volfrac) << '\n'
      << "penal = " << detail::format_double(cfg.penal) << '\n'
      << "rmin = " << detail::format_double(cfg.rmin) << '\n'
      << "move = " << detail::format_double(cfg.move) << '\n'
      << "eta = " << detail::format_double(cfg.eta) << '\n'
      << "epsilon = " << detail::format_double(cfg.epsilon) << '\n'
      << "threshold = " << detail::format_double(cfg.threshold) << '\n'
      << "max_iters = " << cfg.max_iterations << '\n'
      << "out = " << cfg.out_dir << '\n'
      << "snapshot_every = " << cfg.snapshot_every << '\n'
      << "seed = " << cfg.seed << '\n';
  out.close();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

// Applies `key = value` lines from a config file onto cfg. Blank lines and
// lines starting with '#' are skipped; unknown keys are an error.
inline void apply_config_file(RunConfig& cfg,
                              const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot read config file " + path.string());
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ParameterError("config line " + std::to_string(lineno) +
                           ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    try {
      if (key == "problem") cfg.problem = value;
      else if (key == "objective") {
        const auto kind = objective_from_string(value);
        if (!kind)
          throw ParameterError("unknown objective '" + value + "'");
        cfg.objective = *kind;
      }
      else if (key == "nelx") cfg.nelx = std::stoi(value);
      else if (key == "nely") cfg.nely = std::stoi(value);
      else if (key == "volfrac") cfg.volfrac = std::stod(value);
      else if (key == "penal") cfg.penal = std::stod(value);
      else if (key == "rmin") cfg.rmin = std::stod(value);
      else if (key == "move") cfg.move = std::stod(value);
      else if (key == "eta") cfg.eta = std::stod(value);
      else if (key == "epsilon") cfg.epsilon = std::stod(value);
      else if (key == "threshold") cfg.threshold = std::stod(value);
      else if (key == "max_iters") cfg.max_iterations = std::stoi(value);
      else if (key == "out") cfg.out_dir = value;
      else if (key == "snapshot_every") cfg.snapshot_every = std::stoi(value);
      else if (key == "seed") cfg.seed = std::stoull(value);
      else
        throw ParameterError("unknown config key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw ParameterError("config line " + std::to_string(lineno) +
                           ": cannot parse value '" + value + "' for key '" +
                           key + "'");
    }
  }
}

namespace detail {

inline void validate_run_config(const RunConfig& cfg) {
  if (!(cfg.threshold > 0.0))
    throw ParameterError("convergence threshold must be > 0");
  if (cfg.max_iterations < 1)
    throw ParameterError("max_iterations must be >= 1");
  if (!(cfg.epsilon > 0.0))
    throw ParameterError("truncation epsilon must be > 0");
  if (cfg.snapshot_every < 0)
    throw ParameterError("snapshot_every must be >= 0");
}

}  // namespace detail

// Runs the OC loop on an explicit problem. cfg supplies the loop knobs
// (objective, thresholds, OC parameters, output locations); the problem
// carries mesh, material, loads, supports and filter.
inline RunResult run(const ProblemDefinition& prob, const RunConfig& cfg,
                     const IterationCallback& on_iteration = {}) {
  detail::validate_run_config(cfg);
  validate(prob);

  const GridMesh& mesh = prob.mesh;
  const MaterialModel& mat = prob.material;
  const ElementStiffness ke = build_element_stiffness(mat);
  const SpectralDecomposition dec =
      decompose_and_truncate_relative(ke, cfg.epsilon);
  const StiffnessRoot root = stiffness_root(dec);

  OcParams oc;
  oc.move = cfg.move;
  oc.eta = cfg.eta;

  const bool emit = !cfg.out_dir.empty();
  const std::filesystem::path out_dir = cfg.out_dir;
  if (emit) {
    std::filesystem::create_directories(out_dir);
    write_config_echo(cfg, out_dir / "config.echo");
  }

  RunResult result;
  result.design = DesignField::Constant(mesh.element_count(), prob.volfrac);
  result.status = RunStatus::MaxIterations;

  try {
    int loop = 0;
    double rchange = std::numeric_limits<double>::infinity();
    while (loop < cfg.max_iterations) {
      const auto t0 = std::chrono::steady_clock::now();
      ++loop;

      const SparseMatrix K = assemble_global(result.design, mat, ke, mesh);
      const auto U = solve_displacements(K, prob.load_cases, prob.supports);

      ObjectiveEval eval;
      switch (cfg.objective) {
        case ObjectiveKind::Quadratic:
          eval = eval_quadratic(result.design, U, ke, mat, mesh);
          break;
        case ObjectiveKind::L2:
          eval = eval_l2(result.design, U, ke, mat, mesh);
          break;
        case ObjectiveKind::L1:
          eval = eval_l1(result.design, U, root, mat, mesh);
          break;
      }

      const Eigen::VectorXd dc = filter_sensitivities(
          result.design, eval.design_sensitivity, prob.filter, mesh);
      DesignField xnew =
          oc_update(result.design, dc, prob.volfrac, oc, mat.x_min);
      rchange = change_metric(xnew, result.design);
      result.design = std::move(xnew);

      const auto t1 = std::chrono::steady_clock::now();
      IterationRecord rec;
      rec.loop = loop;
      rec.objective = eval.total;
      rec.volume = result.design.mean();
      rec.change = rchange;
      rec.elapsed_ms =
          std::chrono::duration<double, std::milli>(t1 - t0).count();
      result.history.push_back(rec);
      if (on_iteration) on_iteration(rec, result.design);

      if (emit && cfg.snapshot_every > 0 && loop % cfg.snapshot_every == 0) {
        char stem[32];
        std::snprintf(stem, sizeof(stem), "density_%04d", loop);
        export_density(result.design, mesh, out_dir, stem);
      }

      if (rchange <= cfg.threshold) {
        result.status = RunStatus::Converged;
        break;
      }
    }
  } catch (const std::exception& err) {
    result.status = RunStatus::Error;
    result.message = err.what();
  }

  if (emit) {
    export_density(result.design, mesh, out_dir);
    export_log(result.history, out_dir / "log.csv");
  }
  return result;
}

// Preset-name entry point: resolves the preset, applies the mesh /
// volfrac / penal / rmin overrides, then runs.
inline RunResult run(const RunConfig& cfg,
                     const IterationCallback& on_iteration = {}) {
  detail::validate_run_config(cfg);
  ProblemDefinition prob;
  try {
    prob = make_problem(cfg.problem, cfg.nelx, cfg.nely);
    prob.volfrac = cfg.volfrac;
    prob.material.penal = cfg.penal;
    prob.filter.rmin = cfg.rmin;
    validate(prob);
  } catch (const std::exception& err) {
    RunResult result;
    result.status = RunStatus::Error;
    result.message = err.what();
    return result;
  }
  RunConfig effective = cfg;
  effective.nelx = prob.mesh.nelx;
  effective.nely = prob.mesh.nely;
  return run(prob, effective, on_iteration);
}

struct CompareRow {
  std::string objective;
  RunStatus status = RunStatus::Error;
  int iterations = 0;
  double first_objective = 0.0;
  double final_objective = 0.0;
  double final_volume = 0.0;
  SparsityMetrics metrics;
  double total_ms = 0.0;
};

// Runs all three objectives with otherwise identical configuration and
// writes <out>/compare.csv plus per-objective artifact directories.
inline std::vector<CompareRow> run_compare(
    const RunConfig& base, const IterationCallback& on_iteration = {}) {
  if (base.out_dir.empty())
    throw ParameterError("compare requires an output directory");
  const std::filesystem::path out_dir = base.out_dir;
  std::filesystem::create_directories(out_dir);

  std::vector<CompareRow> rows;
  for (ObjectiveKind kind :
       {ObjectiveKind::Quadratic, ObjectiveKind::L2, ObjectiveKind::L1}) {
    RunConfig cfg = base;
    cfg.objective = kind;
    cfg.out_dir = (out_dir / to_string(kind)).string();
    const RunResult res = run(cfg, on_iteration);

    CompareRow row;
    row.objective = to_string(kind);
    row.status = res.status;
    row.iterations = static_cast<int>(res.history.size());
    if (!res.history.empty()) {
      row.first_objective = res.history.front().objective;
      row.final_objective = res.history.back().objective;
      row.final_volume = res.history.back().volume;
      for (const auto& rec : res.history) row.total_ms += rec.elapsed_ms;
    }
    if (res.design.size() > 0) row.metrics = sparsity_metrics(res.design);
    rows.push_back(row);
  }

  auto out = detail::open_out(out_dir / "compare.csv");
  out << "objective,status,iterations,first_objective,final_objective,"
         "final_volume,gray_fraction,solid_fraction,discreteness,total_ms\n";
  for (const auto& row : rows)
    out << row.objective << ',' << to_string(row.status) << ','
        << row.iterations << ',' << detail::format_double(row.first_objective)
        << ',' << detail::format_double(row.final_objective) << ','
        << detail::format_double(row.final_volume) << ','
        << detail::format_double(row.metrics.gray_fraction) << ','
        << detail::format_double(row.metrics.solid_fraction) << ','
        << detail::format_double(row.metrics.discreteness) << ','
        << detail::format_double(row.total_ms) << '\n';
  out.close();
  if (!out) throw std::runtime_error("write failed for compare.csv");
  return rows;
}

}  // namespace normtop
