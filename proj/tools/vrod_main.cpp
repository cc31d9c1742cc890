// Command line driver: scenario runner, throughput bench and strand combing.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vrod/metrics.h"
#include "vrod/obj_io.h"
#include "vrod/scenarios.h"
#include "vrod/scene_json.h"
#include "vrod/skinning.h"
#include "vrod/solver.h"

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

vrod::Scene resolve_scene(const std::string& arg) {
  constexpr const char* kPrefix = "builtin:";
  if (arg.rfind(kPrefix, 0) == 0) {
    return vrod::make_builtin_scenario(arg.substr(std::string(kPrefix).size()));
  }
  return vrod::load_scene(arg);
}

std::string frame_name(const char* stem, int index) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%05d.obj", stem, index);
  return buf;
}

struct RunFlags {
  int steps = 600;
  bool deterministic = false;
  bool frames = false;
};

/// Simulates one scene into `dir` (metrics.csv, probes.csv, OBJ frames).
/// Returns 0, or 1 after a non-finite abort (with a step report on stderr).
int run_scene(vrod::Scene scene, const fs::path& dir, const RunFlags& flags) {
  scene.settings.deterministic |= flags.deterministic;
  fs::create_directories(dir);

  vrod::Solver solver(std::move(scene));
  const vrod::Scene& live = solver.scene();
  vrod::MetricsWriter metrics(dir / "metrics.csv", live);
  vrod::ProbeWriter probes(dir / "probes.csv", live);
  probes.write(0, solver.time(), live);

  std::optional<vrod::SkinBinding> binding;
  if (live.skin.has_value()) {
    const auto rest_pills = vrod::rod_rest_pills(live.rods);
    const auto rest_transforms = vrod::rod_rest_pill_transforms(live.rods);
    binding = vrod::bind_skin(live.skin->mesh, rest_pills, rest_transforms,
                              live.skin->max_influences, live.skin->epsilon);
    if (live.skin->smooth_iterations > 0) {
      vrod::smooth_binding(*binding, live.skin->mesh, live.skin->smooth_iterations);
    }
  }

  std::vector<vrod::Vec3> deformed;
  const auto write_frames = [&](int index) {
    if (!flags.frames) return;
    vrod::write_obj(dir / frame_name("frame", index),
                    vrod::tessellate_pills(solver.current_pills()));
    if (binding.has_value()) {
      vrod::deform_mesh(*binding, solver.pill_transforms(), live.skin->mesh, deformed);
      vrod::TriMesh posed;
      posed.vertices = deformed;
      posed.triangles = live.skin->mesh.triangles;
      vrod::write_obj(dir / frame_name("skin", index), posed);
    }
  };

  write_frames(0);
  long long singular = 0;
  for (int i = 0; i < flags.steps; ++i) {
    vrod::StepReport report;
    try {
      report = solver.step();
    } catch (const vrod::SimulationError& e) {
      std::fprintf(stderr,
                   "simulation aborted at step %d (t=%.6g s, %d DOFs): %s\n",
                   solver.step_index() + 1, solver.time(), solver.dof_count(), e.what());
      return 1;
    }
    metrics.write(report, solver);
    probes.write(report.step, report.time, live);
    write_frames(report.step);
    singular += report.skipped_singular;
  }
  if (singular > 0) {
    std::fprintf(stderr, "note: %lld singular constraint solve(s) skipped\n", singular);
  }
  std::printf("wrote %s (%d steps, %d DOFs)\n", (dir / "metrics.csv").c_str(), flags.steps,
              solver.dof_count());
  return 0;
}

int cmd_run(const std::string& scene_arg, const fs::path& out_dir, const RunFlags& flags) {
  // The comparison scenario is a paired experiment: both variants run, into
  // sibling directories, so their probe logs can be diffed directly.
  if (scene_arg == "builtin:bergou") {
    const int a = run_scene(vrod::scenario_bergou(), out_dir / "viper", flags);
    if (a != 0) return a;
    return run_scene(vrod::scenario_bergou_baseline(), out_dir / "baseline", flags);
  }
  const int code = run_scene(resolve_scene(scene_arg), out_dir, flags);
  if (code != 0) return code;

  // The stretch scenario additionally logs per-iteration residuals of the
  // instantaneous-jump variant for convergence-slope analysis. 4000
  // iterations so the log covers the asymptote the slope fit corrects by.
  if (scene_arg == "builtin:stretch") {
    vrod::Solver probe(vrod::scenario_stretch_instant());
    vrod::write_convergence_csv(out_dir / "convergence.csv", probe.probe_convergence(4000));
    std::printf("wrote %s\n", (out_dir / "convergence.csv").c_str());
  }
  return 0;
}

int cmd_bench(const std::string& scene_arg, int steps) {
  vrod::Solver solver(resolve_scene(scene_arg));
  vrod::PhaseTimings sum;
  const auto start = Clock::now();
  for (int i = 0; i < steps; ++i) {
    vrod::StepReport report;
    try {
      report = solver.step();
    } catch (const vrod::SimulationError& e) {
      std::fprintf(stderr, "simulation aborted at step %d (t=%.6g s): %s\n",
                   solver.step_index() + 1, solver.time(), e.what());
      return 1;
    }
    sum.predict_ms += report.timings.predict_ms;
    sum.broad_ms += report.timings.broad_ms;
    sum.narrow_ms += report.timings.narrow_ms;
    sum.solve_ms += report.timings.solve_ms;
    sum.finalize_ms += report.timings.finalize_ms;
    sum.total_ms += report.timings.total_ms;
  }
  const double wall_s = std::chrono::duration<double>(Clock::now() - start).count();
  const double n = steps > 0 ? static_cast<double>(steps) : 1.0;

  std::printf("rods: %zu, DOFs: %d\n", solver.scene().rods.size(), solver.dof_count());
  std::printf("steps: %d in %.3f s -> %.1f steps/s\n", steps, wall_s,
              steps > 0 ? steps / wall_s : 0.0);
  std::printf("per-step phase (ms): predict %.3f, broad %.3f, narrow %.3f, solve %.3f, "
              "finalize %.3f, total %.3f\n",
              sum.predict_ms / n, sum.broad_ms / n, sum.narrow_ms / n, sum.solve_ms / n,
              sum.finalize_ms / n, sum.total_ms / n);
  return 0;
}

int cmd_comb(const std::string& slices_path, double radius, const std::string& out_path) {
  const auto slices = vrod::read_slice_file(slices_path);
  const vrod::CombResult result = vrod::comb_slices(slices);
  vrod::write_rod_scene(result.polylines, radius, out_path);
  std::printf("combed %zu slices into %zu rods -> %s\n", slices.size(),
              result.polylines.size(), out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tapered-capsule elastic rod simulator"};
  app.require_subcommand(1);

  std::string run_scene_arg;
  std::string run_out = "out";
  RunFlags run_flags;
  CLI::App* run = app.add_subcommand("run", "simulate a scene, writing CSV metrics");
  run->add_option("scene", run_scene_arg, "scene file or builtin:<name>")->required();
  run->add_option("--steps", run_flags.steps, "number of time steps")
      ->check(CLI::NonNegativeNumber);
  run->add_option("--out", run_out, "output directory");
  run->add_flag("--deterministic", run_flags.deterministic,
                "zero the wall-clock metrics column for reproducible output");
  run->add_flag("--frames", run_flags.frames, "write per-step OBJ geometry");

  std::string bench_scene_arg;
  int bench_steps = 100;
  CLI::App* bench = app.add_subcommand("bench", "measure stepping throughput");
  bench->add_option("scene", bench_scene_arg, "scene file or builtin:<name>")->required();
  bench->add_option("--steps", bench_steps, "number of time steps")
      ->check(CLI::NonNegativeNumber);

  std::string comb_slices_arg;
  std::string comb_out = "rods.json";
  double comb_radius = 0.05;
  CLI::App* comb = app.add_subcommand("comb", "match slice samples into rod polylines");
  comb->add_option("slices", comb_slices_arg, "slice text file (blank-line separated)")
      ->required();
  comb->add_option("--radius", comb_radius, "uniform rod radius for the output scene")
      ->check(CLI::PositiveNumber);
  comb->add_option("--out", comb_out, "output scene file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_scene_arg, run_out, run_flags);
    if (bench->parsed()) return cmd_bench(bench_scene_arg, bench_steps);
    if (comb->parsed()) return cmd_comb(comb_slices_arg, comb_radius, comb_out);
  } catch (const vrod::SceneParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::out_of_range& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
