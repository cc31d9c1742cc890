#include "vrod/metrics.h"

#include <cstdio>
#include <stdexcept>

namespace vrod {

namespace {

void put(std::ofstream& out, double value, bool last = false) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  out << buf << (last ? "\n" : ",");
}

}  // namespace

MetricNormalizers metric_normalizers(const Scene& scene) {
  MetricNormalizers norms;
  double length = 0.0;
  double volume = 0.0;
  for (const Rod& rod : scene.rods) {
    for (double l : rod.rest.initial_lengths) length += l;
    volume += rest_volume(rod.rest);
  }
  norms.length = length > 0.0 ? length : 1.0;
  norms.volume = volume > 0.0 ? volume : 1.0;
  return norms;
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path, const Scene& scene)
    : out_(path, std::ios::binary),
      norms_(metric_normalizers(scene)),
      deterministic_(scene.settings.deterministic) {
  if (!out_) throw std::runtime_error("cannot write metrics file: " + path.string());
  out_ << "step,time,stretch_z,cross_section,surface_stretch,bend_twist,surface_bending,"
          "volume_stretch,volume_bend_u,volume_bend_v,total_volume,rest_volume,"
          "kinetic_energy,max_penetration,wall_ms\n";
}

void MetricsWriter::write(const StepReport& report, const Solver& solver) {
  out_ << report.step << ",";
  put(out_, report.time);
  for (int k = 0; k < kElasticKindCount; ++k) {
    const ConstraintKind kind = static_cast<ConstraintKind>(k);
    const bool volume_kind = kind == ConstraintKind::kVolumeStretch ||
                             kind == ConstraintKind::kVolumeBendU ||
                             kind == ConstraintKind::kVolumeBendV;
    put(out_, report.residuals[k] / (volume_kind ? norms_.volume : norms_.length));
  }
  put(out_, solver.total_volume());
  put(out_, solver.total_rest_volume());
  put(out_, solver.kinetic_energy());
  put(out_, report.max_penetration);
  put(out_, deterministic_ ? 0.0 : report.timings.total_ms, true);
  out_.flush();
}

ProbeWriter::ProbeWriter(const std::filesystem::path& path, const Scene& scene) {
  if (scene.probes.empty()) return;
  out_.open(path, std::ios::binary);
  if (!out_) throw std::runtime_error("cannot write probe file: " + path.string());
  enabled_ = true;
  out_ << "step,time";
  for (const Probe& probe : scene.probes) {
    out_ << "," << probe.name << "_x," << probe.name << "_y," << probe.name << "_z,"
         << probe.name << "_s";
  }
  out_ << "\n";
}

void ProbeWriter::write(int step, double time, const Scene& scene) {
  if (!enabled_) return;
  out_ << step << ",";
  put(out_, time, scene.probes.empty());
  for (std::size_t i = 0; i < scene.probes.size(); ++i) {
    const Probe& probe = scene.probes[i];
    const Rod& rod = scene.rods[probe.rod];
    const Vec3& c = rod.state.centers[probe.vertex];
    put(out_, c.x());
    put(out_, c.y());
    put(out_, c.z());
    put(out_, rod.state.scales[probe.vertex], i + 1 == scene.probes.size());
  }
  out_.flush();
}

void write_convergence_csv(const std::filesystem::path& path,
                           const std::vector<std::vector<double>>& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write convergence file: " + path.string());
  out << "iteration,stretch_z,cross_section,surface_stretch,bend_twist,surface_bending,"
         "volume_stretch,volume_bend_u,volume_bend_v\n";
  for (std::size_t i = 0; i < log.size(); ++i) {
    out << (i + 1) << ",";
    for (int k = 0; k < kElasticKindCount; ++k) put(out, log[i][k], k + 1 == kElasticKindCount);
  }
}

}  // namespace vrod
