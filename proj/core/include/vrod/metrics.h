#pragma once

#include <filesystem>
#include <fstream>
#include <vector>

#include "vrod/solver.h"

namespace vrod {

/// Rest-configuration constants the per-kind residual columns are divided
/// by: strain and bending kinds by the total as-built rod length, volume
/// kinds by the total as-built volume.
struct MetricNormalizers {
  double length = 1.0;
  double volume = 1.0;
};

MetricNormalizers metric_normalizers(const Scene& scene);

/// Per-step CSV: one header row, comma separator, %.17g numbers, LF line
/// endings. The wall-clock column is written as 0 in deterministic mode.
class MetricsWriter {
 public:
  MetricsWriter(const std::filesystem::path& path, const Scene& scene);
  void write(const StepReport& report, const Solver& solver);

 private:
  std::ofstream out_;
  MetricNormalizers norms_;
  bool deterministic_ = false;
};

/// Per-step probe CSV: step, time, then x/y/z/scale of every probed vertex.
class ProbeWriter {
 public:
  ProbeWriter(const std::filesystem::path& path, const Scene& scene);
  void write(int step, double time, const Scene& scene);
  bool enabled() const { return enabled_; }

 private:
  std::ofstream out_;
  bool enabled_ = false;
};

/// Writes one row per solver iteration with the per-kind residual RMS.
void write_convergence_csv(const std::filesystem::path& path,
                           const std::vector<std::vector<double>>& log);

}  // namespace vrod
