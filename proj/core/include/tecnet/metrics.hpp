#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace tecnet {

/// H x W boolean grid, row-major.
struct BinaryMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> cells;  // 0 or 1

  BinaryMask() = default;
  BinaryMask(std::size_t h, std::size_t w) : height(h), width(w), cells(h * w, 0) {}

  bool at(std::size_t y, std::size_t x) const { return cells[y * width + x] != 0; }
  void set(std::size_t y, std::size_t x, bool v) { cells[y * width + x] = v ? 1 : 0; }
  std::size_t count() const;
};

/// Overlap scores in percent.
struct ConfusionMetrics {
  double dice = 0, jaccard = 0, sensitivity = 0, specificity = 0, accuracy = 0;
};

/// DI, JA, SE, SP, AC. With an empty ground truth SE is 100; with an empty
/// ground truth and prediction DI and JA are 100; with a full ground truth SP is 100.
ConfusionMetrics confusion_metrics(const BinaryMask& pred, const BinaryMask& gt);

struct VolumeMetrics {
  double voe = 0;  // 100 (1 - |P & G| / |P | G|)
  double rvd = 0;  // 100 (|P| - |G|) / |G|
};

/// Throws UndefinedMetricError when the ground truth is empty.
VolumeMetrics volume_metrics(const BinaryMask& pred, const BinaryMask& gt);

struct SurfaceMetrics {
  double asd = 0;
  double rmsd = 0;
  double hd95 = 0;
  /// Largest pooled directed distance (the classic Hausdorff distance).
  double max = 0;
};

/// Mask pixels with a 4-neighbour outside the mask or on the image edge.
BinaryMask surface_of(const BinaryMask& m);

/// Distances from every surface pixel of `from` to the nearest surface pixel
/// of `to`, in raster order of `from`.
std::vector<double> directed_surface_distances(const BinaryMask& from, const BinaryMask& to);

/// Pooled directed distances both ways. HD95 interpolates linearly between
/// order statistics at rank 0.95 (n - 1). Throws UndefinedMetricError when
/// either mask is empty.
SurfaceMetrics surface_metrics(const BinaryMask& pred, const BinaryMask& gt);

/// Squared Euclidean distance to the nearest set cell for every cell
/// (exact, separable lower-envelope transform). Cells of an empty mask get +inf.
std::vector<double> squared_distance_transform(const BinaryMask& m);

/// One row of the per-sample evaluation table.
struct SampleMetrics {
  std::string id;
  ConfusionMetrics confusion;
  VolumeMetrics volume;
  SurfaceMetrics surface;
  bool volume_defined = true;
  bool surface_defined = true;
};

SampleMetrics evaluate_pair(const std::string& id, const BinaryMask& pred, const BinaryMask& gt);

/// sample_id,DI,JA,SE,SP,AC,VOE,RVD,ASD,RMSD,HD95; undefined values are "nan".
void write_metrics_csv(std::ostream& os, const std::vector<SampleMetrics>& rows);

}  // namespace tecnet
