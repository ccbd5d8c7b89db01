#pragma once

#include <filesystem>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "spherear/transforms.hpp"

namespace spherear {

/// Compositional series: one row per time, parts normalized to kappa = 1
/// on load (a warning is printed when a row sum deviates by more than
/// 1e-6).
struct CompositionSeries {
  std::vector<std::string> labels;
  std::vector<Composition> compositions;
};

CompositionSeries read_composition_csv(const std::filesystem::path& path);
void write_composition_csv(const std::filesystem::path& path,
                           const CompositionSeries& series);

/// Raw samples grouped by time label (columns: time, coord1[, coord2]).
struct SampleSeries {
  std::vector<std::string> labels;
  std::vector<std::vector<Vec>> samples;  // one group per label
};

SampleSeries read_samples_csv(const std::filesystem::path& path);

/// Series of densities on one shared grid.
struct DensitySeries {
  std::vector<std::string> labels;
  std::vector<DensityGrid> grids;
};

nlohmann::json density_grid_to_json(const DensityGrid& grid);
DensityGrid density_grid_from_json(const nlohmann::json& j);

DensitySeries read_density_series(const std::filesystem::path& path);
void write_density_series(const std::filesystem::path& path,
                          const DensitySeries& series);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path,
                     const nlohmann::json& j);

/// Plot-ready emission for compositional data (data only, no rendering):
/// ternary coordinates and longitude/latitude rows tagged by series name.
struct PlotRow {
  std::string label;
  std::string series;  // observed | fitted | predicted
  Vec point;           // sphere coordinates, d = 3
};

void write_ternary_csv(const std::filesystem::path& path,
                       std::span<const PlotRow> rows);
void write_lonlat_csv(const std::filesystem::path& path,
                      std::span<const PlotRow> rows);

// Contour-grid CSV for 1-D and 2-D densities: coordinates of each cell
// center followed by the density value.
void write_contour_csv(const std::filesystem::path& path,
                       const DensityGrid& grid);

}  // namespace spherear
