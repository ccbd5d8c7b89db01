#pragma once

#include <optional>
#include <span>
#include <vector>

#include "spherear/space.hpp"

namespace spherear {

/// Point of the simplex: nonnegative parts summing to kappa.
struct Composition {
  Vec parts;
  double kappa = 1.0;
};

// Validates nonnegativity and the sum constraint (tolerance 1e-9).
Composition make_composition(Vec parts, double kappa = 1.0);

/// Axis of a rectangular grid with equal-width cells.
struct GridAxis {
  double min = 0.0;
  double max = 1.0;
  int cells = 0;

  double width() const { return (max - min) / cells; }
};

bool operator==(const GridAxis& a, const GridAxis& b);

/// Discretized nonnegative density on a rectangular grid; values are
/// row-major over the axes and integrate to 1 against the cell areas.
struct DensityGrid {
  std::vector<GridAxis> axes;
  Vec values;

  double cell_weight() const;      // product of axis widths
  Eigen::Index size() const;       // product of axis cell counts
  Weights sphere_weights() const;  // constant cell-area weights
};

DensityGrid make_density_grid(std::vector<GridAxis> axes, Vec values);

// Point-wise square root ratio transform of Eq.-(1) shape:
// psr(z) = (sqrt(z_1/kappa), ..., sqrt(z_d/kappa)), a unit vector of R^d.
SpherePoint psr(const Composition& c);
Composition psr_inverse(const SpherePoint& x, double kappa = 1.0);

// Functional square root transform: fpsr(f) = sqrt(f) on the grid, a
// sphere point whose weights are the cell areas.
SpherePoint fpsr(const DensityGrid& f);
DensityGrid fpsr_inverse(const SpherePoint& g, std::vector<GridAxis> axes);

// Fisher-Rao geodesic distance arccos <sqrt(f), sqrt(g)> between
// densities sharing one grid.
double fisher_rao_distance(const DensityGrid& f, const DensityGrid& g);

// Histogram on the grid followed by a separable truncated-Gaussian
// smoothing pass per axis with bandwidth (data range)/5 * scale, kernel
// mass renormalized per cell at the boundaries, then global
// renormalization so the result integrates to exactly 1. D in {1, 2}.
DensityGrid estimate_density(std::span<const Vec> samples,
                             std::vector<GridAxis> axes,
                             double bandwidth_scale = 1.0);

// Grid covering the sample range with the given cell count per axis
// (default mirrors the 50-bin histogram convention).
std::vector<GridAxis> grid_from_samples(std::span<const Vec> samples,
                                        int cells_per_axis = 50);

}  // namespace spherear
