#include "spherear/transforms.hpp"

#include <algorithm>
#include <cmath>

namespace spherear {

namespace {
constexpr double kSumTol = 1e-9;
constexpr double kIntegralTol = 1e-6;
constexpr double kNegativeTol = 1e-9;
}  // namespace

Composition make_composition(Vec parts, double kappa) {
  if (kappa <= 0.0) throw DomainError("composition kappa must be positive");
  if ((parts.array() < 0.0).any())
    throw DomainError("composition parts must be nonnegative");
  const double s = parts.sum();
  if (std::abs(s - kappa) > kSumTol * std::max(1.0, kappa))
    throw DomainError("composition parts sum to " + std::to_string(s) +
                      ", expected kappa = " + std::to_string(kappa));
  return Composition{std::move(parts), kappa};
}

bool operator==(const GridAxis& a, const GridAxis& b) {
  return a.min == b.min && a.max == b.max && a.cells == b.cells;
}

double DensityGrid::cell_weight() const {
  double w = 1.0;
  for (const auto& ax : axes) w *= ax.width();
  return w;
}

Eigen::Index DensityGrid::size() const {
  Eigen::Index n = 1;
  for (const auto& ax : axes) n *= ax.cells;
  return n;
}

Weights DensityGrid::sphere_weights() const {
  return make_weights(Vec::Constant(size(), cell_weight()));
}

DensityGrid make_density_grid(std::vector<GridAxis> axes, Vec values) {
  if (axes.empty() || axes.size() > 2)
    throw DomainError("density grids support 1 or 2 axes");
  for (const auto& ax : axes)
    if (ax.cells < 1 || !(ax.max > ax.min))
      throw DomainError("grid axis needs max > min and at least one cell");
  DensityGrid g{std::move(axes), std::move(values)};
  if (g.values.size() != g.size())
    throw DimensionError("grid value count " + std::to_string(g.values.size()) +
                         " does not match cell count " +
                         std::to_string(g.size()));
  if ((g.values.array() < -kNegativeTol).any())
    throw DomainError("density values must be nonnegative");
  g.values = g.values.cwiseMax(0.0);
  const double integral = g.values.sum() * g.cell_weight();
  if (std::abs(integral - 1.0) > kIntegralTol)
    throw DomainError("density integrates to " + std::to_string(integral) +
                      ", expected 1");
  return g;
}

SpherePoint psr(const Composition& c) {
  if ((c.parts.array() < 0.0).any())
    throw DomainError("psr requires nonnegative parts");
  Vec v = (c.parts / c.kappa).cwiseMax(0.0).cwiseSqrt();
  auto w = unit_weights(v.size());
  return SpherePoint::normalized(ambient(std::move(v), std::move(w)));
}

Composition psr_inverse(const SpherePoint& x, double kappa) {
  if ((x.v.values.array() < -kNegativeTol).any())
    throw DomainError("psr inverse requires componentwise nonnegative input");
  Vec parts = (kappa * x.v.values.cwiseMax(0.0).array().square()).matrix();
  // Unit norm makes the parts sum to kappa exactly up to roundoff.
  parts *= kappa / parts.sum();
  return Composition{std::move(parts), kappa};
}

SpherePoint fpsr(const DensityGrid& f) {
  if ((f.values.array() < 0.0).any())
    throw DomainError("fpsr requires nonnegative density values");
  Vec g = f.values.cwiseSqrt();
  return SpherePoint::normalized(ambient(std::move(g), f.sphere_weights()));
}

DensityGrid fpsr_inverse(const SpherePoint& g, std::vector<GridAxis> axes) {
  Vec f = g.v.values.array().square().matrix();
  return make_density_grid(std::move(axes), std::move(f));
}

double fisher_rao_distance(const DensityGrid& f, const DensityGrid& g) {
  if (f.axes != g.axes)
    throw DimensionError("fisher-rao distance requires identical grids");
  return geodesic_distance(fpsr(f), fpsr(g));
}

std::vector<GridAxis> grid_from_samples(std::span<const Vec> samples,
                                        int cells_per_axis) {
  if (samples.empty()) throw DomainError("cannot derive a grid from no samples");
  const Eigen::Index d = samples.front().size();
  std::vector<GridAxis> axes;
  for (Eigen::Index a = 0; a < d; ++a) {
    double lo = samples.front()[a], hi = samples.front()[a];
    for (const auto& s : samples) {
      lo = std::min(lo, s[a]);
      hi = std::max(hi, s[a]);
    }
    if (!(hi > lo)) {
      // Zero data range; open up a token interval around the value.
      lo -= 0.5;
      hi += 0.5;
    }
    axes.push_back(GridAxis{lo, hi, cells_per_axis});
  }
  return axes;
}

namespace {

// One smoothing pass along `axis` with a truncated Gaussian, kernel mass
// renormalized cell by cell so clipped boundary kernels keep unit mass.
void smooth_axis(Vec& values, const std::vector<GridAxis>& axes, int axis,
                 double bandwidth) {
  const int n0 = axes[0].cells;
  const int n1 = axes.size() > 1 ? axes[1].cells : 1;
  const int len = axis == 0 ? n0 : n1;
  const double sigma_cells =
      bandwidth / axes[static_cast<std::size_t>(axis)].width();
  if (sigma_cells <= 0.0) return;
  const int radius =
      std::min(len - 1, static_cast<int>(std::ceil(4.0 * sigma_cells)));
  std::vector<double> kernel(static_cast<std::size_t>(radius) + 1);
  for (int r = 0; r <= radius; ++r)
    kernel[static_cast<std::size_t>(r)] =
        std::exp(-0.5 * (r / sigma_cells) * (r / sigma_cells));

  auto idx = [&](int i, int j) { return i * n1 + j; };
  Vec out(values.size());
  const int lines = axis == 0 ? n1 : n0;
  for (int line = 0; line < lines; ++line) {
    for (int i = 0; i < len; ++i) {
      double acc = 0.0, mass = 0.0;
      const int lo = std::max(0, i - radius);
      const int hi = std::min(len - 1, i + radius);
      for (int j = lo; j <= hi; ++j) {
        const double k = kernel[static_cast<std::size_t>(std::abs(i - j))];
        const double v = axis == 0 ? values[idx(j, line)] : values[idx(line, j)];
        acc += k * v;
        mass += k;
      }
      const double r = acc / mass;
      if (axis == 0)
        out[idx(i, line)] = r;
      else
        out[idx(line, i)] = r;
    }
  }
  values = std::move(out);
}

}  // namespace

DensityGrid estimate_density(std::span<const Vec> samples,
                             std::vector<GridAxis> axes,
                             double bandwidth_scale) {
  if (samples.size() < 2)
    throw DomainError("density estimation needs at least two samples");
  const std::size_t d = axes.size();
  if (d < 1 || d > 2)
    throw DomainError("density estimation supports 1 or 2 dimensions");
  for (const auto& s : samples)
    if (static_cast<std::size_t>(s.size()) != d)
      throw DimensionError("sample dimension does not match grid");

  bool all_identical = true;
  for (const auto& s : samples)
    if (s != samples.front()) {
      all_identical = false;
      break;
    }
  if (all_identical) throw DegenerateError("degenerate sample: no spread");

  const int n0 = axes[0].cells;
  const int n1 = d > 1 ? axes[1].cells : 1;
  Vec counts = Vec::Zero(static_cast<Eigen::Index>(n0) * n1);
  auto cell_of = [](const GridAxis& ax, double v) {
    const int c = static_cast<int>((v - ax.min) / ax.width());
    return std::clamp(c, 0, ax.cells - 1);
  };
  for (const auto& s : samples) {
    const int i = cell_of(axes[0], s[0]);
    const int j = d > 1 ? cell_of(axes[1], s[1]) : 0;
    counts[static_cast<Eigen::Index>(i) * n1 + j] += 1.0;
  }

  DensityGrid grid{axes, Vec()};
  grid.values =
      counts / (static_cast<double>(samples.size()) * grid.cell_weight());

  // Bandwidth rule: one fifth of the data range per axis.
  for (std::size_t a = 0; a < d; ++a) {
    double lo = samples.front()[static_cast<Eigen::Index>(a)];
    double hi = lo;
    for (const auto& s : samples) {
      lo = std::min(lo, s[static_cast<Eigen::Index>(a)]);
      hi = std::max(hi, s[static_cast<Eigen::Index>(a)]);
    }
    const double bw = (hi - lo) / 5.0 * bandwidth_scale;
    if (bw > 0.0) smooth_axis(grid.values, grid.axes, static_cast<int>(a), bw);
  }

  const double integral = grid.values.sum() * grid.cell_weight();
  if (integral <= 0.0) throw DegenerateError("degenerate sample: empty histogram");
  grid.values /= integral;
  return grid;
}

}  // namespace spherear
