#include "spherear/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <sstream>

namespace spherear {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim surrounding whitespace
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  return out;
}

double parse_number(const std::string& s, const std::filesystem::path& path,
                    std::size_t line_no) {
  try {
    std::size_t consumed = 0;
    const double v = std::stod(s, &consumed);
    if (consumed != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError(path.string() + ":" + std::to_string(line_no) +
                      ": cannot parse number '" + s + "'");
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open input file " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open output file " + path.string());
  out.precision(17);
  return out;
}

}  // namespace

CompositionSeries read_composition_csv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line))
    throw FormatError(path.string() + ": empty file, expected a header row");
  CompositionSeries series;
  std::size_t line_no = 1;
  std::size_t d = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() < 3)
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected a time label and at least two parts");
    if (d == 0) d = fields.size() - 1;
    if (fields.size() - 1 != d)
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": row has " + std::to_string(fields.size() - 1) +
                        " parts, expected " + std::to_string(d));
    Vec parts(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) {
      parts[static_cast<Eigen::Index>(i)] =
          parse_number(fields[i + 1], path, line_no);
      if (parts[static_cast<Eigen::Index>(i)] < 0.0)
        throw FormatError(path.string() + ":" + std::to_string(line_no) +
                          ": negative part " + fields[i + 1]);
    }
    const double s = parts.sum();
    if (s <= 0.0)
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": parts sum to zero");
    if (std::abs(s - 1.0) > 1e-6)
      std::cerr << path.string() << ":" << line_no << ": warning: row sum "
                << s << " deviates from 1, normalizing\n";
    parts /= s;
    series.labels.push_back(fields[0]);
    series.compositions.push_back(make_composition(std::move(parts)));
  }
  if (series.compositions.empty())
    throw FormatError(path.string() + ": no data rows");
  return series;
}

void write_composition_csv(const std::filesystem::path& path,
                           const CompositionSeries& series) {
  std::ofstream out = open_output(path);
  const Eigen::Index d =
      series.compositions.empty() ? 0 : series.compositions.front().parts.size();
  out << "time";
  for (Eigen::Index i = 0; i < d; ++i) out << ",part" << (i + 1);
  out << "\n";
  for (std::size_t t = 0; t < series.compositions.size(); ++t) {
    out << series.labels[t];
    for (Eigen::Index i = 0; i < d; ++i)
      out << "," << series.compositions[t].parts[i];
    out << "\n";
  }
}

SampleSeries read_samples_csv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line))
    throw FormatError(path.string() + ": empty file, expected a header row");
  SampleSeries series;
  std::size_t line_no = 1;
  std::size_t d = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() < 2 || fields.size() > 3)
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected time,coord1[,coord2]");
    if (d == 0) d = fields.size() - 1;
    if (fields.size() - 1 != d)
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": inconsistent coordinate count");
    Vec coord(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i)
      coord[static_cast<Eigen::Index>(i)] =
          parse_number(fields[i + 1], path, line_no);
    auto it = std::find(series.labels.begin(), series.labels.end(), fields[0]);
    if (it == series.labels.end()) {
      series.labels.push_back(fields[0]);
      series.samples.emplace_back();
      it = std::prev(series.labels.end());
    }
    series.samples[static_cast<std::size_t>(
                       std::distance(series.labels.begin(), it))]
        .push_back(std::move(coord));
  }
  if (series.samples.empty())
    throw FormatError(path.string() + ": no data rows");
  return series;
}

nlohmann::json density_grid_to_json(const DensityGrid& grid) {
  nlohmann::json axes = nlohmann::json::array();
  for (const auto& ax : grid.axes)
    axes.push_back({{"min", ax.min}, {"max", ax.max}, {"cells", ax.cells}});
  return nlohmann::json{
      {"axes", std::move(axes)},
      {"values", std::vector<double>(grid.values.begin(), grid.values.end())}};
}

DensityGrid density_grid_from_json(const nlohmann::json& j) {
  std::vector<GridAxis> axes;
  for (const auto& ja : j.at("axes"))
    axes.push_back(GridAxis{ja.at("min").get<double>(),
                            ja.at("max").get<double>(),
                            ja.at("cells").get<int>()});
  const auto vv = j.at("values").get<std::vector<double>>();
  Vec values =
      Eigen::Map<const Vec>(vv.data(), static_cast<Eigen::Index>(vv.size()));
  return make_density_grid(std::move(axes), std::move(values));
}

DensitySeries read_density_series(const std::filesystem::path& path) {
  const nlohmann::json j = read_json_file(path);
  if (!j.is_array() || j.empty())
    throw FormatError(path.string() +
                      ": expected a non-empty JSON array of density grids");
  DensitySeries series;
  std::size_t index = 0;
  for (const auto& jg : j) {
    try {
      series.grids.push_back(density_grid_from_json(jg));
    } catch (const Error& e) {
      throw FormatError(path.string() + ": grid " + std::to_string(index) +
                        ": " + e.what());
    }
    series.labels.push_back(jg.contains("time")
                                ? jg.at("time").get<std::string>()
                                : std::to_string(index));
    if (series.grids.front().axes != series.grids.back().axes)
      throw FormatError(path.string() + ": grid " + std::to_string(index) +
                        " does not match the first grid's axes");
    ++index;
  }
  return series;
}

void write_density_series(const std::filesystem::path& path,
                          const DensitySeries& series) {
  nlohmann::json j = nlohmann::json::array();
  for (std::size_t t = 0; t < series.grids.size(); ++t) {
    nlohmann::json jg = density_grid_to_json(series.grids[t]);
    jg["time"] = series.labels[t];
    j.push_back(std::move(jg));
  }
  write_json_file(path, j);
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path,
                     const nlohmann::json& j) {
  std::ofstream out = open_output(path);
  out << j.dump(2) << "\n";
}

void write_ternary_csv(const std::filesystem::path& path,
                       std::span<const PlotRow> rows) {
  std::ofstream out = open_output(path);
  out << "time,series,a,b,c,x,y\n";
  for (const auto& row : rows) {
    if (row.point.size() != 3)
      throw DomainError("ternary plot data needs 3-part compositions");
    const Vec parts = row.point.array().square();
    const double s = parts.sum();
    const double a = parts[0] / s, b = parts[1] / s, c = parts[2] / s;
    out << row.label << "," << row.series << "," << a << "," << b << "," << c
        << "," << (b + 0.5 * c) << "," << (std::sqrt(3.0) / 2.0 * c) << "\n";
  }
}

void write_lonlat_csv(const std::filesystem::path& path,
                      std::span<const PlotRow> rows) {
  std::ofstream out = open_output(path);
  out << "time,series,longitude,latitude\n";
  constexpr double kDeg = 180.0 / 3.14159265358979323846;
  for (const auto& row : rows) {
    if (row.point.size() != 3)
      throw DomainError("spherical plot data needs points on S^2");
    const double z = std::clamp(row.point[2], -1.0, 1.0);
    out << row.label << "," << row.series << ","
        << kDeg * std::atan2(row.point[1], row.point[0]) << ","
        << kDeg * std::asin(z) << "\n";
  }
}

void write_contour_csv(const std::filesystem::path& path,
                       const DensityGrid& grid) {
  std::ofstream out = open_output(path);
  if (grid.axes.size() == 1) {
    out << "x,value\n";
    const auto& ax = grid.axes[0];
    for (int i = 0; i < ax.cells; ++i)
      out << ax.min + (i + 0.5) * ax.width() << "," << grid.values[i] << "\n";
    return;
  }
  out << "x,y,value\n";
  const auto& ax = grid.axes[0];
  const auto& ay = grid.axes[1];
  for (int i = 0; i < ax.cells; ++i)
    for (int j = 0; j < ay.cells; ++j)
      out << ax.min + (i + 0.5) * ax.width() << ","
          << ay.min + (j + 0.5) * ay.width() << ","
          << grid.values[static_cast<Eigen::Index>(i) * ay.cells + j] << "\n";
}

}  // namespace spherear
