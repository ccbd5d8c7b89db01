// Command-line front end: ingest compositional/sample/density series,
// fit SAR or DSAR models, predict with orthant projections, simulate
// synthetic series and run Monte Carlo validation of the asymptotics.
//
// Exit codes: 0 ok, 2 input error, 3 degenerate fit, 4 model version
// mismatch, 5 stationarity refusal.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "spherear/io.hpp"
#include "spherear/sar.hpp"
#include "spherear/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spherear;

namespace {

std::vector<double> parse_alphas(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string field;
  while (std::getline(ss, field, ',')) {
    try {
      out.push_back(std::stod(field));
    } catch (const std::exception&) {
      throw FormatError("cannot parse coefficient '" + field + "'");
    }
  }
  if (out.empty()) throw FormatError("empty coefficient list");
  return out;
}

std::vector<GridAxis> parse_grid(const std::string& spec) {
  std::vector<GridAxis> axes;
  std::stringstream ss(spec);
  std::string chunk;
  while (std::getline(ss, chunk, ',')) {
    std::stringstream cs(chunk);
    std::string label, smin, smax, scells;
    if (!std::getline(cs, label, ':') || !std::getline(cs, smin, ':') ||
        !std::getline(cs, smax, ':') || !std::getline(cs, scells, ':'))
      throw FormatError("grid chunk '" + chunk +
                        "' is not AX:min:max:cells");
    try {
      axes.push_back(GridAxis{std::stod(smin), std::stod(smax),
                              std::stoi(scells)});
    } catch (const std::exception&) {
      throw FormatError("cannot parse grid chunk '" + chunk + "'");
    }
  }
  if (axes.empty() || axes.size() > 2)
    throw FormatError("grid must declare one or two axes");
  return axes;
}

struct LoadedSeries {
  std::vector<std::string> labels;
  std::vector<SpherePoint> points;
  std::string kind;  // composition | samples | density
  std::optional<std::vector<GridAxis>> axes;
};

LoadedSeries load_series(const std::string& format, const fs::path& input,
                         const std::optional<std::string>& grid_spec,
                         double bandwidth_scale) {
  LoadedSeries out;
  out.kind = format;
  if (format == "composition") {
    CompositionSeries cs = read_composition_csv(input);
    out.labels = cs.labels;
    for (const auto& c : cs.compositions) out.points.push_back(psr(c));
    return out;
  }
  if (format == "samples") {
    SampleSeries ss = read_samples_csv(input);
    out.labels = ss.labels;
    std::vector<Vec> pooled;
    for (const auto& group : ss.samples)
      pooled.insert(pooled.end(), group.begin(), group.end());
    const std::vector<GridAxis> axes = grid_spec
                                           ? parse_grid(*grid_spec)
                                           : grid_from_samples(pooled);
    for (std::size_t t = 0; t < ss.samples.size(); ++t) {
      try {
        out.points.push_back(
            fpsr(estimate_density(ss.samples[t], axes, bandwidth_scale)));
      } catch (const Error& e) {
        throw DegenerateError("time " + ss.labels[t] + ": " + e.what());
      }
    }
    out.axes = axes;
    return out;
  }
  if (format == "density") {
    DensitySeries ds = read_density_series(input);
    out.labels = ds.labels;
    for (const auto& g : ds.grids) out.points.push_back(fpsr(g));
    out.axes = ds.grids.front().axes;
    return out;
  }
  throw FormatError("unknown format '" + format +
                    "' (expected composition|samples|density)");
}

json point_json(const SpherePoint& x) {
  return json{{"values", std::vector<double>(x.v.values.begin(),
                                             x.v.values.end())},
              {"weights", std::vector<double>(x.v.weights->begin(),
                                              x.v.weights->end())}};
}

// In-sample one-step fits R_hat_t = mu + sum_i alpha_i (R_{t-i} - mu),
// mapped back to the sphere for comparison with the observations.
std::vector<std::pair<std::size_t, SpherePoint>> fitted_points(
    const FitResult& fr, std::span<const SpherePoint> points) {
  const auto& ops = fr.series.operators;
  const int p = fr.model.p;
  std::vector<SkewOperator> centered;
  centered.reserve(ops.size());
  for (const auto& r : ops)
    centered.push_back(
        lincomb({WeightedTerm{1.0, &r}, WeightedTerm{-1.0, &fr.model.mean_op}}));
  std::vector<std::pair<std::size_t, SpherePoint>> out;
  for (std::size_t t = static_cast<std::size_t>(p); t < ops.size(); ++t) {
    std::vector<WeightedTerm> terms;
    terms.emplace_back(1.0, &fr.model.mean_op);
    for (int i = 1; i <= p; ++i)
      terms.emplace_back(fr.model.alphas[static_cast<std::size_t>(i) - 1],
                         &centered[t - static_cast<std::size_t>(i)]);
    const SkewOperator rhat = lincomb(terms);
    if (fr.model.variant == Variant::Sar) {
      out.emplace_back(t, rotate(rhat, fr.model.base));
    } else {
      out.emplace_back(t + 1, rotate(rhat, points[t]));
    }
  }
  return out;
}

void emit_composition_plots(const fs::path& out_dir,
                            std::span<const std::string> labels,
                            std::span<const SpherePoint> observed,
                            std::span<const std::pair<std::size_t, SpherePoint>>
                                fitted) {
  if (observed.empty() || observed.front().dim() != 3) return;
  std::vector<PlotRow> rows;
  for (std::size_t t = 0; t < observed.size(); ++t)
    rows.push_back(PlotRow{labels[t], "observed", observed[t].v.values});
  for (const auto& [t, x] : fitted)
    rows.push_back(PlotRow{labels[t], "fitted", x.v.values});
  write_ternary_csv(out_dir / "ternary.csv", rows);
  write_lonlat_csv(out_dir / "lonlat.csv", rows);
}

struct FitOptions {
  std::string input;
  std::string format;
  std::string variant = "sar";
  std::string out_dir = ".";
  int order = 1;
  int scan_orders = 0;
  double bandwidth_scale = 1.0;
  std::optional<std::string> grid_spec;
};

void run_fit(const FitOptions& opt) {
  const LoadedSeries data = load_series(
      opt.format, opt.input, opt.grid_spec, opt.bandwidth_scale);
  const Variant variant = variant_from_string(opt.variant);
  const FitResult fr = fit_detailed(data.points, opt.order, variant);

  fs::create_directories(opt.out_dir);
  json jm = model_to_json(fr.model);
  json source{{"kind", data.kind}};
  if (data.axes) {
    json axes = json::array();
    for (const auto& ax : *data.axes)
      axes.push_back({{"min", ax.min}, {"max", ax.max}, {"cells", ax.cells}});
    source["axes"] = std::move(axes);
  }
  jm["source"] = std::move(source);
  write_json_file(fs::path(opt.out_dir) / "model.json", jm);

  const auto fitted = fitted_points(fr, data.points);
  json fit_distances = json::array();
  for (const auto& [t, x] : fitted)
    fit_distances.push_back(
        {{"time", data.labels[t]},
         {"fisher_rao", geodesic_distance(x, data.points[t])}});

  json diag{{"lambda", fr.acov.lags},
            {"stationarity",
             {{"stationary", fr.model.stationarity.stationary},
              {"min_root_modulus", fr.model.stationarity.min_root_modulus}}},
            {"residual_hs_norms", fr.model.residual_norms},
            {"fit_distances", std::move(fit_distances)}};

  if (opt.scan_orders > 0) {
    json scan = json::array();
    for (int q = 1; q <= opt.scan_orders; ++q) {
      try {
        const SarModel mq = fit(data.points, q, variant);
        double mean_res = 0.0;
        for (double r : mq.residual_norms) mean_res += r;
        mean_res /= static_cast<double>(mq.residual_norms.size());
        scan.push_back({{"p", q}, {"mean_residual_hs_norm", mean_res}});
      } catch (const Error& e) {
        scan.push_back({{"p", q}, {"error", e.what()}});
      }
    }
    diag["order_scan"] = std::move(scan);
  }
  write_json_file(fs::path(opt.out_dir) / "diagnostics.json", diag);

  if (data.kind == "composition")
    emit_composition_plots(opt.out_dir, data.labels, data.points, fitted);
  std::cout << "fitted " << to_string(variant) << "(" << opt.order << ") on "
            << data.points.size() << " observations -> " << opt.out_dir
            << "/model.json\n";
}

struct PredictOptions {
  std::string model_path;
  std::string projection = "none";
  std::string out_dir = ".";
};

void run_predict(const PredictOptions& opt) {
  const json jm = read_json_file(opt.model_path);
  const SarModel model = model_from_json(jm);
  const Projection proj = projection_from_string(opt.projection);
  const PredictionResult result = predict(model, proj);

  fs::create_directories(opt.out_dir);
  json out{{"format", "sar-prediction/1"},
           {"variant", to_string(model.variant)},
           {"projection", to_string(proj)},
           {"projection_fired", result.projection_fired},
           {"point", point_json(result.point)}};
  if (proj == Projection::Proj1) out["c1"] = result.c1;

  const std::string kind =
      jm.contains("source") ? jm["source"].value("kind", "points") : "points";
  if (kind == "composition") {
    const Vec& v = result.point.v.values;
    if ((v.array() >= -1e-9).all()) {
      const Composition c = psr_inverse(result.point);
      out["composition"] =
          std::vector<double>(c.parts.begin(), c.parts.end());
    } else {
      out["note"] =
          "prediction leaves the nonnegative orthant; rerun with a projection";
    }
  } else if ((kind == "density" || kind == "samples") &&
             jm["source"].contains("axes")) {
    std::vector<GridAxis> axes;
    for (const auto& ja : jm["source"]["axes"])
      axes.push_back(GridAxis{ja.at("min").get<double>(),
                              ja.at("max").get<double>(),
                              ja.at("cells").get<int>()});
    // Squared and renormalized: the prediction may sit slightly off the
    // orthant, so clip before squaring into a density.
    Vec g = result.point.v.values.cwiseMax(0.0);
    const SpherePoint clipped =
        SpherePoint::normalized(AmbientVector{g, result.point.v.weights});
    const DensityGrid grid = fpsr_inverse(clipped, axes);
    out["density"] = density_grid_to_json(grid);
    write_contour_csv(fs::path(opt.out_dir) / "prediction_contour.csv", grid);
  }
  write_json_file(fs::path(opt.out_dir) / "prediction.json", out);
  std::cout << "prediction written to " << opt.out_dir
            << "/prediction.json (projection " << to_string(proj)
            << (result.projection_fired ? ", fired" : "") << ")\n";
}

struct SimulateOptions {
  std::string variant = "sar";
  std::string alphas = "0.5";
  std::string format = "composition";
  std::string out_dir = ".";
  std::optional<std::string> grid_spec;
  int length = 100;
  int dim = 3;
  int active = 2;
  double sigma = 0.1;
  double drift = 0.0;
  std::uint64_t seed = 0;
  bool force = false;
};

SpherePoint gaussian_blob(const std::vector<GridAxis>& axes) {
  DensityGrid grid{axes, Vec()};
  const int n0 = axes[0].cells;
  const int n1 = axes.size() > 1 ? axes[1].cells : 1;
  Vec values(static_cast<Eigen::Index>(n0) * n1);
  auto center = [](const GridAxis& ax) { return 0.5 * (ax.min + ax.max); };
  auto spread = [](const GridAxis& ax) { return (ax.max - ax.min) / 6.0; };
  for (int i = 0; i < n0; ++i)
    for (int j = 0; j < n1; ++j) {
      const double x = axes[0].min + (i + 0.5) * axes[0].width();
      double e = std::pow((x - center(axes[0])) / spread(axes[0]), 2);
      if (axes.size() > 1) {
        const double y = axes[1].min + (j + 0.5) * axes[1].width();
        e += std::pow((y - center(axes[1])) / spread(axes[1]), 2);
      }
      values[static_cast<Eigen::Index>(i) * n1 + j] = std::exp(-0.5 * e);
    }
  grid.values = values / (values.sum() * grid.cell_weight());
  return fpsr(grid);
}

void run_simulate(const SimulateOptions& opt) {
  const Variant variant = variant_from_string(opt.variant);
  const std::vector<double> alphas = parse_alphas(opt.alphas);

  SpherePoint base = sphere_point({1.0});  // replaced below
  std::optional<std::vector<GridAxis>> axes;
  if (opt.format == "density") {
    if (!opt.grid_spec)
      throw FormatError("--grid is required for density simulation");
    axes = parse_grid(*opt.grid_spec);
    base = gaussian_blob(*axes);
  } else if (opt.format == "composition") {
    base = SpherePoint::normalized(
        ambient(Vec::Ones(opt.dim), unit_weights(opt.dim)));
  } else {
    throw FormatError("simulate emits composition or density series");
  }

  SkewOperator mean_op = SkewOperator::zero(base.dim(), base.v.weights);
  if (opt.drift != 0.0) {
    const Vec& w = *base.v.weights;
    Vec e1 = Vec::Zero(base.dim());
    Vec e2 = Vec::Zero(base.dim());
    e1[0] = 1.0 / std::sqrt(w[0]);
    e2[1] = 1.0 / std::sqrt(w[1]);
    mean_op.atoms.push_back(SkewAtom{opt.drift, std::move(e1), std::move(e2)});
  }

  SimulationRun run{variant,
                    alphas,
                    std::move(mean_op),
                    base,
                    opt.length,
                    -1,
                    opt.seed,
                    InnovationSpec{base.dim(), opt.active, opt.sigma, opt.seed,
                                   base.v.weights},
                    opt.force,
                    false};
  const SimulationResult sim = simulate_sar(run);

  fs::create_directories(opt.out_dir);
  std::vector<std::string> labels;
  for (std::size_t t = 0; t < sim.points.size(); ++t)
    labels.push_back("t" + std::to_string(t + 1));

  if (opt.format == "composition") {
    CompositionSeries cs;
    cs.labels = labels;
    for (const auto& x : sim.points) {
      Vec parts = x.v.values.array().square().matrix();
      parts /= parts.sum();
      cs.compositions.push_back(make_composition(std::move(parts)));
    }
    write_composition_csv(fs::path(opt.out_dir) / "series.csv", cs);
    std::cout << "series written to " << opt.out_dir << "/series.csv\n";
  } else {
    DensitySeries ds;
    ds.labels = labels;
    for (const auto& x : sim.points) {
      Vec g = x.v.values.cwiseMax(0.0);
      ds.grids.push_back(fpsr_inverse(
          SpherePoint::normalized(AmbientVector{g, x.v.weights}), *axes));
    }
    write_density_series(fs::path(opt.out_dir) / "series.json", ds);
    std::cout << "series written to " << opt.out_dir << "/series.json\n";
  }

  json manifest{{"variant", to_string(variant)}, {"alphas", alphas},
                {"length", opt.length},          {"dim", base.dim()},
                {"active", opt.active},          {"sigma", opt.sigma},
                {"drift", opt.drift},            {"seed", opt.seed}};
  write_json_file(fs::path(opt.out_dir) / "manifest.json", manifest);
}

struct ValidateOptions {
  std::optional<std::string> input;
  std::optional<std::string> alphas;
  std::string out_dir = ".";
  int replicates = 500;
  int length = 2000;
  int dim = 3;
  int active = 2;
  double sigma = 0.3;
  std::uint64_t seed = 0;
};

void run_validate(const ValidateOptions& opt) {
  fs::create_directories(opt.out_dir);
  bool did_something = false;

  if (opt.input) {
    const CompositionSeries cs = read_composition_csv(*opt.input);
    std::vector<PlotRow> rows;
    for (std::size_t t = 0; t < cs.compositions.size(); ++t)
      rows.push_back(
          PlotRow{cs.labels[t], "observed", psr(cs.compositions[t]).v.values});
    write_ternary_csv(fs::path(opt.out_dir) / "ternary.csv", rows);
    write_lonlat_csv(fs::path(opt.out_dir) / "lonlat.csv", rows);
    did_something = true;
  }

  if (opt.alphas) {
    if (opt.replicates < 200)
      throw FormatError("validation needs at least 200 replicates");
    CltParams params{parse_alphas(*opt.alphas),
                     InnovationSpec{opt.dim, opt.active, opt.sigma, opt.seed},
                     -1,
                     -1,
                     opt.seed,
                     0};
    const MonteCarloReport report =
        monte_carlo_lambda_clt(params, opt.replicates, opt.length);
    write_json_file(fs::path(opt.out_dir) / "mc_report.json",
                    report_to_json(report, params));
    double max_rel = 0.0;
    for (Eigen::Index i = 0; i < report.relative_diff.rows(); ++i)
      for (Eigen::Index j = 0; j < report.relative_diff.cols(); ++j)
        if (std::abs(report.theoretical_V(i, j)) > 1e-3)
          max_rel = std::max(max_rel, report.relative_diff(i, j));
    std::cout << "monte carlo report written to " << opt.out_dir
              << "/mc_report.json (max relative deviation on large entries "
              << max_rel << ")\n";
    did_something = true;
  }

  if (!did_something)
    throw FormatError("validate needs --alphas and/or --input");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "spherear: autoregressive modeling of spherical time series "
      "(compositional and distributional data)"};
  app.require_subcommand(1);

  FitOptions fit_opt;
  auto* cmd_fit = app.add_subcommand("fit", "fit a SAR/DSAR model");
  cmd_fit->add_option("--input", fit_opt.input, "input series file")
      ->required();
  cmd_fit->add_option("--format", fit_opt.format,
                      "composition|samples|density")
      ->required();
  cmd_fit->add_option("--variant", fit_opt.variant, "sar|dsar");
  cmd_fit->add_option("--order", fit_opt.order, "model order p");
  cmd_fit->add_option("--grid", fit_opt.grid_spec,
                      "AX:min:max:cells[,AX2:...] for sample ingestion");
  cmd_fit->add_option("--bandwidth-scale", fit_opt.bandwidth_scale,
                      "multiplier on the range/5 bandwidth rule");
  cmd_fit->add_option("--scan-orders", fit_opt.scan_orders,
                      "report residual norms for p = 1..N");
  cmd_fit->add_option("--out", fit_opt.out_dir, "output directory");

  PredictOptions pred_opt;
  auto* cmd_predict =
      app.add_subcommand("predict", "one-step prediction from a model file");
  cmd_predict->add_option("--model", pred_opt.model_path, "model.json path")
      ->required();
  cmd_predict->add_option("--projection", pred_opt.projection,
                          "proj1|proj2|none");
  cmd_predict->add_option("--out", pred_opt.out_dir, "output directory");

  SimulateOptions sim_opt;
  auto* cmd_simulate =
      app.add_subcommand("simulate", "generate a synthetic spherical series");
  cmd_simulate->add_option("--variant", sim_opt.variant, "sar|dsar");
  cmd_simulate->add_option("--alphas", sim_opt.alphas,
                           "comma-separated AR coefficients");
  cmd_simulate->add_option("--format", sim_opt.format,
                           "composition|density");
  cmd_simulate->add_option("--grid", sim_opt.grid_spec,
                           "grid for density output");
  cmd_simulate->add_option("--length", sim_opt.length, "series length");
  cmd_simulate->add_option("--dim", sim_opt.dim, "ambient dimension");
  cmd_simulate->add_option("--active", sim_opt.active,
                           "innovation support size");
  cmd_simulate->add_option("--sigma", sim_opt.sigma, "innovation scale");
  cmd_simulate->add_option("--drift", sim_opt.drift,
                           "mean-operator coefficient");
  cmd_simulate->add_option("--seed", sim_opt.seed, "random seed");
  cmd_simulate->add_flag("--force", sim_opt.force,
                         "simulate even when non-stationary");
  cmd_simulate->add_option("--out", sim_opt.out_dir, "output directory");

  ValidateOptions val_opt;
  auto* cmd_validate = app.add_subcommand(
      "validate", "Monte Carlo CLT validation and plot-data emission");
  cmd_validate->add_option("--alphas", val_opt.alphas,
                           "AR coefficients to validate");
  cmd_validate->add_option("--input", val_opt.input,
                           "compositional series for plot emission");
  cmd_validate->add_option("--replicates", val_opt.replicates,
                           "Monte Carlo replicates (>= 200)");
  cmd_validate->add_option("--length", val_opt.length, "series length n");
  cmd_validate->add_option("--dim", val_opt.dim, "ambient dimension");
  cmd_validate->add_option("--active", val_opt.active,
                           "innovation support size");
  cmd_validate->add_option("--sigma", val_opt.sigma, "innovation scale");
  cmd_validate->add_option("--seed", val_opt.seed, "random seed");
  cmd_validate->add_option("--out", val_opt.out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_fit->parsed()) run_fit(fit_opt);
    if (cmd_predict->parsed()) run_predict(pred_opt);
    if (cmd_simulate->parsed()) run_simulate(sim_opt);
    if (cmd_validate->parsed()) run_validate(val_opt);
    return 0;
  } catch (const ModelVersionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const StationarityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const DegenerateError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
