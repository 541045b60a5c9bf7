// Command-line front end: forge the perturbed metric, verify the
// construction, trace geodesics, run the injective-line census, and sweep
// the perturbation ladder. Exit codes: 0 success, 1 validation failure,
// 2 numerical failure.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "geoscat/census.hpp"
#include "geoscat/config.hpp"
#include "geoscat/deflection.hpp"
#include "geoscat/geodesic_flow.hpp"
#include "geoscat/metric_forge.hpp"
#include "geoscat/metric_grid.hpp"
#include "geoscat/profile.hpp"

namespace fs = std::filesystem;
using namespace geoscat;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

std::string grid_path(const RunConfig& cfg) {
  return (fs::path(cfg.output_dir) / "metric.grid").string();
}

void ensure_output_dir(const RunConfig& cfg) {
  fs::create_directories(cfg.output_dir);
  // persist the effective configuration next to the artifacts
  RunConfig copy = cfg;
  copy.save((fs::path(cfg.output_dir) / "resolved_config.json").string());
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

TraceOptions trace_options(const RunConfig& cfg) {
  TraceOptions o;
  o.atol = cfg.atol;
  o.rtol = cfg.rtol;
  o.escape_radius = cfg.escape_radius;
  return o;
}

nlohmann::json report_to_json(const ForgeReport& rep) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : rep.checks)
    checks.push_back({{"name", c.name},
                      {"residual", c.residual},
                      {"tolerance", c.tolerance},
                      {"pass", c.pass}});
  return {{"checks", checks},
          {"margin_inner", rep.margin_inner},
          {"margin_outer", rep.margin_outer},
          {"all_pass", rep.all_pass()}};
}

void write_svg(const fs::path& path, const GeodesicTrace& tr) {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  std::string pts;
  char buf[64];
  for (const auto& g : tr.samples) {
    const double x = g.pos.r * std::cos(g.pos.theta);
    const double y = g.pos.r * std::sin(g.pos.theta);
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
    std::snprintf(buf, sizeof buf, "%.6f,%.6f ", x, -y); // SVG y points down
    pts += buf;
  }
  const double pad = 0.05 * std::max(xmax - xmin, ymax - ymin) + 0.1;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "<svg xmlns='http://www.w3.org/2000/svg' viewBox='"
      << (xmin - pad) << " " << (-ymax - pad) << " "
      << (xmax - xmin + 2 * pad) << " " << (ymax - ymin + 2 * pad) << "'>\n"
      << "  <!-- planar coordinates (x, y) = (r cos theta, r sin theta); "
         "guide circles at the band boundaries -->\n"
      << "  <circle cx='0' cy='0' r='" << kR0
      << "' fill='none' stroke='#bbbbbb' stroke-width='0.01'/>\n"
      << "  <circle cx='0' cy='0' r='" << kR1
      << "' fill='none' stroke='#bbbbbb' stroke-width='0.01'/>\n"
      << "  <polyline fill='none' stroke='#1f77b4' stroke-width='0.02' "
         "points='"
      << pts << "'/>\n</svg>\n";
}

int cmd_forge(const RunConfig& cfg, bool verify_only) {
  ensure_output_dir(cfg);
  ProfileFunction f;
  DeflectionSpec spec(cfg.epsilon, cfg.amplitude);
  const auto result =
      forge_metric(spec, f, cfg.grid_n_r, cfg.grid_n_theta, cfg.delta);
  const auto report = verify_construction(result.grid, result.phi, spec);

  nlohmann::json j = report_to_json(report);
  j["epsilon"] = cfg.epsilon;
  j["grid_n_r"] = cfg.grid_n_r;
  j["grid_n_theta"] = cfg.grid_n_theta;

  if (verify_only) {
    // consistency against a previously forged grid, when present
    const std::string gp = grid_path(cfg);
    if (fs::exists(gp)) {
      const MetricGrid disk = import_grid(gp);
      double diff = -1.0;
      if (disk.n_r == result.grid.n_r &&
          disk.n_theta == result.grid.n_theta &&
          disk.epsilon == result.grid.epsilon) {
        diff = 0.0;
        for (size_t i = 0; i < disk.g_rr.size(); ++i) {
          diff = std::max(diff, std::fabs(disk.g_rr[i] - result.grid.g_rr[i]));
          diff = std::max(diff, std::fabs(disk.g_rt[i] - result.grid.g_rt[i]));
          diff = std::max(diff, std::fabs(disk.g_tt[i] - result.grid.g_tt[i]));
        }
      }
      j["grid_file_max_diff"] = diff;
    }
    write_json(fs::path(cfg.output_dir) / "verify_report.json", j);
  } else {
    export_grid(result.grid, grid_path(cfg));
    write_json(fs::path(cfg.output_dir) / "forge_report.json", j);
  }

  std::printf("%s: %s (worst residual check listed in report)\n",
              verify_only ? "verify" : "forge",
              report.all_pass() ? "PASS" : "FAIL");
  return report.all_pass() ? kExitOk : kExitNumerical;
}

int cmd_trace(const RunConfig& cfg, double r, double theta, double v_r,
              double v_theta, double s_max, bool svg) {
  const std::string gp = grid_path(cfg);
  if (!fs::exists(gp))
    throw std::invalid_argument("trace: grid file missing, run forge first: " +
                                gp);
  ensure_output_dir(cfg);
  const MetricGrid grid = import_grid(gp);
  const MetricField field(grid);
  ProfileFunction f;

  GeodesicState start;
  start.pos = PolarPoint::make(r, theta);
  start.v_r = v_r;
  start.v_theta = v_theta;
  const auto tr = trace(&field, f, start, s_max, trace_options(cfg));

  trace_to_csv(tr, f, (fs::path(cfg.output_dir) / "trace.csv").string());
  events_to_json(tr,
                 (fs::path(cfg.output_dir) / "trace_events.json").string());
  if (svg) write_svg(fs::path(cfg.output_dir) / "trace.svg", tr);
  std::printf("trace: %zu samples, %zu events%s\n", tr.samples.size(),
              tr.events.size(), tr.truncated ? " (truncated)" : "");
  return tr.truncated ? kExitNumerical : kExitOk;
}

int cmd_census(const RunConfig& cfg) {
  const std::string gp = grid_path(cfg);
  if (!fs::exists(gp))
    throw std::invalid_argument(
        "census: grid file missing, run forge first: " + gp);
  ensure_output_dir(cfg);
  const MetricGrid grid = import_grid(gp);
  const MetricField field(grid);
  ProfileFunction f;
  DeflectionSpec spec(cfg.epsilon, cfg.amplitude);

  const auto rep = injective_census(&field, f, spec, cfg.census_n_theta,
                                    cfg.horizon, trace_options(cfg));

  nlohmann::json j;
  j["threshold"] = rep.threshold;
  j["marked"] = rep.marked;
  j["count"] = rep.count;
  j["degenerate"] = rep.degenerate;
  j["ok"] = rep.ok;
  write_json(fs::path(cfg.output_dir) / "census.json", j);

  std::FILE* fp = std::fopen(
      (fs::path(cfg.output_dir) / "census.csv").string().c_str(), "w");
  if (!fp) throw std::runtime_error("cannot write census.csv");
  std::fputs(
      "theta,radial,deviation,theta_plus,intersects,s1,s2,undetermined\n",
      fp);
  for (const auto& e : rep.entries)
    std::fprintf(fp, "%.17g,%d,%.17g,%.17g,%d,%.17g,%.17g,%d\n", e.theta,
                 e.radial ? 1 : 0, e.deviation, e.theta_plus,
                 e.intersects ? 1 : 0, e.s1, e.s2, e.undetermined ? 1 : 0);
  std::fclose(fp);

  if (rep.degenerate)
    std::printf("census: degenerate: all radial (unperturbed metric)\n");
  else
    std::printf("census: %d injective line(s), %zu marked azimuths%s\n",
                rep.count, rep.marked.size(),
                rep.ok ? "" : " [undetermined entries]");

  const bool pass =
      rep.ok && (cfg.epsilon == 0.0 ? rep.degenerate : rep.count == 2);
  return pass ? kExitOk : kExitNumerical;
}

int cmd_sweep(const RunConfig& cfg, int levels) {
  if (levels < 2) throw std::invalid_argument("sweep: need >= 2 levels");
  if (cfg.epsilon <= 0.0)
    throw std::invalid_argument("sweep: requires epsilon > 0");
  ensure_output_dir(cfg);
  ProfileFunction f;
  const double theta_generic = 1.25 * kPi;

  nlohmann::json ladder = nlohmann::json::array();
  std::vector<double> deviations;
  for (int k = 0; k < levels; ++k) {
    const double eps = cfg.epsilon / std::pow(2.0, k);
    DeflectionSpec spec(eps, cfg.amplitude);
    const auto result =
        forge_metric(spec, f, cfg.grid_n_r, cfg.grid_n_theta, cfg.delta);
    const MetricField field(result.grid);
    const auto rr =
        radial_return(&field, f, spec, theta_generic, 12.0,
                      trace_options(cfg));
    if (!rr.ok) throw std::runtime_error("sweep: " + rr.error);
    deviations.push_back(rr.deviation);
    ladder.push_back({{"epsilon", eps}, {"deviation", rr.deviation}});
  }

  bool linear = true;
  nlohmann::json ratios = nlohmann::json::array();
  for (size_t k = 1; k < deviations.size(); ++k) {
    const double ratio = deviations[k] / deviations[k - 1];
    ratios.push_back(ratio);
    if (!(ratio > 0.45 && ratio < 0.55)) linear = false;
  }
  write_json(fs::path(cfg.output_dir) / "sweep.json",
             {{"theta", theta_generic},
              {"levels", ladder},
              {"halving_ratios", ratios},
              {"first_order", linear}});
  std::printf("sweep: %d levels, first-order scaling %s\n", levels,
              linear ? "confirmed" : "violated");
  return linear ? kExitOk : kExitNumerical;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Rotationally symmetric plane with a compactly supported scattering "
      "perturbation: metric construction, geodesic tracing, and the "
      "injective-line census"};
  app.require_subcommand(1);

  RunConfig flags; // flag values land here; merged over --config below
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file");
  auto* o_eps = app.add_option("--epsilon", flags.epsilon,
                               "perturbation size");
  auto* o_amp = app.add_option("--amplitude", flags.amplitude,
                               "deflection amplitude scale");
  auto* o_delta = app.add_option("--delta", flags.delta,
                                 "coincidence band width");
  auto* o_nr = app.add_option("--grid-nr", flags.grid_n_r,
                              "radial grid nodes");
  auto* o_nt = app.add_option("--grid-ntheta", flags.grid_n_theta,
                              "azimuthal grid nodes");
  auto* o_atol = app.add_option("--atol", flags.atol,
                                "integrator absolute tolerance");
  auto* o_rtol = app.add_option("--rtol", flags.rtol,
                                "integrator relative tolerance");
  auto* o_cnt = app.add_option("--census-ntheta", flags.census_n_theta,
                               "census azimuth count (multiple of 4)");
  auto* o_hor = app.add_option("--horizon", flags.horizon,
                               "census trace arclength horizon");
  auto* o_esc = app.add_option("--escape-radius", flags.escape_radius,
                               "escape radius for classification");
  auto* o_out = app.add_option("--output-dir", flags.output_dir,
                               "artifact directory")
                    ->envname("GEOSCAT_OUTPUT_DIR");
  auto* o_seed = app.add_option("--seed", flags.seed, "sampling seed");

  auto* sc_forge = app.add_subcommand("forge", "build and persist the metric");
  auto* sc_verify =
      app.add_subcommand("verify", "re-run and check the construction");
  auto* sc_trace = app.add_subcommand("trace", "trace one geodesic");
  double t_r = 8.0, t_theta = 0.0, t_vr = -1.0, t_vth = 0.0, t_smax = 20.0;
  bool t_svg = false;
  sc_trace->add_option("--r", t_r, "start radius");
  sc_trace->add_option("--theta", t_theta, "start azimuth");
  sc_trace->add_option("--v-r", t_vr, "start radial velocity");
  sc_trace->add_option("--v-theta", t_vth, "start azimuthal velocity");
  sc_trace->add_option("--s-max", t_smax, "trace arclength");
  sc_trace->add_flag("--svg", t_svg, "emit planar SVG plot");
  auto* sc_census =
      app.add_subcommand("census", "count the injective geodesic lines");
  auto* sc_sweep =
      app.add_subcommand("sweep", "deviation scaling down an epsilon ladder");
  int sweep_levels = 3;
  sc_sweep->add_option("--levels", sweep_levels, "ladder depth");

  // allow global options to appear after the subcommand name
  for (auto* sc : {sc_forge, sc_verify, sc_trace, sc_census, sc_sweep})
    sc->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg =
        config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
    // explicit flags (or environment) override the config file
    if (o_eps->count()) cfg.epsilon = flags.epsilon;
    if (o_amp->count()) cfg.amplitude = flags.amplitude;
    if (o_delta->count()) cfg.delta = flags.delta;
    if (o_nr->count()) cfg.grid_n_r = flags.grid_n_r;
    if (o_nt->count()) cfg.grid_n_theta = flags.grid_n_theta;
    if (o_atol->count()) cfg.atol = flags.atol;
    if (o_rtol->count()) cfg.rtol = flags.rtol;
    if (o_cnt->count()) cfg.census_n_theta = flags.census_n_theta;
    if (o_hor->count()) cfg.horizon = flags.horizon;
    if (o_esc->count()) cfg.escape_radius = flags.escape_radius;
    if (o_out->count()) cfg.output_dir = flags.output_dir;
    if (o_seed->count()) cfg.seed = flags.seed;
    cfg.validate();

    if (sc_forge->parsed()) return cmd_forge(cfg, false);
    if (sc_verify->parsed()) return cmd_forge(cfg, true);
    if (sc_trace->parsed())
      return cmd_trace(cfg, t_r, t_theta, t_vr, t_vth, t_smax, t_svg);
    if (sc_census->parsed()) return cmd_census(cfg);
    if (sc_sweep->parsed()) return cmd_sweep(cfg, sweep_levels);
    std::fprintf(stderr, "error: no subcommand\n");
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  }
}
