// Copyright 2026 The Lightfield Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LIGHTFIELD_CLI_HPP
#define LIGHTFIELD_CLI_HPP

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "lightfield/error.hpp"
#include "lightfield/fieldmap.hpp"
#include "lightfield/footprint.hpp"
#include "lightfield/interpolation.hpp"
#include "lightfield/optimizer.hpp"
#include "lightfield/png.hpp"
#include "lightfield/scenario.hpp"
#include "lightfield/scenario_io.hpp"
#include "lightfield/service.hpp"

namespace lightfield::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kIo = 2, kNotConverged = 3, kValidation = 4 };

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return kIo;
    default: return kValidation;
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Refuses to replace an existing file unless `force` is set.
inline void write_file(const std::filesystem::path& path, std::string_view bytes, bool force) {
  if (!force && std::filesystem::exists(path)) {
    throw Error(ErrorCode::Io, path.string() + " exists; pass --force to overwrite");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "short write to " + path.string());
}

/// Accepts either a bare scenario object or a stored revisioned document.
inline Scenario load_scenario(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
  }
  if (j.is_object() && j.contains("format_version")) return document_from_string(text).scenario;
  return scenario_from_json(j);
}

struct CliConfig {
  std::string scenario_path;
  std::string output;
  std::string spec_path;
  std::string area;
  std::string kernel = "attenuation";
  std::string samples_path;
  std::string method = "idw";
  std::optional<double> cell_size;
  std::optional<double> power;
  std::optional<double> baseline;
  double mount_height_m = 10.0;
  bool force = false;
  std::string log_level = "info";
  std::string root = "scenarios";
  std::string bind = "127.0.0.1:8080";
  std::size_t jobs = 2;
};

inline void setup_logging(std::ostream& err, const std::string& level) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto logger = std::make_shared<spdlog::logger>("lightfield", sink);
  logger->set_pattern("[%l] %v");
  const auto lvl = spdlog::level::from_str(level);
  if (lvl == spdlog::level::off && level != "off") {
    throw Error(ErrorCode::InvalidArgument, "unknown log level '" + level + "'");
  }
  logger->set_level(lvl);
  spdlog::set_default_logger(logger);
}

namespace detail {

inline int do_render(const CliConfig& c, std::ostream& out) {
  const Scenario s = load_scenario(c.scenario_path);
  const double cell = c.cell_size.value_or(s.cell_size_m);
  if (!(cell > 0.0)) throw Error(ErrorCode::InvalidArgument, "cell size must be positive");
  spdlog::info("rendering {} at {} m", s.id, cell);
  const FieldGrid grid = render_grid(s, cell);
  const auto png = encode_png(colorize(grid, s.i0_max()));
  write_file(c.output, std::string_view(reinterpret_cast<const char*>(png.data()), png.size()), c.force);
  out << json{{"output", c.output},
              {"width", grid.spec.cols()},
              {"height", grid.spec.rows()},
              {"cell_size_m", cell},
              {"max_intensity", grid.max()}}
             .dump()
      << "\n";
  return kOk;
}

inline int do_optimize(const CliConfig& c, std::ostream& out) {
  const Scenario s = load_scenario(c.scenario_path);
  json spec_json;
  try {
    spec_json = json::parse(read_file(c.spec_path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, c.spec_path + ": " + e.what());
  }
  const OptimizationSpec spec = optimization_spec_from_json(spec_json, s);
  spdlog::info("optimizing {} in {} mode", s.id, mode_name(spec.mode));
  const OptimizationResult r = solve(s, spec);
  const json body = optimization_result_to_json(r);
  write_file(c.output, body.dump(2) + "\n", c.force);
  out << json{{"output", c.output},
              {"converged", r.converged},
              {"status", r.status},
              {"iterations", r.iterations},
              {"objective_before", r.objective_before},
              {"objective_after", r.objective_after}}
             .dump()
      << "\n";
  if (!r.converged) {
    spdlog::warn("optimizer stopped without converging: {}", r.status);
    return kNotConverged;
  }
  return kOk;
}

inline int do_footprint(const CliConfig& c, std::ostream& out) {
  const Scenario s = load_scenario(c.scenario_path);
  IlluminanceKernel kernel{parse_kernel(c.kernel), c.mount_height_m};
  const auto report = footprint_report(s, c.area, kernel, c.cell_size.value_or(1.0));
  const std::string ledger = footprint_report_to_csv(report);
  if (c.output.empty() || c.output == "-") {
    out << ledger;
  } else {
    write_file(c.output, ledger, c.force);
    out << footprint_report_to_json(report).dump() << "\n";
  }
  return kOk;
}

inline int do_interp_eval(const CliConfig& c, std::ostream& out) {
  const auto samples = read_samples_csv(read_file(c.samples_path));
  if (samples.empty()) throw Error(ErrorCode::TooFewSamples, "no samples");
  GeoBox box{samples.front().position, samples.front().position};
  for (const auto& sp : samples) {
    box.min = {std::min(box.min.lat_deg, sp.position.lat_deg), std::min(box.min.lon_deg, sp.position.lon_deg)};
    box.max = {std::max(box.max.lat_deg, sp.position.lat_deg), std::max(box.max.lon_deg, sp.position.lon_deg)};
  }
  InterpMethod method = InterpMethod::of(parse_method(c.method));
  if (c.power) method.power = *c.power;
  const auto report = leave_one_out(method, samples, make_local_frame(box.center()), c.baseline);
  out << loo_report_to_json(report).dump(2) << "\n";
  return kOk;
}

inline int do_serve(const CliConfig& c) {
  const auto [host, port] = service::parse_bind(c.bind);
  service::Service svc({c.root, c.jobs});
  if (!svc.listen(host, port)) throw Error(ErrorCode::Io, "cannot listen on " + c.bind);
  return kOk;
}

}  // namespace detail

/// Entry point shared by the executable and the tests. Machine-readable
/// output goes to `out`; diagnostics go to `err`.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CliConfig c;
  CLI::App app{"Light-field simulation, mapping, optimization and footprint tool", "lightfield"};
  app.require_subcommand(1, 1);
  app.option_defaults()->always_capture_default();
  app.add_option("--log-level", c.log_level, "trace|debug|info|warn|error|off")->envname("LIGHTFIELD_LOG_LEVEL");

  auto* render = app.add_subcommand("render", "Render a scenario to a colorized PNG");
  render->add_option("scenario", c.scenario_path)->required();
  render->add_option("-o,--output", c.output)->required();
  render->add_option("--cell-size", c.cell_size, "Grid cell size in meters");
  render->add_flag("--force", c.force, "Overwrite the output file");

  auto* optimize = app.add_subcommand("optimize", "Optimize placement or attenuation");
  optimize->add_option("scenario", c.scenario_path)->required();
  optimize->add_option("--spec", c.spec_path)->required();
  optimize->add_option("-o,--output", c.output)->required();
  optimize->add_flag("--force", c.force);

  auto* footprint = app.add_subcommand("footprint", "Per-source footprint ledger of a protected area");
  footprint->add_option("scenario", c.scenario_path)->required();
  footprint->add_option("--area", c.area)->required();
  footprint->add_option("--kernel", c.kernel)->check(CLI::IsMember({"attenuation", "inverse_square"}));
  footprint->add_option("--cell-size", c.cell_size, "Footprint cell size in meters (default 1)");
  footprint->add_option("--mount-height", c.mount_height_m, "Lamp height for the inverse_square kernel");
  footprint->add_option("-o,--output", c.output, "CSV path; stdout when omitted");
  footprint->add_flag("--force", c.force);

  auto* interp = app.add_subcommand("interp-eval", "Leave-one-out evaluation of an interpolation method");
  interp->add_option("samples", c.samples_path)->required();
  interp->add_option("--method", c.method)->check(CLI::IsMember({"idw", "shepard", "kriging", "rbf", "idw-vp", "nni"}));
  interp->add_option("--power", c.power, "Distance exponent for idw-vp");
  interp->add_option("--baseline", c.baseline, "Reference SQM for error variance");

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--root", c.root, "Scenario store directory")->envname("LIGHTFIELD_ROOT");
  serve->add_option("--bind", c.bind, "host:port")->envname("LIGHTFIELD_BIND");
  serve->add_option("--jobs", c.jobs, "Concurrent optimization jobs")->envname("LIGHTFIELD_JOBS")->check(
      CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kUsage;
  }

  try {
    setup_logging(err, c.log_level);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kUsage;
  }

  try {
    if (render->parsed()) return detail::do_render(c, out);
    if (optimize->parsed()) return detail::do_optimize(c, out);
    if (footprint->parsed()) return detail::do_footprint(c, out);
    if (interp->parsed()) return detail::do_interp_eval(c, out);
    if (serve->parsed()) return detail::do_serve(c);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kIo;
  }
  return kUsage;
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"lightfield"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace lightfield::cli

#endif  // LIGHTFIELD_CLI_HPP
