// Command-line front end: field, flow, sde, analyze, verify.
//
// Exit codes: 0 success, 1 runtime or check failure, 2 usage error.

#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "zeronoise/experiment.hpp"

namespace zn = zeronoise;

namespace {

/// String-valued options that map one-to-one onto config keys, applied in
/// declaration order after the config file.
class SettingFlags {
public:
  void add(CLI::App *app, const std::string &flag, const std::string &key, const std::string &help) {
    auto *opt = app->add_option(flag, values_[key], help);
    bound_.emplace_back(opt, key);
  }
  void add_switch(CLI::App *app, const std::string &flag, const std::string &key,
                  const std::string &help) {
    auto *opt = app->add_flag(flag, help);
    bound_.emplace_back(opt, key);
    switches_.push_back(key);
  }
  void apply(zn::ExperimentConfig &cfg) const {
    for (const auto &[opt, key] : bound_) {
      if (opt->count() == 0) continue;
      bool is_switch = std::find(switches_.begin(), switches_.end(), key) != switches_.end();
      zn::apply_setting(cfg, key, is_switch ? "true" : values_.at(key));
    }
  }

private:
  std::map<std::string, std::string> values_;
  std::vector<std::pair<CLI::Option *, std::string>> bound_;
  std::vector<std::string> switches_;
};

void add_field_params(SettingFlags &s, CLI::App *app) {
  s.add(app, "--T", "T", "Time horizon");
  s.add(app, "--K-max", "K_max", "Number of refined stages below the first");
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Depauw field, exact flow and small-noise SDE laboratory"};
  app.require_subcommand(1);

  std::string config_file;
  SettingFlags global;
  app.add_option("--config", config_file, "Config file of key = value lines")->check(CLI::ExistingFile);
  global.add(&app, "--out", "out", "Output directory");
  global.add(&app, "--seed", "seed", "Random seed");

  SettingFlags field_flags;
  bool density = false;
  auto *field_cmd = app.add_subcommand("field", "Export the drift (or rho^B) on a grid");
  field_cmd->fallthrough();
  add_field_params(field_flags, field_cmd);
  field_flags.add(field_cmd, "--t", "t", "Time in (0,T]");
  field_flags.add(field_cmd, "--grid-n", "grid_n", "Grid points per side");
  field_cmd->add_flag("--density", density, "Write the black density instead of the drift");

  SettingFlags flow_flags;
  auto *flow_cmd = app.add_subcommand("flow", "Export an exact trajectory");
  flow_cmd->fallthrough();
  add_field_params(flow_flags, flow_cmd);
  flow_flags.add(flow_cmd, "--x0", "x0", "Start point 'x1,x2'");
  flow_flags.add(flow_cmd, "--t-from", "t_from", "Start time");
  flow_flags.add(flow_cmd, "--t-to", "t_to", "End time");
  flow_flags.add(flow_cmd, "--steps", "steps", "Number of output intervals");

  SettingFlags sde_flags;
  auto *sde_cmd = app.add_subcommand("sde", "Simulate the SDE and write samples + manifest");
  sde_cmd->fallthrough();
  add_field_params(sde_flags, sde_cmd);
  sde_flags.add(sde_cmd, "--name", "name", "Run name");
  sde_flags.add(sde_cmd, "--nu", "nu", "Noise level");
  sde_flags.add(sde_cmd, "--n-paths", "n_paths", "Number of paths");
  sde_flags.add(sde_cmd, "--dt-base", "dt_base", "Largest time step");
  sde_flags.add(sde_cmd, "--steps-per-stage-min", "steps_per_stage_min", "Minimum steps per stage");
  sde_flags.add(sde_cmd, "--initial", "initial", "uniform | point");
  sde_flags.add(sde_cmd, "--x0", "x0", "Start point for --initial point");
  sde_flags.add(sde_cmd, "--save-times", "save_times", "Comma-separated save times");
  sde_flags.add(sde_cmd, "--integrator", "integrator", "drift_splitting | euler_maruyama");
  sde_flags.add(sde_cmd, "--threads", "threads", "Worker threads (0: all cores)");
  sde_flags.add_switch(sde_cmd, "--record-paths", "record_paths", "Also write every path node");
  sde_flags.add_switch(sde_cmd, "--zero-drift", "zero_drift", "Replace the drift by 0");

  SettingFlags an_flags;
  std::string kind;
  std::vector<std::string> inputs;
  auto *an_cmd = app.add_subcommand("analyze", "Analyse stored samples into report.json");
  an_cmd->fallthrough();
  add_field_params(an_flags, an_cmd);
  an_cmd->add_option("--kind", kind, "uniformity | branching | backward | residual | convergence")
      ->required();
  an_cmd->add_option("--input", inputs, "Samples CSV (repeatable)")->required();
  an_flags.add(an_cmd, "--bins", "bins", "Bins per side");
  an_flags.add(an_cmd, "--quad-substeps", "quad_substeps", "Midpoint sub-steps for residuals");
  an_flags.add_switch(an_cmd, "--zero-drift", "zero_drift", "Residuals against b = 0");

  double corrupt_speed = 0.0;
  auto *verify_cmd = app.add_subcommand("verify", "Run the deterministic self-checks");
  verify_cmd->fallthrough();
  verify_cmd->add_option("--corrupt-speed-factor", corrupt_speed)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    zn::ExperimentConfig cfg;
    if (!config_file.empty()) zn::apply_config_file(cfg, config_file);
    global.apply(cfg);
    namespace fs = std::filesystem;
    const fs::path out(cfg.out_dir);

    if (*field_cmd) {
      field_flags.apply(cfg);
      cfg.finalize();
      auto path = out / (density ? "density.csv" : "field.csv");
      auto os = zn::open_output(path);
      density ? zn::write_density_csv(cfg, os) : zn::write_field_csv(cfg, os);
      std::cout << path.string() << '\n';
    } else if (*flow_cmd) {
      flow_flags.apply(cfg);
      cfg.finalize();
      auto path = out / "flow.csv";
      auto os = zn::open_output(path);
      zn::write_flow_csv(cfg, os);
      std::cout << path.string() << '\n';
    } else if (*sde_cmd) {
      sde_flags.apply(cfg);
      cfg.finalize();
      auto m = zn::run_sde_command(cfg);
      std::cout << (out / "samples.csv").string() << " (" << cfg.sde.n_paths << " paths, "
                << m["wall_time_s"].get<double>() << " s)\n";
    } else if (*an_cmd) {
      an_flags.apply(cfg);
      cfg.finalize();
      auto report = zn::analyze(kind, inputs, cfg);
      auto path = out / "report.json";
      auto os = zn::open_output(path);
      os << report.dump(2) << '\n';
      std::cout << path.string() << '\n';
    } else if (*verify_cmd) {
      zn::VerifyOptions opt;
      opt.speed_factor_override = corrupt_speed;
      bool all = true;
      std::vector<std::string> failed;
      for (const auto &r : zn::run_verify(opt)) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
        if (!r.passed) failed.push_back(r.name);
        all = all && r.passed;
      }
      if (!all) {
        std::cerr << "failed checks:";
        for (const auto &n : failed) std::cerr << ' ' << n;
        std::cerr << '\n';
        return 1;
      }
    }
  } catch (const zn::UsageError &e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
