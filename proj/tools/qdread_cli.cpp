// qdread: command-line front end for curves, metrics, figure presets and
// the self-test suite.
//
// Exit codes: 0 success, 2 configuration or validation error, 3 solver
// failure (outputs written so far are kept), 1 anything else.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qdread/config.hpp"
#include "qdread/errors.hpp"
#include "qdread/harness.hpp"
#include "qdread/selftest.hpp"

using namespace qdread;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_other = 1;
constexpr int exit_config = 2;
constexpr int exit_solver = 3;

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::string out;
  int workers = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "experiment config file");
  cmd->add_option("--set", c.sets, "override, section.key=value (repeatable)")->take_all();
  cmd->add_option("--out", c.out, "output directory (overrides output.dir)");
  cmd->add_option("--workers", c.workers, "worker threads (default: logical CPUs)")
      ->check(CLI::NonNegativeNumber);
}

std::vector<Override> overrides_of(const Common& c) {
  std::vector<Override> out;
  for (const auto& s : c.sets) out.push_back(parse_override(s, "--set"));
  if (!c.out.empty()) out.push_back({"output.dir", c.out, "--out"});
  return out;
}

// Without --config the I-V figure parameter set is the base.
ExperimentSpec resolve(const Common& c) {
  const auto overrides = overrides_of(c);
  if (!c.config.empty()) return load_config(c.config, overrides);
  ExperimentSpec base = figure_preset("fig3").front();
  base.name = "qdread";
  return override_flags(base, overrides);
}

int report(const RunResult& r) {
  for (const auto& f : r.files) std::cout << f.path.string() << '\n';
  std::cout << r.manifest.string() << '\n';
  for (const auto& e : r.errors) std::cerr << "qdread: solver: " << e << '\n';
  return r.solver_failed() ? exit_solver : exit_ok;
}

int run_selftest_command() {
  bool ok = true;
  for (const auto& c : run_selftest()) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    ok = ok && c.passed;
  }
  return ok ? exit_ok : exit_other;
}

// A config declaring another sweep variable contributes its inner bias grid.
void as_bias_sweep(SweepSpec& s) {
  if (s.variable == SweepVariable::v_d) return;
  s.variable = SweepVariable::v_d;
  s.start = s.vd_start;
  s.stop = s.vd_stop;
  s.points = s.vd_points;
}

void as_delta_sweep(SweepSpec& s) {
  if (s.variable == SweepVariable::delta) return;
  s.variable = SweepVariable::delta;
  s.start = 0.05e-3;
  s.stop = 0.4e-3;
  s.points = 36;
}

int print_circuit_point(ExperimentSpec spec, double vd) {
  spec.fet.enabled = true;
  spec.validate();
  std::vector<CircuitRow> rows;
  for (auto c : spec.cases) {
    rows.push_back({c, solve_series(vd, c, spec.device, spec.fet, std::nullopt, spec.metrics.circuit)});
  }
  write_circuit_csv(std::cout, rows);
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spin-qubit readout through a side-coupled triple quantum dot"};
  app.set_version_flag("--version", std::string(tool_name) + " " + std::string(tool_version()));
  app.require_subcommand(1);

  Common common;
  auto* iv = app.add_subcommand("iv", "I-V curves of all cases without the transistor");
  add_common(iv, common);
  auto* vout = app.add_subcommand("vout", "series-circuit sweep over v_d (v_out, v_ds, current)");
  add_common(vout, common);
  auto* circuit = app.add_subcommand("circuit", "series-circuit solution at one bias, CSV to stdout");
  add_common(circuit, common);
  double vd = 0.0;
  circuit->add_option("--vd", vd, "applied bias (V)")->required()->check(CLI::NonNegativeNumber);
  auto* metrics = app.add_subcommand("metrics", "measurement count over a Zeeman-splitting grid");
  add_common(metrics, common);
  auto* sweep = app.add_subcommand("sweep", "run the sweep declared in the config");
  add_common(sweep, common);
  auto* reproduce = app.add_subcommand("reproduce", "run a figure preset");
  add_common(reproduce, common);
  std::string figure;
  std::vector<std::string> ids;
  for (auto id : figure_ids()) ids.emplace_back(id);
  reproduce->add_option("--figure", figure, "figure id")->required()->check(CLI::IsMember(ids));
  auto* selftest = app.add_subcommand("selftest", "run the oracle self-test suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_config;
  }

  try {
    if (selftest->parsed()) return run_selftest_command();

    if (reproduce->parsed()) {
      if (!common.config.empty()) throw ConfigError("reproduce takes no --config; use --set");
      const std::string dir = common.out.empty() ? "out" : common.out;
      std::vector<Override> sets;
      for (const auto& s : common.sets) sets.push_back(parse_override(s, "--set"));
      return report(run_figure(figure, dir, sets, common.workers));
    }

    ExperimentSpec spec = resolve(common);
    if (circuit->parsed()) return print_circuit_point(spec, vd);
    if (iv->parsed() || vout->parsed()) {
      spec.fet.enabled = vout->parsed();
      as_bias_sweep(spec.sweep);
    } else if (metrics->parsed()) {
      as_delta_sweep(spec.sweep);
    }
    spec.validate();
    RunOptions opt;
    opt.workers = common.workers;
    return report(run_sweep(spec, opt));
  } catch (const ConfigError& e) {
    std::cerr << "qdread: config: " << e.what() << '\n';
    return exit_config;
  } catch (const DomainError& e) {
    std::cerr << "qdread: invalid argument: " << e.what() << '\n';
    return exit_config;
  } catch (const SolverError& e) {
    std::cerr << "qdread: solver: " << e.what() << '\n';
    return exit_solver;
  } catch (const std::exception& e) {
    std::cerr << "qdread: " << e.what() << '\n';
    return exit_other;
  }
}
