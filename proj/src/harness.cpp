#include "qdread/harness.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <fstream>
#include <sstream>

#include <omp.h>
#include <openssl/evp.h>

#include "qdread/constants.hpp"
#include "qdread/errors.hpp"
#include "json.hpp"

namespace qdread {

using json = nlohmann::ordered_json;

std::string_view tool_version() noexcept { return QDREAD_VERSION; }

std::string csv_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.8e", x);
  return buf;
}

void write_iv_csv(std::ostream& out, std::span<const IvRow> rows) {
  out << iv_header << '\n';
  for (const auto& r : rows) {
    const auto& p = r.point;
    out << to_string(r.measurement_case) << ',' << csv_number(p.v_d) << ',' << csv_number(p.i_up)
        << ',' << csv_number(p.i_down) << ',' << csv_number(p.i_total) << ','
        << csv_number(p.quad_error) << '\n';
  }
}

void write_circuit_csv(std::ostream& out, std::span<const CircuitRow> rows) {
  out << circuit_header << '\n';
  for (const auto& r : rows) {
    const auto& s = r.solution;
    out << to_string(r.measurement_case) << ',' << csv_number(s.v_d) << ',' << csv_number(s.i_up)
        << ',' << csv_number(s.i_down) << ',' << csv_number(s.current) << ','
        << csv_number(s.quad_error) << ',' << csv_number(s.v_out) << ',' << csv_number(s.v_ds)
        << ',' << csv_number(s.residual) << '\n';
  }
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsRecord> rows) {
  out << metrics_header << '\n';
  for (const auto& r : rows) {
    out << to_string(r.measurement_case) << ',' << csv_number(r.v_d) << ',' << csv_number(r.delta)
        << ',' << csv_number(r.delta_i) << ',' << csv_number(r.mean_current) << ','
        << csv_number(r.shot_noise) << ',' << csv_number(r.t_meas) << ',' << csv_number(r.t_dec)
        << ',' << csv_number(r.count) << '\n';
  }
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256: digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xF]);
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

int resolve_workers(int requested, std::size_t tasks) noexcept {
  const int n = requested > 0 ? requested : std::max(omp_get_num_procs(), 1);
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(n), std::max<std::size_t>(tasks, 1)));
}

namespace {

struct Session {
  std::filesystem::path dir;
  std::string figure_id;
  int workers = 0;
  std::vector<WrittenFile> files;
  std::vector<std::string> errors;
};

void write_file(Session& s, const std::string& name, const std::string& schema,
                const std::string& body, std::size_t rows, std::string sweep_variable = {},
                std::optional<double> sweep_value = std::nullopt) {
  const auto path = s.dir / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << body;
  out.close();
  if (!out) throw std::runtime_error("write failed: " + path.string());
  s.files.push_back({path, schema, s.figure_id, rows, sha256_hex(body), std::move(sweep_variable),
                     sweep_value});
}

// Solver failures are recorded and the run continues; anything else (bad
// preconditions, I/O) propagates.
void record_solver_failure(Session& s, const std::exception_ptr& e, const std::string& prefix) {
  try {
    std::rethrow_exception(e);
  } catch (const SolverError& ex) {
    s.errors.push_back(prefix + ex.what());
  }
}

// One file of per-case I-V rows; a case whose quadrature fails is dropped
// and its error recorded.
std::pair<std::string, std::size_t> iv_file(Session& s, const ExperimentSpec& spec,
                                            std::span<const double> grid) {
  check_bias_grid(grid);
  const auto& t = spec.metrics.circuit.transport;
  const int workers = resolve_workers(s.workers, grid.size());
  std::vector<IvRow> rows;
  for (auto c : spec.cases) {
    try {
      for (const auto& pt : iv_curve(c, spec.device, grid, t, workers)) rows.push_back({c, pt});
    } catch (const SolverError& e) {
      s.errors.push_back(std::string(to_string(c)) + ": " + e.what());
    }
  }
  std::ostringstream os;
  write_iv_csv(os, rows);
  return {os.str(), rows.size()};
}

// Continuation curves, one sequential task per case. A failing case keeps
// the prefix it solved.
std::pair<std::string, std::size_t> circuit_file(Session& s, const ExperimentSpec& spec,
                                                 std::span<const double> grid) {
  check_bias_grid(grid);
  const auto n = static_cast<std::ptrdiff_t>(spec.cases.size());
  std::vector<std::vector<CircuitSolution>> curves(spec.cases.size());
  std::vector<std::exception_ptr> failures(spec.cases.size());
  const int workers = resolve_workers(s.workers, spec.cases.size());

#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      curves[i] = vout_curve(spec.cases[i], spec.device, spec.fet, grid, spec.metrics.circuit);
    } catch (const SweepError& e) {
      curves[i] = e.partial();
      failures[i] = std::current_exception();
    } catch (...) {
      failures[i] = std::current_exception();
    }
  }
  std::vector<CircuitRow> rows;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    if (failures[i]) record_solver_failure(s, failures[i], "");
    for (const auto& sol : curves[i]) rows.push_back({spec.cases[i], sol});
  }
  std::ostringstream os;
  write_circuit_csv(os, rows);
  return {os.str(), rows.size()};
}

std::pair<std::string, std::size_t> metrics_file(Session& s, const ExperimentSpec& spec) {
  MetricsSweep sweep;
  for (auto c : spec.cases) {
    if (c != MeasurementCase::reference) sweep.cases.push_back(c);
  }
  if (sweep.cases.empty()) throw ConfigError("invalid cases.list: a delta sweep needs a qubit case");
  sweep.reduction = spec.sweep.reduction;
  sweep.v_d = spec.sweep.operating_vd;
  if (sweep.reduction == Reduction::max_over_vd) sweep.vd_window = spec.sweep.window();
  const FetParams* fet = spec.fet.enabled ? &spec.fet : nullptr;

  // Per-delta tasks so that one failing point keeps the others.
  const auto grid = spec.sweep.grid();
  const auto n = static_cast<std::ptrdiff_t>(grid.size());
  std::vector<std::vector<MetricsRecord>> rows(grid.size());
  std::vector<std::exception_ptr> failures(grid.size());
  const int workers = resolve_workers(s.workers, grid.size());

#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    MetricsSweep one = sweep;
    one.delta_grid = {grid[i]};
    try {
      rows[i] = metrics_sweep_serial(one, spec.device, fet, spec.metrics);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  }
  std::vector<MetricsRecord> flat;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (failures[i]) record_solver_failure(s, failures[i], "delta = " + format_number(grid[i]) + " eV: ");
    flat.insert(flat.end(), rows[i].begin(), rows[i].end());
  }
  std::ostringstream os;
  write_metrics_csv(os, flat);
  return {os.str(), flat.size()};
}

std::string stem_of(const ExperimentSpec& spec, const RunOptions& opt) {
  if (!opt.file_stem.empty()) return opt.file_stem;
  return spec.name;
}

void execute(Session& s, const ExperimentSpec& spec, const std::string& stem) {
  const auto& sw = spec.sweep;
  switch (sw.variable) {
    case SweepVariable::v_d: {
      const auto grid = sw.grid();
      auto [body, rows] = spec.fet.enabled ? circuit_file(s, spec, grid) : iv_file(s, spec, grid);
      const std::string schema = spec.fet.enabled ? "circuit" : "iv";
      write_file(s, stem + "_" + schema + ".csv", schema, body, rows);
      return;
    }
    case SweepVariable::delta: {
      auto [body, rows] = metrics_file(s, spec);
      write_file(s, stem + "_metrics.csv", "metrics", body, rows);
      return;
    }
    case SweepVariable::temperature:
    case SweepVariable::gate_length: {
      const auto values = sw.grid();
      const auto grid = sw.bias_grid();
      const std::string var(to_string(sw.variable));
      for (std::size_t k = 0; k < values.size(); ++k) {
        ExperimentSpec one = spec;
        if (sw.variable == SweepVariable::temperature) {
          one.device.temperature = values[k];
        } else {
          one.fet.gate_length = values[k];
        }
        one.device.validate();
        one.fet.validate();
        auto [body, rows] = one.fet.enabled ? circuit_file(s, one, grid) : iv_file(s, one, grid);
        const std::string schema = one.fet.enabled ? "circuit" : "iv";
        write_file(s, stem + "_" + schema + "_" + var + "_" + std::to_string(k) + ".csv", schema,
                   body, rows, var, values[k]);
      }
      return;
    }
  }
}

std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json config_json(const ExperimentSpec& spec) {
  json j;
  j["name"] = spec.name;
  json resolved = json::object();
  for (const auto& [section, keys] : to_raw(spec).sections) {
    for (const auto& [k, v] : keys) resolved[section][k] = v;
  }
  j["resolved"] = resolved;
  j["config_text"] = render_config(spec);
  json overrides = json::array();
  for (const auto& o : spec.overrides) {
    overrides.push_back({{"key", o.key}, {"value", o.value}, {"source", o.source}});
  }
  j["overrides"] = overrides;
  return j;
}

std::vector<std::string> default_assumptions(const ExperimentSpec& spec) {
  std::vector<std::string> out;
  const auto& sw = spec.sweep;
  if (sw.variable == SweepVariable::delta) {
    out.push_back("delta grid: " + std::to_string(sw.points) + " points over [" +
                  format_number(sw.start) + ", " + format_number(sw.stop) + "] eV");
    if (sw.reduction == Reduction::max_over_vd) {
      out.push_back("max_over_vd window: " + std::to_string(sw.window_points) + " points over (0, " +
                    format_number(sw.window_stop) + "] V; the record of largest count is kept");
    }
  }
  return out;
}

std::filesystem::path write_manifest(const Session& s, std::span<const ExperimentSpec> specs,
                                     const std::string& stem,
                                     std::span<const std::string> assumptions,
                                     std::chrono::system_clock::time_point started,
                                     std::chrono::steady_clock::time_point t0) {
  json m;
  m["tool"] = tool_name;
  m["version"] = tool_version();
  m["figure_id"] = s.figure_id;
  m["started_at"] = utc_timestamp(started);
  json runs = json::array();
  for (const auto& spec : specs) runs.push_back(config_json(spec));
  m["runs"] = runs;
  json files = json::array();
  for (const auto& f : s.files) {
    json jf{{"path", f.path.filename().string()}, {"schema", f.schema}, {"figure_id", f.figure_id},
            {"rows", f.rows}, {"sha256", f.sha256}};
    if (f.sweep_value) {
      jf["sweep_variable"] = f.sweep_variable;
      jf["sweep_value"] = *f.sweep_value;
    }
    files.push_back(jf);
  }
  m["files"] = files;
  m["assumptions"] = assumptions;
  m["errors"] = s.errors;
  m["workers"] = s.workers;
  m["wall_clock_s"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const auto path = s.dir / (stem + ".manifest.json");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << m.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
  return path;
}

RunResult run_specs(std::span<const ExperimentSpec> specs, const std::filesystem::path& dir,
                    const std::string& figure_id, const std::string& stem, int workers,
                    std::vector<std::string> assumptions) {
  const auto started = std::chrono::system_clock::now();
  const auto t0 = std::chrono::steady_clock::now();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());

  Session s{dir, figure_id, workers > 0 ? workers : std::max(omp_get_num_procs(), 1), {}, {}};
  for (const auto& spec : specs) {
    spec.validate();
    execute(s, spec, specs.size() == 1 ? stem : spec.name);
    for (auto& a : default_assumptions(spec)) {
      if (std::find(assumptions.begin(), assumptions.end(), a) == assumptions.end()) {
        assumptions.push_back(std::move(a));
      }
    }
  }
  RunResult r;
  r.manifest = write_manifest(s, specs, stem, assumptions, started, t0);
  r.files = std::move(s.files);
  r.errors = std::move(s.errors);
  return r;
}

// ---- presets -------------------------------------------------------------

constexpr std::array<std::string_view, 10> preset_ids{"fig3",  "fig4a", "fig4b", "fig5a", "fig5b",
                                                      "fig6",  "fig7a", "fig7b", "fig8",  "fig9"};

ExperimentSpec preset_base(std::string name) {
  ExperimentSpec s;
  s.name = std::move(name);
  s.device = default_device();
  s.fet = FetParams{};
  s.sweep = SweepSpec{};  // v_d over [0, 3 mV], 301 points
  return s;
}

ExperimentSpec with_fet(ExperimentSpec s, double gate_length) {
  s.fet = default_fet();
  s.fet.gate_length = gate_length;
  return s;
}

ExperimentSpec as_metrics(ExperimentSpec s, Reduction reduction) {
  s.cases.assign(qubit_cases.begin(), qubit_cases.end());
  s.sweep.variable = SweepVariable::delta;
  s.sweep.start = 0.05e-3;
  s.sweep.stop = 0.4e-3;
  s.sweep.points = 36;
  s.sweep.reduction = reduction;
  s.sweep.operating_vd = 2.225e-3;
  s.sweep.window_stop = 0.5e-3;
  s.sweep.window_points = 50;
  return s;
}

}  // namespace

std::span<const std::string_view> figure_ids() noexcept { return preset_ids; }

std::vector<ExperimentSpec> figure_preset(std::string_view id) {
  using constants::u0;
  const std::string name(id);
  if (id == "fig3") return {preset_base(name)};
  if (id == "fig4a" || id == "fig4b") {
    auto s = with_fet(preset_base(name), 1e-6);
    s.device.w12 = s.device.w23 = (id == "fig4a" ? 2.0 : 0.5) * u0;
    return {s};
  }
  if (id == "fig5a" || id == "fig5b") {
    auto s = as_metrics(with_fet(preset_base(name), 1e-6), Reduction::max_over_vd);
    s.device.w12 = s.device.w23 = (id == "fig5a" ? 2.0 : 0.5) * u0;
    return {s};
  }
  if (id == "fig6") return {as_metrics(with_fet(preset_base(name), 1e-6), Reduction::none)};
  if (id == "fig7a") return {with_fet(preset_base(name), 1e-6)};
  if (id == "fig7b") return {with_fet(preset_base(name), 10e-6)};
  if (id == "fig8" || id == "fig9") {
    auto iv = with_fet(preset_base(name), id == "fig8" ? 1e-6 : 10e-6);
    if (id == "fig8") iv.device.temperature = 0.2;
    auto metrics = as_metrics(iv, Reduction::none);
    iv.name = name + "_a";
    metrics.name = name + "_b";
    return {iv, metrics};
  }
  throw ConfigError("unknown figure id '" + name + "'");
}

RunResult run_sweep(const ExperimentSpec& spec, const RunOptions& opt) {
  const ExperimentSpec one[] = {spec};
  return run_specs(one, spec.output_dir, opt.figure_id, stem_of(spec, opt), opt.workers,
                   opt.assumptions);
}

RunResult run_figure(std::string_view figure_id, const std::filesystem::path& output_dir,
                     std::span<const Override> overrides, int workers) {
  auto specs = figure_preset(figure_id);
  for (auto& s : specs) {
    if (!overrides.empty()) {
      const std::string name = s.name;
      s = override_flags(s, overrides);
      s.name = name;
    }
    s.output_dir = output_dir;
  }
  std::vector<std::string> assumptions;
  if (figure_id.starts_with("fig5") || figure_id == "fig6" || figure_id == "fig8" ||
      figure_id == "fig9") {
    assumptions.push_back(
        "delta axis range of the metrics panels is not stated; the preset grid [5e-05, 0.0004] eV "
        "with 36 points is assumed");
  }
  return run_specs(specs, output_dir, std::string(figure_id), std::string(figure_id), workers,
                   std::move(assumptions));
}

}  // namespace qdread
