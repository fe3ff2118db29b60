#pragma once

// Sweep execution, figure presets, and persistence: CSV data files with a
// fixed schema plus one JSON manifest per run.

#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qdread/circuit.hpp"
#include "qdread/config.hpp"
#include "qdread/metrics.hpp"
#include "qdread/transport.hpp"

namespace qdread {

inline constexpr std::string_view tool_name = "qdread";
std::string_view tool_version() noexcept;

inline constexpr std::string_view iv_header = "case,v_d_V,i_up_A,i_dn_A,i_total_A,quad_err_A";
inline constexpr std::string_view circuit_header =
    "case,v_d_V,i_up_A,i_dn_A,i_total_A,quad_err_A,v_out_V,v_ds_V,residual_A";
inline constexpr std::string_view metrics_header =
    "case,v_d_V,delta_eV,delta_i_A,mean_i_A,shot_noise_A2_per_Hz,t_meas_s,t_dec_s,count";

/// Nine significant digits, scientific, '.' separator.
std::string csv_number(double x);

struct IvRow {
  MeasurementCase measurement_case;
  IvPoint point;
};

struct CircuitRow {
  MeasurementCase measurement_case;
  CircuitSolution solution;
};

void write_iv_csv(std::ostream& out, std::span<const IvRow> rows);
void write_circuit_csv(std::ostream& out, std::span<const CircuitRow> rows);
void write_metrics_csv(std::ostream& out, std::span<const MetricsRecord> rows);

/// Lower-case hex SHA-256 of a byte string / of a file's contents.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

struct WrittenFile {
  std::filesystem::path path;
  std::string schema;  // iv | circuit | metrics
  std::string figure_id;
  std::size_t rows = 0;
  std::string sha256;
  std::string sweep_variable;          // set for per-value files
  std::optional<double> sweep_value;   // temperature (K) or gate length (m)
};

struct RunResult {
  std::vector<WrittenFile> files;
  std::vector<std::string> errors;       // solver failures; partial data is kept
  std::filesystem::path manifest;
  bool solver_failed() const noexcept { return !errors.empty(); }
};

struct RunOptions {
  int workers = 0;  // 0: logical CPU count
  std::string figure_id;                 // empty for plain sweeps
  std::string file_stem;                 // defaults to figure_id or spec name
  std::vector<std::string> assumptions;  // echoed into the manifest
};

/// Runs the sweep declared by the spec and writes CSVs and the manifest into
/// spec.output_dir. v_d sweeps write an iv file (circuit file when the
/// transistor is enabled); delta sweeps write a metrics file; temperature
/// and gate_length sweeps write one file per value.
RunResult run_sweep(const ExperimentSpec& spec, const RunOptions& opt = {});

/// Identifiers of the figure presets, in order.
std::span<const std::string_view> figure_ids() noexcept;

/// The parameter sets of the figures. A preset may expand into several
/// sweeps (e.g. I-V and metrics). Throws ConfigError for an unknown id.
std::vector<ExperimentSpec> figure_preset(std::string_view figure_id);

/// Runs every sweep of a preset into output_dir with a single manifest.
RunResult run_figure(std::string_view figure_id, const std::filesystem::path& output_dir,
                     std::span<const Override> overrides = {}, int workers = 0);

/// Worker count: the requested value, or the logical CPU count, capped at
/// the number of independent tasks.
int resolve_workers(int requested, std::size_t tasks) noexcept;

}  // namespace qdread
