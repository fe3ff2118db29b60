#pragma once

// Experiment configuration: a strict [section] / key = value format with SI
// unit-suffixed keys, command-line overrides, and a resolved rendering that
// round-trips through the parser.

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qdread/circuit.hpp"
#include "qdread/device.hpp"
#include "qdread/metrics.hpp"
#include "qdread/transport.hpp"

namespace qdread {

/// section -> key -> raw value, plus the source line of every key.
struct RawConfig {
  std::map<std::string, std::map<std::string, std::string>> sections;
  std::map<std::string, int> lines;  // "section.key" -> line (0 for overrides)
  std::string origin;
};

/// Throws ConfigError with "origin:line: message" on malformed input.
RawConfig parse_config_text(std::string_view text, std::string_view origin = "<text>");
RawConfig read_config_file(const std::filesystem::path& path);

struct Override {
  std::string key;  // section.key
  std::string value;
  std::string source;  // e.g. "--set"

  bool operator==(const Override&) const = default;
};

/// Parses "section.key=value". Throws ConfigError on malformed input.
Override parse_override(std::string_view text, std::string_view source = "--set");

enum class SweepVariable { v_d, delta, temperature, gate_length };

std::string_view to_string(SweepVariable v) noexcept;
std::string_view to_string(Reduction r) noexcept;

struct SweepSpec {
  SweepVariable variable = SweepVariable::v_d;
  double start = 0.0;
  double stop = 3e-3;
  int points = 301;
  Reduction reduction = Reduction::none;
  double operating_vd = 2.225e-3;   // metrics bias for reduction = none
  double window_stop = 5e-4;        // max_over_vd window is (0, window_stop]
  int window_points = 50;
  double vd_start = 0.0;            // inner bias grid for temperature / gate_length sweeps
  double vd_stop = 3e-3;
  int vd_points = 301;

  std::vector<double> grid() const { return linspace(start, stop, points); }
  std::vector<double> bias_grid() const { return linspace(vd_start, vd_stop, vd_points); }
  std::vector<double> window() const;

  bool operator==(const SweepSpec&) const = default;
};

struct ExperimentSpec {
  std::string name = "experiment";
  DeviceParams device{};
  FetParams fet{};
  std::vector<MeasurementCase> cases{all_cases.begin(), all_cases.end()};
  SweepSpec sweep{};
  MetricsOptions metrics{};  // transport / circuit numerics live inside
  std::filesystem::path output_dir = "out";
  std::vector<Override> overrides;  // provenance, in application order

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Builds and validates a spec. Unknown sections/keys, missing required
/// keys, and conflicting Zeeman keys are ConfigErrors.
ExperimentSpec build_spec(const RawConfig& raw);

/// Applies overrides to the raw key map (before validation). A Zeeman
/// override replaces whichever of delta_eV / b_tesla was present.
void apply_overrides(RawConfig& raw, std::span<const Override> overrides);

ExperimentSpec load_config(const std::filesystem::path& path,
                           std::span<const Override> overrides = {});

/// Returns a new spec with overrides applied; the original is untouched.
ExperimentSpec override_flags(const ExperimentSpec& spec, std::span<const Override> overrides);

/// Every resolved parameter, defaults included.
RawConfig to_raw(const ExperimentSpec& spec);
std::string render_config(const ExperimentSpec& spec);

/// Shortest round-trip decimal form of a double.
std::string format_number(double x);

}  // namespace qdread
