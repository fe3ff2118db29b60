#include "qdread/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "qdread/errors.hpp"

namespace qdread {

namespace {

// Every accepted key. Keys with an empty default are required.
struct KeySpec {
  std::string_view section;
  std::string_view key;
  bool required;
};

constexpr KeySpec schema[] = {
    {"experiment", "name", false},
    {"device", "e1_eV", true},
    {"device", "e2_0_eV", true},
    {"device", "w12_eV", true},
    {"device", "w23_eV", true},
    {"device", "delta_eV", false},
    {"device", "b_tesla", false},
    {"device", "delta_broadening_eV", false},
    {"leads", "ef_eV", true},
    {"leads", "gamma_l_eV", true},
    {"leads", "gamma_r_eV", true},
    {"leads", "temperature_K", true},
    {"fet", "enabled", false},
    {"fet", "length_m", false},
    {"fet", "width_m", false},
    {"fet", "mobility_m2_per_Vs", false},
    {"fet", "eot_m", false},
    {"fet", "epsilon_F_per_m", false},
    {"fet", "overdrive_V", false},
    {"sweep", "variable", false},
    {"sweep", "start", false},
    {"sweep", "stop", false},
    {"sweep", "points", false},
    {"sweep", "reduction", false},
    {"sweep", "v_d_V", false},
    {"sweep", "window_stop_V", false},
    {"sweep", "window_points", false},
    {"sweep", "vd_start_V", false},
    {"sweep", "vd_stop_V", false},
    {"sweep", "vd_points", false},
    {"cases", "list", false},
    {"cases", "variant", false},
    {"cases", "level_shift_reference_eV", false},
    {"cases", "level_shift_case_i_eV", false},
    {"cases", "level_shift_case_ii_eV", false},
    {"cases", "level_shift_case_iii_eV", false},
    {"cases", "level_shift_case_iv_eV", false},
    {"metrics", "tdec_form", false},
    {"metrics", "lead_band_edges", false},
    {"metrics", "occupancy_left", false},
    {"metrics", "occupancy_right", false},
    {"numerics", "rel_tol", false},
    {"numerics", "abs_tol_A", false},
    {"numerics", "max_subdivisions", false},
    {"output", "dir", false},
};

const KeySpec* find_key(std::string_view section, std::string_view key) {
  for (const auto& k : schema) {
    if (k.section == section && k.key == key) return &k;
  }
  return nullptr;
}

bool known_section(std::string_view section) {
  return std::any_of(std::begin(schema), std::end(schema),
                     [&](const KeySpec& k) { return k.section == section; });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void fail_at(std::string_view origin, int line, const std::string& msg) {
  std::ostringstream os;
  os << origin << ':' << line << ": " << msg;
  throw ConfigError(os.str());
}

// Typed access to a raw config, with key-qualified error messages.
class Reader {
 public:
  explicit Reader(const RawConfig& raw) : raw_(raw) {}

  bool has(std::string_view section, std::string_view key) const {
    auto s = raw_.sections.find(std::string(section));
    return s != raw_.sections.end() && s->second.contains(std::string(key));
  }

  std::string text(std::string_view section, std::string_view key, std::string fallback) const {
    if (!has(section, key)) return fallback;
    return raw_.sections.at(std::string(section)).at(std::string(key));
  }

  double number(std::string_view section, std::string_view key, double fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = text(section, key, "");
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) bad(section, key, "expected a number, got '" + v + "'");
    return out;
  }

  double required(std::string_view section, std::string_view key) const {
    if (!has(section, key)) {
      throw ConfigError(raw_.origin + ": missing required key " + std::string(section) + "." +
                        std::string(key));
    }
    return number(section, key, 0.0);
  }

  int integer(std::string_view section, std::string_view key, int fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = text(section, key, "");
    int out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) bad(section, key, "expected an integer, got '" + v + "'");
    return out;
  }

  bool boolean(std::string_view section, std::string_view key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = text(section, key, "");
    if (v == "true") return true;
    if (v == "false") return false;
    bad(section, key, "expected true or false, got '" + v + "'");
  }

  [[noreturn]] void bad(std::string_view section, std::string_view key, const std::string& msg) const {
    const std::string name = std::string(section) + "." + std::string(key);
    auto it = raw_.lines.find(name);
    const int line = it == raw_.lines.end() ? 0 : it->second;
    if (line > 0) fail_at(raw_.origin, line, name + ": " + msg);
    throw ConfigError(raw_.origin + ": " + name + ": " + msg);
  }

 private:
  const RawConfig& raw_;
};

std::vector<MeasurementCase> parse_case_list(const Reader& r, const std::string& list) {
  std::vector<MeasurementCase> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto name = trim(item);
    if (name.empty()) continue;
    auto c = parse_case(name);
    if (!c) r.bad("cases", "list", "unknown case '" + std::string(name) + "'");
    if (std::find(out.begin(), out.end(), *c) != out.end()) {
      r.bad("cases", "list", "duplicate case '" + std::string(name) + "'");
    }
    out.push_back(*c);
  }
  if (out.empty()) r.bad("cases", "list", "must name at least one case");
  return out;
}

}  // namespace

std::string format_number(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

std::string_view to_string(SweepVariable v) noexcept {
  switch (v) {
    case SweepVariable::v_d:
      return "v_d";
    case SweepVariable::delta:
      return "delta";
    case SweepVariable::temperature:
      return "temperature";
    case SweepVariable::gate_length:
      return "gate_length";
  }
  return "v_d";
}

std::string_view to_string(Reduction r) noexcept {
  return r == Reduction::none ? "none" : "max_over_vd";
}

std::vector<double> SweepSpec::window() const {
  // (0, window_stop]: the zero-bias point carries no current and is skipped.
  auto w = linspace(0.0, window_stop, window_points + 1);
  w.erase(w.begin());
  return w;
}

RawConfig parse_config_text(std::string_view text, std::string_view origin) {
  RawConfig raw;
  raw.origin = std::string(origin);
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (auto hash = line.find_first_of("#;"); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }

    if (line.front() == '[') {
      if (line.back() != ']') fail_at(origin, line_no, "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!known_section(section)) fail_at(origin, line_no, "unknown section [" + section + "]");
    } else {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) fail_at(origin, line_no, "expected key = value");
      const std::string key(trim(line.substr(0, eq)));
      const std::string value(trim(line.substr(eq + 1)));
      if (section.empty()) fail_at(origin, line_no, "key '" + key + "' outside of any section");
      if (key.empty()) fail_at(origin, line_no, "empty key");
      if (!find_key(section, key)) fail_at(origin, line_no, "unknown key " + section + "." + key);
      auto& sec = raw.sections[section];
      if (sec.contains(key)) fail_at(origin, line_no, "duplicate key " + section + "." + key);
      sec[key] = value;
      raw.lines[section + "." + key] = line_no;
    }
    if (end == text.size()) break;
  }
  return raw;
}

RawConfig read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

Override parse_override(std::string_view text, std::string_view source) {
  const auto eq = text.find('=');
  const auto dot = text.find('.');
  if (eq == std::string_view::npos || dot == std::string_view::npos || dot > eq) {
    throw ConfigError("override '" + std::string(text) + "' must look like section.key=value");
  }
  return {std::string(trim(text.substr(0, eq))), std::string(trim(text.substr(eq + 1))),
          std::string(source)};
}

void apply_overrides(RawConfig& raw, std::span<const Override> overrides) {
  for (const auto& o : overrides) {
    const auto dot = o.key.find('.');
    if (dot == std::string::npos) throw ConfigError("override key '" + o.key + "' lacks a section");
    const std::string section = o.key.substr(0, dot);
    const std::string key = o.key.substr(dot + 1);
    if (!find_key(section, key)) throw ConfigError("unknown override key " + o.key);
    auto& sec = raw.sections[section];
    if (section == "device" && key == "delta_eV") sec.erase("b_tesla");
    if (section == "device" && key == "b_tesla") sec.erase("delta_eV");
    sec[key] = o.value;
    raw.lines[o.key] = 0;
  }
}

ExperimentSpec build_spec(const RawConfig& raw) {
  const Reader r(raw);
  ExperimentSpec spec;
  spec.name = r.text("experiment", "name", spec.name);

  DeviceParams& d = spec.device;
  d.e1 = r.required("device", "e1_eV");
  d.e2_0 = r.required("device", "e2_0_eV");
  d.w12 = r.required("device", "w12_eV");
  d.w23 = r.required("device", "w23_eV");
  const bool has_delta = r.has("device", "delta_eV");
  const bool has_field = r.has("device", "b_tesla");
  if (has_delta == has_field) {
    throw ConfigError(raw.origin + ": exactly one of device.delta_eV and device.b_tesla must be given" +
                      (has_delta ? " (both are present)" : " (neither is present)"));
  }
  if (has_delta) {
    d.delta = r.number("device", "delta_eV", 0.0);
  } else {
    const double b = r.number("device", "b_tesla", 0.0);
    if (!(b >= 0.0)) r.bad("device", "b_tesla", "must be >= 0");
    d.delta = zeeman_from_field(b);
  }
  d.delta_broadening = r.number("device", "delta_broadening_eV", d.delta_broadening);
  d.ef = r.required("leads", "ef_eV");
  d.gamma_l = r.required("leads", "gamma_l_eV");
  d.gamma_r = r.required("leads", "gamma_r_eV");
  d.temperature = r.required("leads", "temperature_K");

  const std::string variant = r.text("cases", "variant", "single_channel");
  if (variant == "single_channel") {
    d.case_table.variant = CaseVariant::single_channel;
  } else if (variant == "both_channels") {
    d.case_table.variant = CaseVariant::both_channels;
  } else {
    r.bad("cases", "variant", "expected single_channel or both_channels");
  }
  for (auto c : all_cases) {
    const std::string key = "level_shift_" + std::string(to_string(c)) + "_eV";
    d.case_table.level_shift[static_cast<std::size_t>(c)] = r.number("cases", key, 0.0);
  }
  if (r.has("cases", "list")) spec.cases = parse_case_list(r, r.text("cases", "list", ""));

  FetParams& f = spec.fet;
  f.enabled = r.boolean("fet", "enabled", false);
  f.gate_length = r.number("fet", "length_m", f.gate_length);
  f.gate_width = r.number("fet", "width_m", f.gate_width);
  f.mobility = r.number("fet", "mobility_m2_per_Vs", f.mobility);
  f.eot = r.number("fet", "eot_m", f.eot);
  f.permittivity = r.number("fet", "epsilon_F_per_m", f.permittivity);
  f.overdrive = r.number("fet", "overdrive_V", f.overdrive);

  SweepSpec& s = spec.sweep;
  const std::string var = r.text("sweep", "variable", "v_d");
  if (var == "v_d") s.variable = SweepVariable::v_d;
  else if (var == "delta") s.variable = SweepVariable::delta;
  else if (var == "temperature") s.variable = SweepVariable::temperature;
  else if (var == "gate_length") s.variable = SweepVariable::gate_length;
  else r.bad("sweep", "variable", "expected v_d, delta, temperature or gate_length");
  s.start = r.number("sweep", "start", s.start);
  s.stop = r.number("sweep", "stop", s.stop);
  s.points = r.integer("sweep", "points", s.points);
  const std::string red = r.text("sweep", "reduction", "none");
  if (red == "none") s.reduction = Reduction::none;
  else if (red == "max_over_vd") s.reduction = Reduction::max_over_vd;
  else r.bad("sweep", "reduction", "expected none or max_over_vd");
  s.operating_vd = r.number("sweep", "v_d_V", s.operating_vd);
  s.window_stop = r.number("sweep", "window_stop_V", s.window_stop);
  s.window_points = r.integer("sweep", "window_points", s.window_points);
  s.vd_start = r.number("sweep", "vd_start_V", s.vd_start);
  s.vd_stop = r.number("sweep", "vd_stop_V", s.vd_stop);
  s.vd_points = r.integer("sweep", "vd_points", s.vd_points);

  MetricsOptions& m = spec.metrics;
  const std::string form = r.text("metrics", "tdec_form", m.symmetrized_tdec ? "symmetrized" : "printed");
  if (form == "symmetrized") m.symmetrized_tdec = true;
  else if (form == "printed") m.symmetrized_tdec = false;
  else r.bad("metrics", "tdec_form", "expected printed or symmetrized");
  m.lead_band_edges = r.boolean("metrics", "lead_band_edges", m.lead_band_edges);
  m.occupancy_left = r.number("metrics", "occupancy_left", m.occupancy_left);
  m.occupancy_right = r.number("metrics", "occupancy_right", m.occupancy_right);

  TransportOptions& t = m.circuit.transport;
  t.rel_tol = r.number("numerics", "rel_tol", t.rel_tol);
  t.abs_tol_A = r.number("numerics", "abs_tol_A", t.abs_tol_A);
  t.max_subdivisions = r.integer("numerics", "max_subdivisions", t.max_subdivisions);

  spec.output_dir = r.text("output", "dir", spec.output_dir.string());
  spec.validate();
  return spec;
}

void ExperimentSpec::validate() const {
  device.validate();
  fet.validate();
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid " + what);
  };
  require(sweep.points >= 1, "sweep.points: must be >= 1");
  require(sweep.start <= sweep.stop, "sweep.start: must not exceed sweep.stop");
  require(sweep.window_points >= 1, "sweep.window_points: must be >= 1");
  require(sweep.window_stop > 0.0, "sweep.window_stop_V: must be > 0");
  require(sweep.vd_points >= 1, "sweep.vd_points: must be >= 1");
  require(sweep.vd_start >= 0.0 && sweep.vd_start <= sweep.vd_stop,
          "sweep.vd_start_V: must satisfy 0 <= vd_start_V <= vd_stop_V");
  require(sweep.operating_vd >= 0.0, "sweep.v_d_V: must be >= 0");
  switch (sweep.variable) {
    case SweepVariable::v_d:
      require(sweep.start >= 0.0, "sweep.start: bias must be >= 0");
      require(sweep.points == 1 || sweep.start < sweep.stop, "sweep: bias grid must increase");
      break;
    case SweepVariable::delta:
      require(sweep.start >= 0.0, "sweep.start: Zeeman splitting must be >= 0");
      break;
    case SweepVariable::temperature:
      require(sweep.start > 0.0, "sweep.start: temperature must be > 0");
      break;
    case SweepVariable::gate_length:
      require(sweep.start > 0.0, "sweep.start: gate length must be > 0");
      require(fet.enabled, "sweep.variable: gate_length sweeps need fet.enabled = true");
      break;
  }
  require(metrics.occupancy_left >= 0.0 && metrics.occupancy_left <= 1.0,
          "metrics.occupancy_left: must lie in [0, 1]");
  require(metrics.occupancy_right >= 0.0 && metrics.occupancy_right <= 1.0,
          "metrics.occupancy_right: must lie in [0, 1]");
  const auto& t = metrics.circuit.transport;
  require(t.rel_tol > 0.0, "numerics.rel_tol: must be > 0");
  require(t.abs_tol_A >= 0.0, "numerics.abs_tol_A: must be >= 0");
  require(t.max_subdivisions >= 1, "numerics.max_subdivisions: must be >= 1");
  require(!cases.empty(), "cases.list: must name at least one case");
  require(!output_dir.empty(), "output.dir: must not be empty");
}

ExperimentSpec load_config(const std::filesystem::path& path, std::span<const Override> overrides) {
  RawConfig raw = read_config_file(path);
  apply_overrides(raw, overrides);
  ExperimentSpec spec = build_spec(raw);
  spec.overrides.assign(overrides.begin(), overrides.end());
  return spec;
}

ExperimentSpec override_flags(const ExperimentSpec& spec, std::span<const Override> overrides) {
  RawConfig raw = to_raw(spec);
  raw.origin = "<overrides>";
  apply_overrides(raw, overrides);
  ExperimentSpec out = build_spec(raw);
  out.overrides = spec.overrides;
  out.overrides.insert(out.overrides.end(), overrides.begin(), overrides.end());
  return out;
}

RawConfig to_raw(const ExperimentSpec& spec) {
  RawConfig raw;
  raw.origin = "<resolved>";
  auto put = [&](const std::string& section, const std::string& key, std::string value) {
    raw.sections[section][key] = std::move(value);
  };
  auto num = [](double x) { return format_number(x); };

  put("experiment", "name", spec.name);
  const auto& d = spec.device;
  put("device", "e1_eV", num(d.e1));
  put("device", "e2_0_eV", num(d.e2_0));
  put("device", "w12_eV", num(d.w12));
  put("device", "w23_eV", num(d.w23));
  put("device", "delta_eV", num(d.delta));
  put("device", "delta_broadening_eV", num(d.delta_broadening));
  put("leads", "ef_eV", num(d.ef));
  put("leads", "gamma_l_eV", num(d.gamma_l));
  put("leads", "gamma_r_eV", num(d.gamma_r));
  put("leads", "temperature_K", num(d.temperature));

  const auto& f = spec.fet;
  put("fet", "enabled", f.enabled ? "true" : "false");
  put("fet", "length_m", num(f.gate_length));
  put("fet", "width_m", num(f.gate_width));
  put("fet", "mobility_m2_per_Vs", num(f.mobility));
  put("fet", "eot_m", num(f.eot));
  put("fet", "epsilon_F_per_m", num(f.permittivity));
  put("fet", "overdrive_V", num(f.overdrive));

  const auto& s = spec.sweep;
  put("sweep", "variable", std::string(to_string(s.variable)));
  put("sweep", "start", num(s.start));
  put("sweep", "stop", num(s.stop));
  put("sweep", "points", std::to_string(s.points));
  put("sweep", "reduction", std::string(to_string(s.reduction)));
  put("sweep", "v_d_V", num(s.operating_vd));
  put("sweep", "window_stop_V", num(s.window_stop));
  put("sweep", "window_points", std::to_string(s.window_points));
  put("sweep", "vd_start_V", num(s.vd_start));
  put("sweep", "vd_stop_V", num(s.vd_stop));
  put("sweep", "vd_points", std::to_string(s.vd_points));

  std::string list;
  for (auto c : spec.cases) list += (list.empty() ? "" : ",") + std::string(to_string(c));
  put("cases", "list", list);
  put("cases", "variant",
      d.case_table.variant == CaseVariant::single_channel ? "single_channel" : "both_channels");
  for (auto c : all_cases) {
    put("cases", "level_shift_" + std::string(to_string(c)) + "_eV",
        num(d.case_table.level_shift[static_cast<std::size_t>(c)]));
  }

  const auto& m = spec.metrics;
  put("metrics", "tdec_form", m.symmetrized_tdec ? "symmetrized" : "printed");
  put("metrics", "lead_band_edges", m.lead_band_edges ? "true" : "false");
  put("metrics", "occupancy_left", num(m.occupancy_left));
  put("metrics", "occupancy_right", num(m.occupancy_right));
  const auto& t = m.circuit.transport;
  put("numerics", "rel_tol", num(t.rel_tol));
  put("numerics", "abs_tol_A", num(t.abs_tol_A));
  put("numerics", "max_subdivisions", std::to_string(t.max_subdivisions));
  put("output", "dir", spec.output_dir.string());
  return raw;
}

std::string render_config(const ExperimentSpec& spec) {
  const RawConfig raw = to_raw(spec);
  // Emit sections in schema order so the rendering is stable and readable.
  std::ostringstream os;
  std::string current;
  for (const auto& k : schema) {
    auto sec = raw.sections.find(std::string(k.section));
    if (sec == raw.sections.end()) continue;
    auto it = sec->second.find(std::string(k.key));
    if (it == sec->second.end()) continue;
    if (current != k.section) {
      if (!current.empty()) os << '\n';
      current = std::string(k.section);
      os << '[' << current << "]\n";
    }
    os << k.key << " = " << it->second << '\n';
  }
  return os.str();
}

}  // namespace qdread
