#include "stemtune/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "stemtune/errors.hpp"

namespace stemtune {

// ---------------------------------------------------------------------------
// SearchSpace

void SearchSpace::validate() const {
  if (axes.empty()) throw ConfigError("space: no active coefficients");
  std::set<int> seen;
  for (const auto& ax : axes) {
    if (!seen.insert(static_cast<int>(ax.coeff)).second) {
      throw ConfigError(std::string("space: repeated coefficient ") +
                        kCoeffNames[static_cast<int>(ax.coeff)]);
    }
    if (!(ax.lower < ax.upper)) throw ConfigError("space: lower must be < upper");
    if (ax.lower > 0.0 || ax.upper < 0.0) {
      throw ConfigError(std::string("space: zero state outside bounds of ") +
                        kCoeffNames[static_cast<int>(ax.coeff)]);
    }
  }
}

AberrationState SearchSpace::to_state(std::span<const double> x) const {
  if (x.size() != axes.size()) throw std::invalid_argument("space: dimension mismatch");
  AberrationState state;
  for (size_t i = 0; i < axes.size(); ++i) {
    state.nm[static_cast<int>(axes[i].coeff)] = x[i];
    state.active[static_cast<int>(axes[i].coeff)] = true;
  }
  return state;
}

std::vector<double> SearchSpace::from_state(const AberrationState& state) const {
  std::vector<double> x(axes.size());
  for (size_t i = 0; i < axes.size(); ++i) x[i] = state.nm[static_cast<int>(axes[i].coeff)];
  return x;
}

bool SearchSpace::contains(std::span<const double> x) const {
  if (x.size() != axes.size()) return false;
  for (size_t i = 0; i < axes.size(); ++i) {
    if (x[i] < axes[i].lower || x[i] > axes[i].upper) return false;
  }
  return true;
}

std::vector<double> SearchSpace::clip(std::vector<double> x) const {
  for (size_t i = 0; i < axes.size(); ++i) {
    x[i] = std::clamp(x[i], axes[i].lower, axes[i].upper);
  }
  return x;
}

std::array<std::optional<std::pair<double, double>>, kNumCoeffs>
SearchSpace::coeff_bounds() const {
  std::array<std::optional<std::pair<double, double>>, kNumCoeffs> out{};
  for (const auto& ax : axes) {
    out[static_cast<int>(ax.coeff)] = std::make_pair(ax.lower, ax.upper);
  }
  return out;
}

SearchSpace SearchSpace::first_order() {
  return {{{Coeff::c10, -10.0, 10.0}, {Coeff::c12a, -10.0, 10.0}, {Coeff::c12b, -10.0, 10.0}}};
}

SearchSpace SearchSpace::second_order() {
  return {{{Coeff::c21a, -300.0, 300.0},
           {Coeff::c21b, -300.0, 300.0},
           {Coeff::c23a, -300.0, 300.0},
           {Coeff::c23b, -300.0, 300.0}}};
}

SearchSpace SearchSpace::combined() {
  SearchSpace space = first_order();
  for (const auto& ax : second_order().axes) space.axes.push_back(ax);
  return space;
}

// ---------------------------------------------------------------------------
// MoboConfig / RunConfig

void MoboConfig::validate() const {
  if (n_init < 0 || n_iterations < 0) throw ConfigError("mobo: negative count");
  if (mc_samples < 1 || acq_restarts < 1 || acq_refine_top < 1) {
    throw ConfigError("mobo: sample/restart counts must be >= 1");
  }
}

void RunConfig::validate() const {
  optics.validate();
  noise.validate();
  rewards.mask_for(optics.grid_size).validate(optics.grid_size);
  space.validate();
  mobo.validate();
  if (latency.hw_seconds_per_acquire < 0.0) {
    throw ConfigError("latency: seconds per acquire must be >= 0");
  }
  if (!(specimen.lattice_constant_nm > 0.0)) {
    throw ConfigError("specimen: lattice constant must be > 0");
  }
}

void RunConfig::apply_profile(const std::string& profile) {
  if (profile == "desk") {
    latency.hw_seconds_per_acquire = 0.0;
    latency.realtime = false;
  } else if (profile == "bench") {
    latency.hw_seconds_per_acquire = 4.0;
    latency.realtime = false;
  } else {
    throw ConfigError("unknown profile '" + profile + "' (expected desk or bench)");
  }
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for " + key + ": '" + v + "'");
  }
}

long to_long(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    const long d = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
  }
}

bool to_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: bad boolean for " + key + ": '" + v + "'");
}

SearchSpace::Axis default_axis(Coeff c) {
  const int i = static_cast<int>(c);
  const double b = i <= 2 ? 10.0 : 300.0;  // first-order vs higher-order default
  return {c, -b, b};
}

}  // namespace

std::string RunConfig::to_snapshot() const {
  std::ostringstream out;
  out << "[optics]\n"
      << "voltage_kv = " << fmt(optics.voltage_kv) << "\n"
      << "convergence_mrad = " << fmt(optics.convergence_mrad) << "\n"
      << "grid_size = " << optics.grid_size << "\n"
      << "pixel_size_nm = " << fmt(optics.pixel_size_nm) << "\n\n";

  out << "[specimen]\n"
      << "lattice_constant_nm = " << fmt(specimen.lattice_constant_nm) << "\n";
  for (const auto& s : specimen.basis) {
    out << "site = " << fmt(s.frac_a) << ", " << fmt(s.frac_b) << ", " << fmt(s.amplitude)
        << ", " << fmt(s.width_nm) << "\n";
  }
  out << "\n[noise]\n"
      << "enabled = " << (noise.enabled ? "true" : "false") << "\n"
      << "dose = " << fmt(noise.dose) << "\n"
      << "correlated_amplitude = " << fmt(noise.correlated_amplitude) << "\n"
      << "correlation_length_px = " << fmt(noise.correlation_length_px) << "\n\n";

  out << "[rewards]\n"
      << "epsilon = " << fmt(rewards.epsilon) << "\n"
      << "dc_radius_per_64 = " << fmt(rewards.dc_radius_per_64) << "\n\n";

  out << "[space]\nactive = ";
  for (size_t i = 0; i < space.axes.size(); ++i) {
    out << (i ? ", " : "") << kCoeffNames[static_cast<int>(space.axes[i].coeff)];
  }
  out << "\n";
  for (const auto& ax : space.axes) {
    out << kCoeffNames[static_cast<int>(ax.coeff)] << " = " << fmt(ax.lower) << ", "
        << fmt(ax.upper) << "\n";
  }

  out << "\n[mobo]\n"
      << "n_init = " << mobo.n_init << "\n"
      << "n_iterations = " << mobo.n_iterations << "\n"
      << "mc_samples = " << mobo.mc_samples << "\n"
      << "acq_restarts = " << mobo.acq_restarts << "\n"
      << "acq_refine_top = " << mobo.acq_refine_top << "\n\n";

  out << "[latency]\n"
      << "hw_seconds_per_acquire = " << fmt(latency.hw_seconds_per_acquire) << "\n"
      << "realtime = " << (latency.realtime ? "true" : "false") << "\n\n";

  out << "[run]\nseed = " << seed << "\n";
  return out.str();
}

RunConfig RunConfig::from_snapshot(const std::string& text) {
  RunConfig cfg;
  bool basis_cleared = false;
  std::vector<std::string> active;
  std::map<std::string, std::pair<double, double>> bounds;
  bool space_seen = false;

  std::istringstream in(text);
  std::string raw;
  std::string section;
  while (std::getline(in, raw)) {
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("config: bad section line: " + raw);
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config: expected key = value: " + raw);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string qkey = section + "." + key;

    if (section == "optics") {
      if (key == "voltage_kv") cfg.optics.voltage_kv = to_double(value, qkey);
      else if (key == "convergence_mrad") cfg.optics.convergence_mrad = to_double(value, qkey);
      else if (key == "grid_size") cfg.optics.grid_size = static_cast<int>(to_long(value, qkey));
      else if (key == "pixel_size_nm") cfg.optics.pixel_size_nm = to_double(value, qkey);
      else throw ConfigError("config: unknown key " + qkey);
    } else if (section == "specimen") {
      if (key == "lattice_constant_nm") {
        cfg.specimen.lattice_constant_nm = to_double(value, qkey);
      } else if (key == "site") {
        const auto parts = split_list(value);
        if (parts.size() != 4) throw ConfigError("config: site needs 4 values: " + raw);
        if (!basis_cleared) {
          cfg.specimen.basis.clear();
          basis_cleared = true;
        }
        cfg.specimen.basis.push_back({to_double(parts[0], qkey), to_double(parts[1], qkey),
                                      to_double(parts[2], qkey), to_double(parts[3], qkey)});
      } else {
        throw ConfigError("config: unknown key " + qkey);
      }
    } else if (section == "noise") {
      if (key == "enabled") cfg.noise.enabled = to_bool(value, qkey);
      else if (key == "dose") cfg.noise.dose = to_double(value, qkey);
      else if (key == "correlated_amplitude") cfg.noise.correlated_amplitude = to_double(value, qkey);
      else if (key == "correlation_length_px") cfg.noise.correlation_length_px = to_double(value, qkey);
      else throw ConfigError("config: unknown key " + qkey);
    } else if (section == "rewards") {
      if (key == "epsilon") cfg.rewards.epsilon = to_double(value, qkey);
      else if (key == "dc_radius_per_64") cfg.rewards.dc_radius_per_64 = to_double(value, qkey);
      else throw ConfigError("config: unknown key " + qkey);
    } else if (section == "space") {
      space_seen = true;
      if (key == "active") {
        active = split_list(value);
      } else if (coeff_from_name(key)) {
        const auto parts = split_list(value);
        if (parts.size() != 2) throw ConfigError("config: bounds need 2 values: " + raw);
        bounds[key] = {to_double(parts[0], qkey), to_double(parts[1], qkey)};
      } else {
        throw ConfigError("config: unknown key " + qkey);
      }
    } else if (section == "mobo") {
      if (key == "n_init") cfg.mobo.n_init = static_cast<int>(to_long(value, qkey));
      else if (key == "n_iterations") cfg.mobo.n_iterations = static_cast<int>(to_long(value, qkey));
      else if (key == "mc_samples") cfg.mobo.mc_samples = static_cast<int>(to_long(value, qkey));
      else if (key == "acq_restarts") cfg.mobo.acq_restarts = static_cast<int>(to_long(value, qkey));
      else if (key == "acq_refine_top") cfg.mobo.acq_refine_top = static_cast<int>(to_long(value, qkey));
      else throw ConfigError("config: unknown key " + qkey);
    } else if (section == "latency") {
      if (key == "hw_seconds_per_acquire") cfg.latency.hw_seconds_per_acquire = to_double(value, qkey);
      else if (key == "realtime") cfg.latency.realtime = to_bool(value, qkey);
      else throw ConfigError("config: unknown key " + qkey);
    } else if (section == "run") {
      if (key == "seed") {
        try {
          cfg.seed = std::stoull(value);
        } catch (const std::exception&) {
          throw ConfigError("config: bad seed '" + value + "'");
        }
      }
      else throw ConfigError("config: unknown key " + qkey);
    } else {
      throw ConfigError("config: unknown section [" + section + "]");
    }
  }

  if (space_seen) {
    if (active.empty()) throw ConfigError("config: [space] needs an active = ... list");
    SearchSpace space;
    for (const auto& name : active) {
      const auto coeff = coeff_from_name(name);
      if (!coeff) throw ConfigError("config: unknown coefficient '" + name + "'");
      auto axis = default_axis(*coeff);
      if (const auto it = bounds.find(name); it != bounds.end()) {
        axis.lower = it->second.first;
        axis.upper = it->second.second;
      }
      space.axes.push_back(axis);
    }
    cfg.space = space;
  }

  cfg.validate();
  return cfg;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_snapshot(buf.str());
}

}  // namespace stemtune
