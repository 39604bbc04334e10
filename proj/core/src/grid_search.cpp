#include "stemtune/grid_search.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "stemtune/errors.hpp"
#include "stemtune/virtual_scope.hpp"

namespace stemtune {

GridResult grid_evaluate(const RunConfig& config, int levels_per_axis) {
  config.validate();
  if (levels_per_axis < 2 || levels_per_axis > 9) {
    throw ConfigError("grid: levels per axis must be in [2, 9]");
  }
  const int d = config.space.dim();
  double count = std::pow(levels_per_axis, d);
  if (count > kGridEvalCap) {
    throw ConfigError("grid: " + std::to_string(static_cast<long>(count)) +
                      " evaluations exceed the cap of " + std::to_string(kGridEvalCap));
  }
  const int total = static_cast<int>(count);

  VirtualScope scope(config.optics, config.specimen, config.noise, config.latency,
                     config.seed);

  GridResult result;
  result.points.reserve(total);
  result.rewards.reserve(total);

  std::vector<int> index(d, 0);
  for (int row = 0; row < total; ++row) {
    std::vector<double> x(d);
    for (int a = 0; a < d; ++a) {
      const auto& ax = config.space.axes[a];
      x[a] = ax.lower + index[a] * (ax.upper - ax.lower) / (levels_per_axis - 1);
    }
    const Acquisition acq = scope.acquire(config.space.to_state(x));
    result.rewards.push_back(evaluate(acq.image, config.rewards));
    result.points.push_back(std::move(x));

    for (int a = d - 1; a >= 0; --a) {
      if (++index[a] < levels_per_axis) break;
      index[a] = 0;
    }
  }
  result.front = pareto_front(result.rewards);
  return result;
}

namespace {

void write_rows(std::ofstream& out, const SearchSpace& space, const GridResult& result,
                const std::vector<int>& rows, const std::vector<bool>* on_front) {
  out << "index";
  for (const auto& ax : space.axes) out << "," << kCoeffNames[static_cast<int>(ax.coeff)];
  out << ",contrast,fft";
  if (on_front) out << ",on_front";
  out << "\n";
  char buf[64];
  for (int i : rows) {
    out << i;
    for (double v : result.points[i]) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << "," << buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", result.rewards[i].contrast);
    out << "," << buf;
    std::snprintf(buf, sizeof(buf), "%.17g", result.rewards[i].fft);
    out << "," << buf;
    if (on_front) out << "," << ((*on_front)[i] ? 1 : 0);
    out << "\n";
  }
}

}  // namespace

void write_landscape_csv(const std::filesystem::path& path, const SearchSpace& space,
                         const GridResult& result) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  std::vector<int> rows(result.points.size());
  for (size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<int>(i);
  std::vector<bool> on_front(result.points.size(), false);
  for (int i : result.front) on_front[i] = true;
  write_rows(out, space, result, rows, &on_front);
}

void write_grid_pareto_csv(const std::filesystem::path& path, const SearchSpace& space,
                           const GridResult& result) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_rows(out, space, result, result.front, nullptr);
}

}  // namespace stemtune
