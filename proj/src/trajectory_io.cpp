#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fracvisc/hj_solver.hpp"

namespace fracvisc {

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

std::string snapshot_filename(const std::string& prefix, double s, double eps, double t) {
  return prefix + "_s" + shortest(s) + "_eps" + shortest(eps) + "_t" + shortest(t) + ".csv";
}

void write_field_csv(const Field& f, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const auto& g = f.grid();
  out << (g.dim() == 1 ? "x,value\n" : "x,y,value\n");
  char buf[128];
  double x[2];
  for (std::size_t i = 0; i < f.size(); ++i) {
    g.node_coordinates(i, std::span<double>(x, g.dim()));
    if (g.dim() == 1) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", x[0], f[i]);
    } else {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", x[0], x[1], f[i]);
    }
    out << buf;
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Field read_field_csv(const TorusGrid& grid, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<double> values;
  values.reserve(grid.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    values.push_back(std::stod(line.substr(comma + 1)));
  }
  if (values.size() != grid.size()) {
    throw std::runtime_error(path.string() + ": expected " + std::to_string(grid.size()) +
                             " rows, found " + std::to_string(values.size()));
  }
  return Field(grid, std::move(values));
}

std::vector<std::filesystem::path> export_trajectory(const Trajectory& trajectory,
                                                     const std::filesystem::path& dir,
                                                     const std::string& prefix) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  for (std::size_t j = 0; j < trajectory.size(); ++j) {
    auto path = dir / snapshot_filename(prefix, trajectory.s, trajectory.epsilon,
                                        trajectory.times[j]);
    write_field_csv(trajectory.snapshots[j], path);
    written.push_back(std::move(path));
  }
  return written;
}

}  // namespace fracvisc
