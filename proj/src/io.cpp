#include "pilqr/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pilqr {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') {
    cells.emplace_back();
  }
  return cells;
}

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("[io] cannot open for writing: " + path);
  }
  return out;
}

std::ifstream open_for_read(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("[io] cannot open for reading: " + path);
  }
  return in;
}

double parse_double(const std::string& cell, const std::string& path) {
  try {
    return std::stod(cell);
  } catch (const std::exception&) {
    throw std::runtime_error("[io] malformed number '" + cell + "' in " + path);
  }
}

}  // namespace

std::string format_double(double value) {
  // shortest representation that parses back to the same double
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void write_trajectory_csv(const std::string& path, const TrajectoryPair& traj, double dt) {
  std::ofstream out = open_for_write(path);
  const int m = traj.states.empty() ? 0 : static_cast<int>(traj.states.front().size());
  const int p = traj.inputs.empty() ? 0 : static_cast<int>(traj.inputs.front().size());
  out << "n,t";
  for (int i = 0; i < m; ++i) {
    out << ",x" << i;
  }
  for (int i = 0; i < p; ++i) {
    out << ",u" << i;
  }
  out << "\n";
  for (std::size_t n = 0; n < traj.states.size(); ++n) {
    out << n << "," << format_double(static_cast<double>(n) * dt);
    for (int i = 0; i < m; ++i) {
      out << "," << format_double(traj.states[n](i));
    }
    for (int i = 0; i < p; ++i) {
      if (n < traj.inputs.size()) {
        out << "," << format_double(traj.inputs[n](i));
      } else {
        out << ",";
      }
    }
    out << "\n";
  }
}

TrajectoryPair read_trajectory_csv(const std::string& path, int state_dim, int input_dim) {
  std::ifstream in = open_for_read(path);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("[io] empty trajectory file: " + path);
  }
  TrajectoryPair traj;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    const std::vector<std::string> cells = split_csv_line(line);
    if (static_cast<int>(cells.size()) < 2 + state_dim + input_dim) {
      throw std::runtime_error("[io] short trajectory row in " + path);
    }
    Vector x(state_dim);
    for (int i = 0; i < state_dim; ++i) {
      x(i) = parse_double(cells[static_cast<std::size_t>(2 + i)], path);
    }
    traj.states.push_back(x);
    const std::string& first_input = cells[static_cast<std::size_t>(2 + state_dim)];
    if (!first_input.empty()) {
      Vector u(input_dim);
      for (int i = 0; i < input_dim; ++i) {
        u(i) = parse_double(cells[static_cast<std::size_t>(2 + state_dim + i)], path);
      }
      traj.inputs.push_back(u);
    }
  }
  return traj;
}

void write_iterations_csv(const std::string& path, const std::vector<IterationReport>& reports) {
  std::ofstream out = open_for_write(path);
  out << "iteration,merit,cost,ise,alpha\n";
  for (const IterationReport& r : reports) {
    out << r.iteration << "," << format_double(r.merit) << "," << format_double(r.cost) << ","
        << format_double(r.ise) << "," << format_double(r.alpha) << "\n";
  }
}

void write_summary_csv(const std::string& path, const RunSummary& s) {
  std::ofstream out = open_for_write(path);
  out << "problem,horizon,dt,converged,iterations,wall_time_s,cost,ise,merit,sigma,status\n";
  out << s.problem << "," << s.horizon << "," << format_double(s.dt) << ","
      << (s.converged ? 1 : 0) << "," << s.iterations << "," << format_double(s.wall_time_s)
      << "," << format_double(s.cost) << "," << format_double(s.ise) << ","
      << format_double(s.merit) << "," << format_double(s.sigma) << "," << s.status << "\n";
}

RunSummary read_summary_csv(const std::string& path) {
  std::ifstream in = open_for_read(path);
  std::string header, line;
  if (!std::getline(in, header) || !std::getline(in, line)) {
    throw std::runtime_error("[io] malformed summary file: " + path);
  }
  const std::vector<std::string> cells = split_csv_line(line);
  if (cells.size() < 11) {
    throw std::runtime_error("[io] short summary row in " + path);
  }
  RunSummary s;
  s.problem = cells[0];
  s.horizon = static_cast<int>(parse_double(cells[1], path));
  s.dt = parse_double(cells[2], path);
  s.converged = parse_double(cells[3], path) != 0.0;
  s.iterations = static_cast<int>(parse_double(cells[4], path));
  s.wall_time_s = parse_double(cells[5], path);
  s.cost = parse_double(cells[6], path);
  s.ise = parse_double(cells[7], path);
  s.merit = parse_double(cells[8], path);
  s.sigma = parse_double(cells[9], path);
  s.status = cells[10];
  return s;
}

void write_bench_csv(const std::string& path, const std::vector<BenchRow>& rows) {
  std::ofstream out = open_for_write(path);
  out << "N,dt,mean_s,stddev_s,repetitions\n";
  for (const BenchRow& r : rows) {
    out << r.horizon << "," << format_double(r.dt) << "," << format_double(r.mean_s) << ","
        << format_double(r.stddev_s) << "," << r.repetitions << "\n";
  }
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("[io] linear_fit needs matching samples, at least two");
  }
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) {
    throw std::invalid_argument("[io] linear_fit needs at least two distinct x values");
  }
  LinearFit fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double mean_y = sy / n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double pred = fit.slope * x[i] + fit.intercept;
    ss_res += (y[i] - pred) * (y[i] - pred);
    ss_tot += (y[i] - mean_y) * (y[i] - mean_y);
  }
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

}  // namespace pilqr
