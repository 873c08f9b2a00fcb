#include "selflabel/data.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace selflabel {

namespace {

double parse_cell(const std::string& cell, std::size_t line_no) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("csv: non-numeric cell '" + cell + "' at line " +
                             std::to_string(line_no));
  }
  if (pos != cell.size())
    throw std::runtime_error("csv: trailing garbage in cell '" + cell +
                             "' at line " + std::to_string(line_no));
  return v;
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Dataset load_csv(const std::string& path, bool has_labels, std::size_t target_cols) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("csv: cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(parse_cell(cell, line_no));
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error("csv: ragged row at line " + std::to_string(line_no));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("csv: empty file " + path);

  const std::size_t width = rows.front().size();
  const std::size_t extra = (has_labels ? 1 : 0) + target_cols;
  if (width <= extra)
    throw std::runtime_error("csv: too few columns for requested labels/targets");
  const std::size_t d = width - extra;

  Dataset ds;
  ds.name = path;
  ds.provenance = "csv:" + path;
  ds.x = DenseMatrix(rows.size(), d);
  if (target_cols > 0) ds.targets = DenseMatrix(rows.size(), target_cols);
  if (has_labels) ds.labels = std::vector<int>(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) ds.x(i, j) = rows[i][j];
    for (std::size_t j = 0; j < target_cols; ++j)
      (*ds.targets)(i, j) = rows[i][d + j];
    if (has_labels) {
      const double lab = rows[i][width - 1];
      (*ds.labels)[i] = static_cast<int>(lab);
      if (static_cast<double>((*ds.labels)[i]) != lab)
        throw std::runtime_error("csv: non-integer label at line " + std::to_string(i + 1));
    }
  }
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("csv: cannot open " + path + " for writing");
  const std::size_t t = ds.targets ? ds.targets->cols() : 0;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    for (std::size_t j = 0; j < ds.dim(); ++j) {
      if (j) os << ',';
      os << format_value(ds.x(i, j));
    }
    for (std::size_t j = 0; j < t; ++j) os << ',' << format_value((*ds.targets)(i, j));
    if (ds.labels) os << ',' << (*ds.labels)[i];
    os << '\n';
  }
  if (!os) throw std::runtime_error("csv: write failed for " + path);
}

Dataset minmax_normalize(const Dataset& ds) {
  Dataset out = ds;
  for (std::size_t j = 0; j < ds.dim(); ++j) {
    double lo = ds.x(0, j), hi = ds.x(0, j);
    for (std::size_t i = 1; i < ds.n(); ++i) {
      lo = std::min(lo, ds.x(i, j));
      hi = std::max(hi, ds.x(i, j));
    }
    const double range = hi - lo;
    for (std::size_t i = 0; i < ds.n(); ++i)
      out.x(i, j) = range > 0.0 ? (ds.x(i, j) - lo) / range : 0.0;
  }
  out.provenance += "+minmax";
  return out;
}

Dataset make_blobs(Rng& rng, std::size_t classes, std::size_t per_class,
                   std::size_t dim, double spread) {
  if (classes == 0 || per_class == 0 || dim == 0)
    throw std::invalid_argument("make_blobs: counts must be positive");
  Dataset ds;
  ds.name = "blobs";
  ds.provenance = "blobs(" + std::to_string(classes) + "," + std::to_string(per_class) +
                  "," + std::to_string(dim) + ")";
  ds.x = DenseMatrix(classes * per_class, dim);
  ds.labels = std::vector<int>(classes * per_class);

  DenseMatrix centers = sample_gaussian(rng, classes, dim);
  for (std::size_t c = 0; c < classes; ++c) {
    const double n = std::max(row_l2_norm(centers, c), 1e-12);
    for (std::size_t j = 0; j < dim; ++j) centers(c, j) /= n;
  }
  const double sigma = spread / std::sqrt(static_cast<double>(dim));
  for (std::size_t c = 0; c < classes; ++c)
    for (std::size_t p = 0; p < per_class; ++p) {
      const std::size_t i = c * per_class + p;
      (*ds.labels)[i] = static_cast<int>(c);
      for (std::size_t j = 0; j < dim; ++j)
        ds.x(i, j) = centers(c, j) + sigma * rng.next_gaussian();
    }
  return ds;
}

Dataset make_two_moons(Rng& rng, std::size_t n, double noise) {
  if (n == 0) throw std::invalid_argument("make_two_moons: n must be positive");
  Dataset ds;
  ds.name = "two_moons";
  ds.provenance = "two_moons(" + std::to_string(n) + ")";
  ds.x = DenseMatrix(n, 2);
  ds.labels = std::vector<int>(n);
  const std::size_t n_out = n / 2 + n % 2;
  for (std::size_t i = 0; i < n; ++i) {
    const bool outer = i < n_out;
    const std::size_t idx = outer ? i : i - n_out;
    const std::size_t count = outer ? n_out : n - n_out;
    const double t = M_PI * static_cast<double>(idx) /
                     static_cast<double>(count > 1 ? count - 1 : 1);
    double px = outer ? std::cos(t) : 1.0 - std::cos(t);
    double py = outer ? std::sin(t) : 0.5 - std::sin(t);
    ds.x(i, 0) = px + noise * rng.next_gaussian();
    ds.x(i, 1) = py + noise * rng.next_gaussian();
    (*ds.labels)[i] = outer ? 0 : 1;
  }
  return ds;
}

double suggest_epsilon(const Dataset& ds) {
  if (ds.n() == 0) throw std::invalid_argument("suggest_epsilon: empty dataset");
  double s = 0.0;
  for (std::size_t i = 0; i < ds.n(); ++i) s += row_l2_norm(ds.x, i);
  const double mean_norm = s / static_cast<double>(ds.n());
  if (mean_norm <= 0.0)
    throw std::invalid_argument("suggest_epsilon: all-zero dataset");
  return 0.2 * mean_norm;
}

}  // namespace selflabel
