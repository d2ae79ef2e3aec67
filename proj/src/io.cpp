#include "snac/io.hpp"

#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "snac/errors.hpp"

namespace snac {

void save_gravity_field(const GravityField& field, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("cannot open " + path + " for writing");
  std::fprintf(f, "%.17g %.17g %d\n", field.mu, field.ref_radius,
               field.degree);
  for (int n = 2; n <= field.degree; ++n)
    for (int m = 0; m <= n; ++m)
      std::fprintf(f, "%d %d %.17g %.17g\n", n, m, field.c(n, m),
                   (m > 0) ? field.s(n, m) : 0.0);
  std::fclose(f);
}

GravityField load_gravity_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  double mu, ref;
  int degree;
  in >> mu >> ref >> degree;
  if (!in || degree < 2) throw Error("malformed gravity file header");
  GravityField field = GravityField::point_mass(mu, ref, degree);
  int n, m;
  double c, s;
  while (in >> n >> m >> c >> s) {
    if (n < 2 || n > degree || m < 0 || m > n)
      throw Error("gravity coefficient out of range");
    field.set_c(n, m, c);
    if (m > 0) field.set_s(n, m, s);
  }
  return field;
}

void save_shape_coefficients(const ShapeCoefficients& coeffs, double alpha,
                             double nu, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("cannot open " + path + " for writing");
  std::fprintf(f, "%d %.17g %.17g\n", coeffs.max_degree, alpha, nu);
  for (int n = 0; n <= coeffs.max_degree; ++n)
    for (int m = 0; m <= n; ++m)
      std::fprintf(f, "%d %d %.17g %.17g\n", n, m, coeffs.a(n, m),
                   (m > 0) ? coeffs.b(n, m) : 0.0);
  std::fclose(f);
}

ShapeFileContents load_shape_coefficients(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  ShapeFileContents out;
  int degree;
  in >> degree >> out.alpha >> out.nu;
  if (!in || degree < 0) throw Error("malformed shape file header");
  out.coefficients = ShapeCoefficients::zeros(degree);
  int n, m;
  double a, b;
  while (in >> n >> m >> a >> b) {
    out.coefficients.set_a(n, m, a);
    if (m > 0) out.coefficients.set_b(n, m, b);
  }
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& header) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("cannot open " + path + " for writing");
  file_ = f;
  for (size_t i = 0; i < header.size(); ++i)
    std::fprintf(f, "%s%s", header[i].c_str(),
                 i + 1 < header.size() ? "," : "\n");
}

CsvWriter::~CsvWriter() {
  if (file_) std::fclose(static_cast<std::FILE*>(file_));
}

void CsvWriter::row(const std::vector<double>& values) {
  std::FILE* f = static_cast<std::FILE*>(file_);
  for (size_t i = 0; i < values.size(); ++i)
    std::fprintf(f, "%.17g%s", values[i], i + 1 < values.size() ? "," : "\n");
}

void CsvWriter::raw_row(const std::string& line) {
  std::fprintf(static_cast<std::FILE*>(file_), "%s\n", line.c_str());
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    if (first) {
      while (std::getline(ss, cell, ',')) table.header.push_back(cell);
      first = false;
      continue;
    }
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (...) {
        row.push_back(std::numeric_limits<double>::quiet_NaN());
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

int CsvTable::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  throw Error("csv column not found: " + name);
}

}  // namespace snac
