#pragma once

#include <string>
#include <vector>

#include "snac/dynamics.hpp"
#include "snac/shape_recon.hpp"

namespace snac {

/// Gravity coefficient file: header `mu ref_radius N_g`, then one line per
/// coefficient `n m Cbar Sbar`.
void save_gravity_field(const GravityField& field, const std::string& path);
GravityField load_gravity_field(const std::string& path);

/// Shape coefficient file: header `N alpha nu`, then `n m Abar Bbar`.
void save_shape_coefficients(const ShapeCoefficients& coeffs,
                             double alpha, double nu,
                             const std::string& path);
struct ShapeFileContents {
  ShapeCoefficients coefficients;
  double alpha = 0.0;
  double nu = 0.0;
};
ShapeFileContents load_shape_coefficients(const std::string& path);

/// Minimal CSV writer with deterministic formatting (%.17g).
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  ~CsvWriter();
  void row(const std::vector<double>& values);
  void raw_row(const std::string& line);

 private:
  void* file_;
};

/// Whole-file CSV read (numeric cells; non-numeric parsed as NaN).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;
};
CsvTable read_csv(const std::string& path);

std::string format_double(double v);

}  // namespace snac
