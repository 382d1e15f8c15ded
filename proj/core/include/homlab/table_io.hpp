#ifndef HOMLAB_TABLE_IO_HPP
#define HOMLAB_TABLE_IO_HPP

#include "homlab/harness.hpp"

#include <string>
#include <vector>

namespace homlab {

/// Floats are printed with 17 significant digits, which round-trips doubles
/// exactly; '.' decimal separator, ',' delimiter, UTF-8.
std::string format_g17(double v);

// cells.csv: epsilon,lambda_modulus,lambda_angle,p,norm,error
// (lambda_modulus carries the modulus_scale relative to R0^-2, matching the
// configuration interface).
void write_cells_csv(const std::string& path, const RateReport& report);
std::vector<CellValue> read_cells_csv(const std::string& path);

// rates.csv: lambda_modulus,lambda_angle,p,norm,slope,constant,residual,pass
void write_rates_csv(const std::string& path, const RateReport& report);

// report.txt: one PASS/FAIL line per rate row with its window; the only
// file that carries a timestamp.
void write_report_txt(const std::string& path, const RateReport& report,
                      bool with_timestamp = true);

// calibration table: modulus_scale,angle,p,ratio_lp,ratio_w1p
void write_calibration_csv(const std::string& path, const std::vector<CalibrationRow>& rows);

/// Two-column gnuplot-ready file.
void write_xy(const std::string& path, const std::vector<double>& x,
              const std::vector<double>& y, const std::string& header);

/// Recompute rate rows from stored cells (the `report` subcommand): groups
/// cells by (lambda, p, norm) and refits over epsilon with the same windows
/// and corrections as the originating study.
RateReport refit_from_cells(const std::vector<CellValue>& cells, const std::string& study,
                            double R0);

} // namespace homlab

#endif
