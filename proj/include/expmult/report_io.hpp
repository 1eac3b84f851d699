#pragma once

#include <iosfwd>
#include <string>

#include "expmult/lp.hpp"
#include "expmult/outer.hpp"

namespace expmult {

/// printf("%.17g"), with non-finite values spelled inf, -inf, nan.
std::string format17(double v);

/// Header plus one row per outer iteration:
/// iter, x_1..x_N, y_1..y_m, g_1..g_m, prod_1..prod_m, L, inner_iters, inner_grad_norm
void write_trace_csv(std::ostream& os, const SolveReport& rep, std::size_t n, std::size_t m);

/// JSON object with status, x, y, objective, kkt, outer_iters and warnings.
/// Numbers use format17, so identical reports serialize to identical bytes.
void write_report_json(std::ostream& os, const SolveReport& rep);

/// As above plus the oracle cross-check and constraint violation.
void write_lp_report_json(std::ostream& os, const LpSolveReport& rep);

/// Writes a scan table: y, x_of_y (x_of_y_1..x_of_y_N when N > 1), g_bar, G.
void write_scan_csv(std::ostream& os, const ScanResult& scan);

/// Quoted JSON string literal.
std::string json_quote(const std::string& s);

}  // namespace expmult
