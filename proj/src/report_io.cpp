#include "expmult/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace expmult {

std::string format17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string json_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"':
        out += "\\\"";
        break;
      case '\\':
        out += "\\\\";
        break;
      case '\n':
        out += "\\n";
        break;
      case '\t':
        out += "\\t";
        break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out + "\"";
}

namespace {

// JSON has no inf/nan; those become null.
std::string json_number(double v) { return std::isfinite(v) ? format17(v) : "null"; }

std::string json_array(std::span<const double> v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += json_number(v[i]);
  }
  return out + "]";
}

std::string kkt_json(const KktResidual& k) {
  return "{\"stationarity\": " + json_number(k.stationarity) +
         ", \"feasibility\": " + json_number(k.feasibility) +
         ", \"complementarity\": " + json_number(k.complementarity) +
         ", \"dual_feasibility\": " + json_number(k.dual_feasibility) + "}";
}

void write_report_body(std::ostream& os, const SolveReport& rep) {
  os << "  \"status\": " << json_quote(std::string(to_string(rep.status))) << ",\n";
  os << "  \"x\": " << json_array(rep.x_star) << ",\n";
  os << "  \"y\": " << json_array(rep.y_star) << ",\n";
  os << "  \"objective\": " << json_number(rep.objective) << ",\n";
  os << "  \"kkt\": " << kkt_json(rep.kkt) << ",\n";
  os << "  \"outer_iters\": " << rep.outer_iters() << ",\n";
  os << "  \"valley_jumps\": " << rep.valley_jumps << ",\n";
  os << "  \"stall_restores\": " << rep.stall_restores << ",\n";
  os << "  \"warnings\": [";
  for (std::size_t i = 0; i < rep.warnings.size(); ++i) {
    if (i) os << ", ";
    os << json_quote(rep.warnings[i]);
  }
  os << "]";
}

}  // namespace

void write_trace_csv(std::ostream& os, const SolveReport& rep, std::size_t n, std::size_t m) {
  os << "iter";
  for (std::size_t i = 1; i <= n; ++i) os << ",x_" << i;
  for (std::size_t k = 1; k <= m; ++k) os << ",y_" << k;
  for (std::size_t k = 1; k <= m; ++k) os << ",g_" << k;
  for (std::size_t k = 1; k <= m; ++k) os << ",prod_" << k;
  os << ",L,inner_iters,inner_grad_norm\n";
  for (const auto& tp : rep.trace) {
    os << tp.iter;
    for (double v : tp.x) os << ',' << format17(v);
    for (double v : tp.y) os << ',' << format17(v);
    for (double v : tp.g_vals) os << ',' << format17(v);
    for (double v : tp.products) os << ',' << format17(v);
    os << ',' << format17(tp.L_value) << ',' << tp.inner_iters << ','
       << format17(tp.inner_grad_norm) << '\n';
  }
}

void write_report_json(std::ostream& os, const SolveReport& rep) {
  os << "{\n";
  write_report_body(os, rep);
  os << "\n}\n";
}

void write_lp_report_json(std::ostream& os, const LpSolveReport& rep) {
  os << "{\n";
  write_report_body(os, rep.report);
  os << ",\n  \"max_violation\": " << json_number(rep.max_violation);
  if (rep.oracle) {
    os << ",\n  \"oracle\": {\"status\": " << json_quote(std::string(to_string(rep.oracle->status)));
    if (rep.oracle->status == LpStatus::Optimal) {
      os << ", \"x\": " << json_array(rep.oracle->x_opt)
         << ", \"obj\": " << json_number(rep.oracle->obj);
    }
    os << "}";
  }
  os << "\n}\n";
}

void write_scan_csv(std::ostream& os, const ScanResult& scan) {
  const std::size_t n = scan.rows.empty() ? 1 : scan.rows.front().x.size();
  os << "y";
  if (n == 1) {
    os << ",x_of_y";
  } else {
    for (std::size_t i = 1; i <= n; ++i) os << ",x_of_y_" << i;
  }
  os << ",g_bar,G\n";
  for (const auto& r : scan.rows) {
    os << format17(r.y);
    for (double v : r.x) os << ',' << format17(v);
    os << ',' << format17(r.g_bar) << ',' << format17(r.G) << '\n';
  }
}

}  // namespace expmult
