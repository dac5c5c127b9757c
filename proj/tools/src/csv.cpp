#include "gpmpc/app/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "gpmpc/error.hpp"

namespace gpmpc::app {

namespace {

constexpr std::size_t kFixedBefore = 10;  // t .. prediction_variance
constexpr std::size_t kColumns = kFixedBefore + kStates + 4;

std::string number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_number(const std::string& s, std::size_t line, const std::string& column) {
  if (s == "nan" || s == "NaN") return std::nan("");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw Error("csv line " + std::to_string(line) + ", column " + column + ": bad number '" +
                s + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::vector<std::string> csv_header() {
  std::vector<std::string> h = {"t",          "bg_true",         "bg_meas",
                                "u_applied",  "k_is_true",       "u_kis_true",
                                "u_kis_raw",  "u_kis_filtered",  "u_kis_predicted",
                                "prediction_variance"};
  for (int i = 1; i <= kStates; ++i) h.push_back("x_hat_" + std::to_string(i));
  h.insert(h.end(), {"qp_status", "kkt_residual", "active_set", "gp_active"});
  return h;
}

void write_csv(std::ostream& out, const std::vector<harness::StepRecord>& records) {
  const auto header = csv_header();
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& r : records) {
    out << number(r.t) << ',' << number(r.bg_true) << ',' << number(r.bg_meas) << ','
        << number(r.u_applied) << ',' << number(r.k_is_true) << ',' << number(r.u_kis_true) << ','
        << number(r.u_kis_raw) << ',' << number(r.u_kis_filtered) << ','
        << number(r.u_kis_predicted) << ',' << number(r.prediction_variance);
    for (double x : r.x_hat) out << ',' << number(x);
    out << ',' << qp::to_string(r.qp_status) << ',' << number(r.kkt_residual) << ','
        << r.active_set << ',' << (r.gp_active ? 1 : 0) << '\n';
  }
}

void write_csv_file(const std::string& path, const std::vector<harness::StepRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  write_csv(out, records);
  if (!out) throw Error("write failed for '" + path + "'");
}

std::vector<harness::StepRecord> read_csv(std::istream& in) {
  const auto header = csv_header();
  std::string line;
  if (!std::getline(in, line)) throw Error("csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (split(line) != header) throw Error("csv: unexpected header");

  std::vector<harness::StepRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != kColumns) {
      throw Error("csv line " + std::to_string(line_no) + ": expected " +
                  std::to_string(kColumns) + " columns, got " + std::to_string(cells.size()));
    }
    auto num = [&](std::size_t i) { return parse_number(cells[i], line_no, header[i]); };
    harness::StepRecord r;
    r.t = num(0);
    r.bg_true = num(1);
    r.bg_meas = num(2);
    r.u_applied = num(3);
    r.k_is_true = num(4);
    r.u_kis_true = num(5);
    r.u_kis_raw = num(6);
    r.u_kis_filtered = num(7);
    r.u_kis_predicted = num(8);
    r.prediction_variance = num(9);
    for (std::size_t i = 0; i < static_cast<std::size_t>(kStates); ++i) {
      r.x_hat[i] = num(kFixedBefore + i);
    }
    const std::size_t tail = kFixedBefore + kStates;
    const std::string& status = cells[tail];
    if (status == qp::to_string(qp::QpStatus::kOptimal)) {
      r.qp_status = qp::QpStatus::kOptimal;
    } else if (status == qp::to_string(qp::QpStatus::kTerminalSoftened)) {
      r.qp_status = qp::QpStatus::kTerminalSoftened;
    } else {
      throw Error("csv line " + std::to_string(line_no) + ": unknown qp_status '" + status + "'");
    }
    r.kkt_residual = num(tail + 1);
    r.active_set = static_cast<int>(num(tail + 2));
    r.gp_active = num(tail + 3) != 0.0;
    records.push_back(r);
  }
  return records;
}

std::vector<harness::StepRecord> read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_csv(in);
}

}  // namespace gpmpc::app
