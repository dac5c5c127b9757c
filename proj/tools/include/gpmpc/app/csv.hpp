#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gpmpc/harness.hpp"

namespace gpmpc::app {

/// Column names, one per StepRecord field (x_hat expands to x_hat_1..x_hat_12).
std::vector<std::string> csv_header();

/// Header row plus one row per record; 17 significant digits, LF endings.
void write_csv(std::ostream& out, const std::vector<harness::StepRecord>& records);
void write_csv_file(const std::string& path, const std::vector<harness::StepRecord>& records);

/// Inverse of write_csv. Throws Error on malformed input.
std::vector<harness::StepRecord> read_csv(std::istream& in);
std::vector<harness::StepRecord> read_csv_file(const std::string& path);

}  // namespace gpmpc::app
