#pragma once

// JSON encoding of models, designs and performance reports. Doubles are
// written in shortest round-trip form; non-finite values as "inf", "-inf"
// or "nan" strings, so every document decodes to the same bits.

#include <string>

#include "json.hpp"

#include "kanesat/control.hpp"
#include "kanesat/linearize.hpp"
#include "kanesat/simulate.hpp"

namespace kanesat {

using json = nlohmann::ordered_json;

inline constexpr const char* kToolName = "kanesat";
inline constexpr const char* kToolVersion = "1.0.0";

json number_to_json(double v);
double number_from_json(const json& j);
json matrix_to_json(const MatrixXd& m);
MatrixXd matrix_from_json(const json& j);
json complex_vector_to_json(const VectorXcd& v);
VectorXcd complex_vector_from_json(const json& j);
json complex_matrix_to_json(const MatrixXcd& m);
MatrixXcd complex_matrix_from_json(const json& j);

json to_json(const LinearModel& m);
json to_json(const GainDesign& d);
GainDesign design_from_json(const json& j);
json to_json(const PerfReport& r);
json to_json(const SweepSummary& s);

/// {"tool", "version", "config_hash"} header shared by every report.
json report_header(const std::string& config_hash);

/// Pretty-printed with a trailing newline.
std::string dump_report(const json& j);
void write_report(const std::string& path, const json& j);
json read_report(const std::string& path);

}  // namespace kanesat
