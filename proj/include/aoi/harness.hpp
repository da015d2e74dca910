#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "aoi/sim.hpp"

namespace aoi {

struct CaseOutputs {
    bool analytic = true;
    bool simulated = true;
    bool bounds = true;
};

struct ExperimentCase {
    std::string name;
    SimConfig sim;  // sim.spec is the queue under study
    CaseOutputs outputs;
    double tolerance = 0.01;
    // When set, the trace is kept, checked, and written to
    // <prefix>_slots.csv and <prefix>_packets.csv.
    std::optional<std::string> trace_prefix;
};

struct ExperimentConfig {
    std::vector<ExperimentCase> cases;
    std::string output_path;
};

// Parses the JSON experiment format. Explicit cases come first, then each
// sweep block expanded in order. Throws ConfigError naming the offending
// field (or line/column for syntax errors).
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);

void override_seed(ExperimentConfig& cfg, std::uint64_t seed);

struct ResultRow {
    std::string case_name;
    std::string discipline;
    std::optional<double> lambda;
    std::string service_family;
    std::optional<double> service_mean;
    std::string vacation_family;
    std::optional<double> vacation_mean;
    std::optional<double> analytic_peak, analytic_avg;
    std::optional<double> bound_lb, bound_ub;
    std::optional<double> sim_peak, sim_peak_se, sim_avg, sim_avg_se;
    std::optional<double> rel_err_peak, rel_err_avg;
    std::string status = "ok";
    std::string message;
    std::vector<std::string> warnings;

    bool ok() const { return status == "ok"; }
};

using ResultTable = std::vector<ResultRow>;

// |sim - analytic| <= max(tolerance * analytic, 3 * stderr)
bool within_tolerance(double analytic, double simulated, double stderr_, double tolerance);

// Runs one case; domain errors become the row status instead of escaping.
ResultRow run_case(const ExperimentCase& c);

// Runs every case (in parallel when threads != 1) and returns rows in
// config order.
ResultTable run_experiments(const ExperimentConfig& cfg, unsigned threads = 0);

void emit_csv(const ResultTable& table, std::ostream& out);
// One metric per row: case_name, discipline, lambda, vacation_family,
// vacation_mean, metric, value, stderr.
void emit_long_csv(const ResultTable& table, std::ostream& out);
// Failures first, then passing cases, then warnings.
std::string emit_summary(const ResultTable& table);

// <stem>_long.csv next to a CSV path.
std::string long_csv_path(const std::string& csv_path);

}  // namespace aoi
