#pragma once

#include "adacont/continuation.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace adacont {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SeedConfig {
    std::string source = "builtin";  // builtin | snapshot | integrate
    std::string path;                // snapshot file
    Vec state;                       // toy only; empty means all ones
    double amplitude = 1.0;          // perturbation for the integrate recipe
    double delta_t = 2e-4;
    int steps = 5000;
    std::optional<double> newton_delta_t;  // uniform Δt for the seed correction; unset uses the run's
    int newton_max = 30;
    bool correct = true;
};

struct PreconditionerConfig {
    struct BlockOverride {
        std::optional<double> delta_t;
        std::optional<bool> follows_parameter;
    };
    std::optional<double> delta_t;  // every block
    std::map<std::string, BlockOverride> blocks;
};

struct OutputConfig {
    std::filesystem::path directory = "out";
    int snapshot_stride = 0;  // 0 writes only final.snap
};

struct SweepConfig {
    std::vector<double> delta_t;
    std::size_t tail_window = 50;
    std::string segment = "trace";  // trace | single_step
    double step = 1.0;              // Δλ of the single step
    int threads = 1;
    std::string block;  // empty sweeps every block, otherwise only the named one
};

struct RunConfig {
    nlohmann::json problem;  // validated per problem kind
    SeedConfig seed;
    ContinuationConfig continuation;
    PreconditionerConfig preconditioner;
    StopRule stop;
    OutputConfig output;
    SweepConfig sweep;
};

/// Throws ConfigError on unknown keys, wrong types or bad values.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// `a.b.c=value`; the value is read as JSON when it parses, else as a string.
void apply_override(nlohmann::json& j, std::string_view assignment);

std::unique_ptr<Problem> make_problem(const RunConfig& config);
PreconditionerSpec make_preconditioner(const RunConfig& config, const Problem& problem);

struct RunSetup {
    std::unique_ptr<Problem> problem;
    PreconditionerSpec spec;
};
RunSetup make_run(const RunConfig& config);

/// Initial state from the seed recipe, corrected by Newton unless disabled.
BranchPoint make_seed(const RunConfig& config, Problem& problem, const PreconditionerSpec& spec);

/// Writes branch.csv rows, flushing after each one.
class BranchCsv {
public:
    explicit BranchCsv(const std::filesystem::path& path);
    void write(std::size_t index, const BranchPoint& point, const std::string& status);

private:
    std::unique_ptr<std::ofstream> out_;
};

struct RunSummary {
    TraceStatus status = TraceStatus::Completed;
    std::string message;
    std::size_t points = 0;  // rows written, seed included
    int failures = 0;
};

RunSummary run(const RunConfig& config);

struct TailStats {
    std::size_t count = 0;
    double mean = 0.0, std = 0.0;
    long min = 0, max = 0;
    long total = 0;  // over every point, not just the tail
};
TailStats tail_statistics(const std::vector<long>& eta, std::size_t window);

struct SweepRow {
    double delta_t = 0.0;
    std::string status;  // converged | failed
    std::size_t points_completed = 0;
    double eta_mean = 0.0, eta_std = 0.0;
    long eta_min = 0, eta_max = 0, eta_total = 0;
    std::string message;
};

/// One trace (or single step) per Δt from a shared seed. Per-entry branch
/// files go to <output>/sweep/entry_<i>/, the summary to <output>/sweep.csv.
std::vector<SweepRow> sweep(const RunConfig& config, const std::vector<double>& delta_t);

}  // namespace adacont
