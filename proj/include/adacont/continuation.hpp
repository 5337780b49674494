#pragma once

#include "adacont/errors.hpp"
#include "adacont/krylov.hpp"
#include "adacont/stepper.hpp"

#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace adacont {

struct BranchPoint {
    Vec state;
    double lambda = 0.0;
    double norm = 0.0;
    SolverStats stats;
    std::string mode = "seed";  // correction mode that produced the point
    double delta_lambda = 0.0;  // λ − λ of the previous point
};

/// Three most recent converged points, oldest first.
class PredictorHistory {
public:
    static constexpr std::size_t capacity = 3;

    PredictorHistory() = default;
    explicit PredictorHistory(std::vector<BranchPoint> points);

    void push(BranchPoint point);
    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }
    const BranchPoint& operator[](std::size_t i) const { return points_[i]; }
    const BranchPoint& last() const { return points_.back(); }
    const BranchPoint& previous() const { return points_[points_.size() - 2]; }

private:
    std::deque<BranchPoint> points_;
};

enum class ContinuationMode { FixedParameter, PseudoArclength };

enum class NormKind { Rms, Diagnostic };

struct ContinuationConfig {
    double delta_lambda_init = 0.1;
    double delta_lambda_max = 1.0;
    double growth_factor = 1.2;
    double shrink_factor = 0.9;
    int newton_target = 4;
    int newton_max = 10;
    double newton_tol = 1e-8;
    double krylov_tol = 1e-2;
    int krylov_cap = 5000;
    ContinuationMode mode = ContinuationMode::FixedParameter;
    double switch_constant = 10.0;
    /// Frozen component near folds; negative picks the largest recent change.
    long fixed_component_index = -1;
    double delta_s = 0.1;
    double delta_s_max = 0.0;  // 0 means delta_s
    int direction = 1;         // sign of the first Δλ
    NormKind norm = NormKind::Rms;
    int max_consecutive_failures = 20;

    void validate() const;
    KrylovConfig krylov() const;
};

struct FixedLambda {};
struct FixedComponent {
    std::size_t k = 0;
};
struct PseudoArclength {
    Vec tangent_u;
    double tangent_lambda = 0.0;
    double delta_s = 0.0;
};
using CorrectionMode = std::variant<FixedLambda, FixedComponent, PseudoArclength>;

std::string mode_name(const CorrectionMode& mode);

/// ‖u‖₂ / √n.
double rms_norm(std::span<const double> state);
double branch_norm(Problem& problem, std::span<const double> state, NormKind kind);

std::pair<Vec, double> predict(const PredictorHistory& history, double delta_lambda);
std::pair<Vec, double> predict_arclength(const PredictorHistory& history, double delta_s);

CorrectionMode mode_switch(const PredictorHistory& history, double switch_constant);
PseudoArclength approximate_tangent(const PredictorHistory& history);

BranchPoint correct_fixed_parameter(Problem& problem, const PreconditionerSpec& spec, std::span<const double> guess,
                                    double lambda, const ContinuationConfig& config);

BranchPoint correct_fixed_component(Problem& problem, const PreconditionerSpec& spec, std::span<const double> guess,
                                    double lambda_guess, std::size_t k, const ContinuationConfig& config);

BranchPoint correct_pseudo_arclength(Problem& problem, const PreconditionerSpec& spec, std::span<const double> guess,
                                     double lambda_guess, const PseudoArclength& tangent, const BranchPoint& anchor,
                                     double delta_s, const ContinuationConfig& config);

/// Arclength condition residual u̇·(u − u_a) + λ̇(λ − λ_a) − Δs.
double arclength_residual(const PseudoArclength& tangent, std::span<const double> u, double lambda,
                          const BranchPoint& anchor, double delta_s);

/// `converged_in` empty means the correction failed.
double adapt_step(double current_step, std::optional<int> converged_in, double step_max,
                  const ContinuationConfig& config);
inline double adapt_step(double current_step, std::optional<int> converged_in, const ContinuationConfig& config) {
    return adapt_step(current_step, converged_in, config.delta_lambda_max, config);
}

struct StopRule {
    std::optional<double> lambda_min;
    std::optional<double> lambda_max;
    int max_points = 100;  // new points beyond the seed
};

enum class TraceStatus { Completed, StepUnderflow, Failed };
const char* to_string(TraceStatus status);

struct TraceResult {
    std::vector<BranchPoint> points;  // seed first
    TraceStatus status = TraceStatus::Completed;
    std::string message;
    int failures = 0;  // rejected corrections along the way
};

/// Called after each converged point (the seed included) so callers can stream output.
using PointObserver = std::function<void(const BranchPoint&)>;

TraceResult trace_branch(Problem& problem, const PreconditionerSpec& spec, const BranchPoint& seed,
                         const ContinuationConfig& config, const StopRule& stop, const PointObserver& observer = {});

}  // namespace adacont
