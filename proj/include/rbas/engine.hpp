#pragma once

// The iteration loop and its diagnostics.
//
// Both solver families are written as y_{k+1} = (I - P_k) y_k, where
// y = x - P_H x0 for row-action methods and y = Ax - b - r* for
// column-action methods.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rbas/linalg.hpp"
#include "rbas/samplers.hpp"
#include "rbas/system.hpp"

namespace rbas {

/// x - A^T W (W^T A A^T W)^+ W^T (Ax - b). Also accepts Streamed selectors.
Vector row_step(const LinearSystem& sys, const Vector& x, const Selector& sel);
/// x - W (W^T A^T A W)^+ W^T A^T (Ax - b).
Vector col_step(const LinearSystem& sys, const Vector& x, const Selector& sel);
Vector apply_step(const LinearSystem& sys, const Vector& x, const Selector& sel);

/// Row mode: x - P_H x0. Col mode: Ax - b - r*.
Vector error_vector(const SolveTargets& targets, const Vector& x, const LinearSystem& sys);

/// Orthonormal basis of col(P_k) for the step taken with `sel`:
/// col(A^T W) in row mode, col(A W) in column mode.
OrthonormalBasis realized_basis(const LinearSystem& sys, const Selector& sel);

/// ||dx|| > 1e-12 max(1, ||x||) (dx is the change of x for row methods, of the
/// residual for column methods).
bool progress_flag(const Vector& before, const Vector& after);

struct StopCriteria {
    std::size_t max_iter = 1000;
    double error_tol = 0.0;       // stop once error_sq <= error_tol
    double max_seconds = 0.0;     // 0 disables the wall-clock limit
};

struct RunOptions {
    std::size_t revalidate_every = 1000;
    std::size_t nu_horizon = 0;  // 0 means 50 * rank(A)
    bool keep_iterates = false;  // store every y_k
    bool keep_selectors = false; // store every selector
};

struct IterRecord {
    std::size_t k = 0;
    double error_sq = 0.0;     // ||y_k||^2
    bool chi = false;          // progress of the step k -> k+1
    std::string selector;      // describe() of W_k
    std::size_t selector_changes = 0;
};

struct NuRecord {
    std::size_t j = 0;
    std::optional<std::size_t> nu;  // empty when the horizon was reached
};

struct TauPoint {
    std::size_t j = 0;
    std::size_t tau = 0;
    double ratio = 0.0;  // ||y_{tau_{j+1}}||^2 / ||y_{tau_j}||^2, valid when closed
    bool closed = false; // tau_{j+1} was reached
};

enum class StopReason { ErrorTol, MaxIter, MaxSeconds };
const char* to_string(StopReason reason);

struct SolveHistory {
    Side mode = Side::Row;
    std::vector<IterRecord> records;  // one per iterate y_0 .. y_K; the last has no step
    std::vector<NuRecord> nu_records;
    std::vector<TauPoint> tau_points;
    std::vector<Vector> iterates;     // y_k, when kept
    std::vector<Selector> selectors;  // W_k, when kept
    std::vector<double> residual_drift;  // max relative drift at each revalidation
    Vector x_final;
    StopReason reason = StopReason::MaxIter;

    std::size_t iterations() const { return records.empty() ? 0 : records.size() - 1; }
    double final_error_sq() const { return records.empty() ? 0.0 : records.back().error_sq; }
};

/// Runs the sampler from x0 until a stop criterion holds. Throws
/// std::invalid_argument when the sampler side does not match a usable mode
/// (row mode needs a consistent system).
SolveHistory run(const LinearSystem& sys, Sampler& sampler, const Vector& x0,
                 const StopCriteria& stop, const RunOptions& options = {});

/// Online stopping-time tracker for one window start j.
/// nu(j) = min{k : y_j in C_k}, C_k = sum of the realized spaces of the
/// productive steps j..j+k. Membership is tested directly: the weaker test
/// y_{j+k+1} in span{y_j..y_{j+k}} does not imply y_j in C_k (rows e1 and
/// (e1+e2)/sqrt2 visited 1,2,1 in R^3 from y_j = (1,1,10) pass it while
/// y_j is outside C_2), so it cannot certify a contraction.
class NuTracker {
public:
    NuTracker(Eigen::Index dim, std::size_t horizon, double tol = 1e-10);
    void start(std::size_t j, const Vector& y_j);
    /// Feed the realized space and chi_k of step k = j, j+1, ...; returns
    /// nu(j) once y_j is contained.
    std::optional<std::size_t> feed(const OrthonormalBasis& realized, bool chi);
    bool exhausted() const { return steps_ >= horizon_; }
    std::size_t start_index() const { return j_; }

private:
    SpanTracker span_;
    Vector y_j_;
    std::size_t horizon_;
    std::size_t j_ = 0;
    std::size_t steps_ = 0;
};

/// Offline nu for a window starting at y_j, given the realized spaces and
/// progress flags of the steps j, j+1, .... Empty when not detected within
/// `horizon` steps or before the data runs out.
std::optional<std::size_t> track_nu(const Vector& y_j, const std::vector<OrthonormalBasis>& realized,
                                    const std::vector<bool>& chi, std::size_t horizon, double tol = 1e-10);

/// tau_0 = 0, tau_{j+1} = tau_j + nu(tau_j) + 1 with observed ratios, computed
/// offline (requires keep_iterates and keep_selectors).
std::vector<TauPoint> tau_schedule(const LinearSystem& sys, const SolveHistory& history, std::size_t horizon);

/// CSV with header "# rbas-history v1" and columns
/// k,error_sq,chi,selector,selector_changes.
void write_history_csv(const std::filesystem::path& path, const SolveHistory& history);
std::string history_csv(const SolveHistory& history);

}  // namespace rbas
