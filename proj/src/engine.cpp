#include "rbas/engine.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>
#include <stdexcept>

#include "rbas/text_io.hpp"

namespace rbas {

namespace {

Matrix rows_of(const Matrix& a, const IndexList& idx) {
    Matrix out(static_cast<Eigen::Index>(idx.size()), a.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(Eigen::Index(i)) = a.row(idx[i]);
    return out;
}

Matrix cols_of(const Matrix& a, const IndexList& idx) {
    Matrix out(a.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out.col(Eigen::Index(i)) = a.col(idx[i]);
    return out;
}

// Change of x for one step, given the current residual r = Ax - b.
Vector step_delta(const LinearSystem& sys, const Vector& x, const Vector& r, const Selector& sel) {
    const Matrix& a = sys.A();
    if (const auto* s = std::get_if<RowIndices>(&sel)) {
        Vector ri(static_cast<Eigen::Index>(s->idx.size()));
        for (std::size_t i = 0; i < s->idx.size(); ++i) ri(Eigen::Index(i)) = r(s->idx[i]);
        return pinv_apply(rows_of(a, s->idx), ri);
    }
    if (const auto* s = std::get_if<DenseRows>(&sel)) {
        return pinv_apply(s->w.transpose() * a, s->w.transpose() * r);
    }
    if (const auto* s = std::get_if<Streamed>(&sel)) {
        return pinv_apply(s->alpha.transpose(), s->alpha.transpose() * x - s->beta);
    }
    if (const auto* s = std::get_if<ColIndices>(&sel)) {
        const Vector dz = pinv_apply(cols_of(a, s->idx), r);
        Vector dx = Vector::Zero(x.size());
        for (std::size_t i = 0; i < s->idx.size(); ++i) dx(s->idx[i]) = dz(Eigen::Index(i));
        return dx;
    }
    const auto& w = std::get<DenseCols>(sel).w;
    return w * pinv_apply(a * w, r);
}

void check_side(const Selector& sel, Side side, const char* what) {
    if (side_of(sel) != side) throw std::invalid_argument(std::string(what) + ": selector addresses the wrong side");
}

}  // namespace

Vector row_step(const LinearSystem& sys, const Vector& x, const Selector& sel) {
    check_side(sel, Side::Row, "row_step");
    validate_selector(sel, sys.rows(), sys.cols());
    return x - step_delta(sys, x, sys.residual(x), sel);
}

Vector col_step(const LinearSystem& sys, const Vector& x, const Selector& sel) {
    check_side(sel, Side::Col, "col_step");
    validate_selector(sel, sys.rows(), sys.cols());
    return x - step_delta(sys, x, sys.residual(x), sel);
}

Vector apply_step(const LinearSystem& sys, const Vector& x, const Selector& sel) {
    return side_of(sel) == Side::Row ? row_step(sys, x, sel) : col_step(sys, x, sel);
}

Vector error_vector(const SolveTargets& targets, const Vector& x, const LinearSystem& sys) {
    if (targets.mode == Side::Row) {
        if (!sys.consistent()) throw std::domain_error("solution set empty");
        if (targets.projected_x0.size() != x.size()) throw std::invalid_argument("error_vector: targets do not match x");
        return x - targets.projected_x0;
    }
    if (targets.r_star.size() != sys.rows()) throw std::invalid_argument("error_vector: targets do not match system");
    return sys.residual(x) - targets.r_star;
}

OrthonormalBasis realized_basis(const LinearSystem& sys, const Selector& sel) {
    const Matrix& a = sys.A();
    if (const auto* s = std::get_if<RowIndices>(&sel)) return orthonormal_basis(rows_of(a, s->idx).transpose());
    if (const auto* s = std::get_if<DenseRows>(&sel)) return orthonormal_basis(a.transpose() * s->w);
    if (const auto* s = std::get_if<Streamed>(&sel)) return orthonormal_basis(s->alpha);
    if (const auto* s = std::get_if<ColIndices>(&sel)) return orthonormal_basis(cols_of(a, s->idx));
    return orthonormal_basis(a * std::get<DenseCols>(sel).w);
}

bool progress_flag(const Vector& before, const Vector& after) {
    return (after - before).norm() > 1e-12 * std::max(1.0, before.norm());
}

const char* to_string(StopReason reason) {
    switch (reason) {
    case StopReason::ErrorTol: return "error_tol";
    case StopReason::MaxIter: return "max_iter";
    case StopReason::MaxSeconds: return "max_seconds";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------

NuTracker::NuTracker(Eigen::Index dim, std::size_t horizon, double tol) : span_(dim, tol), horizon_(horizon) {}

void NuTracker::start(std::size_t j, const Vector& y_j) {
    span_.clear();
    y_j_ = y_j;
    j_ = j;
    steps_ = 0;
}

std::optional<std::size_t> NuTracker::feed(const OrthonormalBasis& realized, bool chi) {
    const std::size_t k = steps_++;
    if (chi)
        for (Eigen::Index c = 0; c < realized.size() && span_.dimension() < span_.ambient_dim(); ++c)
            span_.insert(realized.vectors().col(c));
    if (span_.contains(y_j_)) return k;
    return std::nullopt;
}

std::optional<std::size_t> track_nu(const Vector& y_j, const std::vector<OrthonormalBasis>& realized,
                                    const std::vector<bool>& chi, std::size_t horizon, double tol) {
    if (realized.size() != chi.size()) throw std::invalid_argument("track_nu: realized and chi differ in length");
    NuTracker t(y_j.size(), horizon, tol);
    t.start(0, y_j);
    for (std::size_t k = 0; k < horizon && k < chi.size(); ++k)
        if (const auto nu = t.feed(realized[k], chi[k])) return nu;
    return std::nullopt;
}

std::vector<TauPoint> tau_schedule(const LinearSystem& sys, const SolveHistory& history, std::size_t horizon) {
    const auto& ys = history.iterates;
    if (ys.size() != history.records.size() || history.selectors.size() + 1 != ys.size())
        throw std::invalid_argument("tau_schedule: history was recorded without iterates and selectors");
    std::vector<OrthonormalBasis> realized;
    std::vector<bool> chi;
    for (std::size_t k = 0; k < history.selectors.size(); ++k) {
        chi.push_back(history.records[k].chi);
        realized.push_back(chi.back() ? realized_basis(sys, history.selectors[k]) : OrthonormalBasis(ys[k].size()));
    }
    std::vector<TauPoint> out;
    std::size_t tau = 0;
    for (std::size_t j = 0;; ++j) {
        TauPoint p{j, tau, 0.0, false};
        const std::vector<OrthonormalBasis> rest(realized.begin() + std::ptrdiff_t(tau), realized.end());
        const std::vector<bool> rest_chi(chi.begin() + std::ptrdiff_t(tau), chi.end());
        const auto nu = track_nu(ys[tau], rest, rest_chi, horizon);
        if (!nu) {
            out.push_back(p);
            return out;
        }
        const std::size_t next = tau + *nu + 1;
        const double base = ys[tau].squaredNorm();
        p.ratio = base > 0.0 ? ys[next].squaredNorm() / base : 0.0;
        p.closed = true;
        out.push_back(p);
        tau = next;
    }
}

// ---------------------------------------------------------------------------

SolveHistory run(const LinearSystem& sys, Sampler& sampler, const Vector& x0,
                 const StopCriteria& stop, const RunOptions& options) {
    if (x0.size() != sys.cols()) throw std::invalid_argument("run: x0 has wrong length");
    require_finite(x0, "run x0");
    const Side mode = sampler.side();
    const SolveTargets targets = make_targets(sys, mode, x0);
    const auto t_start = std::chrono::steady_clock::now();

    SolveHistory h;
    h.mode = mode;
    Vector x = x0;
    Vector r = sys.residual(x);
    auto error_of = [&](const Vector& xv, const Vector& rv) -> Vector {
        return mode == Side::Row ? Vector(xv - targets.projected_x0) : Vector(rv - targets.r_star);
    };
    Vector y = error_of(x, r);

    const std::size_t horizon =
        options.nu_horizon ? options.nu_horizon : 50 * static_cast<std::size_t>(std::max<Eigen::Index>(1, sys.rank()));
    NuTracker nu(y.size(), horizon);
    bool tracking = true;
    nu.start(0, y);
    h.tau_points.push_back(TauPoint{0, 0, 0.0, false});
    double tau_base = y.squaredNorm();

    h.records.push_back(IterRecord{0, y.squaredNorm(), false, "", 0});
    if (options.keep_iterates) h.iterates.push_back(y);
    const double scale = sys.spectral_norm();

    for (std::size_t k = 0;; ++k) {
        if (h.records.back().error_sq <= stop.error_tol) {
            h.reason = StopReason::ErrorTol;
            break;
        }
        if (k >= stop.max_iter) {
            h.reason = StopReason::MaxIter;
            break;
        }
        if (stop.max_seconds > 0.0) {
            const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t_start;
            if (dt.count() >= stop.max_seconds) {
                h.reason = StopReason::MaxSeconds;
                break;
            }
        }

        const Selector sel = sampler.next(x, r);
        const Vector dx = step_delta(sys, x, r, sel);
        Vector x_new = x - dx;
        Vector r_new = r - sys.A() * dx;
        if (!x_new.allFinite() || !r_new.allFinite())
            throw NumericalError("non-finite iterate at step " + std::to_string(k));
        if (options.revalidate_every && (k + 1) % options.revalidate_every == 0) {
            const Vector fresh = sys.residual(x_new);
            const double denom = scale * x_new.norm() + sys.b().norm();
            h.residual_drift.push_back(denom > 0.0 ? (fresh - r_new).norm() / denom : 0.0);
            r_new = fresh;
        }
        const bool chi = mode == Side::Row ? progress_flag(x, x_new) : progress_flag(r, r_new);
        Vector y_new = error_of(x_new, r_new);

        IterRecord& cur = h.records.back();
        cur.chi = chi;
        cur.selector = describe(sel);
        const std::size_t changes =
            cur.selector_changes + (k > 0 && cur.selector != h.records[k - 1].selector ? 1 : 0);
        cur.selector_changes = changes;
        h.records.push_back(IterRecord{k + 1, y_new.squaredNorm(), false, "", changes});
        if (options.keep_iterates) h.iterates.push_back(y_new);
        if (options.keep_selectors) h.selectors.push_back(sel);

        if (tracking) {
            const OrthonormalBasis realized = chi ? realized_basis(sys, sel) : OrthonormalBasis(y.size());
            if (const auto found = nu.feed(realized, chi)) {
                h.nu_records.push_back(NuRecord{nu.start_index(), found});
                TauPoint& p = h.tau_points.back();
                p.ratio = tau_base > 0.0 ? y_new.squaredNorm() / tau_base : 0.0;
                p.closed = true;
                h.tau_points.push_back(TauPoint{p.j + 1, k + 1, 0.0, false});
                tau_base = y_new.squaredNorm();
                nu.start(k + 1, y_new);
            } else if (nu.exhausted()) {
                h.nu_records.push_back(NuRecord{nu.start_index(), std::nullopt});
                tracking = false;
            }
        }
        x = std::move(x_new);
        r = std::move(r_new);
    }
    h.x_final = x;
    return h;
}

// ---------------------------------------------------------------------------

std::string history_csv(const SolveHistory& h) {
    std::ostringstream out;
    out << "# rbas-history v1\n";
    out << "# mode=" << to_string(h.mode) << " reason=" << to_string(h.reason)
        << " iterations=" << h.iterations() << " final_error_sq=" << format_double(h.final_error_sq()) << '\n';
    out << "k,error_sq,chi,selector,selector_changes\n";
    for (const auto& rec : h.records) {
        out << rec.k << ',' << format_double(rec.error_sq) << ',' << (rec.chi ? 1 : 0) << ','
            << rec.selector << ',' << rec.selector_changes << '\n';
    }
    return out.str();
}

void write_history_csv(const std::filesystem::path& path, const SolveHistory& history) {
    write_file_atomic(path, history_csv(history));
}

}  // namespace rbas
