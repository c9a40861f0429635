#include "liftsched/lfr.hpp"
#include "liftsched/lifting.hpp"

#include <random>
#include <sstream>

namespace liftsched {

namespace {

const char* plant_row_name(Index r) {
    static const char* names[] = {"xdot", "zhat1", "zhat2", "z_p", "y"};
    return names[r];
}

const char* plant_col_name(Index c) {
    static const char* names[] = {"x", "what1", "what2", "w_p", "u"};
    return names[c];
}

const char* ctrl_row_name(Index r) {
    static const char* names[] = {"xc_dot", "zc1", "zc2", "u"};
    return names[r];
}

const char* ctrl_col_name(Index c) {
    static const char* names[] = {"xc", "wc1", "wc2", "y"};
    return names[c];
}

// Dense phase-one simplex (Bland's rule) for {lambda >= 0 : A lambda = b}.
std::optional<Vec> feasible_nonnegative(Mat A, Vec b) {
    const Index m = A.rows();
    const Index n = A.cols();
    for (Index i = 0; i < m; ++i) {
        if (b(i) < 0) {
            A.row(i) *= -1.0;
            b(i) = -b(i);
        }
    }
    // Tableau columns: n structural, m artificial, rhs.
    Mat T = Mat::Zero(m + 1, n + m + 1);
    T.topLeftCorner(m, n) = A;
    T.block(0, n, m, m).setIdentity();
    T.topRightCorner(m, 1) = b;
    std::vector<Index> basis(static_cast<size_t>(m));
    for (Index i = 0; i < m; ++i) basis[static_cast<size_t>(i)] = n + i;
    for (Index i = 0; i < m; ++i) T.row(m) -= T.row(i);
    for (Index j = n; j < n + m; ++j) T(m, j) = 0.0;

    const double tol = 1e-12;
    for (int iter = 0; iter < 10000; ++iter) {
        Index enter = -1;
        for (Index j = 0; j < n + m; ++j) {
            if (T(m, j) < -tol) {
                enter = j;
                break;
            }
        }
        if (enter < 0) break;
        Index leave = -1;
        double best = std::numeric_limits<double>::infinity();
        for (Index i = 0; i < m; ++i) {
            if (T(i, enter) > tol) {
                const double ratio = T(i, n + m) / T(i, enter);
                if (ratio < best - tol ||
                    (std::abs(ratio - best) <= tol && basis[static_cast<size_t>(i)] < basis[static_cast<size_t>(leave)])) {
                    best = ratio;
                    leave = i;
                }
            }
        }
        if (leave < 0) break;
        T.row(leave) /= T(leave, enter);
        for (Index i = 0; i <= m; ++i) {
            if (i != leave && T(i, enter) != 0.0) T.row(i) -= T(i, enter) * T.row(leave);
        }
        basis[static_cast<size_t>(leave)] = enter;
    }
    if (-T(m, n + m) > 1e-9 * (1.0 + b.lpNorm<Eigen::Infinity>())) return std::nullopt;
    Vec x = Vec::Zero(n);
    for (Index i = 0; i < m; ++i) {
        const Index j = basis[static_cast<size_t>(i)];
        if (j < n) x(j) = T(i, n + m);
    }
    return x;
}

}  // namespace

ValueSet ValueSet::scaled(double factor) const {
    ValueSet out = *this;
    for (auto& v : out.vertices) v *= factor;
    return out;
}

std::optional<Vec> hull_weights(const std::vector<Mat>& points, const Mat& target) {
    if (points.empty()) return std::nullopt;
    const Index d = target.size();
    const Index n = static_cast<Index>(points.size());
    Mat A(d + 1, n);
    for (Index j = 0; j < n; ++j) {
        const Mat& p = points[static_cast<size_t>(j)];
        if (p.rows() != target.rows() || p.cols() != target.cols()) throw DimensionError("hull_weights: shape mismatch");
        A.col(j).head(d) = p.reshaped();
        A(d, j) = 1.0;
    }
    Vec b(d + 1);
    b.head(d) = target.reshaped();
    b(d) = 1.0;
    return feasible_nonnegative(A, b);
}

ValueSetReport validate_value_set(const ValueSet& vs) {
    ValueSetReport r;
    if (vs.vertices.empty()) {
        r.shapes_ok = false;
        r.problems.push_back("value set has no vertices");
        return r;
    }
    for (size_t i = 0; i < vs.vertices.size(); ++i) {
        const Mat& v = vs.vertices[i];
        if (v.rows() != vs.u_hat || v.cols() != vs.v_hat) {
            r.shapes_ok = false;
            std::ostringstream os;
            os << "vertex " << i << " is " << v.rows() << "x" << v.cols() << ", expected " << vs.u_hat << "x"
               << vs.v_hat;
            r.problems.push_back(os.str());
        } else if (!v.allFinite()) {
            r.shapes_ok = false;
            r.problems.push_back("vertex " + std::to_string(i) + " has non-finite entries");
        }
    }
    if (!r.shapes_ok) return r;
    r.zero_in_hull = hull_weights(vs.vertices, Mat::Zero(vs.u_hat, vs.v_hat)).has_value();
    if (!r.zero_in_hull) r.problems.push_back("zero matrix is not in the convex hull of the vertices");
    return r;
}

std::vector<Mat> hull_samples(const ValueSet& vs, int count, std::uint64_t seed) {
    std::vector<Mat> out = vs.vertices;
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> expo(1.0);
    const size_t n = vs.vertices.size();
    for (int s = 0; s < count; ++s) {
        Vec w(static_cast<Index>(n));
        for (size_t i = 0; i < n; ++i) w(static_cast<Index>(i)) = expo(rng);
        w /= w.sum();
        Mat V = Mat::Zero(vs.u_hat, vs.v_hat);
        for (size_t i = 0; i < n; ++i) V += w(static_cast<Index>(i)) * vs.vertices[i];
        out.push_back(V);
    }
    return out;
}

StructuredPlantLfr StructuredPlantLfr::zeros(const PlantPartition& dims) {
    return {dims, Mat::Zero(dims.row_spec().total(), dims.col_spec().total())};
}

Mat StructuredPlantLfr::block(PlantRow r, PlantCol c) const {
    return block_of(M, dims.row_spec(), dims.col_spec(), static_cast<Index>(r), static_cast<Index>(c));
}

void StructuredPlantLfr::set(PlantRow r, PlantCol c, const Mat& value) {
    set_block(M, dims.row_spec(), dims.col_spec(), static_cast<Index>(r), static_cast<Index>(c), value);
}

PlantReport validate_plant(const StructuredPlantLfr& P) {
    PlantReport report;
    const PlantPartition& d = P.dims;
    for (Index s : {d.ns, d.u1, d.u2, d.v1, d.v2, d.q, d.p, d.m, d.k}) {
        if (s < 0) report.dimension_errors.push_back("negative partition size");
    }
    if (!report.dimension_errors.empty()) return report;
    if (P.M.rows() != d.row_spec().total() || P.M.cols() != d.col_spec().total()) {
        std::ostringstream os;
        os << "plant matrix is " << P.M.rows() << "x" << P.M.cols() << ", partition requires "
           << d.row_spec().total() << "x" << d.col_spec().total();
        report.dimension_errors.push_back(os.str());
        return report;
    }
    if (!P.M.allFinite()) report.dimension_errors.push_back("plant matrix has non-finite entries");
    using R = PlantRow;
    using C = PlantCol;
    const std::pair<R, C> zero_blocks[] = {{R::Z1, C::W2}, {R::Z1, C::Perf}, {R::Perf, C::W2},
                                           {R::Perf, C::Perf}, {R::Meas, C::Control}};
    for (auto [r, c] : zero_blocks) {
        const double v = max_abs(P.block(r, c));
        if (v != 0.0) {
            report.violations.push_back(
                {std::string("(") + plant_row_name(static_cast<Index>(r)) + "," + plant_col_name(static_cast<Index>(c)) +
                     ")",
                 v});
        }
    }
    return report;
}

bool feedthrough_compatible(const ValueSet& vs, const PlantPartition& dims) {
    for (const Mat& V : vs.vertices) {
        if (max_abs(V.block(0, dims.v1, dims.u1, dims.v2)) != 0.0) return false;
    }
    return true;
}

LfrPlant first_display(const StructuredPlantLfr& P) {
    const PlantPartition& d = P.dims;
    const BlockSpec rows{d.ns, d.v_hat(), d.p, d.k};
    const BlockSpec cols{d.ns, d.u_hat(), d.q, d.m};
    auto b = [&](Index i, Index j) { return block_of(P.M, rows, cols, i, j); };
    LfrPlant L;
    L.A11 = b(0, 0), L.A12 = b(0, 1), L.B1p = b(0, 2), L.B1 = b(0, 3);
    L.A21 = b(1, 0), L.A22 = b(1, 1), L.B2p = b(1, 2), L.B2 = b(1, 3);
    L.C1p = b(2, 0), L.C2p = b(2, 1), L.Dp = b(2, 2), L.D1 = b(2, 3);
    L.C1 = b(3, 0), L.C2 = b(3, 1), L.D2 = b(3, 2), L.D3 = b(3, 3);
    return L;
}

Mat SchedulingMap::evaluate(const Mat& V) const {
    return std::visit(
        [&](const auto& s) -> Mat {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, ConstantSchedule>) {
                return s.value;
            } else {
                return s.evaluate(V);
            }
        },
        impl_);
}

Index SchedulingMap::dim() const {
    return std::visit(
        [](const auto& s) -> Index {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, ConstantSchedule>) {
                return s.value.rows();
            } else {
                return s.V2.rows();
            }
        },
        impl_);
}

GainScheduledController GainScheduledController::zeros(const ControllerPartition& dims) {
    GainScheduledController K;
    K.dims = dims;
    K.M = Mat::Zero(dims.row_spec().total(), dims.col_spec().total());
    K.schedule = ConstantSchedule{Mat::Zero(dims.r_c(), dims.r_c())};
    return K;
}

Mat GainScheduledController::block(CtrlRow r, CtrlCol c) const {
    return block_of(M, dims.row_spec(), dims.col_spec(), static_cast<Index>(r), static_cast<Index>(c));
}

void GainScheduledController::set(CtrlRow r, CtrlCol c, const Mat& value) {
    set_block(M, dims.row_spec(), dims.col_spec(), static_cast<Index>(r), static_cast<Index>(c), value);
}

Mat GainScheduledController::Ac(Index i, Index j) const {
    const BlockSpec rows{dims.nc, dims.r_c(), dims.m};
    const BlockSpec cols{dims.nc, dims.r_c(), dims.k};
    return block_of(M, rows, cols, i - 1, j - 1);
}

Mat GainScheduledController::Bc(Index i) const {
    const BlockSpec rows{dims.nc, dims.r_c(), dims.m};
    const BlockSpec cols{dims.nc, dims.r_c(), dims.k};
    return block_of(M, rows, cols, i - 1, 2);
}

Mat GainScheduledController::Cc(Index j) const {
    const BlockSpec rows{dims.nc, dims.r_c(), dims.m};
    const BlockSpec cols{dims.nc, dims.r_c(), dims.k};
    return block_of(M, rows, cols, 2, j - 1);
}

std::vector<BlockViolation> controller_violations(const GainScheduledController& K) {
    std::vector<BlockViolation> out;
    using R = CtrlRow;
    using C = CtrlCol;
    const std::pair<R, C> zero_blocks[] = {{R::Z1, C::W2}, {R::Z1, C::Meas}, {R::Control, C::W2}, {R::Control, C::Meas}};
    for (auto [r, c] : zero_blocks) {
        const double v = max_abs(K.block(r, c));
        if (v != 0.0) {
            out.push_back({std::string("(") + ctrl_row_name(static_cast<Index>(r)) + "," +
                               ctrl_col_name(static_cast<Index>(c)) + ")",
                           v});
        }
    }
    return out;
}

Mat ClosedLoopLfr::schedule(const Mat& V) const {
    const Mat dc = controller_schedule.evaluate(V);
    const Mat plant_part = kind == ScheduleKind::Lifted ? delta_lift(V) : V;
    return block_diag({plant_part, dc});
}

ClosedLoopLfr interconnect(const LfrPlant& P, const GainScheduledController& K, ScheduleKind kind, Index u_hat,
                           Index v_hat) {
    const ControllerPartition& c = K.dims;
    if (P.m() != c.m || P.k() != c.k) {
        std::ostringstream os;
        os << "interconnect: plant control channel " << P.m() << "/" << P.k() << " vs controller " << c.m << "/" << c.k;
        throw DimensionError(os.str());
    }
    if (K.M.rows() != c.row_spec().total() || K.M.cols() != c.col_spec().total()) {
        throw DimensionError("interconnect: controller matrix does not match its partition");
    }
    if (max_abs(P.D3) != 0.0) throw DimensionError("interconnect: plant has u -> y feedthrough");
    const Mat Dc = K.block(CtrlRow::Control, CtrlCol::Meas);
    if (max_abs(Dc) != 0.0) throw DimensionError("interconnect: controller has y -> u feedthrough");

    const Mat Ac11 = K.Ac(1, 1), Ac12 = K.Ac(1, 2), Ac21 = K.Ac(2, 1), Ac22 = K.Ac(2, 2);
    const Mat Bc1 = K.Bc(1), Bc2 = K.Bc(2), Cc1 = K.Cc(1), Cc2 = K.Cc(2);
    const Index n = P.n(), nc = c.nc, w = P.w_dim(), z = P.z_dim(), rc = c.r_c();

    auto pair = [](const Mat& a, const Mat& b, const Mat& cc, const Mat& d, Index r0, Index r1, Index c0, Index c1) {
        Mat out(r0 + r1, c0 + c1);
        out << a, b, cc, d;
        return out;
    };
    ClosedLoopLfr CL;
    LfrBlocks& b = CL.blocks;
    b.A11 = pair(P.A11, P.B1 * Cc1, Bc1 * P.C1, Ac11, n, nc, n, nc);
    b.A12 = pair(P.A12, P.B1 * Cc2, Bc1 * P.C2, Ac12, n, nc, w, rc);
    b.A21 = pair(P.A21, P.B2 * Cc1, Bc2 * P.C1, Ac21, z, rc, n, nc);
    b.A22 = pair(P.A22, P.B2 * Cc2, Bc2 * P.C2, Ac22, z, rc, w, rc);
    b.B1 = Mat(n + nc, P.q());
    b.B1 << P.B1p, Bc1 * P.D2;
    b.B2 = Mat(z + rc, P.q());
    b.B2 << P.B2p, Bc2 * P.D2;
    b.C1 = Mat(P.p(), n + nc);
    b.C1 << P.C1p, P.D1 * Cc1;
    b.C2 = Mat(P.p(), w + rc);
    b.C2 << P.C2p, P.D1 * Cc2;
    b.D = P.Dp;
    CL.kind = kind;
    CL.u_hat = u_hat;
    CL.v_hat = v_hat;
    CL.controller_schedule = K.schedule;
    return CL;
}

ClosedLoopLfr close_loop_original(const StructuredPlantLfr& P, const GainScheduledController& K) {
    const PlantReport report = validate_plant(P);
    if (!report.dimension_errors.empty()) throw DimensionError("close_loop_original: " + report.dimension_errors.front());
    return interconnect(first_display(P), K, ScheduleKind::Extended, P.dims.u_hat(), P.dims.v_hat());
}

FrozenSystem freeze_with(const ClosedLoopLfr& CL, const Mat& delta) {
    const LfrBlocks& b = CL.blocks;
    if (delta.rows() != CL.w_dim() || delta.cols() != CL.z_dim()) {
        throw DimensionError("freeze: scheduling block has the wrong shape");
    }
    const Mat I = Mat::Identity(CL.w_dim(), CL.w_dim());
    const Mat loop = I - delta * b.A22;
    Eigen::FullPivLU<Mat> lu(loop);
    if (loop.size() > 0 && (!lu.isInvertible() || min_singular_value(loop) <= 1e-12 * (1.0 + loop.norm()))) {
        throw WellPosednessError("freeze: I - Delta*A22 is singular");
    }
    // w = (I - Delta A22)^{-1} Delta (A21 x + B2 w_p)
    const Mat G = loop.size() > 0 ? Mat(lu.solve(delta)) : Mat(Mat::Zero(CL.w_dim(), CL.z_dim()));
    FrozenSystem f;
    f.A = b.A11 + b.A12 * G * b.A21;
    f.B = b.B1 + b.A12 * G * b.B2;
    f.C = b.C1 + b.C2 * G * b.A21;
    f.D = b.D + b.C2 * G * b.B2;
    return f;
}

FrozenSystem freeze(const ClosedLoopLfr& CL, const Mat& V) { return freeze_with(CL, CL.schedule(V)); }

WellPosednessReport well_posed(const ClosedLoopLfr& CL, const std::vector<Mat>& samples, double tol) {
    WellPosednessReport r;
    const Mat I = Mat::Identity(CL.w_dim(), CL.w_dim());
    for (size_t s = 0; s < samples.size(); ++s) {
        const Mat loop = I - CL.schedule(samples[s]) * CL.blocks.A22;
        const double sigma = loop.size() == 0 ? 1.0 : min_singular_value(loop);
        if (sigma < r.min_sigma) {
            r.min_sigma = sigma;
            r.worst_sample = static_cast<Index>(s);
        }
    }
    r.ok = r.min_sigma > tol;
    return r;
}

}  // namespace liftsched
