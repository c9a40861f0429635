#include "support/instances.hpp"

#include <Eigen/QR>

namespace liftsched::testing {

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Mat random_mat(Rng& rng, Index rows, Index cols, double scale) {
    std::normal_distribution<double> nd(0.0, scale);
    Mat m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) m(i, j) = nd(rng);
    }
    return m;
}

SymMat random_sym(Rng& rng, Index n, double scale) { return SymMat(random_mat(rng, n, n, scale)); }

Mat random_orthogonal(Rng& rng, Index n) {
    Eigen::HouseholderQR<Mat> qr(random_mat(rng, n, n));
    return qr.householderQ() * Mat::Identity(n, n);
}

PlantPartition random_partition(Rng& rng, Index max_ns, Index max_ch) {
    auto pick = [&](Index lo, Index hi) { return std::uniform_int_distribution<Index>(lo, hi)(rng); };
    PlantPartition d;
    d.ns = pick(1, max_ns);
    d.u1 = pick(1, max_ch);
    d.u2 = pick(0, max_ch - d.u1);
    d.v1 = pick(1, max_ch);
    d.v2 = pick(0, max_ch - d.v1);
    d.m = pick(1, 2);
    d.k = pick(1, 2);
    d.p = pick(d.m, 2);
    d.q = pick(d.k, 2);
    return d;
}

StructuredPlantLfr random_plant(Rng& rng, const PlantPartition& dims, double scale, bool stable) {
    StructuredPlantLfr P = StructuredPlantLfr::zeros(dims);
    const BlockSpec rs = dims.row_spec(), cs = dims.col_spec();
    for (Index r = 0; r < rs.count(); ++r) {
        for (Index c = 0; c < cs.count(); ++c) {
            const auto row = static_cast<PlantRow>(r);
            const auto col = static_cast<PlantCol>(c);
            const bool zero = (row == PlantRow::Z1 && (col == PlantCol::W2 || col == PlantCol::Perf)) ||
                              (row == PlantRow::Perf && (col == PlantCol::W2 || col == PlantCol::Perf)) ||
                              (row == PlantRow::Meas && col == PlantCol::Control);
            if (zero) continue;
            P.set(row, col, random_mat(rng, rs.size(r), cs.size(c), scale));
        }
    }
    if (stable) {
        Mat A = P.block(PlantRow::State, PlantCol::State);
        const double shift = std::max(0.0, spectral_abscissa(A)) + uniform(rng, 0.5, 1.5);
        A -= shift * Mat::Identity(dims.ns, dims.ns);
        P.set(PlantRow::State, PlantCol::State, A);
    }
    return P;
}

ValueSet random_value_set(Rng& rng, const PlantPartition& dims, int pairs, double radius) {
    ValueSet vs;
    vs.u_hat = dims.u_hat();
    vs.v_hat = dims.v_hat();
    for (int i = 0; i < pairs; ++i) {
        Mat V = random_mat(rng, vs.u_hat, vs.v_hat);
        V.block(0, dims.v1, dims.u1, dims.v2).setZero();
        const double s = V.norm() > 0 ? radius / V.operatorNorm() : 0.0;
        V *= s;
        vs.vertices.push_back(V);
        vs.vertices.push_back(-V);
    }
    return vs;
}

StructuredPlantLfr desk1_plant() {
    PlantPartition d;
    d.ns = 2;
    d.u1 = 1;
    d.v1 = 1;
    d.p = d.q = d.m = d.k = 1;
    StructuredPlantLfr P = StructuredPlantLfr::zeros(d);
    P.set(PlantRow::State, PlantCol::State, (Mat(2, 2) << 0, 1, 1, -1).finished());
    P.set(PlantRow::State, PlantCol::W1, (Mat(2, 1) << 0, 1).finished());
    P.set(PlantRow::State, PlantCol::Perf, (Mat(2, 1) << 1, 0).finished());
    P.set(PlantRow::State, PlantCol::Control, (Mat(2, 1) << 0, 1).finished());
    P.set(PlantRow::Z1, PlantCol::State, (Mat(1, 2) << 1, 0).finished());
    P.set(PlantRow::Perf, PlantCol::State, (Mat(1, 2) << 1, 0).finished());
    P.set(PlantRow::Perf, PlantCol::Control, Mat::Constant(1, 1, -0.1));
    P.set(PlantRow::Meas, PlantCol::State, (Mat(1, 2) << 1, 0).finished());
    P.set(PlantRow::Meas, PlantCol::Perf, Mat::Constant(1, 1, -0.1));
    return P;
}

ValueSet desk1_values() {
    ValueSet vs;
    vs.u_hat = 1;
    vs.v_hat = 1;
    vs.vertices = {Mat::Constant(1, 1, -0.5), Mat::Constant(1, 1, 0.5)};
    return vs;
}

DeskInstance random_desk_instance(Rng& rng) {
    PlantPartition d;
    auto pick = [&](Index lo, Index hi) { return std::uniform_int_distribution<Index>(lo, hi)(rng); };
    d.ns = pick(1, 3);
    d.u1 = 1;
    d.v1 = 1;
    d.u2 = pick(0, 1);
    d.v2 = pick(0, 1);
    d.m = 1;
    d.k = 1;
    d.p = 2;
    d.q = 2;
    StructuredPlantLfr P = random_plant(rng, d, 1.0, true);
    // Regular performance and measurement channels: penalized control, noisy measurement.
    Mat D1 = P.block(PlantRow::Perf, PlantCol::Control);
    D1(1, 0) = D1(1, 0) >= 0 ? 0.3 + D1(1, 0) : D1(1, 0) - 0.3;
    P.set(PlantRow::Perf, PlantCol::Control, D1);
    Mat D2 = P.block(PlantRow::Meas, PlantCol::Perf);
    D2(0, 1) = D2(0, 1) >= 0 ? 0.3 + D2(0, 1) : D2(0, 1) - 0.3;
    P.set(PlantRow::Meas, PlantCol::Perf, D2);
    // Keep the uncertainty loop comfortably well posed.
    P.set(PlantRow::Z1, PlantCol::W1, 0.3 * P.block(PlantRow::Z1, PlantCol::W1));
    P.set(PlantRow::Z2, PlantCol::W1, 0.3 * P.block(PlantRow::Z2, PlantCol::W1));
    P.set(PlantRow::Z2, PlantCol::W2, 0.3 * P.block(PlantRow::Z2, PlantCol::W2));
    return {P, random_value_set(rng, d, 1, uniform(rng, 0.2, 0.5))};
}

DeskInstance mask_family(double a) {
    PlantPartition d;
    d.ns = 2;
    d.u1 = 1;
    d.v1 = 1;
    d.q = d.p = 2;
    d.m = d.k = 1;
    StructuredPlantLfr P = StructuredPlantLfr::zeros(d);
    // x1 is an uncontrollable mode driven by the uncertainty and a disturbance; x2 is steered by u and measured in noise.
    P.set(PlantRow::State, PlantCol::State, (Mat(2, 2) << -1, 0, 1, -1).finished());
    P.set(PlantRow::State, PlantCol::W1, (Mat(2, 1) << a, 0).finished());
    P.set(PlantRow::State, PlantCol::Perf, (Mat(2, 2) << 1, 0, 0, 0).finished());
    P.set(PlantRow::State, PlantCol::Control, (Mat(2, 1) << 0, 1).finished());
    P.set(PlantRow::Z1, PlantCol::State, (Mat(1, 2) << 1, 0).finished());
    P.set(PlantRow::Perf, PlantCol::State, (Mat(2, 2) << 0, 1, 0, 0).finished());
    P.set(PlantRow::Perf, PlantCol::Control, (Mat(2, 1) << 0, 1).finished());
    P.set(PlantRow::Meas, PlantCol::State, (Mat(1, 2) << 0, 1).finished());
    P.set(PlantRow::Meas, PlantCol::Perf, (Mat(1, 2) << 0, 1).finished());
    ValueSet vs;
    vs.u_hat = 1;
    vs.v_hat = 1;
    vs.vertices = {Mat::Constant(1, 1, -1.0), Mat::Constant(1, 1, 0.2)};
    return {P, vs};
}

StructuredPlantLfr without_uncertainty(const StructuredPlantLfr& P) {
    StructuredPlantLfr out = P;
    const BlockSpec rs = P.dims.row_spec(), cs = P.dims.col_spec();
    for (Index r = 0; r < rs.count(); ++r) {
        for (Index c = 0; c < cs.count(); ++c) {
            const auto row = static_cast<PlantRow>(r);
            const auto col = static_cast<PlantCol>(c);
            const bool channel = row == PlantRow::Z1 || row == PlantRow::Z2 || col == PlantCol::W1 || col == PlantCol::W2;
            if (channel) out.set(row, col, Mat::Zero(rs.size(r), cs.size(c)));
        }
    }
    return out;
}

LmiInstance random_feasible_lmi(Rng& rng, int vars, int blocks, int max_dim, bool with_objective) {
    LmiInstance inst;
    LmiProblem& p = inst.problem;
    std::vector<Index> ids;
    for (int k = 0; k < vars; ++k) ids.push_back(p.add_scalar_variable("x" + std::to_string(k)));
    inst.feasible_point = random_mat(rng, vars, 1).col(0);
    Vec c = Vec::Zero(vars);
    for (int b = 0; b < blocks; ++b) {
        const Index n = std::uniform_int_distribution<Index>(1, max_dim)(rng);
        AffineMat F(n, n);
        Mat at_star = Mat::Zero(n, n);
        for (int k = 0; k < vars; ++k) {
            const Mat Fk = random_sym(rng, n).mat();
            F.add_term(ids[static_cast<size_t>(k)], Fk);
            at_star += inst.feasible_point(k) * Fk;
        }
        const Mat R = random_mat(rng, n, n);
        const Mat slack = R * R.transpose() + uniform(rng, 0.1, 1.0) * Mat::Identity(n, n);
        F += AffineMat(Mat(-at_star - slack));
        const Mat Wr = random_mat(rng, n, n);
        const Mat W = Wr * Wr.transpose() + 0.1 * Mat::Identity(n, n);
        for (const auto& [k, Fk] : F.terms()) c(k) -= (W.array() * Fk.array()).sum();
        p.add_constraint("block" + std::to_string(b), F);
    }
    if (with_objective) {
        for (int k = 0; k < vars; ++k) p.set_objective(ids[static_cast<size_t>(k)], c(k));
    }
    return inst;
}

}  // namespace liftsched::testing
