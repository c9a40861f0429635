#include "liftsched/scalings.hpp"

#include <sstream>

namespace liftsched {

namespace {

void require_dim(const SymMat& P, Index expected, const char* who) {
    if (P.dim() != expected) {
        std::ostringstream os;
        os << who << ": scaling has dimension " << P.dim() << ", expected " << expected;
        throw DimensionError(os.str());
    }
}

Mat stack(const Mat& top, const Mat& bottom) {
    Mat out(top.rows() + bottom.rows(), top.cols());
    out << top, bottom;
    return out;
}

template <typename Eval>
void vertex_and_samples(MarginReport& r, const ValueSet& vs, const SamplingOptions& opts, const std::string& label,
                        Eval eval) {
    for (size_t i = 0; i < vs.vertices.size(); ++i) {
        r.add(label + "@vertex" + std::to_string(i), eval(vs.vertices[i]));
    }
    if (opts.samples <= 0) return;
    const std::vector<Mat> pts = hull_samples(vs, opts.samples, opts.seed);
    double worst = std::numeric_limits<double>::infinity();
    for (size_t s = vs.vertices.size(); s < pts.size(); ++s) worst = std::min(worst, eval(pts[s]));
    r.add(label + "@samples", worst, true);
}

}  // namespace

void MarginReport::add(const std::string& label, double value, bool sampled) {
    labels.push_back(label);
    conditions.push_back(value);
    margin = std::min(margin, value);
    if (sampled) {
        sampled_margin = std::min(sampled_margin, value);
    } else {
        vertex_margin = std::min(vertex_margin, value);
    }
}

SymMat VertexBlock::value(const SymMat& P) const { return SymMat(sign * outer.transpose() * P.mat() * outer); }

std::vector<VertexBlock> vertex_constraints_primal(const ValueSet& vs) {
    const Index u = vs.u_hat, v = vs.v_hat;
    std::vector<VertexBlock> out;
    out.push_back({"primal:(1,1)", stack(Mat::Identity(u, u), Mat::Zero(v, u)), -1.0});
    for (size_t i = 0; i < vs.vertices.size(); ++i) {
        out.push_back({"primal:vertex" + std::to_string(i), stack(vs.vertices[i], Mat::Identity(v, v)), 1.0});
    }
    return out;
}

std::vector<VertexBlock> vertex_constraints_dual(const ValueSet& vs) {
    const Index u = vs.u_hat, v = vs.v_hat;
    std::vector<VertexBlock> out;
    out.push_back({"dual:(2,2)", stack(Mat::Zero(u, v), Mat::Identity(v, v)), 1.0});
    for (size_t i = 0; i < vs.vertices.size(); ++i) {
        out.push_back(
            {"dual:vertex" + std::to_string(i), stack(Mat::Identity(u, u), -vs.vertices[i].transpose()), -1.0});
    }
    return out;
}

MarginReport check_primal(const SymMat& P, const ValueSet& vs) {
    require_dim(P, vs.u_hat + vs.v_hat, "check_primal");
    MarginReport r;
    for (const auto& b : vertex_constraints_primal(vs)) r.add(b.label, min_eig(b.value(P)));
    return r;
}

MarginReport check_dual(const SymMat& Pt, const ValueSet& vs) {
    require_dim(Pt, vs.u_hat + vs.v_hat, "check_dual");
    MarginReport r;
    for (const auto& b : vertex_constraints_dual(vs)) r.add(b.label, min_eig(b.value(Pt)));
    return r;
}

MarginReport check_primal_lifted(const SymMat& P, const ValueSet& vs) {
    require_dim(P, vs.u_hat + vs.v_hat, "check_primal_lifted");
    MarginReport r;
    for (size_t i = 0; i < vs.vertices.size(); ++i) {
        r.add("He[P*Dl]@vertex" + std::to_string(i), min_eig(he(P.mat() * delta_lift(vs.vertices[i]))));
    }
    return r;
}

MarginReport check_dual_lifted(const SymMat& Pt, const ValueSet& vs) {
    require_dim(Pt, vs.u_hat + vs.v_hat, "check_dual_lifted");
    MarginReport r;
    for (size_t i = 0; i < vs.vertices.size(); ++i) {
        r.add("He[Pt*Dl^T]@vertex" + std::to_string(i),
              min_eig(he(Pt.mat() * delta_lift(vs.vertices[i]).transpose())));
    }
    return r;
}

MarginReport check_passive(const SymMat& P, const SchedulingMap& dc, const ValueSet& vs, const SamplingOptions& opts) {
    require_dim(P, vs.u_hat + vs.v_hat + dc.dim(), "check_passive");
    MarginReport r;
    vertex_and_samples(r, vs, opts, "He[P*Dlc]", [&](const Mat& V) {
        return min_eig(he(P.mat() * block_diag({delta_lift(V), dc.evaluate(V)})));
    });
    return r;
}

MarginReport check_hat(const FullBlockScalingHat& P, const SchedulingMap& dc, const ValueSet& vs,
                       const SamplingOptions& opts) {
    const Index rc = P.r_c;
    require_dim(P.P, vs.u_hat + vs.v_hat + 2 * rc, "check_hat");
    if (dc.dim() != rc) throw DimensionError("check_hat: scheduling map size differs from the scaling partition");
    MarginReport r;
    vertex_and_samples(r, vs, opts, "hat", [&](const Mat& V) {
        const Mat dex = block_diag({V, dc.evaluate(V)});
        const Mat outer = stack(dex, Mat::Identity(dex.cols(), dex.cols()));
        return min_eig(SymMat(outer.transpose() * P.P.mat() * outer));
    });
    return r;
}

MarginReport check_hat_F(const FullBlockScalingHat& P, const SchedulingMap& dc, const ValueSet& vs,
                         const SamplingOptions& opts) {
    MarginReport r = check_hat(P, dc, vs, opts);
    const Index a = vs.u_hat + P.r_c;
    const Index b = vs.v_hat + P.r_c;
    r.add("hatF:(1,1)", min_eig(SymMat(-P.P.mat().topLeftCorner(a, a))));
    r.add("hatF:(2,2)", min_eig(SymMat(P.P.mat().bottomRightCorner(b, b))));
    return r;
}

MarginReport check_lifted_controller_passivity(const SymMat& P, const SchedulingMap& dc, const ValueSet& vs,
                                               const SamplingOptions& opts) {
    require_dim(P, vs.u_hat + vs.v_hat + 2 * dc.dim(), "check_lifted_controller_passivity");
    MarginReport r;
    vertex_and_samples(r, vs, opts, "He[P*diag(Dl,Dl(Dc))]", [&](const Mat& V) {
        return min_eig(he(P.mat() * block_diag({delta_lift(V), delta_lift(dc.evaluate(V))})));
    });
    return r;
}

ScalingMask ScalingMask::none(Index r_s) {
    const BoolMat z = BoolMat::Constant(r_s, r_s, false);
    return {z, z, z};
}

ScalingMask ScalingMask::block_diagonal(Index u_hat, Index v_hat) {
    BoolMat m = BoolMat::Constant(u_hat + v_hat, u_hat + v_hat, false);
    m.block(0, u_hat, u_hat, v_hat).setConstant(true);
    m.block(u_hat, 0, v_hat, u_hat).setConstant(true);
    return {m, m, m};
}

ScalingMask ScalingMask::diagonal(Index r_s) {
    BoolMat m = BoolMat::Constant(r_s, r_s, true);
    for (Index i = 0; i < r_s; ++i) m(i, i) = false;
    return {m, m, m};
}

std::string mask_problem(const ScalingMask& mask, Index r_s) {
    const std::pair<const char*, const BoolMat*> parts[] = {{"Q2", &mask.Q2}, {"Q3", &mask.Q3}, {"Qt1", &mask.Qt1}};
    for (auto [name, m] : parts) {
        if (m->rows() != r_s || m->cols() != r_s) {
            std::ostringstream os;
            os << "mask " << name << " is " << m->rows() << "x" << m->cols() << ", expected " << r_s << "x" << r_s;
            return os.str();
        }
        if ((*m != m->transpose()).any()) return std::string("mask ") + name + " is not symmetric";
    }
    return {};
}

}  // namespace liftsched
