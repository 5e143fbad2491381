#include "scanvol/registration.hpp"

#include <algorithm>
#include <cmath>

#include "scanvol/error.hpp"
#include "scanvol/kdtree.hpp"

namespace scanvol {

RigidMotion solve_rigid_procrustes(const std::vector<Vec3>& x0, const std::vector<Vec3>& x1) {
    if (x0.size() != x1.size()) throw Error(errc::arity, "procrustes: size mismatch");
    const size_t n = x0.size();
    if (n < 3) throw Error(errc::arity, "procrustes: need at least 3 point pairs");

    Vec3 c0 = Vec3::Zero(), c1 = Vec3::Zero();
    for (size_t k = 0; k < n; ++k) {
        c0 += x0[k];
        c1 += x1[k];
    }
    c0 /= static_cast<double>(n);
    c1 /= static_cast<double>(n);

    Mat3 h = Mat3::Zero();
    for (size_t k = 0; k < n; ++k) h += (x0[k] - c0) * (x1[k] - c1).transpose();

    Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec3& sv = svd.singularValues();
    // A collinear point set leaves rotation about the line unconstrained.
    if (sv(1) <= 1e-9 * sv(0) || sv(0) <= 0.0)
        throw Error(errc::rank_deficient, "procrustes: rank-deficient configuration");

    Mat3 u = svd.matrixU(), v = svd.matrixV();
    Vec3 diag(1.0, 1.0, (u * v.transpose()).determinant());
    RigidMotion g;
    g.R = u * diag.asDiagonal() * v.transpose();
    g.t = c0 - g.R * c1;
    return g;
}

RansacResult ransac_align(const std::vector<Correspondence>& corrs, const RansacOptions& opt) {
    const size_t n = corrs.size();
    if (n < 3) throw Error(errc::alignment_failure, "ransac: fewer than 3 correspondences");

    Rng rng(hash_combine(opt.seed, 0x72616e73ull));
    const double thresh2 = opt.inlier_threshold * opt.inlier_threshold;

    long best_count = -1;
    double best_residual = 0.0;
    int best_iteration = -1;
    RigidMotion best_motion;

    std::vector<Vec3> s0(3), s1(3);
    for (int iter = 0; iter < opt.iterations; ++iter) {
        size_t i0 = rng.next_below(n), i1, i2;
        do {
            i1 = rng.next_below(n);
        } while (i1 == i0);
        do {
            i2 = rng.next_below(n);
        } while (i2 == i0 || i2 == i1);

        s0[0] = corrs[i0].x0, s1[0] = corrs[i0].x1;
        s0[1] = corrs[i1].x0, s1[1] = corrs[i1].x1;
        s0[2] = corrs[i2].x0, s1[2] = corrs[i2].x1;

        RigidMotion g;
        try {
            g = solve_rigid_procrustes(s0, s1);
        } catch (const Error&) {
            continue;  // degenerate triple
        }

        long count = 0;
        double residual = 0.0;
        for (const Correspondence& c : corrs) {
            double d2 = (c.x0 - g.apply(c.x1)).squaredNorm();
            if (d2 <= thresh2) {
                ++count;
                residual += d2;
            }
        }
        if (count > best_count || (count == best_count && residual < best_residual)) {
            best_count = count;
            best_residual = residual;
            best_iteration = iter;
            best_motion = g;
        }
    }

    if (best_count < 3) throw Error(errc::alignment_failure, "ransac: no hypothesis reached 3 inliers");

    // Refit on the winning consensus set, then report the refit's inliers.
    std::vector<Vec3> in0, in1;
    for (const Correspondence& c : corrs)
        if ((c.x0 - best_motion.apply(c.x1)).squaredNorm() <= thresh2) {
            in0.push_back(c.x0);
            in1.push_back(c.x1);
        }
    RigidMotion refit;
    try {
        refit = solve_rigid_procrustes(in0, in1);
    } catch (const Error&) {
        refit = best_motion;  // inliers may be collinear; keep the hypothesis
    }

    RansacResult result;
    result.motion = refit;
    result.best_iteration = best_iteration;
    double rms = 0.0;
    for (size_t k = 0; k < n; ++k) {
        double d2 = (corrs[k].x0 - refit.apply(corrs[k].x1)).squaredNorm();
        if (d2 <= thresh2) {
            result.inliers.push_back(static_cast<int>(k));
            rms += d2;
        }
    }
    if (result.inliers.size() < 3) throw Error(errc::alignment_failure, "ransac: refit lost consensus");
    result.inlier_rms = std::sqrt(rms / static_cast<double>(result.inliers.size()));
    return result;
}

namespace {

double lower_median(std::vector<double> values) {
    const size_t mid = (values.size() - 1) / 2;
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    return values[mid];
}

}  // namespace

IcpResult icp_refine(const OrientedPointCloud& source, const OrientedPointCloud& target,
                     const RigidMotion& init, const IcpOptions& opt) {
    if (source.size() < 3 || target.size() < 3)
        throw Error(errc::arity, "icp: need at least 3 points per cloud");

    KdTree3 tree(target.points);
    const size_t n = source.size();
    std::vector<int> match(n);
    std::vector<double> dist(n);

    auto correspond = [&](const RigidMotion& g) {
        for (size_t i = 0; i < n; ++i) {
            KdTree3::Hit hit = tree.nearest(g.apply(source.points[i]));
            match[i] = hit.index;
            dist[i] = std::sqrt(hit.squared_distance);
        }
    };

    auto cutoff_of = [&]() {
        double cut = opt.cutoff_multiplier * lower_median(dist);
        return std::min(cut, opt.max_pair_distance);
    };

    // Trimmed RMS over pairs within the cutoff for the current matching.
    auto trimmed_rms = [&](double cutoff, size_t* survivors) {
        double acc = 0.0;
        size_t count = 0;
        for (size_t i = 0; i < n; ++i) {
            if (dist[i] > cutoff) continue;
            acc += dist[i] * dist[i];
            ++count;
        }
        if (survivors) *survivors = count;
        return count ? std::sqrt(acc / static_cast<double>(count)) : 0.0;
    };

    IcpResult result;
    result.motion = init;
    correspond(init);
    double cutoff = cutoff_of();
    size_t survivors = 0;
    double rms = trimmed_rms(cutoff, &survivors);
    result.rms_history.push_back(rms);
    if (survivors < 3) throw Error(errc::icp_diverged, "icp: fewer than 3 pairs within the distance cutoff");

    for (int iter = 0; iter < opt.max_iterations; ++iter) {
        std::vector<Vec3> p0, p1;
        p0.reserve(survivors);
        p1.reserve(survivors);
        for (size_t i = 0; i < n; ++i) {
            if (dist[i] > cutoff) continue;
            p0.push_back(target.points[match[i]]);
            p1.push_back(source.points[i]);
        }

        RigidMotion candidate;
        try {
            candidate = solve_rigid_procrustes(p0, p1);
        } catch (const Error&) {
            break;  // degenerate surviving set; keep the last motion
        }

        correspond(candidate);
        cutoff = cutoff_of();
        double next_rms = trimmed_rms(cutoff, &survivors);
        if (survivors < 3) throw Error(errc::icp_diverged, "icp: fewer than 3 pairs within the distance cutoff");

        if (next_rms > rms) break;  // refusing the step keeps the series non-increasing

        result.motion = candidate;
        result.rms_history.push_back(next_rms);
        ++result.iterations;
        double improvement = rms - next_rms;
        rms = next_rms;
        if (improvement < opt.tolerance) break;
    }
    return result;
}

}  // namespace scanvol
