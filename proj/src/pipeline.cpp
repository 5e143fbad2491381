#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "scanvol/error.hpp"
#include "scanvol/io.hpp"
#include "scanvol/marching_cubes.hpp"
#include "scanvol/pipeline.hpp"
#include "scanvol/rgbd.hpp"

namespace scanvol {

namespace {

// One-pixel depth spread beyond this marks a discontinuity under the
// keypoint footprint; matches the gradient default in rgbd.
constexpr double kFeatureDepthJump = 0.05;

std::string fmt(const char* spec, double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, x);
    return buf;
}

}  // namespace

std::optional<Vec3> backproject_feature(const DepthImage& depth, const CameraIntrinsics& K,
                                        double u, double v) {
    int u0 = static_cast<int>(std::floor(u));
    int v0 = static_cast<int>(std::floor(v));
    if (u0 < 0 || v0 < 0 || u0 + 1 >= depth.width || v0 + 1 >= depth.height) return std::nullopt;
    double z[4] = {depth.at(u0, v0), depth.at(u0 + 1, v0), depth.at(u0, v0 + 1),
                   depth.at(u0 + 1, v0 + 1)};
    double zmin = z[0], zmax = z[0];
    for (double zi : z) {
        if (!std::isfinite(zi) || zi <= 0.0) return std::nullopt;
        zmin = std::min(zmin, zi);
        zmax = std::max(zmax, zi);
    }
    if (zmax - zmin > kFeatureDepthJump) return std::nullopt;
    double fu = u - u0, fv = v - v0;
    double zi = (1.0 - fv) * ((1.0 - fu) * z[0] + fu * z[1]) +
                fv * ((1.0 - fu) * z[2] + fu * z[3]);
    return backproject_pixel(u, v, zi, K);
}

namespace {

std::vector<Correspondence> build_correspondences(const ViewData& ref, const ViewData& other,
                                                  const std::vector<Feature>& fref,
                                                  const std::vector<Feature>& fother,
                                                  double max_distance) {
    std::vector<Correspondence> out;
    for (const auto& m : match_forward_backward(fref, fother, max_distance)) {
        const Keypoint& ka = fref[m[0]].keypoint;
        const Keypoint& kb = fother[m[1]].keypoint;
        auto x0 = backproject_feature(ref.depth, ref.intrinsics, ka.u, ka.v);
        auto x1 = backproject_feature(other.depth, other.intrinsics, kb.u, kb.v);
        if (!x0 || !x1) continue;
        out.push_back({m[0], m[1], Vec2(ka.u, ka.v), Vec2(kb.u, kb.v), *x0, *x1});
    }
    return out;
}

bool is_stage_failure(const Error& e) {
    return e.code() == errc::alignment_failure || e.code() == errc::icp_diverged ||
           e.code() == errc::rank_deficient || e.code() == errc::arity;
}

}  // namespace

std::vector<ViewAlignment> align_views(const std::vector<ViewData>& views,
                                       const std::vector<OrientedPointCloud>& clouds,
                                       const RegistrationConfig& cfg, uint64_t seed) {
    if (views.empty()) throw Error(errc::config, "alignment needs at least one view");
    if (views.size() != clouds.size())
        throw Error(errc::config, "alignment needs one cloud per view");

    std::vector<ViewAlignment> placed;
    ViewAlignment anchor;
    anchor.name = views[0].name;
    anchor.pose = RigidMotion::identity();
    placed.push_back(std::move(anchor));
    if (views.size() == 1) return placed;

    for (size_t i = 0; i < views.size(); ++i)
        if (views[i].gray.width <= 0)
            throw Error(errc::config,
                        "view " + views[i].name + " has no gray image for feature detection");

    // Per-view detection is independent; run the views concurrently.
    std::vector<std::vector<Feature>> features(views.size());
    std::exception_ptr detect_error;
#pragma omp parallel for schedule(dynamic)
    for (size_t i = 0; i < views.size(); ++i) {
        try {
            features[i] = detect_and_describe(views[i].gray, cfg.detect);
        } catch (...) {
#pragma omp critical
            if (!detect_error) detect_error = std::current_exception();
        }
    }
    if (detect_error) std::rethrow_exception(detect_error);

    std::vector<OrientedPointCloud> thin(views.size());
    for (size_t i = 0; i < views.size(); ++i)
        thin[i] = cfg.voxel_thin > 0.0 ? voxel_thin(clouds[i], cfg.voxel_thin) : clouds[i];

    // Correspondences are cached per (reference, view) pair; ranking a view's
    // candidate references needs every pair anyway when view 0 falls short.
    std::map<std::pair<int, int>, std::vector<Correspondence>> cache;
    auto corrs_of = [&](int ref, int i) -> const std::vector<Correspondence>& {
        auto key = std::make_pair(ref, i);
        auto it = cache.find(key);
        if (it == cache.end())
            it = cache
                     .emplace(key, build_correspondences(views[ref], views[i], features[ref],
                                                         features[i], cfg.match_max_distance))
                     .first;
        return it->second;
    };

    for (int i = 1; i < static_cast<int>(views.size()); ++i) {
        // Candidate references: view 0 first when its matches suffice, then
        // the remaining placed views by descending match count.
        std::vector<std::pair<int, int>> ranked;  // (count, ref)
        for (const ViewAlignment& p : placed) {
            int count = static_cast<int>(corrs_of(p.view, i).size());
            if (count >= 3) ranked.push_back({count, p.view});
        }
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        std::vector<int> order;
        int count0 = static_cast<int>(corrs_of(0, i).size());
        if (count0 >= cfg.min_matches) order.push_back(0);
        for (const auto& [count, ref] : ranked)
            if (order.empty() || ref != order.front()) order.push_back(ref);

        bool done = false;
        std::string failures;
        const double gate_radius =
            cfg.icp_shift_gate * std::max(cfg.voxel_thin, cfg.ransac.inlier_threshold);
        IcpOptions iopt = cfg.icp;
        if (!std::isfinite(iopt.max_pair_distance) && gate_radius > 0.0)
            iopt.max_pair_distance = gate_radius;
        for (int ref : order) {
            const auto& corrs = corrs_of(ref, i);
            try {
                RansacOptions ropt = cfg.ransac;
                ropt.seed = hash_combine(hash_combine(seed, static_cast<uint64_t>(i)),
                                         static_cast<uint64_t>(ref));
                RansacResult r = ransac_align(corrs, ropt);
                ViewAlignment a;
                a.view = i;
                a.name = views[i].name;
                a.reference = ref;
                a.correspondences = static_cast<int>(corrs.size());
                a.ransac_inliers = static_cast<int>(r.inliers.size());
                a.ransac_rms = r.inlier_rms;
                RigidMotion motion = r.motion;
                try {
                    IcpResult icp = icp_refine(thin[i], thin[ref], r.motion, iopt);
                    Vec3 centroid = Vec3::Zero();
                    for (const Vec3& p : thin[i].points) centroid += p;
                    if (thin[i].size() > 0) centroid /= double(thin[i].size());
                    a.icp_shift = (icp.motion.apply(centroid) - r.motion.apply(centroid)).norm();
                    a.icp_rms = icp.rms_history.empty() ? 0.0 : icp.rms_history.back();
                    a.icp_iterations = icp.iterations;
                    a.icp_accepted = cfg.icp_shift_gate <= 0.0 || a.icp_shift <= gate_radius;
                    if (a.icp_accepted) motion = icp.motion;
                } catch (const Error& e) {
                    // A diverging refinement falls back to the RANSAC pose.
                    if (!is_stage_failure(e)) throw;
                    a.icp_accepted = false;
                }
                const RigidMotion* ref_pose = nullptr;
                for (const ViewAlignment& p : placed)
                    if (p.view == ref) ref_pose = &p.pose;
                a.pose = ref_pose->compose(motion);
                placed.push_back(std::move(a));
                done = true;
                break;
            } catch (const Error& e) {
                if (!is_stage_failure(e)) throw;
                failures += " [" + views[ref].name + ": " + e.what() + "]";
            }
        }
        if (!done)
            throw Error(errc::alignment_failure,
                        "view " + views[i].name + " could not be placed; tried " +
                            std::to_string(order.size()) + " reference view(s)" + failures);
    }
    return placed;
}

OrientedPointCloud crop_to_object(const OrientedPointCloud& cloud, const Plane& plane,
                                  double inlier_threshold, double skirt_fraction,
                                  double skirt_min, size_t* object_points) {
    const Vec3 e3 = plane.normal;
    const Vec3 seed_axis = std::abs(e3.x()) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
    const Vec3 e1 = e3.cross(seed_axis).normalized();
    const Vec3 e2 = e3.cross(e1);

    // The object bounding box must ignore plane points that noise or small
    // pose errors push past the inlier threshold. Candidates are taken well
    // clear of the plane (twice the threshold), voted per lateral cell so
    // isolated spikes cannot register, and reduced to the largest connected
    // cell component so scattered survivors at the scan fringe cannot
    // stretch the box either.
    constexpr int kMinCellVotes = 8;
    const double bbox_cut = 2.0 * inlier_threshold;
    const double cell = std::max(skirt_min, 1e-6);
    auto cell_of = [&](const Vec3& p) {
        return std::make_pair(static_cast<long>(std::floor(e1.dot(p) / cell)),
                              static_cast<long>(std::floor(e2.dot(p) / cell)));
    };
    std::map<std::pair<long, long>, int> votes;
    size_t above = 0;
    for (const Vec3& p : cloud.points) {
        double s = plane.signed_distance(p);
        if (s > inlier_threshold) ++above;
        if (s > bbox_cut) ++votes[cell_of(p)];
    }
    if (object_points) *object_points = above;

    std::set<std::pair<long, long>> passing;
    for (const auto& [k, c] : votes)
        if (c >= kMinCellVotes) passing.insert(k);
    std::set<std::pair<long, long>> component;
    std::set<std::pair<long, long>> best_component;
    while (!passing.empty()) {
        component.clear();
        std::vector<std::pair<long, long>> stack{*passing.begin()};
        passing.erase(passing.begin());
        while (!stack.empty()) {
            auto k = stack.back();
            stack.pop_back();
            component.insert(k);
            for (long da = -1; da <= 1; ++da)
                for (long db = -1; db <= 1; ++db) {
                    auto nk = std::make_pair(k.first + da, k.second + db);
                    auto it = passing.find(nk);
                    if (it == passing.end()) continue;
                    passing.erase(it);
                    stack.push_back(nk);
                }
        }
        if (component.size() > best_component.size()) best_component = component;
    }
    if (best_component.empty())
        throw Error(errc::empty_cloud, "no points above the support plane");

    double amin = std::numeric_limits<double>::infinity(), amax = -amin;
    double bmin = amin, bmax = -amin;
    for (const Vec3& p : cloud.points) {
        if (plane.signed_distance(p) <= bbox_cut) continue;
        if (!best_component.count(cell_of(p))) continue;
        double a = e1.dot(p), b = e2.dot(p);
        amin = std::min(amin, a);
        amax = std::max(amax, a);
        bmin = std::min(bmin, b);
        bmax = std::max(bmax, b);
    }

    const double margin = std::max(skirt_min, skirt_fraction * std::max(amax - amin, bmax - bmin));
    const bool colors = cloud.has_colors();
    OrientedPointCloud out;
    for (size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.points[i];
        if (plane.signed_distance(p) <= -2.0 * inlier_threshold) continue;
        double a = e1.dot(p), b = e2.dot(p);
        if (a < amin - margin || a > amax + margin || b < bmin - margin || b > bmax + margin)
            continue;
        out.points.push_back(p);
        out.normals.push_back(cloud.normals[i]);
        if (colors) out.colors.push_back(cloud.colors[i]);
    }
    return out;
}

ReconstructionResult reconstruct_surface(const OrientedPointCloud& cloud,
                                         const ReconstructionConfig& cfg) {
    if (cloud.size() == 0) throw Error(errc::empty_cloud, "reconstruction needs points");
    Eigen::AlignedBox3d box = bounding_box(cloud);
    VoxelGrid grid = VoxelGrid::fit(box.min(), box.max(), cfg.grid_resolution, cfg.pad_fraction,
                                    cfg.min_pad_cells);
    VectorField3 v = splat_normals(cloud, grid);
    PoissonStats stats;
    ScalarField phi =
        solve_screened_poisson(v, cloud, cfg.screening_alpha, cfg.cg_tol, cfg.cg_max_iters, &stats);
    double iso = choose_isovalue(phi, cloud) + cfg.iso_offset;
    // Inward point normals make the implicit function larger inside.
    TriangleMesh mesh = marching_cubes(phi, iso, InteriorSide::Above);
    return {std::move(mesh), std::move(phi), iso, std::move(stats)};
}

TriangleMesh trim_mesh_below_plane(const TriangleMesh& mesh, const Plane& plane, double margin,
                                   size_t* dropped) {
    TriangleMesh out;
    std::vector<int> remap(mesh.vertices.size(), -1);
    for (const auto& f : mesh.faces) {
        const Vec3 centroid =
            (mesh.vertices[f[0]] + mesh.vertices[f[1]] + mesh.vertices[f[2]]) / 3.0;
        if (plane.signed_distance(centroid) < -margin) continue;
        std::array<int, 3> nf;
        for (int k = 0; k < 3; ++k) {
            int v = f[k];
            if (remap[v] < 0) {
                remap[v] = static_cast<int>(out.vertices.size());
                out.vertices.push_back(mesh.vertices[v]);
            }
            nf[k] = remap[v];
        }
        out.faces.push_back(nf);
    }
    if (dropped) *dropped = mesh.faces.size() - out.faces.size();
    return out;
}

PipelineReport run_pipeline(const std::vector<ViewData>& views, const PipelineConfig& cfg,
                            const std::string& output_dir) {
    if (views.empty()) throw Error(errc::config, "pipeline needs at least one view");
    PipelineReport rep;
    using Clock = std::chrono::steady_clock;
    auto timed = [&rep](const char* stage, auto&& fn) {
        auto t0 = Clock::now();
        fn();
        rep.timings.push_back({stage, std::chrono::duration<double>(Clock::now() - t0).count()});
    };

    std::vector<OrientedPointCloud> clouds(views.size());
    timed("normals", [&] {
        for (size_t i = 0; i < views.size(); ++i) {
            const GrayImage* gray = views[i].gray.width > 0 ? &views[i].gray : nullptr;
            clouds[i] = estimate_normals(views[i].depth, views[i].intrinsics, {}, gray);
            if (clouds[i].size() == 0)
                throw Error(errc::empty_cloud,
                            "view " + views[i].name + " produced no oriented points");
        }
    });

    timed("align",
          [&] { rep.alignment = align_views(views, clouds, cfg.registration, cfg.seed); });

    OrientedPointCloud world;
    timed("merge", [&] {
        std::vector<RigidMotion> poses(views.size());
        for (const ViewAlignment& a : rep.alignment) poses[a.view] = a.pose;
        world = merge_views(clouds, poses, cfg.merge_thin);
        rep.merged_points = world.size();
    });

    std::optional<Plane> plane;
    OrientedPointCloud work;
    timed("plane", [&] {
        if (!cfg.plane.enabled) {
            work = world;
            rep.cropped_points = work.size();
            return;
        }
        OrientedPointCloud sample = cfg.registration.voxel_thin > 0.0
                                        ? voxel_thin(world, cfg.registration.voxel_thin)
                                        : world;
        PlaneDetectOptions popt = cfg.plane.detect;
        popt.seed = hash_combine(cfg.seed, 0x706c616e65ull);
        DetectedPlane det = detect_ground_plane(sample, popt);
        plane = det.plane;
        rep.plane_found = true;
        rep.plane = det.plane;
        size_t inliers = 0;
        for (const Vec3& p : world.points)
            if (std::abs(det.plane.signed_distance(p)) <= popt.distance_threshold) ++inliers;
        rep.plane_inliers = inliers;
        work = crop_to_object(world, *plane, popt.distance_threshold, cfg.plane.skirt_fraction,
                              cfg.plane.skirt_min, &rep.object_points);
        rep.cropped_points = work.size();
    });

    std::optional<ReconstructionResult> recon;
    timed("reconstruct", [&] {
        recon.emplace(reconstruct_surface(work, cfg.recon));
        const VoxelGrid& g = recon->field.grid;
        rep.grid_dims = {g.nx, g.ny, g.nz};
        rep.grid_spacing = g.h;
        rep.poisson = recon->stats;
        rep.isovalue = recon->isovalue;
        if (plane && cfg.plane.trim)
            recon->mesh = trim_mesh_below_plane(recon->mesh, *plane,
                                                cfg.plane.trim_margin_cells * recon->field.grid.h,
                                                &rep.trimmed_faces);
        if (recon->mesh.faces.empty())
            throw Error(errc::empty_mesh, "no surface remains above the support plane");
        rep.mesh_vertices = recon->mesh.vertices.size();
        rep.mesh_faces = recon->mesh.faces.size();
    });

    timed("volume", [&] { rep.volume = estimate_volume(recon->mesh, plane, cfg.volume); });

    if (!output_dir.empty()) {
        timed("write", [&] {
            namespace fs = std::filesystem;
            fs::create_directories(output_dir);
            auto at = [&](const std::string& file) { return (fs::path(output_dir) / file).string(); };
            write_cloud_ply(at("merged.ply"), world);
            write_mesh_ply(at("mesh.ply"), recon->mesh);
            for (const ViewAlignment& a : rep.alignment)
                write_pose(at("pose_" + a.name + ".txt"), a.pose);
            if (plane) write_plane(at("plane.txt"), *plane);
            std::ofstream(at("report.txt")) << report_text(rep);
            std::ofstream(at("report.json")) << report_json(rep, true);
        });
    }
    return rep;
}

std::string report_text(const PipelineReport& rep) {
    std::ostringstream out;
    out << "views:\n";
    for (const ViewAlignment& a : rep.alignment) {
        out << "  " << a.name << ": ";
        if (a.reference < 0) {
            out << "anchor\n";
            continue;
        }
        std::string ref_name = "view " + std::to_string(a.reference);
        for (const ViewAlignment& p : rep.alignment)
            if (p.view == a.reference) ref_name = p.name;
        out << "ref " << ref_name << ", matches " << a.correspondences
            << ", ransac inliers " << a.ransac_inliers << " (rms " << fmt("%.3e", a.ransac_rms)
            << " m), icp rms " << fmt("%.3e", a.icp_rms) << " m in " << a.icp_iterations
            << " sweep(s)";
        if (!a.icp_accepted)
            out << " [icp rejected: shifted " << fmt("%.1e", a.icp_shift) << " m]";
        out << "\n";
    }
    out << "merged points: " << rep.merged_points << "\n";
    if (rep.plane_found) {
        out << "support plane: n = (" << fmt("%.6f", rep.plane.normal.x()) << ", "
            << fmt("%.6f", rep.plane.normal.y()) << ", " << fmt("%.6f", rep.plane.normal.z())
            << "), d = " << fmt("%.6f", rep.plane.d) << ", inliers " << rep.plane_inliers << "\n";
        out << "object points: " << rep.object_points << ", kept with skirt: " << rep.cropped_points
            << "\n";
    } else {
        out << "support plane: not used\n";
    }
    out << "grid: " << rep.grid_dims[0] << " x " << rep.grid_dims[1] << " x " << rep.grid_dims[2]
        << ", spacing " << fmt("%.6f", rep.grid_spacing) << " m\n";
    out << "poisson: " << rep.poisson.iterations << " iterations, relative residual "
        << fmt("%.3e", rep.poisson.relative_residual) << "\n";
    out << "isovalue: " << fmt("%.6e", rep.isovalue) << "\n";
    out << "mesh: " << rep.mesh_vertices << " vertices, " << rep.mesh_faces << " faces ("
        << rep.trimmed_faces << " below-plane faces trimmed)\n";
    out << "volume (divergence): " << fmt("%.6e", rep.volume.volume) << " m3 = "
        << fmt("%.4f", rep.volume.volume * 1e6) << " cm3\n";
    out << "volume (tetrahedra): " << fmt("%.6e", rep.volume.volume_tetra) << " m3\n";
    out << "boundary edges: " << rep.volume.boundary_edge_count << ", support gap "
        << fmt("%.6f", rep.volume.support_gap) << " m, mean edge "
        << fmt("%.6f", rep.volume.mean_edge_length) << " m\n";
    out << "status: " << (rep.volume.unreliable ? "UNRELIABLE" : "ok") << "\n";
    out << "timings:";
    for (const StageTiming& t : rep.timings) out << " " << t.stage << " " << fmt("%.2f", t.seconds) << "s";
    out << "\n";
    return out.str();
}

std::string report_json(const PipelineReport& rep, bool include_timings) {
    using json = nlohmann::ordered_json;
    json j;
    j["views"] = json::array();
    for (const ViewAlignment& a : rep.alignment) {
        json v;
        v["name"] = a.name;
        v["view"] = a.view;
        v["reference"] = a.reference;
        v["correspondences"] = a.correspondences;
        v["ransac_inliers"] = a.ransac_inliers;
        v["ransac_rms"] = a.ransac_rms;
        v["icp_rms"] = a.icp_rms;
        v["icp_iterations"] = a.icp_iterations;
        v["icp_shift"] = a.icp_shift;
        v["icp_accepted"] = a.icp_accepted;
        json rows = json::array();
        for (int r = 0; r < 3; ++r)
            rows.push_back({a.pose.R(r, 0), a.pose.R(r, 1), a.pose.R(r, 2), a.pose.t(r)});
        v["pose"] = rows;
        j["views"].push_back(v);
    }
    j["merged_points"] = rep.merged_points;
    if (rep.plane_found) {
        j["plane"] = {{"normal", {rep.plane.normal.x(), rep.plane.normal.y(), rep.plane.normal.z()}},
                      {"d", rep.plane.d},
                      {"inliers", rep.plane_inliers}};
        j["object_points"] = rep.object_points;
    } else {
        j["plane"] = nullptr;
    }
    j["cropped_points"] = rep.cropped_points;
    j["grid"] = {{"dims", {rep.grid_dims[0], rep.grid_dims[1], rep.grid_dims[2]}},
                 {"spacing", rep.grid_spacing}};
    j["poisson"] = {{"iterations", rep.poisson.iterations},
                    {"relative_residual", rep.poisson.relative_residual},
                    {"rhs_norm", rep.poisson.rhs_norm}};
    j["isovalue"] = rep.isovalue;
    j["mesh"] = {{"vertices", rep.mesh_vertices},
                 {"faces", rep.mesh_faces},
                 {"trimmed_faces", rep.trimmed_faces}};
    j["volume"] = {{"divergence_m3", rep.volume.volume},
                   {"tetrahedra_m3", rep.volume.volume_tetra},
                   {"divergence_cm3", rep.volume.volume * 1e6},
                   {"boundary_edges", rep.volume.boundary_edge_count},
                   {"support_gap_m", rep.volume.support_gap},
                   {"mean_edge_length_m", rep.volume.mean_edge_length},
                   {"degenerate_faces", rep.volume.degenerate_faces},
                   {"aligned", rep.volume.aligned},
                   {"unreliable", rep.volume.unreliable}};
    if (include_timings) {
        j["timings"] = json::array();
        for (const StageTiming& t : rep.timings)
            j["timings"].push_back({{"stage", t.stage}, {"seconds", t.seconds}});
    }
    return j.dump(2) + "\n";
}

}  // namespace scanvol
