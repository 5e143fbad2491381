// Command-line frontend. Every stage of the scan-to-volume pipeline is a
// subcommand with file inputs and outputs, so stages can be composed,
// replaced by fixtures, or run end to end via `pipeline`.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "scanvol/error.hpp"
#include "scanvol/io.hpp"
#include "scanvol/pipeline.hpp"
#include "scanvol/rgbd.hpp"
#include "scanvol/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace scanvol;

namespace {

struct Options {
    // global
    uint64_t seed = 1;
    int threads = 0;
    bool verbose = false;
    bool json = false;
    bool strict = false;

    // synth
    std::string scene_file;
    double noise_sigma = 0.0;
    double outlier_fraction = 0.0;

    // common paths
    std::string in;
    std::string out;
    std::string depth_file;
    std::string gray_file;
    std::string intrinsics_file;
    std::string plane_file;
    std::string field_file;
    std::string correspondences_file;
    std::string ref_name;
    std::string src_name;
    bool ascii = false;
    bool no_icp = false;
    bool no_plane = false;
    bool no_trim = false;
    double thin = 0.005;  // pre-thinning for plane detection
    std::string flow = "x";

    PipelineConfig cfg;
};

Options opt;

std::string fmt(const char* spec, double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, x);
    return buf;
}

void apply_threads() {
#ifdef _OPENMP
    if (opt.threads > 0) omp_set_num_threads(opt.threads);
#endif
}

void note(const std::string& line) {
    if (opt.verbose) std::cerr << line << "\n";
}

// Scan directory layout: intrinsics.txt plus depth_<name>.pfm|png and
// optional gray_<name>.png per view. Views are ordered by name.
std::vector<ViewData> load_scan_dir(const std::string& dir) {
    if (!fs::is_directory(dir)) throw Error(errc::config, "not a directory: " + dir);
    CameraIntrinsics K = read_intrinsics((fs::path(dir) / "intrinsics.txt").string());

    std::vector<std::pair<std::string, std::string>> depths;  // name, path
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string stem = entry.path().stem().string();
        std::string ext = entry.path().extension().string();
        if (stem.rfind("depth_", 0) != 0) continue;
        if (ext != ".pfm" && ext != ".png") continue;
        depths.push_back({stem.substr(6), entry.path().string()});
    }
    std::sort(depths.begin(), depths.end());
    if (depths.empty()) throw Error(errc::config, "no depth_<name>.pfm|png views in " + dir);

    std::vector<ViewData> views;
    for (const auto& [name, path] : depths) {
        ViewData v;
        v.name = name;
        v.depth = read_depth_image(path);
        v.intrinsics = K;
        fs::path gray = fs::path(dir) / ("gray_" + name + ".png");
        if (fs::exists(gray)) v.gray = read_gray_png(gray.string());
        views.push_back(std::move(v));
    }
    return views;
}

std::vector<OrientedPointCloud> clouds_of(const std::vector<ViewData>& views) {
    std::vector<OrientedPointCloud> clouds(views.size());
    for (size_t i = 0; i < views.size(); ++i) {
        const GrayImage* gray = views[i].gray.width > 0 ? &views[i].gray : nullptr;
        clouds[i] = estimate_normals(views[i].depth, views[i].intrinsics, {}, gray);
        if (clouds[i].size() == 0)
            throw Error(errc::empty_cloud, "view " + views[i].name + " produced no points");
    }
    return clouds;
}

ordered_json pose_json(const RigidMotion& g) {
    ordered_json rows = ordered_json::array();
    for (int r = 0; r < 3; ++r) rows.push_back({g.R(r, 0), g.R(r, 1), g.R(r, 2), g.t(r)});
    return rows;
}

int run_synth(bool seed_given, bool noise_given, bool outlier_given) {
    SceneConfig sc = load_scene_config(opt.scene_file);
    if (seed_given) {
        sc.seed = opt.seed;
        sc.scene.texture_seed = opt.seed;
    }
    if (noise_given) sc.noise_sigma = opt.noise_sigma;
    if (outlier_given) sc.outlier_fraction = opt.outlier_fraction;

    fs::create_directories(opt.out);
    write_intrinsics((fs::path(opt.out) / "intrinsics.txt").string(), sc.intrinsics);

    double analytic = 0.0;
    for (const Primitive& p : sc.scene.primitives) analytic += analytic_volume(p);

    std::vector<RigidMotion> ring =
        camera_ring(sc.ring_count, sc.ring_radius, sc.ring_height, sc.ring_target);
    ordered_json gt;
    gt["analytic_volume_m3"] = analytic;
    gt["noise_sigma"] = sc.noise_sigma;
    gt["outlier_fraction"] = sc.outlier_fraction;
    gt["seed"] = sc.seed;
    gt["views"] = ordered_json::array();
    for (size_t i = 0; i < ring.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "view_%03zu", i);
        note(std::string("rendering ") + name);
        RenderedView rv = render_depth(sc.scene, ring[i], sc.intrinsics);
        DepthImage depth = std::move(rv.depth);
        if (sc.noise_sigma > 0.0 || sc.outlier_fraction > 0.0)
            depth = corrupt_depth(depth, sc.noise_sigma, sc.outlier_fraction,
                                  hash_combine(sc.seed, static_cast<uint64_t>(i)));
        fs::path base(opt.out);
        write_depth_pfm((base / ("depth_" + std::string(name) + ".pfm")).string(), depth);
        write_gray_png((base / ("gray_" + std::string(name) + ".png")).string(), rv.gray);
        write_pose((base / ("truth_pose_" + std::string(name) + ".txt")).string(), ring[i]);
        gt["views"].push_back({{"name", name}, {"pose", pose_json(ring[i])}});
    }
    std::ofstream((fs::path(opt.out) / "ground_truth.json").string()) << gt.dump(2) << "\n";

    if (opt.json) {
        std::cout << gt.dump(2) << "\n";
    } else {
        std::cout << "synth: " << ring.size() << " views -> " << opt.out
                  << ", analytic volume " << fmt("%.6e", analytic) << " m3\n";
    }
    return 0;
}

int run_normals() {
    DepthImage depth = read_depth_image(opt.depth_file);
    CameraIntrinsics K = read_intrinsics(opt.intrinsics_file);
    GrayImage gray;
    if (!opt.gray_file.empty()) gray = read_gray_png(opt.gray_file);
    OrientedPointCloud cloud =
        estimate_normals(depth, K, {}, gray.width > 0 ? &gray : nullptr);
    write_cloud_ply(opt.out, cloud, !opt.ascii);
    if (opt.json) {
        ordered_json j{{"points", cloud.size()}, {"colors", cloud.has_colors()}};
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "normals: " << cloud.size() << " oriented points -> " << opt.out << "\n";
    }
    return 0;
}

int run_align() {
    std::vector<ViewData> views = load_scan_dir(opt.in);
    std::vector<OrientedPointCloud> clouds = clouds_of(views);
    fs::create_directories(opt.out);

    if (!opt.correspondences_file.empty()) {
        // Injected matches: align exactly one pair, bypassing detection.
        if (views.size() < 2)
            throw Error(errc::config, "correspondence injection needs two views");
        auto find_view = [&](const std::string& name, size_t fallback) -> size_t {
            if (name.empty()) return fallback;
            for (size_t i = 0; i < views.size(); ++i)
                if (views[i].name == name) return i;
            throw Error(errc::config, "no view named " + name + " in " + opt.in);
        };
        size_t ref = find_view(opt.ref_name, 0);
        size_t src = find_view(opt.src_name, 1);
        if (ref == src) throw Error(errc::config, "--ref and --src name the same view");

        std::vector<Correspondence> corrs;
        int row = 0;
        for (const auto& r : read_correspondence_csv(opt.correspondences_file)) {
            auto x0 = backproject_feature(views[ref].depth, views[ref].intrinsics, r[0], r[1]);
            auto x1 = backproject_feature(views[src].depth, views[src].intrinsics, r[2], r[3]);
            if (!x0 || !x1)
                throw Error(errc::invalid_depth, "correspondence row " + std::to_string(row) +
                                                     " has no valid depth footprint");
            corrs.push_back({row, row, Vec2(r[0], r[1]), Vec2(r[2], r[3]), *x0, *x1});
            ++row;
        }
        RansacOptions ropt = opt.cfg.registration.ransac;
        ropt.seed = opt.seed;
        RansacResult rr = ransac_align(corrs, ropt);
        RigidMotion motion = rr.motion;
        double icp_rms = 0.0;
        int icp_iters = 0;
        if (!opt.no_icp) {
            double cell = opt.cfg.registration.voxel_thin;
            OrientedPointCloud s = cell > 0 ? voxel_thin(clouds[src], cell) : clouds[src];
            OrientedPointCloud t = cell > 0 ? voxel_thin(clouds[ref], cell) : clouds[ref];
            IcpResult icp = icp_refine(s, t, motion, opt.cfg.registration.icp);
            motion = icp.motion;
            icp_rms = icp.rms_history.back();
            icp_iters = icp.iterations;
        }
        write_pose((fs::path(opt.out) / ("pose_" + views[ref].name + ".txt")).string(),
                   RigidMotion::identity());
        write_pose((fs::path(opt.out) / ("pose_" + views[src].name + ".txt")).string(), motion);
        if (opt.json) {
            ordered_json j;
            j["reference"] = views[ref].name;
            j["source"] = views[src].name;
            j["correspondences"] = corrs.size();
            j["ransac_inliers"] = rr.inliers.size();
            j["ransac_rms"] = rr.inlier_rms;
            j["icp_rms"] = icp_rms;
            j["icp_iterations"] = icp_iters;
            j["pose"] = pose_json(motion);
            std::cout << j.dump(2) << "\n";
        } else {
            std::cout << "align: " << views[src].name << " -> " << views[ref].name << ", "
                      << corrs.size() << " injected matches, " << rr.inliers.size()
                      << " inliers (rms " << fmt("%.3e", rr.inlier_rms) << " m)";
            if (!opt.no_icp)
                std::cout << ", icp rms " << fmt("%.3e", icp_rms) << " m in " << icp_iters
                          << " sweep(s)";
            std::cout << "\n";
        }
        return 0;
    }

    std::vector<ViewAlignment> placed =
        align_views(views, clouds, opt.cfg.registration, opt.seed);
    for (const ViewAlignment& a : placed)
        write_pose((fs::path(opt.out) / ("pose_" + a.name + ".txt")).string(), a.pose);
    if (opt.json) {
        ordered_json j = ordered_json::array();
        for (const ViewAlignment& a : placed)
            j.push_back({{"name", a.name},
                         {"reference", a.reference},
                         {"correspondences", a.correspondences},
                         {"ransac_inliers", a.ransac_inliers},
                         {"ransac_rms", a.ransac_rms},
                         {"icp_rms", a.icp_rms},
                         {"icp_iterations", a.icp_iterations},
                         {"pose", pose_json(a.pose)}});
        std::cout << j.dump(2) << "\n";
    } else {
        for (const ViewAlignment& a : placed) {
            std::cout << "align: " << a.name;
            if (a.reference < 0)
                std::cout << " anchor\n";
            else
                std::cout << " ref view " << a.reference << ", " << a.correspondences
                          << " matches, " << a.ransac_inliers << " inliers, icp rms "
                          << fmt("%.3e", a.icp_rms) << " m\n";
        }
    }
    return 0;
}

int run_merge() {
    if (!fs::is_directory(opt.in)) throw Error(errc::config, "not a directory: " + opt.in);
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(opt.in)) {
        if (!entry.is_regular_file()) continue;
        std::string stem = entry.path().stem().string();
        if (stem.rfind("cloud_", 0) == 0 && entry.path().extension() == ".ply")
            names.push_back(stem.substr(6));
    }
    std::sort(names.begin(), names.end());
    if (names.empty())
        throw Error(errc::config, "no cloud_<name>.ply files in " + opt.in);

    std::vector<OrientedPointCloud> clouds;
    std::vector<RigidMotion> poses;
    for (const std::string& name : names) {
        clouds.push_back(read_cloud_ply((fs::path(opt.in) / ("cloud_" + name + ".ply")).string()));
        poses.push_back(read_pose((fs::path(opt.in) / ("pose_" + name + ".txt")).string()));
    }
    OrientedPointCloud merged = merge_views(clouds, poses, opt.cfg.merge_thin);
    write_cloud_ply(opt.out, merged, !opt.ascii);
    if (opt.json) {
        ordered_json j{{"views", names.size()}, {"points", merged.size()}};
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "merge: " << names.size() << " views, " << merged.size() << " points -> "
                  << opt.out << "\n";
    }
    return 0;
}

int run_plane() {
    OrientedPointCloud cloud = read_cloud_ply(opt.in);
    OrientedPointCloud sample = opt.thin > 0.0 ? voxel_thin(cloud, opt.thin) : cloud;
    PlaneDetectOptions popt = opt.cfg.plane.detect;
    popt.seed = hash_combine(opt.seed, 0x706c616e65ull);
    DetectedPlane det = detect_ground_plane(sample, popt);
    size_t inliers = 0;
    for (const Vec3& p : cloud.points)
        if (std::abs(det.plane.signed_distance(p)) <= popt.distance_threshold) ++inliers;
    if (!opt.out.empty()) write_plane(opt.out, det.plane);
    if (opt.json) {
        ordered_json j{{"normal", {det.plane.normal.x(), det.plane.normal.y(), det.plane.normal.z()}},
                       {"d", det.plane.d},
                       {"inliers", inliers},
                       {"points", cloud.size()}};
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "plane: n = (" << fmt("%.6f", det.plane.normal.x()) << ", "
                  << fmt("%.6f", det.plane.normal.y()) << ", "
                  << fmt("%.6f", det.plane.normal.z()) << "), d = " << fmt("%.6f", det.plane.d)
                  << ", inliers " << inliers << " / " << cloud.size() << "\n";
    }
    return 0;
}

int run_reconstruct() {
    OrientedPointCloud cloud = read_cloud_ply(opt.in);
    if (!opt.plane_file.empty()) {
        Plane plane = read_plane(opt.plane_file);
        size_t object = 0;
        cloud = crop_to_object(cloud, plane, opt.cfg.plane.detect.distance_threshold,
                               opt.cfg.plane.skirt_fraction, opt.cfg.plane.skirt_min, &object);
        note("crop: " + std::to_string(object) + " object points, " +
             std::to_string(cloud.size()) + " kept");
    }
    ReconstructionResult recon = reconstruct_surface(cloud, opt.cfg.recon);
    size_t trimmed = 0;
    if (!opt.plane_file.empty() && !opt.no_trim) {
        Plane plane = read_plane(opt.plane_file);
        recon.mesh = trim_mesh_below_plane(
            recon.mesh, plane, opt.cfg.plane.trim_margin_cells * recon.field.grid.h, &trimmed);
        if (recon.mesh.faces.empty())
            throw Error(errc::empty_mesh, "no surface remains above the support plane");
    }
    write_mesh_ply(opt.out, recon.mesh, !opt.ascii);
    if (!opt.field_file.empty()) write_scalar_field(opt.field_file, recon.field);
    if (opt.json) {
        ordered_json j;
        j["grid"] = {recon.field.grid.nx, recon.field.grid.ny, recon.field.grid.nz};
        j["spacing"] = recon.field.grid.h;
        j["cg_iterations"] = recon.stats.iterations;
        j["relative_residual"] = recon.stats.relative_residual;
        j["isovalue"] = recon.isovalue;
        j["vertices"] = recon.mesh.vertices.size();
        j["faces"] = recon.mesh.faces.size();
        j["trimmed_faces"] = trimmed;
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "reconstruct: grid " << recon.field.grid.nx << "x" << recon.field.grid.ny
                  << "x" << recon.field.grid.nz << " (h " << fmt("%.6f", recon.field.grid.h)
                  << " m), cg " << recon.stats.iterations << " iters (residual "
                  << fmt("%.3e", recon.stats.relative_residual) << "), mesh "
                  << recon.mesh.vertices.size() << " vertices / " << recon.mesh.faces.size()
                  << " faces -> " << opt.out << "\n";
    }
    return 0;
}

FlowAxis parse_flow(const std::string& s) {
    if (s == "x") return FlowAxis::X;
    if (s == "y") return FlowAxis::Y;
    if (s == "z") return FlowAxis::Z;
    throw Error(errc::config, "--flow must be x, y or z");
}

int run_volume() {
    TriangleMesh mesh = read_mesh(opt.in);
    std::optional<Plane> plane;
    if (!opt.plane_file.empty()) plane = read_plane(opt.plane_file);
    VolumeOptions vopt = opt.cfg.volume;
    vopt.flow = parse_flow(opt.flow);
    VolumeEstimate est = estimate_volume(mesh, plane, vopt);
    if (opt.json) {
        ordered_json j{{"divergence_m3", est.volume},
                       {"tetrahedra_m3", est.volume_tetra},
                       {"divergence_cm3", est.volume * 1e6},
                       {"boundary_edges", est.boundary_edge_count},
                       {"support_gap_m", est.support_gap},
                       {"mean_edge_length_m", est.mean_edge_length},
                       {"degenerate_faces", est.degenerate_faces},
                       {"aligned", est.aligned},
                       {"unreliable", est.unreliable}};
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "volume (divergence): " << fmt("%.6e", est.volume) << " m3 = "
                  << fmt("%.4f", est.volume * 1e6) << " cm3\n";
        std::cout << "volume (tetrahedra): " << fmt("%.6e", est.volume_tetra) << " m3\n";
        std::cout << "boundary edges: " << est.boundary_edge_count << ", support gap "
                  << fmt("%.6f", est.support_gap) << " m, mean edge "
                  << fmt("%.6f", est.mean_edge_length) << " m\n";
        std::cout << "status: " << (est.unreliable ? "UNRELIABLE" : "ok") << "\n";
    }
    if (est.unreliable && opt.strict) {
        std::cerr << "error[unreliable]: volume estimate flagged unreliable\n";
        return 4;
    }
    return 0;
}

int run_pipeline_cmd() {
    std::vector<ViewData> views = load_scan_dir(opt.in);
    PipelineConfig cfg = opt.cfg;
    cfg.seed = opt.seed;
    cfg.plane.enabled = !opt.no_plane;
    cfg.plane.trim = !opt.no_trim;
    cfg.volume.flow = parse_flow(opt.flow);
    PipelineReport rep = run_pipeline(views, cfg, opt.out);
    if (opt.json)
        std::cout << report_json(rep, true);
    else
        std::cout << report_text(rep);
    if (rep.volume.unreliable && opt.strict) {
        std::cerr << "error[unreliable]: volume estimate flagged unreliable\n";
        return 4;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse RGBD views to mesh and volume"};
    app.fallthrough();
    app.set_config("--config", "", "INI config file; keys match long option names");
    app.require_subcommand(1);

    app.add_option("--seed", opt.seed, "Deterministic seed for every randomized stage");
    app.add_option("--threads", opt.threads, "Worker threads (0 = library default)");
    app.add_flag("--verbose", opt.verbose, "Progress notes on stderr");
    app.add_flag("--json", opt.json, "Machine-readable stdout");
    app.add_flag("--strict", opt.strict, "Exit 4 when the volume is flagged unreliable");

    auto add_registration_flags = [&](CLI::App* c) {
        c->add_option("--ransac-iters", opt.cfg.registration.ransac.iterations,
                      "RANSAC hypothesis count");
        c->add_option("--inlier-thresh", opt.cfg.registration.ransac.inlier_threshold,
                      "RANSAC inlier threshold in meters");
        c->add_option("--icp-iters", opt.cfg.registration.icp.max_iterations,
                      "Maximum ICP sweeps");
        c->add_option("--icp-eps", opt.cfg.registration.icp.tolerance,
                      "ICP stop when RMS improvement drops below this");
        c->add_option("--voxel-thin", opt.cfg.registration.voxel_thin,
                      "Thinning cell for ICP working clouds (meters, 0 = off)");
        c->add_option("--match-max-distance", opt.cfg.registration.match_max_distance,
                      "Descriptor distance cutoff for mutual matches");
        c->add_option("--min-matches", opt.cfg.registration.min_matches,
                      "Matches needed to prefer a reference view");
        c->add_option("--octaves", opt.cfg.registration.detect.octaves, "Detector octaves");
        c->add_option("--scales", opt.cfg.registration.detect.scales_per_octave,
                      "Detector scales per octave");
        c->add_option("--contrast-threshold", opt.cfg.registration.detect.contrast_threshold,
                      "Detector contrast threshold");
        c->add_option("--edge-ratio", opt.cfg.registration.detect.edge_ratio,
                      "Detector edge-response rejection ratio");
        c->add_option("--icp-gate", opt.cfg.registration.icp_shift_gate,
                      "Reject ICP shifts beyond gate * max(thin, inlier threshold); <= 0 off");
    };
    auto add_plane_flags = [&](CLI::App* c) {
        c->add_option("--plane-iters", opt.cfg.plane.detect.iterations,
                      "Plane RANSAC hypothesis count");
        c->add_option("--plane-thresh", opt.cfg.plane.detect.distance_threshold,
                      "Plane inlier distance in meters");
        c->add_option("--min-inlier-fraction", opt.cfg.plane.detect.min_inlier_fraction,
                      "Minimum plane inlier fraction");
    };
    auto add_crop_flags = [&](CLI::App* c) {
        c->add_option("--skirt-fraction", opt.cfg.plane.skirt_fraction,
                      "Support skirt margin as a fraction of object extent");
        c->add_option("--skirt-min", opt.cfg.plane.skirt_min,
                      "Minimum support skirt margin in meters");
        c->add_flag("--no-trim", opt.no_trim, "Keep mesh faces below the support plane");
        c->add_option("--trim-cells", opt.cfg.plane.trim_margin_cells,
                      "Trim faces more than this many cells below the plane");
    };
    auto add_recon_flags = [&](CLI::App* c) {
        c->add_option("--grid-res", opt.cfg.recon.grid_resolution,
                      "Voxel nodes along the longest padded axis");
        c->add_option("--screening-alpha", opt.cfg.recon.screening_alpha,
                      "Screening weight (0 disables screening)");
        c->add_option("--cg-tol", opt.cfg.recon.cg_tol, "CG relative residual target");
        c->add_option("--cg-max-iters", opt.cfg.recon.cg_max_iters, "CG iteration cap");
        c->add_option("--iso-offset", opt.cfg.recon.iso_offset,
                      "Additive adjustment to the chosen isovalue");
        c->add_option("--pad-fraction", opt.cfg.recon.pad_fraction,
                      "Grid padding per side as a fraction of extent");
        c->add_option("--min-pad-cells", opt.cfg.recon.min_pad_cells,
                      "Minimum grid padding in cells");
    };
    auto add_volume_flags = [&](CLI::App* c) {
        c->add_option("--flow", opt.flow, "Divergence flow axis: x, y or z")
            ->check(CLI::IsMember({"x", "y", "z"}));
        c->add_option("--gap-factor", opt.cfg.volume.gap_factor,
                      "Unreliable when support gap exceeds factor * mean edge");
    };

    CLI::App* c_synth = app.add_subcommand("synth", "Render a synthetic scan directory");
    c_synth->add_option("scene", opt.scene_file, "Scene description file")->required();
    c_synth->add_option("--out", opt.out, "Output scan directory")->required();
    auto* o_noise = c_synth->add_option("--noise-sigma", opt.noise_sigma,
                                        "Override depth noise sigma in meters");
    auto* o_outl = c_synth->add_option("--outlier-fraction", opt.outlier_fraction,
                                       "Override depth outlier fraction");

    CLI::App* c_normals =
        app.add_subcommand("normals", "Backproject one depth image to an oriented cloud");
    c_normals->add_option("--depth", opt.depth_file, "Depth image (.pfm or 16-bit mm .png)")
        ->required();
    c_normals->add_option("--intrinsics", opt.intrinsics_file, "Intrinsics file")->required();
    c_normals->add_option("--gray", opt.gray_file, "Optional gray image for point colors");
    c_normals->add_option("--out", opt.out, "Output cloud .ply")->required();
    c_normals->add_flag("--ascii", opt.ascii, "ASCII PLY instead of binary");

    CLI::App* c_align = app.add_subcommand("align", "Estimate camera-to-world poses");
    c_align->add_option("--in", opt.in, "Scan directory")->required();
    c_align->add_option("--out", opt.out, "Directory for pose_<name>.txt files")->required();
    c_align->add_option("--correspondences", opt.correspondences_file,
                        "CSV u0,v0,u1,v1: bypass detection for one pair");
    c_align->add_option("--ref", opt.ref_name, "Reference view name for injected matches");
    c_align->add_option("--src", opt.src_name, "Source view name for injected matches");
    c_align->add_flag("--no-icp", opt.no_icp, "Skip ICP refinement after RANSAC");
    add_registration_flags(c_align);

    CLI::App* c_merge = app.add_subcommand("merge", "Fuse per-view clouds into the world frame");
    c_merge->add_option("--in", opt.in, "Directory of cloud_<name>.ply + pose_<name>.txt")
        ->required();
    c_merge->add_option("--out", opt.out, "Output merged .ply")->required();
    c_merge->add_option("--merge-thin", opt.cfg.merge_thin,
                        "Voxel thinning cell for the merged cloud (0 = keep all)");
    c_merge->add_flag("--ascii", opt.ascii, "ASCII PLY instead of binary");

    CLI::App* c_plane = app.add_subcommand("plane", "Detect the support plane");
    c_plane->add_option("--in", opt.in, "Merged cloud .ply")->required();
    c_plane->add_option("--out", opt.out, "Output plane file (nx ny nz d)");
    c_plane->add_option("--thin", opt.thin, "Pre-thinning cell for detection (0 = off)");
    add_plane_flags(c_plane);

    CLI::App* c_recon = app.add_subcommand("reconstruct", "Implicit solve + isosurface");
    c_recon->add_option("--in", opt.in, "Merged cloud .ply")->required();
    c_recon->add_option("--plane", opt.plane_file,
                        "Support plane file; enables the object crop");
    c_recon->add_option("--out", opt.out, "Output mesh .ply")->required();
    c_recon->add_option("--field", opt.field_file, "Optional scalar field dump");
    c_recon->add_flag("--ascii", opt.ascii, "ASCII PLY instead of binary");
    c_recon->add_option("--plane-thresh", opt.cfg.plane.detect.distance_threshold,
                        "Crop: plane inlier distance in meters");
    add_crop_flags(c_recon);
    add_recon_flags(c_recon);

    CLI::App* c_volume = app.add_subcommand("volume", "Volume of a mesh (.ply or .obj)");
    c_volume->add_option("--in", opt.in, "Mesh file")->required();
    c_volume->add_option("--plane", opt.plane_file, "Support plane to align to z = 0");
    add_volume_flags(c_volume);

    CLI::App* c_pipe = app.add_subcommand("pipeline", "Scan directory to mesh and volume");
    c_pipe->add_option("--in", opt.in, "Scan directory")->required();
    c_pipe->add_option("--out", opt.out, "Artifact directory (merged.ply, mesh.ply, poses, report)");
    c_pipe->add_flag("--no-plane", opt.no_plane, "Skip plane detection and cropping");
    c_pipe->add_option("--merge-thin", opt.cfg.merge_thin,
                       "Voxel thinning cell for the merged cloud (0 = keep all)");
    add_registration_flags(c_pipe);
    add_plane_flags(c_pipe);
    add_crop_flags(c_pipe);
    add_recon_flags(c_pipe);
    add_volume_flags(c_pipe);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    apply_threads();
    try {
        if (app.got_subcommand(c_synth))
            return run_synth(app.count("--seed") > 0, o_noise->count() > 0, o_outl->count() > 0);
        if (app.got_subcommand(c_normals)) return run_normals();
        if (app.got_subcommand(c_align)) return run_align();
        if (app.got_subcommand(c_merge)) return run_merge();
        if (app.got_subcommand(c_plane)) return run_plane();
        if (app.got_subcommand(c_recon)) return run_reconstruct();
        if (app.got_subcommand(c_volume)) return run_volume();
        if (app.got_subcommand(c_pipe)) return run_pipeline_cmd();
    } catch (const Error& e) {
        std::cerr << "error[" << e.code() << "]: " << e.what() << "\n";
        std::string c = e.code();
        return (c == errc::config || c == errc::parse || c == errc::io) ? 2 : 3;
    } catch (const std::exception& e) {
        std::cerr << "error[internal]: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
