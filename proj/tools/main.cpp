// gazefusion command-line driver.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration or usage,
// 3 input/output, 4 tracking lost on more frames than lost_threshold allows,
// 5 degenerate calibration.

#include "gazefusion/geometry.hpp"
#include "gazefusion/io.hpp"
#include "gazefusion/pipeline.hpp"
#include "gazefusion/synth.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>

namespace gf = gazefusion;

namespace {

struct RunArgs {
  std::string sequence;
  std::string config;
  std::string pose_source;
  std::optional<std::uint64_t> seed;
  std::string output_dir = "output";
};

int cmd_run(const RunArgs& a) {
  gf::PipelineConfig config = a.config.empty() ? gf::PipelineConfig{} : gf::read_pipeline_config(a.config);
  if (!a.pose_source.empty()) config.pose_source = gf::parse_pose_source(a.pose_source);
  if (a.seed) config.seed = *a.seed;
  config.validate();

  const auto manifest = gf::load_sequence(a.sequence);
  const auto start = std::chrono::steady_clock::now();
  const auto result = gf::run_pipeline(manifest, config, [](std::size_t i, const gf::TrackingResult& r) {
    if (r.status == gf::TrackingStatus::Lost) std::cerr << "frame " << i << ": tracking lost\n";
  });
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  gf::write_exports(result, config, a.output_dir);

  std::cout << gf::format_summary(result.summary);
  std::fprintf(stderr, "%zu frames in %.2f s (%.2f frames/s)\n", result.summary.frames, seconds,
               seconds > 0 ? result.summary.frames / seconds : 0.0);
  if (result.summary.lost_fraction() > config.lost_threshold) {
    std::cerr << "tracking lost on " << result.summary.lost_frames << " of " << result.summary.frames << " frames\n";
    return gf::exit_code(gf::ErrorCode::TrackingLost);
  }
  return 0;
}

int cmd_calibrate(const std::string& pairs_path, const std::string& output_dir) {
  const auto pairs = gf::read_point_pairs(pairs_path);
  const auto fit = gf::calibrate_homography(pairs);
  gf::fs::create_directories(output_dir);
  const auto out = gf::fs::path(output_dir) / "homography.txt";
  gf::write_homography(out.string(), fit.homography);
  std::printf("pairs=%zu\nrms=%.9g\nhomography=%s\n", pairs.size(), fit.rms, out.string().c_str());
  return 0;
}

struct SynthArgs {
  std::string scene;
  std::string output_dir = "synthetic";
  std::string classes;
  std::string overlay;
  std::uint64_t seed = 0;
  int frames = 50;
  double radius = 2.2;
  double height = 1.2;
  double step = 0.0045;
  double accuracy = 0.8;
  double flip_rate = 0.05;
  double jitter = 2.0;
  bool no_probmaps = false;
};

int cmd_synth(const SynthArgs& a) {
  if (a.frames < 1) throw gf::Error(gf::ErrorCode::InvalidArgument, "--frames must be positive");
  const auto scene = a.scene.empty() ? gf::synth::room_scene() : gf::synth::read_scene(a.scene);
  const auto k = gf::synth::vga_intrinsics();
  const auto trajectory = gf::synth::orbit({0, 0, a.height}, a.radius, 0.0, a.step, a.frames, {0, 0, 0.5});
  gf::synth::SequenceOptions options;
  options.accuracy = a.accuracy;
  options.flip_rate = a.flip_rate;
  options.probability_maps = !a.no_probmaps;
  options.gaze.jitter_sigma = a.jitter;
  if (!a.overlay.empty()) options.gaze.overlay = gf::read_homography(a.overlay);
  if (!a.classes.empty()) options.class_names = gf::read_class_names(a.classes);
  const auto samples = gf::synth::write_sequence(a.output_dir, scene, trajectory, k, options, a.seed);
  std::printf("frames=%d\ngaze_samples=%zu\nroot=%s\n", a.frames, samples.size(), a.output_dir.c_str());
  return 0;
}

int cmd_export(const std::string& snapshot, const std::string& palette, const std::string& output_dir) {
  const auto map = gf::read_map_snapshot(snapshot);
  gf::fs::create_directories(output_dir);
  const gf::fs::path dir(output_dir);
  if (palette == "rgb" || palette == "both") {
    std::printf("%s %zu bytes\n", gf::kPlyRgbName, gf::export_ply(map, gf::Palette::Rgb, dir / gf::kPlyRgbName));
  }
  if (palette == "class" || palette == "both") {
    std::printf("%s %zu bytes\n", gf::kPlyClassName, gf::export_ply(map, gf::Palette::Class, dir / gf::kPlyClassName));
  }
  return 0;
}

int cmd_stats(const std::string& dir, std::size_t top, double max_gap) {
  std::cout << gf::format_stats(gf::compute_stats(dir, max_gap), top);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic surfel mapping with 3D gaze attribution"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Map a recorded sequence and project its gaze samples");
  run_cmd->add_option("sequence", run.sequence, "Sequence directory")->required();
  run_cmd->add_option("--config", run.config, "Pipeline config file (key=value)");
  run_cmd->add_option("--pose-source", run.pose_source, "tracked or groundtruth");
  run_cmd->add_option("--seed", run.seed, "Seed override");
  run_cmd->add_option("--output-dir", run.output_dir, "Export directory");

  std::string pairs, calib_dir = ".";
  auto* calib_cmd = app.add_subcommand("calibrate", "Fit the eye-tracker to RGB-D homography");
  calib_cmd->add_option("pairs", pairs, "File of 'sx sy tx ty' point pairs")->required();
  calib_cmd->add_option("--output-dir", calib_dir, "Directory for homography.txt");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic sequence with ground truth");
  synth_cmd->add_option("--scene", synth.scene, "Scene description (default: built-in room)");
  synth_cmd->add_option("--output-dir", synth.output_dir, "Sequence directory to create");
  synth_cmd->add_option("--seed", synth.seed, "Random seed");
  synth_cmd->add_option("--frames", synth.frames, "Number of frames");
  synth_cmd->add_option("--radius", synth.radius, "Orbit radius in meters");
  synth_cmd->add_option("--height", synth.height, "Camera height in meters");
  synth_cmd->add_option("--step", synth.step, "Orbit step in radians per frame");
  synth_cmd->add_option("--accuracy", synth.accuracy, "Probability on the true class");
  synth_cmd->add_option("--flip-rate", synth.flip_rate, "Fraction of pixels peaked on a wrong class");
  synth_cmd->add_option("--jitter", synth.jitter, "Gaze jitter sigma in pixels");
  synth_cmd->add_option("--classes", synth.classes, "Class-name table");
  synth_cmd->add_option("--overlay", synth.overlay, "Eye-tracker to RGB-D homography file");
  synth_cmd->add_flag("--no-probmaps", synth.no_probmaps, "Skip probability maps");

  std::string snapshot, palette = "both", export_dir = ".";
  auto* export_cmd = app.add_subcommand("export", "Write PLY files from a map snapshot");
  export_cmd->add_option("snapshot", snapshot, "map.smap from a run")->required();
  export_cmd->add_option("--palette", palette, "rgb, class, or both")->check(CLI::IsMember({"rgb", "class", "both"}));
  export_cmd->add_option("--output-dir", export_dir, "Directory for the PLY files");

  std::string stats_dir;
  std::size_t top = 5;
  double max_gap = gf::kDwellMaxGap;
  auto* stats_cmd = app.add_subcommand("stats", "Dwell and revisit report from run exports");
  stats_cmd->add_option("exports", stats_dir, "Export directory of a run")->required();
  stats_cmd->add_option("--top", top, "Number of classes to list");
  stats_cmd->add_option("--max-gap", max_gap, "Largest sample gap that continues a dwell, seconds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*calib_cmd) return cmd_calibrate(pairs, calib_dir);
    if (*synth_cmd) return cmd_synth(synth);
    if (*export_cmd) return cmd_export(snapshot, palette, export_dir);
    if (*stats_cmd) return cmd_stats(stats_dir, top, max_gap);
  } catch (const gf::Error& e) {
    std::cerr << "error (" << gf::to_string(e.code()) << "): " << e.what() << '\n';
    return gf::exit_code(e.code());
  } catch (const gf::fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
