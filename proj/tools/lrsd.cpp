// Command-line front end: decompose (batch solvers), track (streaming
// solvers), eval (mask scoring). Every run writes a manifest with all
// resolved parameters so results can be reproduced bit for bit.

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lrsd/lrsd.hpp"

namespace fs = std::filesystem;
using lrsd::Index;
using lrsd::Matrix;
using lrsd::Vector;

namespace {

struct LoadedInput {
  lrsd::ObservationMatrix observation;
  std::vector<std::string> frame_stems;  // empty for .dlm inputs
};

std::optional<std::pair<Index, Index>> parse_frame_shape(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const auto x = text.find('x');
  if (x == std::string::npos) {
    throw lrsd::ArgumentError("--frame-shape expects HxW, got '" + text + "'");
  }
  long h = 0;
  long w = 0;
  try {
    h = std::stol(text.substr(0, x));
    w = std::stol(text.substr(x + 1));
  } catch (const std::exception&) {
    throw lrsd::ArgumentError("--frame-shape expects HxW, got '" + text + "'");
  }
  if (h < 1 || w < 1) throw lrsd::ArgumentError("--frame-shape dimensions must be positive");
  return std::make_pair(static_cast<Index>(h), static_cast<Index>(w));
}

LoadedInput load_input(const std::string& input, const std::string& pattern,
                       const std::string& frame_shape_spec) {
  LoadedInput loaded;
  if (input.size() > 4 && input.substr(input.size() - 4) == ".dlm") {
    Matrix data = lrsd::read_dlm(input);
    auto shape = parse_frame_shape(frame_shape_spec);
    loaded.observation = lrsd::ObservationMatrix(std::move(data), shape);
    return loaded;
  }
  const auto frames = lrsd::load_frames(input, pattern);
  std::vector<Matrix> images;
  images.reserve(frames.size());
  for (const auto& f : frames) images.push_back(f.pixels);
  loaded.observation = lrsd::stack_frames(images);

  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(input)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (lrsd::detail::glob_match(pattern, name) && lrsd::detail::has_image_extension(name)) {
      names.push_back(name);
    }
  }
  std::sort(names.begin(), names.end());
  for (auto& n : names) {
    const auto dot = n.find_last_of('.');
    loaded.frame_stems.push_back(dot == std::string::npos ? n : n.substr(0, dot));
  }
  return loaded;
}

std::string mask_name(const std::vector<std::string>& stems, Index frame) {
  if (frame < static_cast<Index>(stems.size())) {
    return stems[static_cast<std::size_t>(frame)] + ".pgm";
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06lld.pgm", static_cast<long long>(frame));
  return buf;
}

std::pair<Index, Index> mask_shape(const lrsd::ObservationMatrix& a) {
  if (a.frame_shape) return *a.frame_shape;
  return {a.pixel_count(), 1};  // column masks when the pixel grid is unknown
}

std::string join_command(int argc, char** argv) {
  std::string cmd;
  for (int i = 0; i < argc; ++i) {
    if (i) cmd += ' ';
    cmd += argv[i];
  }
  return cmd;
}

struct DecomposeArgs {
  std::string solver = "ialm";
  std::string input;
  std::string out;
  std::string pattern = "*";
  std::string frame_shape;
  double lambda = 0;
  long rank = 0;
  long card = -1;
  double tau = -1;
  double delta = -1;
  double tol = 0;
  long max_iter = 0;
  std::uint64_t seed = 0;
  double theta = 0.1;
  bool brp = false;
  long window = 0;  // 0 = all frames in one chunk
};

int run_decompose(const DecomposeArgs& args, const std::string& command_line) {
  const auto wall_start = std::chrono::steady_clock::now();
  const lrsd::SolverKind solver = lrsd::parse_solver(args.solver);
  if (args.theta <= 0 || args.theta > 1) {
    throw lrsd::ArgumentError("--theta must lie in (0, 1]");
  }
  LoadedInput loaded = load_input(args.input, args.pattern, args.frame_shape);
  const lrsd::ObservationMatrix& a = loaded.observation;
  const Index n = a.frame_count();
  const Index window = args.window > 0 ? std::min<Index>(args.window, n) : n;

  fs::create_directories(args.out);
  fs::create_directories(fs::path(args.out) / "masks");

  Matrix l_all(a.pixel_count(), n);
  Matrix s_all(a.pixel_count(), n);
  Matrix e_all;
  bool has_noise = false;
  std::vector<std::pair<int, lrsd::SolverTrace>> traces;
  lrsd::SolverConfig resolved_cfg;

  const auto [mh, mw] = mask_shape(a);
  int window_id = 0;
  for (Index start = 0; start < n; start += window, ++window_id) {
    const Index count = std::min<Index>(window, n - start);
    lrsd::ObservationMatrix chunk(a.data.middleCols(start, count), a.frame_shape);
    lrsd::SolverConfig cfg;
    cfg.solver = solver;
    cfg.lambda = args.lambda;
    if (args.rank > 0) cfg.rank_bound = args.rank;
    if (args.card >= 0) cfg.cardinality = args.card;
    if (args.tau >= 0) cfg.soft_tau = args.tau;
    if (args.delta >= 0) cfg.delta = args.delta;
    cfg.tol = args.tol;
    cfg.max_iter = static_cast<int>(args.max_iter);
    cfg.seed = args.seed;
    cfg.use_brp = args.brp;
    {
      lrsd::SolverConfig check = cfg;
      const auto diags = lrsd::validate(check, chunk);
      if (!diags.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& d : diags) msg += " " + d + ";";
        throw lrsd::ArgumentError(msg);
      }
      resolved_cfg = check;
    }
    lrsd::DecompositionResult result = lrsd::decompose(chunk, cfg);
    l_all.middleCols(start, count) = result.low_rank;
    s_all.middleCols(start, count) =
        result.sparse ? *result.sparse : Matrix::Zero(a.pixel_count(), count);
    if (result.noise) {
      if (!has_noise) {
        e_all = Matrix::Zero(a.pixel_count(), n);
        has_noise = true;
      }
      e_all.middleCols(start, count) = *result.noise;
    }
    for (Index j = 0; j < count; ++j) {
      const lrsd::Mask mask =
          lrsd::foreground_mask(s_all.col(start + j), mh, mw, args.theta);
      lrsd::write_mask(mask,
                       (fs::path(args.out) / "masks" / mask_name(loaded.frame_stems, start + j))
                           .string());
    }
    traces.emplace_back(window_id, std::move(result.trace));
  }

  lrsd::write_dlm((fs::path(args.out) / "L.dlm").string(), l_all);
  lrsd::write_dlm((fs::path(args.out) / "S.dlm").string(), s_all);
  if (has_noise) lrsd::write_dlm((fs::path(args.out) / "E.dlm").string(), e_all);
  lrsd::write_trace_csv((fs::path(args.out) / "trace.csv").string(), traces);

  lrsd::Manifest manifest;
  manifest.set("command", command_line);
  manifest.set("subcommand", "decompose");
  manifest.set("version", lrsd::kVersion);
  manifest.set("solver", args.solver);
  manifest.set("input", args.input);
  manifest.set("out", args.out);
  manifest.set("pattern", args.pattern);
  manifest.set("frames", static_cast<long long>(n));
  manifest.set("pixels", static_cast<long long>(a.pixel_count()));
  manifest.set("window", static_cast<long long>(window));
  manifest.set("lambda", resolved_cfg.lambda);
  manifest.set("rank", static_cast<long long>(resolved_cfg.rank_bound.value_or(0)));
  manifest.set("card", static_cast<long long>(resolved_cfg.cardinality.value_or(-1)));
  manifest.set("tau", resolved_cfg.soft_tau.value_or(-1));
  manifest.set("delta", resolved_cfg.delta.value_or(-1));
  manifest.set("tol", resolved_cfg.tol);
  manifest.set("max_iter", static_cast<long long>(resolved_cfg.max_iter));
  manifest.set("seed", static_cast<long long>(args.seed));
  manifest.set("theta", args.theta);
  manifest.set("brp", args.brp ? "true" : "false");
  manifest.set("brp_power", static_cast<long long>(resolved_cfg.brp_power));
  manifest.set("mu0_scale", resolved_cfg.mu0_scale);
  manifest.set("rho", resolved_cfg.rho);
  manifest.set("mu_cap_factor", resolved_cfg.mu_cap_factor);
  manifest.set("inner_tol_factor", resolved_cfg.inner_tol_factor);
  manifest.set("inner_max_iter", static_cast<long long>(resolved_cfg.inner_max_iter));
  manifest.set("sv_start", static_cast<long long>(resolved_cfg.sv_start));
  manifest.set("sv_step", static_cast<long long>(resolved_cfg.sv_step));
  manifest.set("kind", static_cast<long long>(resolved_cfg.kind));
  manifest.set("wall_time_s",
               std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start)
                   .count());
  manifest.write((fs::path(args.out) / "manifest.txt").string());
  return 0;
}

struct TrackArgs {
  std::string solver = "grasta";
  std::string input;
  std::string out;
  std::string pattern = "*";
  std::string frame_shape;
  long dim = 5;
  double subsample = 0.3;
  double eta0 = 0.1;
  double t0 = 100;
  double rho = 1.8;
  long admm_iters = 60;
  double lambda1 = 0;
  double lambda2 = 0;
  std::uint64_t seed = 0;
  double theta = 0.1;
};

int run_track(const TrackArgs& args, const std::string& command_line) {
  const auto wall_start = std::chrono::steady_clock::now();
  if (args.solver != "grasta" && args.solver != "orpca") {
    throw lrsd::ArgumentError("unknown solver '" + args.solver + "' (expected grasta|orpca)");
  }
  if (args.theta <= 0 || args.theta > 1) {
    throw lrsd::ArgumentError("--theta must lie in (0, 1]");
  }
  if (args.dim < 1) throw lrsd::ArgumentError("--dim must be positive");

  LoadedInput loaded = load_input(args.input, args.pattern, args.frame_shape);
  const lrsd::ObservationMatrix& a = loaded.observation;
  const Index n_pixels = a.pixel_count();
  const auto [mh, mw] = mask_shape(a);

  fs::create_directories(args.out);
  fs::create_directories(fs::path(args.out) / "masks");

  Matrix basis;
  if (args.solver == "grasta") {
    if (args.subsample <= 0 || args.subsample > 1) {
      throw lrsd::ArgumentError("--subsample must lie in (0, 1] with subsample >= dim/pixels");
    }
    const Index per_frame = static_cast<Index>(
        std::ceil(args.subsample * static_cast<double>(n_pixels)));
    if (per_frame < args.dim) {
      throw lrsd::ArgumentError("--subsample too small: " + std::to_string(per_frame) +
                                " pixels per frame < dim " + std::to_string(args.dim) +
                                " (need subsample >= dim/pixels)");
    }
    lrsd::SubspaceState state = lrsd::grasta_init(n_pixels, args.dim, args.seed);
    state.eta0 = args.eta0;
    state.t0 = args.t0;
    state.admm_penalty = args.rho;
    state.admm_max_iter = static_cast<int>(args.admm_iters);
    for (Index t = 0; t < a.frame_count(); ++t) {
      std::mt19937_64 omega_rng(args.seed ^
                                (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(t + 1)));
      const auto omega = lrsd::sample_indices(n_pixels, args.subsample, omega_rng);
      const Vector s_full = lrsd::grasta_update(state, a.data.col(t), omega);
      lrsd::write_mask(
          lrsd::foreground_mask(s_full, mh, mw, args.theta),
          (fs::path(args.out) / "masks" / mask_name(loaded.frame_stems, t)).string());
    }
    basis = state.basis;
  } else {
    lrsd::OrpcaState state =
        lrsd::orpca_init(n_pixels, args.dim, args.seed, args.lambda1, args.lambda2);
    for (Index t = 0; t < a.frame_count(); ++t) {
      const auto step = lrsd::orpca_step(state, a.data.col(t));
      lrsd::write_mask(
          lrsd::foreground_mask(step.sparse, mh, mw, args.theta),
          (fs::path(args.out) / "masks" / mask_name(loaded.frame_stems, t)).string());
    }
    basis = state.basis;
  }
  lrsd::write_dlm((fs::path(args.out) / "basis.dlm").string(), basis);

  lrsd::Manifest manifest;
  manifest.set("command", command_line);
  manifest.set("subcommand", "track");
  manifest.set("version", lrsd::kVersion);
  manifest.set("solver", args.solver);
  manifest.set("input", args.input);
  manifest.set("out", args.out);
  manifest.set("pattern", args.pattern);
  manifest.set("frames", static_cast<long long>(a.frame_count()));
  manifest.set("pixels", static_cast<long long>(n_pixels));
  manifest.set("dim", static_cast<long long>(args.dim));
  manifest.set("subsample", args.subsample);
  manifest.set("eta0", args.eta0);
  manifest.set("t0", args.t0);
  manifest.set("rho", args.rho);
  manifest.set("admm_iters", static_cast<long long>(args.admm_iters));
  manifest.set("lambda1",
               args.lambda1 > 0 ? args.lambda1 : 1.0 / std::sqrt(static_cast<double>(n_pixels)));
  manifest.set("lambda2",
               args.lambda2 > 0 ? args.lambda2 : 1.0 / std::sqrt(static_cast<double>(n_pixels)));
  manifest.set("seed", static_cast<long long>(args.seed));
  manifest.set("theta", args.theta);
  manifest.set("wall_time_s",
               std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start)
                   .count());
  manifest.write((fs::path(args.out) / "manifest.txt").string());
  return 0;
}

struct EvalArgs {
  std::string masks;
  std::string truth;
  std::string report;
};

std::set<std::string> list_pgm(const fs::path& dir) {
  std::set<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
      names.insert(entry.path().filename().string());
    }
  }
  return names;
}

std::vector<std::string> list_subdirs(const fs::path& dir) {
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory()) names.push_back(entry.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

lrsd::VideoMetricsRow score_video(const std::string& video, const fs::path& mask_dir,
                                  const fs::path& truth_dir) {
  const auto mask_names = list_pgm(mask_dir);
  const auto truth_names = list_pgm(truth_dir);
  std::vector<std::string> unmatched;
  for (const auto& n : mask_names)
    if (!truth_names.count(n)) unmatched.push_back("mask " + n);
  for (const auto& n : truth_names)
    if (!mask_names.count(n)) unmatched.push_back("truth " + n);
  if (mask_names.empty() || truth_names.empty() ||
      unmatched.size() == mask_names.size() + truth_names.size()) {
    throw lrsd::ArgumentError("no mask/truth filename pairs in video '" + video + "'");
  }
  if (!unmatched.empty()) {
    std::string msg = "unmatched files in video '" + video + "':";
    for (const auto& u : unmatched) msg += " " + u;
    throw lrsd::ArgumentError(msg);
  }

  lrsd::VideoMetricsRow row;
  row.video = video;
  std::vector<lrsd::MetricReport> frame_reports;
  std::vector<lrsd::ConfusionCounts> frame_counts;
  for (const auto& name : mask_names) {
    const lrsd::Mask mask = lrsd::read_mask((mask_dir / name).string());
    const lrsd::Mask truth = lrsd::read_mask((truth_dir / name).string());
    const auto counts = lrsd::confusion(mask, truth);
    frame_counts.push_back(counts);
    frame_reports.push_back(lrsd::compute_metrics(counts));
    row.counts += counts;
    ++row.frames;
  }
  row.report = lrsd::aggregate(frame_reports, frame_counts);
  return row;
}

int run_eval(const EvalArgs& args) {
  if (!fs::is_directory(args.masks)) throw lrsd::IoError("'" + args.masks + "' is not a directory");
  if (!fs::is_directory(args.truth)) throw lrsd::IoError("'" + args.truth + "' is not a directory");

  std::vector<lrsd::VideoMetricsRow> rows;
  const auto mask_videos = list_subdirs(args.masks);
  if (!mask_videos.empty()) {
    const auto truth_videos = list_subdirs(args.truth);
    std::vector<std::string> missing;
    for (const auto& v : mask_videos) {
      if (std::find(truth_videos.begin(), truth_videos.end(), v) == truth_videos.end()) {
        missing.push_back(v);
      }
    }
    if (!missing.empty()) {
      std::string msg = "videos without ground truth:";
      for (const auto& v : missing) msg += " " + v;
      throw lrsd::ArgumentError(msg);
    }
    for (const auto& v : mask_videos) {
      rows.push_back(score_video(v, fs::path(args.masks) / v, fs::path(args.truth) / v));
    }
  } else {
    const std::string video = fs::path(args.masks).filename().string();
    rows.push_back(score_video(video.empty() ? "video" : video, args.masks, args.truth));
  }

  lrsd::write_metrics_csv(args.report, rows);
  for (const auto& row : rows) {
    std::cout << row.video << ": F=" << row.report.f_measure
              << " (macro mean F=" << row.report.macro_f_mean.value_or(0) << ") PWC="
              << row.report.pwc << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"low-rank + sparse decomposition toolkit for background/foreground separation"};
  app.require_subcommand(1);

  DecomposeArgs dargs;
  auto* dec = app.add_subcommand("decompose", "batch decomposition of a frame directory or .dlm");
  dec->add_option("--solver", dargs.solver, "ealm|ialm|spcp|godec|ssgodec|drmf");
  dec->add_option("--input", dargs.input, "frame directory or .dlm matrix")->required();
  dec->add_option("--out", dargs.out, "output directory")->required();
  dec->add_option("--pattern", dargs.pattern, "frame filename glob (default *)");
  dec->add_option("--frame-shape", dargs.frame_shape, "HxW pixel grid for .dlm inputs");
  dec->add_option("--lambda", dargs.lambda, "sparsity weight (default 1/sqrt(max(m,n)))");
  dec->add_option("--rank", dargs.rank, "rank bound r");
  dec->add_option("--card", dargs.card, "sparse cardinality k");
  dec->add_option("--tau", dargs.tau, "soft threshold for ssgodec");
  dec->add_option("--delta", dargs.delta, "noise ball radius for spcp");
  dec->add_option("--tol", dargs.tol, "convergence tolerance");
  dec->add_option("--max-iter", dargs.max_iter, "iteration cap");
  dec->add_option("--seed", dargs.seed, "random seed");
  dec->add_option("--theta", dargs.theta, "foreground threshold (default 0.1)");
  dec->add_flag("--brp", dargs.brp, "use bilateral random projection in godec");
  dec->add_option("--window", dargs.window, "process frames in chunks of N");

  TrackArgs targs;
  auto* trk = app.add_subcommand("track", "streaming decomposition, one frame per step");
  trk->add_option("--solver", targs.solver, "grasta|orpca");
  trk->add_option("--input", targs.input, "frame directory or .dlm matrix")->required();
  trk->add_option("--out", targs.out, "output directory")->required();
  trk->add_option("--pattern", targs.pattern, "frame filename glob (default *)");
  trk->add_option("--frame-shape", targs.frame_shape, "HxW pixel grid for .dlm inputs");
  trk->add_option("--dim", targs.dim, "subspace dimension d");
  trk->add_option("--subsample", targs.subsample, "observed pixel fraction (grasta)");
  trk->add_option("--eta0", targs.eta0, "geodesic step scale");
  trk->add_option("--t0", targs.t0, "step decay horizon");
  trk->add_option("--rho", targs.rho, "ADMM penalty");
  trk->add_option("--admm-iters", targs.admm_iters, "ADMM iteration cap");
  trk->add_option("--lambda1", targs.lambda1, "orpca ridge weight");
  trk->add_option("--lambda2", targs.lambda2, "orpca sparsity weight");
  trk->add_option("--seed", targs.seed, "random seed");
  trk->add_option("--theta", targs.theta, "foreground threshold (default 0.1)");

  EvalArgs eargs;
  auto* ev = app.add_subcommand("eval", "score masks against ground truth");
  ev->add_option("--masks", eargs.masks, "directory of predicted masks")->required();
  ev->add_option("--truth", eargs.truth, "directory of ground-truth masks")->required();
  ev->add_option("--report", eargs.report, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    const std::string command_line = join_command(argc, argv);
    if (dec->parsed()) return run_decompose(dargs, command_line);
    if (trk->parsed()) return run_track(targs, command_line);
    if (ev->parsed()) return run_eval(eargs);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const lrsd::ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const lrsd::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const lrsd::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const lrsd::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const lrsd::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
