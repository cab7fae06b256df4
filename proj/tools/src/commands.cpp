#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "artifacts.hpp"
#include "mobi/ddf_solver.hpp"
#include "mobi/forward_sim.hpp"
#include "mobi/image_io.hpp"
#include "mobi/lcs_solver.hpp"
#include "mobi/parallel.hpp"
#include "mobi/phase_integration.hpp"
#include "mobi/saxs.hpp"

#ifndef MOBI_VERSION
#define MOBI_VERSION "unknown"
#endif

namespace mobi::cli {

namespace {

// Stream ids for derive_seed.
constexpr std::uint64_t kSpeckleStream = 1;
constexpr std::uint64_t kSampleNoiseStream = 2;
constexpr std::uint64_t kReferenceNoiseStream = 3;
constexpr std::uint64_t kSaxsStream = 4;

// Scalar diffusion is scored only where the true value exceeds this (pixel^2).
constexpr double kDiffusionScoreFloor = 0.1;

std::string indexed(const char* stem, std::size_t k, const char* ext = ".tif") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%02zu%s", stem, k, ext);
  return buf;
}

std::size_t required_pairs(bool tensor) { return tensor ? 6 : 4; }

ScalarField load_map(const fs::path& dir, const std::string& name) {
  const fs::path p = dir / (name + ".tif");
  if (!fs::exists(p)) fail(ErrorCode::kMissingArtifact, "missing map " + p.string());
  return load_image(p);
}

std::optional<ScalarField> load_optional(const fs::path& dir, const std::string& name) {
  const fs::path p = dir / (name + ".tif");
  if (!fs::exists(p)) return std::nullopt;
  return load_image(p);
}

std::optional<DiffusionTensorField> load_tensor(const fs::path& dir) {
  auto dxx = load_optional(dir, "dxx");
  auto dyy = load_optional(dir, "dyy");
  auto dxy = load_optional(dir, "dxy");
  if (!dxx && !dyy && !dxy) return std::nullopt;
  if (!dxx || !dyy || !dxy)
    fail(ErrorCode::kMissingArtifact, "incomplete tensor maps (dxx, dyy, dxy) in " + dir.string());
  require_same_shape(*dxx, *dyy, "tensor dyy");
  require_same_shape(*dxx, *dxy, "tensor dxy");
  DiffusionTensorField t;
  t.dxx = std::move(*dxx);
  t.dyy = std::move(*dyy);
  t.dxy = std::move(*dxy);
  return t;
}

void save_ellipse(RunRecorder& rec, const fs::path& dir, const EllipseMaps& e) {
  rec.save(dir / "orientation.tif", e.orientation_deg);
  rec.save(dir / "anisotropy.tif", e.anisotropy);
  rec.save(dir / "mean_diffusion.tif", e.mean_diffusion);
  rec.save(dir / "valid.tif", e.valid.to_field());
  const fs::path ppm = dir / "orientation_hsv.ppm";
  save_rgb_ppm(ppm, e.orientation_deg.rows(), e.orientation_deg.cols(), orientation_rgb(e));
  rec.record(ppm);
}

double rms(const ScalarField& a, const ScalarField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

struct Bundle {
  std::size_t index = 0;  // 1-based among fiber bundles
  FiberBundle spec;
};

std::vector<Bundle> bundles_of(const PhantomSpec& phantom) {
  std::vector<Bundle> out;
  for (const auto& e : phantom.elements)
    if (const auto* b = std::get_if<FiberBundle>(&e)) out.push_back({out.size() + 1, *b});
  return out;
}

std::vector<SaxsPatternFile> patterns_from_index(const fs::path& index) {
  std::ifstream in(index);
  if (!in) fail(ErrorCode::kMissingArtifact, "missing SAXS pattern index " + index.string());
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    fail(ErrorCode::kUnreadableFile, index.string() + ": " + e.what());
  }
  Json wrapper{{"saxs", {{"patterns", doc.value("patterns", Json::array())}}}};
  return parse_config(std::move(wrapper), index.parent_path()).saxs.patterns;
}

SaxsOrientation orient_pattern(const SaxsPatternFile& f, const SaxsConfig& saxs) {
  SaxsPattern pattern;
  pattern.image = load_image(f.path, f.raw);
  pattern.beam_center_row = f.beam_center_row;
  pattern.beam_center_col = f.beam_center_col;
  pattern.q_per_px = f.q_per_px;
  if (f.mask) {
    const ScalarField m = load_image(*f.mask, f.raw);
    require_same_shape(pattern.image, m, "SAXS mask");
    pattern.excluded = Mask::from_field(m);
  }
  const AzimuthalProfile profile = azimuthal_profile(pattern, saxs.q_min, saxs.q_max, saxs.bins);
  return orientation_from_pattern(profile, saxs.orientation);
}

fs::path truth_dir(const RunConfig& cfg) { return cfg.truth_dir.value_or(cfg.output_dir / "truth"); }
fs::path retrieved_dir(const RunConfig& cfg) {
  return cfg.retrieved_dir.value_or(cfg.output_dir / "retrieved");
}

}  // namespace

void run_simulate(const RunConfig& cfg, std::ostream& log) {
  const SimulateConfig& sim = cfg.simulate;
  if (sim.then_retrieve && sim.pairs < required_pairs(cfg.tensor)) {
    fail(ErrorCode::kConfig,
         "invalid configuration (1 problem):\n  simulate.pairs: retrieval needs at least " +
             std::to_string(required_pairs(cfg.tensor)) + " membrane positions, got " +
             std::to_string(sim.pairs));
  }
  set_thread_count(cfg.threads);
  RunRecorder rec("simulate", cfg);

  const PhantomSpec phantom = sim.phantom.value_or(default_phantom(sim.rows, sim.cols));
  const GroundTruth truth =
      rec.stage("render_phantom", [&] { return render_phantom(phantom, sim.rows, sim.cols, cfg.geometry); });

  const fs::path tdir = cfg.output_dir / "truth";
  rec.save(tdir / "transmission.tif", truth.transmission);
  rec.save(tdir / "disp_x.tif", truth.disp_x);
  rec.save(tdir / "disp_y.tif", truth.disp_y);
  rec.save(tdir / "dxx.tif", truth.tensor.dxx);
  rec.save(tdir / "dyy.tif", truth.tensor.dyy);
  rec.save(tdir / "dxy.tif", truth.tensor.dxy);
  Json phantom_doc{{"rows", sim.rows},
                   {"cols", sim.cols},
                   {"geometry",
                    {{"z2_mm", cfg.geometry.z2_mm},
                     {"pixel_pitch_um", cfg.geometry.pixel_pitch_um},
                     {"energy_keV", cfg.geometry.energy_keV}}},
                   {"phantom", phantom_to_json(phantom)}};
  rec.save_text(tdir / "phantom.json", phantom_doc.dump(2) + "\n");

  const fs::path adir = cfg.output_dir / "acquisition";
  rec.stage("acquisition", [&] {
    for (std::size_t k = 1; k <= sim.pairs; ++k) {
      SpeckleSpec speckle = sim.speckle;
      speckle.seed = derive_seed(cfg.seed, kSpeckleStream, k);
      ScalarField reference = generate_speckle(speckle, sim.rows, sim.cols);
      SimulatedImage sample = simulate_acquisition(reference, truth, sim.photon_scale,
                                                   derive_seed(cfg.seed, kSampleNoiseStream, k));
      for (const auto& w : sample.warnings) rec.warn(w);
      if (sim.photon_scale) {
        reference = apply_poisson_noise(reference, *sim.photon_scale,
                                        derive_seed(cfg.seed, kReferenceNoiseStream, k));
      }
      rec.save(adir / indexed("ref", k), reference);
      rec.save(adir / indexed("sample", k), sample.image);
    }
  });

  const std::vector<Bundle> bundles = bundles_of(phantom);
  if (sim.saxs.enabled && !bundles.empty()) {
    rec.stage("saxs_synthesis", [&] {
      const fs::path sdir = tdir / "saxs";
      Json patterns = Json::array();
      for (const Bundle& b : bundles) {
        SyntheticSaxsSpec spec = sim.saxs.spec;
        spec.fiber_deg = b.spec.orientation_deg;
        spec.seed = derive_seed(cfg.seed, kSaxsStream, b.index);
        const SaxsPattern pattern = synthesize_fiber_pattern(spec);
        const std::string label = indexed("bundle", b.index, "");
        rec.save(sdir / (label + ".tif"), pattern.image);
        rec.save(sdir / (label + "_mask.tif"), pattern.excluded.to_field());
        patterns.push_back({{"label", label},
                            {"path", label + ".tif"},
                            {"beam_center_row", pattern.beam_center_row},
                            {"beam_center_col", pattern.beam_center_col},
                            {"q_per_px", pattern.q_per_px},
                            {"mask", label + "_mask.tif"}});
      }
      rec.save_text(sdir / "patterns.json", Json{{"patterns", patterns}}.dump(2) + "\n");
    });
  }

  for (const auto& w : rec.warnings()) log << "warning: " << w << "\n";
  log << "simulate: " << sim.pairs << " pairs of " << sim.rows << "x" << sim.cols << " written to "
      << cfg.output_dir.string() << "\n";
  rec.write_manifest();

  if (sim.then_retrieve) run_retrieve(cfg, log);
}

void run_retrieve(const RunConfig& cfg, std::ostream& log) {
  std::vector<fs::path> refs, samples;
  std::optional<RawLayout> raw;
  if (cfg.acquisition) {
    refs = cfg.acquisition->references;
    samples = cfg.acquisition->samples;
    raw = cfg.acquisition->raw;
  } else {
    const fs::path adir = cfg.output_dir / "acquisition";
    for (std::size_t k = 1; fs::exists(adir / indexed("ref", k)); ++k) {
      refs.push_back(adir / indexed("ref", k));
      samples.push_back(adir / indexed("sample", k));
      if (!fs::exists(samples.back()))
        fail(ErrorCode::kMissingArtifact, "missing " + samples.back().string());
    }
    if (refs.empty())
      fail(ErrorCode::kMissingArtifact,
           "no acquisition lists in the config and no " + (adir / indexed("ref", 1)).string());
  }
  const std::size_t need = required_pairs(cfg.tensor);
  if (refs.size() < need) {
    fail(ErrorCode::kInsufficientMeasurements,
         std::string(cfg.tensor ? "tensor" : "scalar") + " retrieval needs at least " +
             std::to_string(need) + " membrane positions, got " + std::to_string(refs.size()));
  }

  set_thread_count(cfg.threads);
  RunRecorder rec("retrieve", cfg);
  AcquisitionSet acq;
  acq.geometry = cfg.geometry;
  rec.stage("load", [&] {
    for (std::size_t k = 0; k < refs.size(); ++k) {
      acq.pairs.push_back({load_image(refs[k], raw), load_image(samples[k], raw)});
    }
    acq.validate();
  });

  const fs::path out = retrieved_dir(cfg);
  const RetrievalMaps maps = rec.stage("solve_scalar", [&] { return solve_scalar(acq, cfg.solver); });
  const PhaseMap phase =
      rec.stage("integrate_phase", [&] { return phase_from_retrieval(maps, cfg.geometry); });
  const RefractionMaps alpha = refraction_from_displacement(maps, cfg.geometry);
  rec.save(out / "transmission.tif", maps.transmission);
  rec.save(out / "disp_x.tif", maps.disp_x);
  rec.save(out / "disp_y.tif", maps.disp_y);
  rec.save(out / "diffusion.tif", maps.diffusion);
  rec.save(out / "residual_rms.tif", maps.residual_rms);
  rec.save(out / "condition.tif", maps.condition);
  rec.save(out / "alpha_x.tif", alpha.alpha_x);
  rec.save(out / "alpha_y.tif", alpha.alpha_y);
  rec.save(out / "phase.tif", phase.phi);

  if (cfg.tensor) {
    const TensorRetrieval t = rec.stage("solve_tensor", [&] { return solve_tensor(acq, cfg.solver); });
    rec.save(out / "dxx.tif", t.tensor.dxx);
    rec.save(out / "dyy.tif", t.tensor.dyy);
    rec.save(out / "dxy.tif", t.tensor.dxy);
    rec.save(out / "tensor_transmission.tif", t.transmission);
    rec.save(out / "tensor_disp_x.tif", t.disp_x);
    rec.save(out / "tensor_disp_y.tif", t.disp_y);
    rec.save(out / "tensor_residual_rms.tif", t.residual_rms);
    rec.save(out / "tensor_condition.tif", t.condition);
    rec.save(out / "tensor_clamped.tif", t.clamped.to_field());
    const EllipseMaps ellipse = decompose_tensor(t.tensor, cfg.decompose);
    save_ellipse(rec, out, ellipse);
    if (t.clamped.count() > 0)
      rec.warn(std::to_string(t.clamped.count()) + " pixels had a negative tensor eigenvalue clamped");
  }

  for (const auto& w : rec.warnings()) log << "warning: " << w << "\n";
  log << "retrieve: K=" << acq.count() << (cfg.tensor ? " (tensor)" : "") << ", maps written to "
      << out.string() << "\n";
  rec.write_manifest();
}

void run_decompose(const RunConfig& cfg, std::ostream& log) {
  set_thread_count(cfg.threads);
  RunRecorder rec("decompose", cfg);
  const fs::path in = cfg.tensor_dir.value_or(cfg.output_dir / "retrieved");
  const auto tensor = load_tensor(in);
  if (!tensor) fail(ErrorCode::kMissingArtifact, "no tensor maps (dxx, dyy, dxy) in " + in.string());
  const EllipseMaps e = rec.stage("decompose", [&] { return decompose_tensor(*tensor, cfg.decompose); });
  const fs::path out = cfg.output_dir / "decomposed";
  save_ellipse(rec, out, e);
  log << "decompose: " << e.valid.count() << " of " << e.valid.size()
      << " pixels carry a defined orientation; maps in " << out.string() << "\n";
  rec.write_manifest();
}

void run_saxs_orient(const RunConfig& cfg, std::ostream& log) {
  RunRecorder rec("saxs-orient", cfg);
  const std::vector<SaxsPatternFile> patterns =
      cfg.saxs.patterns.empty() ? patterns_from_index(truth_dir(cfg) / "saxs" / "patterns.json")
                                : cfg.saxs.patterns;
  const fs::path out = cfg.output_dir / "saxs_orient";
  std::ostringstream kv;
  for (const auto& f : patterns) {
    const SaxsOrientation o = rec.stage("orient_" + f.label, [&] { return orient_pattern(f, cfg.saxs); });
    kv << f.label << ".psi_deg=" << fmt(o.psi_deg, 10) << "\n"
       << f.label << ".fiber_deg=" << fmt(fold_orientation(o.psi_deg + 90.0), 10) << "\n"
       << f.label << ".anisotropy=" << fmt(o.anisotropy, 10) << "\n"
       << f.label << ".defined=" << (o.defined ? 1 : 0) << "\n";
    log << "saxs-orient: " << f.label << " psi " << fmt(o.psi_deg, 5) << " deg, anisotropy "
        << fmt(o.anisotropy, 4) << (o.defined ? "" : " (orientation undefined)") << "\n";
  }
  rec.save_text(out / "orientation.txt", kv.str());
  rec.write_manifest();
}

void run_compare(const RunConfig& cfg, std::ostream& log) {
  RunRecorder rec("compare", cfg);
  const fs::path tdir = truth_dir(cfg);
  const fs::path rdir = retrieved_dir(cfg);

  std::vector<std::pair<std::string, double>> metrics;
  std::ostringstream table;
  rec.stage("compare", [&] {
    const ScalarField t_T = load_map(tdir, "transmission");
    const ScalarField t_x = load_map(tdir, "disp_x");
    const ScalarField t_y = load_map(tdir, "disp_y");
    const ScalarField r_T = load_map(rdir, "transmission");
    const ScalarField r_x = load_map(rdir, "disp_x");
    const ScalarField r_y = load_map(rdir, "disp_y");
    require_same_shape(t_T, r_T, "retrieved transmission");
    require_same_shape(t_T, t_x, "truth disp_x");
    require_same_shape(t_T, t_y, "truth disp_y");
    require_same_shape(t_T, r_x, "retrieved disp_x");
    require_same_shape(t_T, r_y, "retrieved disp_y");

    const double ex = rms(t_x, r_x), ey = rms(t_y, r_y);
    metrics.emplace_back("transmission_rms", rms(t_T, r_T));
    metrics.emplace_back("disp_x_rms", ex);
    metrics.emplace_back("disp_y_rms", ey);
    metrics.emplace_back("disp_rms", std::sqrt(ex * ex + ey * ey));

    const auto t_tensor = load_tensor(tdir);
    const auto r_tensor = load_tensor(rdir);
    std::optional<ScalarField> r_diff = load_optional(rdir, "diffusion");
    if (!r_diff && r_tensor) r_diff = 0.5 * (r_tensor->dxx + r_tensor->dyy);
    if (t_tensor && r_diff) {
      require_same_shape(t_T, t_tensor->dxx, "truth tensor");
      require_same_shape(t_T, *r_diff, "retrieved diffusion");
      double num = 0.0, den = 0.0;
      std::size_t n = 0;
      for (std::size_t i = 0; i < t_T.size(); ++i) {
        const double truth = 0.5 * (t_tensor->dxx[i] + t_tensor->dyy[i]);
        if (truth <= kDiffusionScoreFloor) continue;
        num += ((*r_diff)[i] - truth) * ((*r_diff)[i] - truth);
        den += truth * truth;
        ++n;
      }
      metrics.emplace_back("diffusion_pixels", static_cast<double>(n));
      if (n > 0) metrics.emplace_back("diffusion_relative_error", std::sqrt(num / den));
    }

    table << "quantity                 value\n";
    for (const auto& [k, v] : metrics) table << std::left << std::setw(25) << k << fmt(v) << "\n";

    const fs::path phantom_path = tdir / "phantom.json";
    if (!t_tensor || !r_tensor || !fs::exists(phantom_path)) return;
    require_same_shape(t_T, r_tensor->dxx, "retrieved tensor");
    std::ifstream in(phantom_path);
    const PhantomSpec phantom = phantom_from_json(Json::parse(in).at("phantom"));
    const std::vector<Bundle> bundles = bundles_of(phantom);
    if (bundles.empty()) return;

    std::vector<SaxsPatternFile> patterns;
    if (fs::exists(tdir / "saxs" / "patterns.json")) patterns = patterns_from_index(tdir / "saxs" / "patterns.json");

    const EllipseMaps ellipse = decompose_tensor(*r_tensor, cfg.decompose);
    table << "\nbundle  truth_fiber  ddf_fiber  saxs_fiber  |ddf-truth|  |ddf-saxs|  coverage\n";
    double worst = 0.0;
    for (const Bundle& b : bundles) {
      const std::string key = indexed("bundle", b.index, "");
      const Roi roi = polygon_mask(b.spec.polygon, t_T.rows(), t_T.cols(), b.spec.feather_px + 2.0);
      std::optional<double> psi;
      for (const auto& f : patterns) {
        if (f.label == key) {
          const SaxsOrientation o = orient_pattern(f, cfg.saxs);
          if (o.defined) psi = o.psi_deg;
        }
      }
      const DdfSaxsComparison c = compare_ddf_saxs(ellipse, roi, psi.value_or(0.0));
      const double d_truth = orientation_difference(c.ddf_fiber_deg, b.spec.orientation_deg);
      worst = std::max(worst, d_truth);
      metrics.emplace_back(key + ".truth_fiber_deg", b.spec.orientation_deg);
      metrics.emplace_back(key + ".ddf_fiber_deg", c.ddf_fiber_deg);
      metrics.emplace_back(key + ".ddf_truth_difference_deg", d_truth);
      metrics.emplace_back(key + ".coverage", c.coverage);
      table << std::left << std::setw(8) << key.substr(7) << std::setw(13) << fmt(b.spec.orientation_deg, 5)
            << std::setw(11) << fmt(c.ddf_fiber_deg, 5);
      if (psi) {
        worst = std::max(worst, c.difference_deg);
        metrics.emplace_back(key + ".saxs_fiber_deg", c.saxs_fiber_deg);
        metrics.emplace_back(key + ".ddf_saxs_difference_deg", c.difference_deg);
        table << std::setw(12) << fmt(c.saxs_fiber_deg, 5) << std::setw(13) << fmt(d_truth, 3)
              << std::setw(12) << fmt(c.difference_deg, 3);
      } else {
        table << std::setw(12) << "-" << std::setw(13) << fmt(d_truth, 3) << std::setw(12) << "-";
      }
      table << fmt(c.coverage, 3) << "\n";
    }
    metrics.emplace_back("max_orientation_difference_deg", worst);
  });

  std::ostringstream kv;
  for (const auto& [k, v] : metrics) kv << k << "=" << fmt(v, 12) << "\n";
  const fs::path out = cfg.output_dir / "compare";
  rec.save_text(out / "metrics.txt", kv.str());
  rec.save_text(out / "table.txt", table.str());
  log << table.str();
  rec.write_manifest();
}

int exit_code(ErrorCode code) noexcept { return 10 + static_cast<int>(code); }

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"mobi: modulation-based X-ray imaging retrieval and simulation", "mobi"};
  app.set_version_flag("--version", MOBI_VERSION);
  app.require_subcommand(1);

  std::string config_path;
  bool tensor = false;
  std::uint64_t seed = 0;
  std::string out_dir;
  int threads = 0;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"simulate", "render a phantom and write acquisitions plus ground truth"},
      {"retrieve", "per-pixel retrieval of transmission, displacement, dark-field and phase"},
      {"decompose", "ellipse maps from stored tensor components"},
      {"saxs-orient", "scattering orientation of SAXS patterns"},
      {"compare", "score retrieved maps against ground truth"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_flag("--tensor", tensor, "also solve for the directional dark-field tensor");
    sub->add_option("--seed", seed, "override the run seed");
    sub->add_option("--out", out_dir, "override the output directory");
    sub->add_option("--threads", threads, "worker threads, 0 for the default")->check(CLI::NonNegativeNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int status = app.exit(e, out, err);
    return status == 0 ? 0 : kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  Overrides ov;
  if (tensor) ov.tensor = true;
  if (sub->count("--seed") > 0) ov.seed = seed;
  if (sub->count("--out") > 0) ov.output_dir = out_dir;
  if (sub->count("--threads") > 0) ov.threads = threads;

  try {
    const RunConfig cfg = load_config(config_path, ov);
    const std::string& name = sub->get_name();
    if (name == "simulate") run_simulate(cfg, out);
    else if (name == "retrieve") run_retrieve(cfg, out);
    else if (name == "decompose") run_decompose(cfg, out);
    else if (name == "saxs-orient") run_saxs_orient(cfg, out);
    else run_compare(cfg, out);
  } catch (const Error& e) {
    err << "mobi: " << to_string(e.code()) << " error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "mobi: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return 0;
}

}  // namespace mobi::cli
