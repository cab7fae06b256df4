// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "artifacts.hpp"
#include "commands.hpp"
#include "mobi/ddf_solver.hpp"
#include "mobi/error.hpp"
#include "mobi/forward_sim.hpp"
#include "mobi/lcs_solver.hpp"
#include "mobi/phase_integration.hpp"
#include "mobi/stencils.hpp"
#include "mobi/tensor_field.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using mobi::ScalarField;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mobi_acceptance_" + std::to_string(std::random_device{}())) / name;
  fs::create_directories(p);
  return p;
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mobi");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int status = mobi::cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (status != 0) std::cerr << err.str();
  return status;
}

fs::path write_json(const fs::path& p, const mobi::cli::Json& j) {
  std::ofstream(p) << j.dump(2);
  return p;
}

std::map<std::string, double> read_metrics(const fs::path& p) {
  std::map<std::string, double> m;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) m[line.substr(0, eq)] = std::stod(line.substr(eq + 1));
  }
  return m;
}

mobi::ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const mobi::Error& e) {
    return e.code();
  }
  return mobi::ErrorCode{};
}

ScalarField speckle(std::size_t n, std::uint64_t seed) {
  mobi::SpeckleSpec s;
  s.seed = seed;
  return mobi::generate_speckle(s, n, n);
}

// Shared 512x512 K=10 noiseless run of the default phantom, used by 1 and 3.
struct DefaultRun {
  bool ok = false;
  double seconds = 0.0;
  std::map<std::string, double> metrics;
};

const DefaultRun& default_run() {
  static const DefaultRun run = [] {
    DefaultRun r;
    const fs::path dir = scratch_dir("default");
    const mobi::cli::Json cfg = {
        {"output_dir", dir.string()},
        {"seed", 1},
        {"solver", {{"tensor", true}}},
        {"simulate",
         {{"rows", 512}, {"cols", 512}, {"pairs", 10}, {"phantom", "default"}, {"then_retrieve", true},
          {"saxs", {{"enabled", true}}}}}};
    const fs::path path = write_json(dir / "config.json", cfg);
    const auto t0 = Clock::now();
    const int sim = cli({"simulate", "--config", path.string()});
    r.seconds = seconds_since(t0);
    if (sim != 0 || cli({"compare", "--config", path.string()}) != 0) return r;
    r.metrics = read_metrics(dir / "compare" / "metrics.txt");
    r.ok = true;
    fs::remove_all(dir.parent_path());
    return r;
  }();
  return run;
}

Outcome criterion1() {
  const DefaultRun& r = default_run();
  if (!r.ok) return {false, "pipeline failed"};
  double worst_truth = 0.0, worst_saxs = 0.0;
  for (const char* b : {"bundle_01", "bundle_02"}) {
    const std::string key(b);
    if (!r.metrics.count(key + ".ddf_saxs_difference_deg")) return {false, key + " has no SAXS comparison"};
    worst_truth = std::max(worst_truth, r.metrics.at(key + ".ddf_truth_difference_deg"));
    worst_saxs = std::max(worst_saxs, r.metrics.at(key + ".ddf_saxs_difference_deg"));
  }
  const bool pass = worst_truth <= 2.0 && worst_saxs <= 2.0 && r.seconds <= 60.0;
  return {pass, "max |ddf-truth| " + fmt(worst_truth) + " deg, max |ddf-saxs| " + fmt(worst_saxs) +
                    " deg (<= 2), simulate+retrieve " + fmt(r.seconds, 3) + " s (<= 60)"};
}

Outcome criterion2() {
  const auto t0 = Clock::now();
  const std::size_t n = 128;
  oracle::ScalarTruth s{oracle::random_field(n, n, 11, 1.0, 2.0), oracle::random_field(n, n, 12, -0.5, 0.5),
                        oracle::random_field(n, n, 13, -0.5, 0.5), oracle::random_field(n, n, 14, 0.0, 0.4)};
  oracle::TensorTruth t{s.a, s.disp_x, s.disp_y, oracle::random_field(n, n, 15, 0.1, 0.4),
                        oracle::random_field(n, n, 16, 0.1, 0.4), oracle::random_field(n, n, 17, -0.1, 0.1)};
  mobi::AcquisitionSet scalar_acq, tensor_acq;
  for (std::uint64_t k = 0; k < 6; ++k) {
    const ScalarField ref = speckle(n, 500 + k);
    scalar_acq.pairs.push_back({ref, oracle::linear_model_sample(ref, s)});
    tensor_acq.pairs.push_back({ref, oracle::linear_tensor_sample(ref, t)});
  }
  const auto maps = mobi::solve_scalar(scalar_acq);
  mobi::SolverOptions raw;
  raw.clamp_negative_diffusion = false;
  const auto tens = mobi::solve_tensor(tensor_acq, raw);
  const double seconds = seconds_since(t0);

  double err_s = 0.0, err_t = 0.0;
  std::size_t used_s = 0, used_t = 0;
  for (std::size_t i = 0; i < n * n; ++i) {
    if (maps.condition[i] < 1e6) {
      ++used_s;
      err_s = std::max({err_s, std::fabs(1.0 / maps.transmission[i] - s.a[i]), std::fabs(maps.disp_x[i] - s.disp_x[i]),
                        std::fabs(maps.disp_y[i] - s.disp_y[i]), std::fabs(maps.diffusion[i] - s.diffusion[i])});
    }
    if (tens.condition[i] < 1e6) {
      ++used_t;
      err_t = std::max({err_t, std::fabs(1.0 / tens.transmission[i] - t.a[i]), std::fabs(tens.disp_x[i] - t.disp_x[i]),
                        std::fabs(tens.disp_y[i] - t.disp_y[i]), std::fabs(tens.tensor.dxx[i] - t.txx[i]),
                        std::fabs(tens.tensor.dyy[i] - t.tyy[i]), std::fabs(tens.tensor.dxy[i] - t.txy[i])});
    }
  }
  const bool pass = err_s <= 1e-8 && err_t <= 1e-8 && used_s > 0 && used_t > 0 && seconds <= 5.0;
  return {pass, "max error scalar " + fmt(err_s, 3) + " (" + std::to_string(used_s) + " px), tensor " + fmt(err_t, 3) +
                    " (" + std::to_string(used_t) + " px), <= 1e-8; " + fmt(seconds, 3) + " s (<= 5)"};
}

Outcome criterion3() {
  const DefaultRun& r = default_run();
  if (!r.ok) return {false, "pipeline failed"};
  const double t = r.metrics.at("transmission_rms"), d = r.metrics.at("disp_rms");
  const double f = r.metrics.at("diffusion_relative_error");
  const bool pass = t < 0.01 && d < 0.2 && f < 0.10;
  return {pass, "transmission rms " + fmt(t) + " (< 0.01), displacement rms " + fmt(d) + " px (< 0.2), diffusion rel " +
                    fmt(f) + " (< 0.10) over " + fmt(r.metrics.at("diffusion_pixels"), 7) + " px"};
}

Outcome criterion4() {
  const std::size_t n = 32;
  oracle::ScalarTruth s{ScalarField(n, n, 1.25), ScalarField(n, n, 0.1), ScalarField(n, n, -0.2),
                        ScalarField(n, n, 0.05)};
  auto make = [&](std::size_t k) {
    mobi::AcquisitionSet acq;
    for (std::size_t i = 0; i < k; ++i) {
      const ScalarField ref = speckle(n, 70 + i);
      acq.pairs.push_back({ref, oracle::linear_model_sample(ref, s)});
    }
    return acq;
  };
  const auto k3 = code_of([&] { mobi::solve_scalar(make(3)); });
  const auto k4 = code_of([&] { mobi::solve_scalar(make(4)); });
  const auto k5 = code_of([&] { mobi::solve_tensor(make(5)); });
  const auto k6 = code_of([&] { mobi::solve_tensor(make(6)); });
  const auto rejected = mobi::ErrorCode::kInsufficientMeasurements;
  const bool pass = k3 == rejected && k4 == mobi::ErrorCode{} && k5 == rejected && k6 == mobi::ErrorCode{};
  auto word = [](mobi::ErrorCode c) { return c == mobi::ErrorCode{} ? std::string("ok") : std::string(mobi::to_string(c)); };
  return {pass, "scalar K=3 " + word(k3) + ", K=4 " + word(k4) + "; tensor K=5 " + word(k5) + ", K=6 " + word(k6)};
}

Outcome criterion5() {
  // stencils on quadratics
  double stencil_err = 0.0;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 20; ++trial) {
    const double c0 = u(rng), cx = u(rng), cy = u(rng), cxx = u(rng), cyy = u(rng), cxy = u(rng);
    const ScalarField f = ScalarField::from_function(12, 14, [&](std::size_t r, std::size_t c) {
      const double x = static_cast<double>(c), y = static_cast<double>(r);
      return c0 + cx * x + cy * y + cxx * x * x + cyy * y * y + cxy * x * y;
    });
    const ScalarField gx = mobi::gradient_x(f), gy = mobi::gradient_y(f), l = mobi::laplacian(f);
    const ScalarField xx = mobi::second_derivative_x(f), yy = mobi::second_derivative_y(f);
    const ScalarField xy = mobi::mixed_derivative_xy(f);
    for (std::size_t r = 1; r + 1 < 12; ++r)
      for (std::size_t c = 1; c + 1 < 14; ++c) {
        const double x = static_cast<double>(c), y = static_cast<double>(r);
        stencil_err = std::max({stencil_err, std::fabs(gx(r, c) - (cx + 2 * cxx * x + cxy * y)),
                                std::fabs(gy(r, c) - (cy + 2 * cyy * y + cxy * x)),
                                std::fabs(l(r, c) - 2 * (cxx + cyy)), std::fabs(xx(r, c) - 2 * cxx),
                                std::fabs(yy(r, c) - 2 * cyy), std::fabs(xy(r, c) - cxy)});
      }
  }
  // eigen round trip
  double eig_err = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double a = u(rng), b = u(rng), c = u(rng);
    const auto back = mobi::recompose(mobi::eigen_decompose(a, b, c));
    eig_err = std::max({eig_err, std::fabs(back.dxx - a), std::fabs(back.dyy - b), std::fabs(back.dxy - c)});
  }
  // orientation wraparound
  struct Case {
    double a, b, expect;
  };
  const Case cases[] = {{179, 1, 2}, {1, 179, 2}, {0, 90, 90}, {10, 170, 20}, {0, 0, 0}, {45, 135, 90}, {120, 30, 90}};
  bool wrap_ok = true;
  for (const auto& k : cases) wrap_ok = wrap_ok && mobi::orientation_difference(k.a, k.b) == k.expect;
  const bool pass = stencil_err <= 1e-12 && eig_err <= 1e-10 && wrap_ok;
  return {pass, "stencil " + fmt(stencil_err, 3) + " (<= 1e-12), recomposition " + fmt(eig_err, 3) +
                    " (<= 1e-10), wraparound cases " + (wrap_ok ? "exact" : "WRONG")};
}

Outcome criterion6() {
  const mobi::Geometry g{3200.0, 75.0, 8.0};
  const auto alpha = mobi::refraction_from_displacement(ScalarField(1, 1, 1.0), ScalarField(1, 1, 0.0), g);
  const double a = alpha.alpha_x[0];
  const bool alpha_ok = std::fabs(a - 2.34375e-5) <= 1e-15 * 2.34375e-5;

  // retrieved phase of a lone wire
  const std::size_t n = 256;
  const double radius = 20.0, delta = 1.5e-6, axis = 128.0;
  mobi::PhantomSpec spec;
  spec.elements.push_back(mobi::Cylinder{{128.0, axis}, radius, 90.0, delta, 0.0});
  const auto truth = mobi::render_phantom(spec, n, n, g);
  mobi::AcquisitionSet acq;
  acq.geometry = g;
  for (std::uint64_t k = 0; k < 10; ++k) {
    const ScalarField ref = speckle(n, 300 + k);
    acq.pairs.push_back({ref, mobi::simulate_acquisition(ref, truth).image});
  }
  const ScalarField phi = mobi::phase_from_retrieval(mobi::solve_scalar(acq), g).phi;

  // column profiles averaged over the central rows, both made mean-zero
  std::vector<double> got(n, 0.0), want(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = 64; r < 192; ++r) got[c] += phi(r, c) / 128.0;
    const double x = static_cast<double>(c) - axis;
    want[c] = -g.wavenumber_per_um() * delta * mobi::cylinder_thickness(radius, x) * g.pixel_pitch_um;
  }
  auto demean = [](std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x / static_cast<double>(v.size());
    for (double& x : v) x -= m;
  };
  demean(got);
  demean(want);
  const std::size_t centre = static_cast<std::size_t>(axis);
  const double peak = std::fabs(want[centre]);
  const double peak_err = std::fabs(got[centre] - want[centre]) / peak;
  const bool pass = alpha_ok && peak_err <= 0.10;
  std::ostringstream a_str;
  a_str.precision(17);
  a_str << a;
  return {pass, "alpha(1 px) = " + a_str.str() + " rad (2.34375e-5 exact), wire phase peak error " +
                    fmt(100 * peak_err, 3) + "% (<= 10%)"};
}

Outcome criterion7() {
  const fs::path dir = scratch_dir("determinism");
  const mobi::cli::Json cfg = {
      {"output_dir", (dir / "unused").string()},
      {"seed", 42},
      {"solver", {{"tensor", true}}},
      {"simulate", {{"rows", 256}, {"cols", 256}, {"pairs", 8}, {"photon_scale", 10.0}, {"phantom", "default"}}}};
  const fs::path path = write_json(dir / "config.json", cfg);
  std::vector<std::map<std::string, std::string>> sums;
  for (const char* threads : {"1", "4", "1"}) {
    const fs::path out = dir / ("run" + std::to_string(sums.size()));
    if (cli({"simulate", "--config", path.string(), "--threads", threads, "--out", out.string()}) != 0 ||
        cli({"retrieve", "--config", path.string(), "--threads", threads, "--out", out.string()}) != 0) {
      return {false, "pipeline failed"};
    }
    std::map<std::string, std::string> all;
    for (const char* cmd : {"simulate", "retrieve"}) {
      std::ifstream in(out / ("manifest_" + std::string(cmd) + ".json"));
      const auto m = mobi::cli::Json::parse(in);
      for (const auto& [k, v] : m.at("outputs").items()) all[k] = v.get<std::string>();
    }
    sums.push_back(all);
  }
  fs::remove_all(dir.parent_path());
  const bool pass = !sums[0].empty() && sums[0] == sums[1] && sums[0] == sums[2];
  return {pass, std::to_string(sums[0].size()) + " artifacts, checksums " +
                    (pass ? "identical" : "differ") + " across runs with 1, 4 and 1 threads"};
}

Outcome criterion8() {
  const std::size_t n = 256;
  const mobi::Geometry g;
  const auto truth = mobi::render_phantom(mobi::default_phantom(n, n), n, n, g);
  const double photons = 10.0;  // speckle mean 1000 -> 1e4 counts per pixel
  auto median_error = [&](const mobi::AcquisitionSet& acq) {
    const auto maps = mobi::solve_scalar(acq);
    std::vector<double> e(n * n);
    for (std::size_t i = 0; i < e.size(); ++i)
      e[i] = std::hypot(maps.disp_x[i] - truth.disp_x[i], maps.disp_y[i] - truth.disp_y[i]);
    std::nth_element(e.begin(), e.begin() + e.size() / 2, e.end());
    return e[e.size() / 2];
  };
  std::vector<double> k4, k10;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    mobi::AcquisitionSet acq;
    acq.geometry = g;
    for (std::uint64_t k = 0; k < 10; ++k) {
      const ScalarField clean = speckle(n, seed * 1000 + k);
      const ScalarField sample = mobi::simulate_acquisition(clean, truth, photons, seed * 7919 + k).image;
      acq.pairs.push_back({mobi::apply_poisson_noise(clean, photons, seed * 104729 + k), sample});
    }
    k10.push_back(median_error(acq));
    acq.pairs.resize(4);
    k4.push_back(median_error(acq));
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  const double m4 = median(k4), m10 = median(k10);
  return {m10 <= m4, "median displacement error K=10 " + fmt(m10) + " px vs K=4 " + fmt(m4) + " px over 5 seeds"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, Outcome (*)()>> criteria = {
      {"orientation agreement", criterion1}, {"linear-regime exactness", criterion2},
      {"forward round trip", criterion3},    {"membrane-count contract", criterion4},
      {"stencil and eigen oracles", criterion5}, {"phase chain", criterion6},
      {"determinism", criterion7},           {"noise robustness", criterion8}};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first << "): " << o.detail
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
