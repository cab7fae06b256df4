#include "run_config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "mobi/error.hpp"

namespace mobi::cli {

namespace {

// Collects every problem instead of stopping at the first one.
class Checker {
 public:
  std::vector<std::string> issues;

  void add(const std::string& key, const std::string& what) { issues.push_back(key + ": " + what); }

  static std::string join(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
  }

  void known(const Json& obj, const std::string& prefix, std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || item.key() == a;
      if (!ok) add(join(prefix, item.key()), "unknown key");
    }
  }

  // Returns the sub-object or nullptr when absent or not an object.
  const Json* object(const Json& parent, const std::string& prefix, const char* key) {
    if (!parent.contains(key)) return nullptr;
    const Json& v = parent.at(key);
    if (!v.is_object()) {
      add(join(prefix, key), "expected an object");
      return nullptr;
    }
    return &v;
  }

  bool number(const Json& obj, const std::string& prefix, const char* key, double& out) {
    if (!obj.contains(key)) return false;
    const Json& v = obj.at(key);
    if (!v.is_number()) {
      add(join(prefix, key), "expected a number");
      return false;
    }
    out = v.get<double>();
    return true;
  }

  bool count(const Json& obj, const std::string& prefix, const char* key, std::size_t& out) {
    if (!obj.contains(key)) return false;
    const Json& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      add(join(prefix, key), "expected a non-negative integer");
      return false;
    }
    out = v.get<std::size_t>();
    return true;
  }

  bool boolean(const Json& obj, const std::string& prefix, const char* key, bool& out) {
    if (!obj.contains(key)) return false;
    const Json& v = obj.at(key);
    if (!v.is_boolean()) {
      add(join(prefix, key), "expected true or false");
      return false;
    }
    out = v.get<bool>();
    return true;
  }

  bool string(const Json& obj, const std::string& prefix, const char* key, std::string& out) {
    if (!obj.contains(key)) return false;
    const Json& v = obj.at(key);
    if (!v.is_string()) {
      add(join(prefix, key), "expected a string");
      return false;
    }
    out = v.get<std::string>();
    return true;
  }

  void positive(const std::string& key, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) add(key, "must be a finite number > 0");
  }
};

fs::path resolve(const fs::path& base, const fs::path& p) {
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

std::optional<RawLayout> parse_raw(Checker& ck, const Json& parent, const std::string& prefix) {
  const Json* raw = ck.object(parent, prefix, "raw");
  if (!raw) return std::nullopt;
  const std::string where = Checker::join(prefix, "raw");
  ck.known(*raw, where, {"rows", "cols", "type"});
  RawLayout layout;
  if (!ck.count(*raw, where, "rows", layout.rows) || layout.rows == 0) ck.add(where + ".rows", "required, > 0");
  if (!ck.count(*raw, where, "cols", layout.cols) || layout.cols == 0) ck.add(where + ".cols", "required, > 0");
  std::string type = "float32";
  ck.string(*raw, where, "type", type);
  if (type == "float32") {
    layout.type = SampleType::kFloat32;
  } else if (type == "float64") {
    layout.type = SampleType::kFloat64;
  } else {
    ck.add(where + ".type", "expected float32 or float64");
  }
  return layout;
}

void parse_point(Checker& ck, const Json& v, const std::string& key, PixelPoint& out) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    ck.add(key, "expected [row, col]");
    return;
  }
  out = {v[0].get<double>(), v[1].get<double>()};
}

PhantomSpec parse_phantom(Checker& ck, const Json& j, const std::string& prefix) {
  PhantomSpec spec;
  if (!j.is_object()) {
    ck.add(prefix, "expected \"default\" or an object with \"elements\"");
    return spec;
  }
  ck.known(j, prefix, {"elements"});
  if (!j.contains("elements") || !j.at("elements").is_array()) {
    ck.add(prefix + ".elements", "expected an array");
    return spec;
  }
  const Json& elements = j.at("elements");
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const std::string where = prefix + ".elements[" + std::to_string(i) + "]";
    const Json& e = elements[i];
    std::string type;
    if (!e.is_object() || !ck.string(e, where, "type", type)) {
      ck.add(where + ".type", "required (cylinder or fiber_bundle)");
      continue;
    }
    if (type == "cylinder") {
      ck.known(e, where, {"type", "center", "radius_px", "axis_angle_deg", "delta", "mu_t"});
      Cylinder c;
      if (e.contains("center")) parse_point(ck, e.at("center"), where + ".center", c.center);
      else ck.add(where + ".center", "required");
      ck.number(e, where, "radius_px", c.radius_px);
      ck.number(e, where, "axis_angle_deg", c.axis_angle_deg);
      ck.number(e, where, "delta", c.delta);
      ck.number(e, where, "mu_t", c.mu_t);
      if (!(c.radius_px > 0.0)) ck.add(where + ".radius_px", "must be > 0");
      if (!(c.mu_t >= 0.0)) ck.add(where + ".mu_t", "must be >= 0");
      spec.elements.emplace_back(c);
    } else if (type == "fiber_bundle") {
      ck.known(e, where, {"type", "polygon", "orientation_deg", "d_parallel", "d_perp", "mu_t",
                          "feather_px"});
      FiberBundle b;
      if (e.contains("polygon") && e.at("polygon").is_array()) {
        const Json& poly = e.at("polygon");
        for (std::size_t v = 0; v < poly.size(); ++v) {
          PixelPoint p;
          parse_point(ck, poly[v], where + ".polygon[" + std::to_string(v) + "]", p);
          b.polygon.push_back(p);
        }
        if (b.polygon.size() < 3) ck.add(where + ".polygon", "needs at least 3 vertices");
      } else {
        ck.add(where + ".polygon", "required array of [row, col]");
      }
      ck.number(e, where, "orientation_deg", b.orientation_deg);
      ck.number(e, where, "d_parallel", b.d_parallel);
      ck.number(e, where, "d_perp", b.d_perp);
      ck.number(e, where, "mu_t", b.mu_t);
      ck.number(e, where, "feather_px", b.feather_px);
      if (!(b.orientation_deg >= 0.0 && b.orientation_deg < 180.0))
        ck.add(where + ".orientation_deg", "must lie in [0, 180)");
      if (!(b.d_parallel >= 0.0)) ck.add(where + ".d_parallel", "must be >= 0");
      if (!(b.d_perp >= b.d_parallel)) ck.add(where + ".d_perp", "must be >= d_parallel");
      if (!(b.mu_t >= 0.0)) ck.add(where + ".mu_t", "must be >= 0");
      if (!(b.feather_px >= 0.0)) ck.add(where + ".feather_px", "must be >= 0");
      spec.elements.emplace_back(b);
    } else {
      ck.add(where + ".type", "unknown element type '" + type + "'");
    }
  }
  return spec;
}

void parse_simulate(Checker& ck, const Json& j, SimulateConfig& sim) {
  const std::string p = "simulate";
  ck.known(j, p, {"rows", "cols", "pairs", "speckle", "phantom", "photon_scale", "then_retrieve",
                  "saxs"});
  ck.count(j, p, "rows", sim.rows);
  ck.count(j, p, "cols", sim.cols);
  ck.count(j, p, "pairs", sim.pairs);
  if (sim.rows < 32) ck.add("simulate.rows", "must be >= 32");
  if (sim.cols < 32) ck.add("simulate.cols", "must be >= 32");
  if (sim.pairs < 1) ck.add("simulate.pairs", "must be >= 1");
  ck.boolean(j, p, "then_retrieve", sim.then_retrieve);

  if (j.contains("photon_scale") && !j.at("photon_scale").is_null()) {
    double scale = 0.0;
    if (ck.number(j, p, "photon_scale", scale)) {
      ck.positive("simulate.photon_scale", scale);
      sim.photon_scale = scale;
    }
  }

  if (const Json* sp = ck.object(j, p, "speckle")) {
    const std::string w = "simulate.speckle";
    ck.known(*sp, w, {"grain_size_px", "contrast", "mean_intensity"});
    ck.number(*sp, w, "grain_size_px", sim.speckle.grain_size_px);
    ck.number(*sp, w, "contrast", sim.speckle.contrast);
    ck.number(*sp, w, "mean_intensity", sim.speckle.mean_intensity);
    if (!(sim.speckle.grain_size_px >= 1.0)) ck.add(w + ".grain_size_px", "must be >= 1");
    if (!(sim.speckle.contrast > 0.0 && sim.speckle.contrast <= 1.0))
      ck.add(w + ".contrast", "must lie in (0, 1]");
    ck.positive(w + ".mean_intensity", sim.speckle.mean_intensity);
  }

  if (j.contains("phantom")) {
    const Json& ph = j.at("phantom");
    if (ph.is_string()) {
      if (ph.get<std::string>() != "default") ck.add("simulate.phantom", "the only named phantom is \"default\"");
    } else {
      const std::size_t before = ck.issues.size();
      PhantomSpec spec = parse_phantom(ck, ph, "simulate.phantom");
      if (ck.issues.size() == before) {
        try {
          spec.validate(sim.rows, sim.cols);
        } catch (const Error& e) {
          ck.add("simulate.phantom", e.what());
        }
      }
      sim.phantom = std::move(spec);
    }
  }
  if (!sim.phantom && (sim.rows < 128 || sim.cols < 128)) {
    ck.add("simulate.phantom", "the default phantom needs rows and cols >= 128");
  }

  if (const Json* sx = ck.object(j, p, "saxs")) {
    const std::string w = "simulate.saxs";
    ck.known(*sx, w, {"enabled", "rows", "cols", "lobe_width_deg", "lobe_amplitude", "background",
                      "q_decay", "beamstop_radius_px", "photon_scale"});
    SyntheticSaxsSpec& s = sim.saxs.spec;
    ck.boolean(*sx, w, "enabled", sim.saxs.enabled);
    ck.count(*sx, w, "rows", s.rows);
    ck.count(*sx, w, "cols", s.cols);
    ck.number(*sx, w, "lobe_width_deg", s.lobe_width_deg);
    ck.number(*sx, w, "lobe_amplitude", s.lobe_amplitude);
    ck.number(*sx, w, "background", s.background);
    ck.number(*sx, w, "q_decay", s.q_decay);
    ck.number(*sx, w, "beamstop_radius_px", s.beamstop_radius_px);
    if (sx->contains("photon_scale") && !sx->at("photon_scale").is_null()) {
      double scale = 0.0;
      if (ck.number(*sx, w, "photon_scale", scale)) {
        ck.positive(w + ".photon_scale", scale);
        s.photon_scale = scale;
      }
    }
    if (s.rows < 32 || s.cols < 32) ck.add(w + ".rows", "rows and cols must be >= 32");
    ck.positive(w + ".lobe_width_deg", s.lobe_width_deg);
    ck.positive(w + ".q_decay", s.q_decay);
    if (!(s.lobe_amplitude >= 0.0)) ck.add(w + ".lobe_amplitude", "must be >= 0");
    if (!(s.background >= 0.0)) ck.add(w + ".background", "must be >= 0");
    if (!(s.beamstop_radius_px >= 0.0)) ck.add(w + ".beamstop_radius_px", "must be >= 0");
  }
  SyntheticSaxsSpec& s = sim.saxs.spec;
  s.beam_center_row = (static_cast<double>(s.rows) - 1.0) / 2.0;
  s.beam_center_col = (static_cast<double>(s.cols) - 1.0) / 2.0;
}

void parse_saxs(Checker& ck, const Json& j, const fs::path& base, SaxsConfig& saxs) {
  const std::string p = "saxs";
  ck.known(j, p, {"patterns", "q_min", "q_max", "bins", "chi_start_deg", "chi_width_deg",
                  "anisotropy_floor"});
  ck.number(j, p, "q_min", saxs.q_min);
  ck.number(j, p, "q_max", saxs.q_max);
  ck.count(j, p, "bins", saxs.bins);
  ck.number(j, p, "chi_start_deg", saxs.orientation.chi_start_deg);
  ck.number(j, p, "chi_width_deg", saxs.orientation.chi_width_deg);
  ck.number(j, p, "anisotropy_floor", saxs.orientation.anisotropy_floor);
  if (!(saxs.q_min > 0.0 && saxs.q_min < saxs.q_max)) ck.add("saxs.q_min", "need 0 < q_min < q_max");
  if (saxs.bins < 8) ck.add("saxs.bins", "must be >= 8");
  if (!(saxs.orientation.chi_width_deg > 0.0 && saxs.orientation.chi_width_deg <= 360.0))
    ck.add("saxs.chi_width_deg", "must lie in (0, 360]");
  if (!(saxs.orientation.anisotropy_floor >= 0.0)) ck.add("saxs.anisotropy_floor", "must be >= 0");

  if (!j.contains("patterns")) return;
  const Json& list = j.at("patterns");
  if (!list.is_array()) {
    ck.add("saxs.patterns", "expected an array");
    return;
  }
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string w = "saxs.patterns[" + std::to_string(i) + "]";
    const Json& e = list[i];
    if (!e.is_object()) {
      ck.add(w, "expected an object");
      continue;
    }
    ck.known(e, w, {"label", "path", "beam_center_row", "beam_center_col", "q_per_px", "mask", "raw"});
    SaxsPatternFile f;
    f.label = "pattern_" + std::to_string(i + 1);
    ck.string(e, w, "label", f.label);
    std::string path;
    if (!ck.string(e, w, "path", path)) {
      ck.add(w + ".path", "required");
    } else {
      f.path = resolve(base, path);
      if (!fs::exists(f.path)) ck.add(w + ".path", "file not found: " + f.path.string());
    }
    if (!ck.number(e, w, "beam_center_row", f.beam_center_row)) ck.add(w + ".beam_center_row", "required");
    if (!ck.number(e, w, "beam_center_col", f.beam_center_col)) ck.add(w + ".beam_center_col", "required");
    ck.number(e, w, "q_per_px", f.q_per_px);
    ck.positive(w + ".q_per_px", f.q_per_px);
    std::string mask;
    if (ck.string(e, w, "mask", mask)) {
      f.mask = resolve(base, mask);
      if (!fs::exists(*f.mask)) ck.add(w + ".mask", "file not found: " + f.mask->string());
    }
    f.raw = parse_raw(ck, e, w);
    saxs.patterns.push_back(std::move(f));
  }
}

void parse_acquisition(Checker& ck, const Json& j, const fs::path& base, AcquisitionFiles& acq) {
  const std::string p = "acquisition";
  ck.known(j, p, {"references", "samples", "raw"});
  auto list = [&](const char* key, std::vector<fs::path>& out) {
    const std::string w = Checker::join(p, key);
    if (!j.contains(key) || !j.at(key).is_array()) {
      ck.add(w, "required array of file paths");
      return;
    }
    const Json& arr = j.at(key);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string item = w + "[" + std::to_string(i) + "]";
      if (!arr[i].is_string()) {
        ck.add(item, "expected a path string");
        continue;
      }
      fs::path path = resolve(base, arr[i].get<std::string>());
      if (!fs::exists(path)) ck.add(item, "file not found: " + path.string());
      out.push_back(std::move(path));
    }
  };
  list("references", acq.references);
  list("samples", acq.samples);
  if (acq.references.size() != acq.samples.size()) {
    ck.add("acquisition.samples", "has " + std::to_string(acq.samples.size()) +
                                      " entries but acquisition.references has " +
                                      std::to_string(acq.references.size()));
  }
  acq.raw = parse_raw(ck, j, p);
}

}  // namespace

RunConfig parse_config(Json doc, const fs::path& base_dir, const Overrides& overrides) {
  if (!doc.is_object()) fail(ErrorCode::kConfig, "configuration must be a JSON object");
  if (overrides.tensor) doc["solver"]["tensor"] = *overrides.tensor;
  if (overrides.seed) doc["seed"] = *overrides.seed;
  if (overrides.output_dir) doc["output_dir"] = fs::absolute(*overrides.output_dir).string();
  if (overrides.threads) doc["threads"] = *overrides.threads;

  Checker ck;
  RunConfig cfg;
  ck.known(doc, "", {"geometry", "seed", "output_dir", "threads", "solver", "acquisition", "simulate",
                     "saxs", "compare", "decompose"});

  if (const Json* g = ck.object(doc, "", "geometry")) {
    ck.known(*g, "geometry", {"z2_mm", "pixel_pitch_um", "energy_keV"});
    ck.number(*g, "geometry", "z2_mm", cfg.geometry.z2_mm);
    ck.number(*g, "geometry", "pixel_pitch_um", cfg.geometry.pixel_pitch_um);
    ck.number(*g, "geometry", "energy_keV", cfg.geometry.energy_keV);
  }
  ck.positive("geometry.z2_mm", cfg.geometry.z2_mm);
  ck.positive("geometry.pixel_pitch_um", cfg.geometry.pixel_pitch_um);
  ck.positive("geometry.energy_keV", cfg.geometry.energy_keV);

  if (doc.contains("seed")) {
    const Json& s = doc.at("seed");
    if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() && s.get<long long>() < 0))
      ck.add("seed", "expected a non-negative integer");
    else
      cfg.seed = s.get<std::uint64_t>();
  }
  std::string out = cfg.output_dir.string();
  ck.string(doc, "", "output_dir", out);
  cfg.output_dir = resolve(base_dir, out);
  if (doc.contains("threads")) {
    const Json& t = doc.at("threads");
    if (!t.is_number_integer() || t.get<long long>() < 0) ck.add("threads", "expected an integer >= 0");
    else cfg.threads = t.get<int>();
  }

  if (const Json* s = ck.object(doc, "", "solver")) {
    ck.known(*s, "solver", {"tikhonov_lambda", "clamp_negative_diffusion", "min_transmission", "tensor"});
    ck.number(*s, "solver", "tikhonov_lambda", cfg.solver.tikhonov_lambda);
    ck.boolean(*s, "solver", "clamp_negative_diffusion", cfg.solver.clamp_negative_diffusion);
    ck.number(*s, "solver", "min_transmission", cfg.solver.min_transmission);
    ck.boolean(*s, "solver", "tensor", cfg.tensor);
  }
  if (!(cfg.solver.tikhonov_lambda >= 0.0) || !std::isfinite(cfg.solver.tikhonov_lambda))
    ck.add("solver.tikhonov_lambda", "must be a finite number >= 0");
  if (!(cfg.solver.min_transmission > 0.0 && cfg.solver.min_transmission <= 1.0))
    ck.add("solver.min_transmission", "must lie in (0, 1]");

  if (const Json* a = ck.object(doc, "", "acquisition")) {
    AcquisitionFiles files;
    parse_acquisition(ck, *a, base_dir, files);
    cfg.acquisition = std::move(files);
  }
  if (const Json* s = ck.object(doc, "", "simulate")) parse_simulate(ck, *s, cfg.simulate);
  else parse_simulate(ck, Json::object(), cfg.simulate);
  if (const Json* s = ck.object(doc, "", "saxs")) parse_saxs(ck, *s, base_dir, cfg.saxs);

  if (const Json* c = ck.object(doc, "", "compare")) {
    ck.known(*c, "compare", {"truth_dir", "retrieved_dir"});
    std::string dir;
    if (ck.string(*c, "compare", "truth_dir", dir)) cfg.truth_dir = resolve(base_dir, dir);
    if (ck.string(*c, "compare", "retrieved_dir", dir)) cfg.retrieved_dir = resolve(base_dir, dir);
  }
  if (const Json* d = ck.object(doc, "", "decompose")) {
    ck.known(*d, "decompose", {"tensor_dir", "anisotropy_floor", "diffusion_floor"});
    std::string dir;
    if (ck.string(*d, "decompose", "tensor_dir", dir)) cfg.tensor_dir = resolve(base_dir, dir);
    ck.number(*d, "decompose", "anisotropy_floor", cfg.decompose.anisotropy_floor);
    ck.number(*d, "decompose", "diffusion_floor", cfg.decompose.diffusion_floor);
    if (!(cfg.decompose.anisotropy_floor >= 0.0)) ck.add("decompose.anisotropy_floor", "must be >= 0");
    if (!(cfg.decompose.diffusion_floor >= 0.0)) ck.add("decompose.diffusion_floor", "must be >= 0");
  }

  if (!ck.issues.empty()) {
    std::ostringstream msg;
    msg << "invalid configuration (" << ck.issues.size() << " problem"
        << (ck.issues.size() == 1 ? "" : "s") << "):";
    for (const auto& issue : ck.issues) msg << "\n  " << issue;
    fail(ErrorCode::kConfig, msg.str());
  }
  cfg.snapshot = std::move(doc);
  return cfg;
}

RunConfig load_config(const fs::path& path, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kUnreadableFile, "cannot open config " + path.string());
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    fail(ErrorCode::kConfig, path.string() + ": " + e.what());
  }
  return parse_config(std::move(doc), fs::absolute(path).parent_path(), overrides);
}

Json phantom_to_json(const PhantomSpec& phantom) {
  Json elements = Json::array();
  for (const auto& element : phantom.elements) {
    if (const auto* c = std::get_if<Cylinder>(&element)) {
      elements.push_back({{"type", "cylinder"},
                          {"center", {c->center.row, c->center.col}},
                          {"radius_px", c->radius_px},
                          {"axis_angle_deg", c->axis_angle_deg},
                          {"delta", c->delta},
                          {"mu_t", c->mu_t}});
    } else {
      const auto& b = std::get<FiberBundle>(element);
      Json poly = Json::array();
      for (const auto& p : b.polygon) poly.push_back({p.row, p.col});
      elements.push_back({{"type", "fiber_bundle"},
                          {"polygon", poly},
                          {"orientation_deg", b.orientation_deg},
                          {"d_parallel", b.d_parallel},
                          {"d_perp", b.d_perp},
                          {"mu_t", b.mu_t},
                          {"feather_px", b.feather_px}});
    }
  }
  return Json{{"elements", elements}};
}

PhantomSpec phantom_from_json(const Json& j) {
  Checker ck;
  PhantomSpec spec = parse_phantom(ck, j, "phantom");
  if (!ck.issues.empty()) {
    std::string msg = "invalid phantom:";
    for (const auto& issue : ck.issues) msg += "\n  " + issue;
    fail(ErrorCode::kConfig, msg);
  }
  return spec;
}

}  // namespace mobi::cli
