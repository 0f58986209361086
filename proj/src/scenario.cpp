#include "ionpair/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace ionpair::scenario {

namespace {

// ---------------------------------------------------------------------------
// Built-in scenarios. scenarios/*.scn in the source tree carry the same text.

constexpr std::string_view kFig3 = R"(# Product-state parity oscillation driven by the D5/2 quadrupole shift.
name = fig3_quadrupole_product
kind = quadrupole_product
description = Product state of two D5/2 coherences at one trap-calibrated gradient; stray-field noise dephases it into the correlated mixture
axial_freq_hz = 890e3
axial_freqs_hz = 890e3
beta_rad = 0
alpha_hz_per_v_per_mm2 = 2.977
b0_gauss = 4
b_rms_gauss = 30e-6
b_corr_time_s = 1
seed = 1
preparation = product
d_lifetime_s = 1.16
waits_s = 0.1e-3, linspace(4e-3, 100e-3, 49)
shots_per_point = 100
exclude_below_s = 1e-3
)";

constexpr std::string_view kFig4Product = R"(# Quadrupole shift versus gradient, unentangled ions.
name = fig4_quadrupole_sweep_product
kind = quadrupole_product
description = Five-gradient sweep with product states, waits up to 100 ms
axial_freqs_hz = 860e3, 1075e3, 1290e3, 1505e3, 1720e3
beta_rad = 0
alpha_hz_per_v_per_mm2 = 2.977
ion1_detuning_hz = 0.15
b0_gauss = 4
b_rms_gauss = 30e-6
b_corr_time_s = 1
seed = 4
preparation = product
d_lifetime_s = 1.16
waits_s = linspace(4e-3, 100e-3, 49)
shots_per_point = 100
exclude_below_s = 1e-3
)";

constexpr std::string_view kFig4Bell = R"(# Quadrupole shift versus gradient, entangled ions.
name = fig4_quadrupole_sweep_bell
kind = quadrupole_bell
description = Five-gradient sweep with the field-insensitive Bell state, waits up to 250 ms
axial_freqs_hz = 860e3, 1075e3, 1290e3, 1505e3, 1720e3
beta_rad = 0
alpha_hz_per_v_per_mm2 = 2.977
ion1_detuning_hz = 0.15
b0_gauss = 4
b_rms_gauss = 30e-6
b_corr_time_s = 1
seed = 5
preparation = bell
d_lifetime_s = 1.16
waits_s = linspace(0, 250e-3, 126)
shots_per_point = 100
)";

constexpr std::string_view kFig6 = R"(# Randomized-phase two-ion Ramsey fringe at one Ramsey time.
name = fig6_phase_scan
kind = linewidth
description = Laser-sensitive randomized protocol, phi0 scan at 1.51 ms; single-ion signals average out
laser_fwhm_hz = 48
b0_gauss = 4
b_rms_gauss = 30e-6
b_corr_time_s = 1
seed = 6
preparation = product
phase_policy = randomized_laser
waits_s = 1.51e-3
phases_rad = circle(16)
shots_per_point = 400
)";

constexpr std::string_view kFig7 = R"(# Two-ion Ramsey contrast versus Ramsey time for the laser line width.
name = fig7_linewidth
kind = linewidth
description = Laser-sensitive randomized protocol at eight Ramsey times; Gaussian contrast fit gives the laser FWHM
laser_fwhm_hz = 48
b0_gauss = 4
b_rms_gauss = 30e-6
b_corr_time_s = 1
seed = 7
preparation = product
phase_policy = randomized_laser
waits_s = linspace(1e-3, 8e-3, 8)
phases_rad = circle(16)
shots_per_point = 400
)";

constexpr std::string_view kSec41 = R"(# Magnetic field gradient read out as a parity oscillation frequency.
name = sec41_gradient
kind = gradient
description = Both ions on S1/2 +1/2 to D5/2 +5/2, 0.08 G/m across 5 um
db_dz_g_per_m = 0.08
ion_distance_m = 5e-6
laser_fwhm_hz = 48
b0_gauss = 4
b_rms_gauss = 30e-6
b_corr_time_s = 1
seed = 41
preparation = product
d_lifetime_s = 1.16
waits_s = linspace(10e-3, 1.2, 41)
shots_per_point = 100
exclude_below_s = 5e-3
)";

const std::vector<std::pair<std::string_view, std::string_view>>& registry() {
  static const std::vector<std::pair<std::string_view, std::string_view>> r{
      {"fig3_quadrupole_product", kFig3},     {"fig4_quadrupole_sweep_product", kFig4Product},
      {"fig4_quadrupole_sweep_bell", kFig4Bell}, {"fig6_phase_scan", kFig6},
      {"fig7_linewidth", kFig7},              {"sec41_gradient", kSec41},
  };
  return r;
}

// ---------------------------------------------------------------------------
// Parsing helpers.

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_number(const std::string& field, const std::string& token) {
  const std::string t = trim(token);
  double v = 0.0;
  const char* begin = t.data();
  const char* end = t.data() + t.size();
  if (!t.empty() && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || t.empty() || !std::isfinite(v)) {
    throw ValidationError(field, "not a number: '" + t + "'");
  }
  return v;
}

std::vector<std::string> split_top_level(const std::string& s) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::vector<std::string> call_args(const std::string& field, const std::string& item,
                                   std::string_view fn) {
  const std::string body = trim(std::string_view(item).substr(fn.size()));
  if (body.size() < 2 || body.front() != '(' || body.back() != ')') {
    throw ValidationError(field, "malformed " + std::string(fn) + "(...)");
  }
  return split_top_level(body.substr(1, body.size() - 2));
}

long parse_count(const std::string& field, const std::string& token) {
  const double v = parse_number(field, token);
  if (v < 1 || v != std::floor(v)) throw ValidationError(field, "count must be a positive integer");
  return static_cast<long>(v);
}

std::vector<double> parse_list(const std::string& field, const std::string& value) {
  const std::string v = trim(value);
  if (v.rfind("circle", 0) == 0) {
    const auto args = call_args(field, v, "circle");
    if (args.size() != 1) throw ValidationError(field, "circle takes one argument");
    const long n = parse_count(field, args[0]);
    std::vector<double> out;
    for (long k = 0; k < n; ++k) out.push_back(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
    return out;
  }
  std::vector<double> out;
  for (const auto& item : split_top_level(v)) {
    if (item.rfind("linspace", 0) == 0) {
      const auto args = call_args(field, item, "linspace");
      if (args.size() != 3) throw ValidationError(field, "linspace takes three arguments");
      const double a = parse_number(field, args[0]);
      const double b = parse_number(field, args[1]);
      const long n = parse_count(field, args[2]);
      for (long k = 0; k < n; ++k) {
        out.push_back(n == 1 ? a : a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1));
      }
    } else {
      out.push_back(parse_number(field, item));
    }
  }
  return out;
}

atomic::Sublevel parse_level(const std::string& field, const std::string& value, double lifetime) {
  const std::string v = trim(value);
  const auto colon = v.find(':');
  if (colon == std::string::npos) throw ValidationError(field, "expected TERM:m, e.g. D5/2:-5/2");
  const std::string term = trim(v.substr(0, colon));
  std::string m = trim(v.substr(colon + 1));
  const auto slash = m.find('/');
  if (slash == std::string::npos || trim(m.substr(slash + 1)) != "2") {
    throw ValidationError(field, "m must be written as k/2");
  }
  const double k = parse_number(field, m.substr(0, slash));
  if (k != std::floor(k)) throw ValidationError(field, "m numerator must be an integer");
  try {
    if (term == "S1/2") return atomic::s_level(static_cast<int>(k));
    if (term == "D5/2") return atomic::d_level(static_cast<int>(k), lifetime);
  } catch (const std::invalid_argument& e) {
    throw ValidationError(field, e.what());
  }
  throw ValidationError(field, "term must be S1/2 or D5/2");
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "name", "kind", "description", "axial_freq_hz", "radial_freq_hz", "ion_mass_u",
      "gradients_v_per_mm2", "axial_freqs_hz", "beta_rad", "alpha_hz_per_v_per_mm2",
      "theta_hz_per_v_per_mm2", "b0_gauss", "b_rms_gauss", "b_corr_time_s", "laser_fwhm_hz",
      "laser_offset_hz", "seed", "preparation", "bell_phase_rad", "prep_fidelity", "ion1_lower",
      "ion1_upper", "ion2_lower", "ion2_upper", "ion1_detuning_hz", "ion2_detuning_hz",
      "d_lifetime_s", "waits_s", "phases_rad", "phase_policy", "phase1_rad", "phase2_rad",
      "phi0_rad", "shots_per_point", "exclude_below_s", "leak_detection", "db_dz_g_per_m",
      "ion_distance_m", "output_prefix"};
  return keys;
}

Kind parse_kind(const std::string& v) {
  if (v == "gradient") return Kind::Gradient;
  if (v == "quadrupole_product") return Kind::QuadrupoleProduct;
  if (v == "quadrupole_bell") return Kind::QuadrupoleBell;
  if (v == "linewidth") return Kind::Linewidth;
  if (v == "custom") return Kind::Custom;
  throw ValidationError("kind", "unknown kind '" + v + "'");
}

bool laser_coupled(const atomic::Sublevel& a, const atomic::Sublevel& b) { return a.term != b.term; }

std::array<atomic::Sublevel, 4> default_levels(const Scenario& scn) {
  using atomic::d_level;
  using atomic::s_level;
  const double tau = scn.d_lifetime;
  switch (scn.kind) {
    case Kind::QuadrupoleProduct:
    case Kind::QuadrupoleBell:
      return {d_level(-5, tau), d_level(-1, tau), d_level(-1, tau), d_level(+3, tau)};
    case Kind::Linewidth:
      return {s_level(-1), d_level(-1, tau), s_level(+1), d_level(+1, tau)};
    case Kind::Gradient:
      return {s_level(+1), d_level(+5, tau), s_level(+1), d_level(+5, tau)};
    case Kind::Custom:
      break;
  }
  throw ValidationError("ion1_lower", "custom scenarios must name all four levels");
}

void check(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw ValidationError(field, message);
}

std::string format_list(const std::vector<double>& v) {
  std::ostringstream os;
  os.precision(6);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  return os.str();
}

nlohmann::json fit_json(const analysis::FitResult& f) {
  nlohmann::json j;
  for (std::size_t i = 0; i < f.names.size(); ++i) {
    j[f.names[i]] = {{"value", f.params[i]}, {"stderr", f.stderrs[i]}};
  }
  j["chi2_reduced"] = f.chi2_reduced;
  j["converged"] = f.converged;
  return j;
}

}  // namespace

std::string_view kind_name(Kind kind) {
  switch (kind) {
    case Kind::Gradient: return "gradient";
    case Kind::QuadrupoleProduct: return "quadrupole_product";
    case Kind::QuadrupoleBell: return "quadrupole_bell";
    case Kind::Linewidth: return "linewidth";
    case Kind::Custom: return "custom";
  }
  return "custom";
}

Scenario parse_scenario(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("line " + std::to_string(lineno), "expected key = value");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (!known_keys().count(key)) throw ValidationError(key, "unknown key");
    if (kv.count(key)) throw ValidationError(key, "given more than once");
    kv[key] = value;
  }

  auto has = [&](const char* k) { return kv.count(k) > 0; };
  auto num = [&](const char* k, double fallback) { return has(k) ? parse_number(k, kv[k]) : fallback; };
  auto list = [&](const char* k) { return has(k) ? parse_list(k, kv[k]) : std::vector<double>{}; };

  Scenario scn;
  check(has("name") && !kv["name"].empty(), "name", "required");
  check(has("kind"), "kind", "required");
  check(has("waits_s"), "waits_s", "required");
  check(has("shots_per_point"), "shots_per_point", "required");
  scn.name = kv["name"];
  check(std::all_of(scn.name.begin(), scn.name.end(),
                    [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.'; }),
        "name", "only letters, digits, '_', '-' and '.' are allowed");
  scn.kind = parse_kind(kv["kind"]);
  scn.description = has("description") ? kv["description"] : "";

  scn.trap.axial_freq = num("axial_freq_hz", scn.trap.axial_freq);
  scn.trap.radial_freq = num("radial_freq_hz", scn.trap.radial_freq);
  scn.trap.ion_mass = num("ion_mass_u", scn.trap.ion_mass);
  try {
    trap::validate(scn.trap);
  } catch (const std::invalid_argument& e) {
    throw ValidationError("axial_freq_hz", e.what());
  }

  scn.gradients = list("gradients_v_per_mm2");
  scn.axial_freqs = list("axial_freqs_hz");
  for (double f : scn.axial_freqs) {
    check(f > 0.0 && f < scn.trap.radial_freq, "axial_freqs_hz", "must lie in (0, radial_freq_hz)");
  }
  scn.beta = num("beta_rad", 0.0);
  if (has("alpha_hz_per_v_per_mm2")) scn.alpha = num("alpha_hz_per_v_per_mm2", 0.0);
  if (has("theta_hz_per_v_per_mm2")) scn.theta = num("theta_hz_per_v_per_mm2", 0.0);
  check(!(scn.alpha && scn.theta), "theta_hz_per_v_per_mm2", "give either alpha or theta, not both");
  scn.b0 = num("b0_gauss", 0.0);

  scn.noise.b_rms = num("b_rms_gauss", 0.0);
  scn.noise.b_corr_time = num("b_corr_time_s", 1.0);
  scn.noise.laser_fwhm = num("laser_fwhm_hz", 0.0);
  scn.noise.laser_offset = num("laser_offset_hz", 0.0);
  check(scn.noise.b_rms >= 0.0, "b_rms_gauss", "must be >= 0");
  check(scn.noise.b_corr_time > 0.0, "b_corr_time_s", "must be > 0");
  check(scn.noise.laser_fwhm >= 0.0, "laser_fwhm_hz", "must be >= 0");
  if (has("seed")) {
    const std::string s = kv["seed"];
    std::uint64_t seed = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
    check(ec == std::errc() && ptr == s.data() + s.size(), "seed", "must be an unsigned 64-bit integer");
    scn.noise.master_seed = seed;
  }

  const std::string prep = has("preparation") ? kv["preparation"]
                           : scn.kind == Kind::QuadrupoleBell ? "bell" : "product";
  if (prep == "bell") {
    scn.preparation.kind = experiment::Preparation::Kind::Bell;
  } else if (prep == "product") {
    scn.preparation.kind = experiment::Preparation::Kind::Product;
  } else if (prep == "dephased_product") {
    scn.preparation.kind = experiment::Preparation::Kind::DephasedProduct;
  } else {
    throw ValidationError("preparation", "expected bell, product or dephased_product");
  }
  scn.preparation.bell_phase = num("bell_phase_rad", 0.0);
  scn.preparation.fidelity = num("prep_fidelity", 1.0);
  check(scn.preparation.fidelity >= 0.0 && scn.preparation.fidelity <= 1.0, "prep_fidelity",
        "must lie in [0, 1]");

  scn.d_lifetime = num("d_lifetime_s", atomic::kDLifetime);
  check(scn.d_lifetime > 0.0, "d_lifetime_s", "must be > 0");
  const char* level_keys[4] = {"ion1_lower", "ion1_upper", "ion2_lower", "ion2_upper"};
  const int given = static_cast<int>(std::count_if(std::begin(level_keys), std::end(level_keys),
                                                   [&](const char* k) { return has(k); }));
  if (given > 0) {
    for (const char* k : level_keys) check(has(k), k, "required when any level is given");
    std::array<atomic::Sublevel, 4> lv;
    for (int i = 0; i < 4; ++i) lv[i] = parse_level(level_keys[i], kv[level_keys[i]], scn.d_lifetime);
    check(!(lv[0] == lv[1]), "ion1_upper", "must differ from ion1_lower");
    check(!(lv[2] == lv[3]), "ion2_upper", "must differ from ion2_lower");
    scn.levels = lv;
  } else if (scn.kind == Kind::Custom) {
    throw ValidationError("ion1_lower", "custom scenarios must name all four levels");
  }
  scn.detunings = {num("ion1_detuning_hz", 0.0), num("ion2_detuning_hz", 0.0)};

  scn.waits = list("waits_s");
  check(!scn.waits.empty(), "waits_s", "must be non-empty");
  for (double w : scn.waits) check(w >= 0.0, "waits_s", "must be >= 0");
  scn.phases = list("phases_rad");

  const std::string policy = has("phase_policy") ? kv["phase_policy"] : "fixed";
  if (policy == "fixed") {
    scn.policy.kind = experiment::PhasePolicy::Kind::Fixed;
  } else if (policy == "randomized_laser") {
    scn.policy.kind = experiment::PhasePolicy::Kind::RandomizedLaserSensitive;
  } else if (policy == "randomized_bfield") {
    scn.policy.kind = experiment::PhasePolicy::Kind::RandomizedBFieldSensitive;
  } else {
    throw ValidationError("phase_policy", "expected fixed, randomized_laser or randomized_bfield");
  }
  scn.policy.phi1 = num("phase1_rad", 0.0);
  scn.policy.phi2 = num("phase2_rad", 0.0);
  scn.policy.phi0 = num("phi0_rad", 0.0);

  const double shots = num("shots_per_point", 0.0);
  check(shots >= 1.0 && shots == std::floor(shots) && shots < 2e9, "shots_per_point",
        "must be a positive integer");
  scn.shots_per_point = static_cast<int>(shots);
  scn.exclude_below = num("exclude_below_s", 0.0);

  const std::string leak = has("leak_detection") ? kv["leak_detection"] : "bright";
  if (leak == "bright") {
    scn.leak = dynamics::LeakDetection::Bright;
  } else if (leak == "dark") {
    scn.leak = dynamics::LeakDetection::Dark;
  } else {
    throw ValidationError("leak_detection", "expected bright or dark");
  }

  scn.db_dz = num("db_dz_g_per_m", 0.0);
  if (has("ion_distance_m")) {
    scn.ion_distance = num("ion_distance_m", 0.0);
    check(*scn.ion_distance > 0.0, "ion_distance_m", "must be > 0");
  }
  scn.output_prefix = has("output_prefix") ? kv["output_prefix"] : scn.name;

  switch (scn.kind) {
    case Kind::QuadrupoleProduct:
    case Kind::QuadrupoleBell:
      check(!scn.gradients.empty() || !scn.axial_freqs.empty(), "gradients_v_per_mm2",
            "quadrupole scenarios need gradients_v_per_mm2 or axial_freqs_hz");
      check(scn.alpha || scn.theta, "alpha_hz_per_v_per_mm2",
            "quadrupole scenarios need alpha_hz_per_v_per_mm2 or theta_hz_per_v_per_mm2");
      break;
    case Kind::Linewidth:
      check(!scn.phases.empty(), "phases_rad", "linewidth scenarios need a phase grid");
      break;
    case Kind::Gradient:
      check(has("db_dz_g_per_m"), "db_dz_g_per_m", "required for gradient scenarios");
      break;
    case Kind::Custom:
      break;
  }

  // Surface plan-level inconsistencies (e.g. policy vs. laser coupling) now.
  try {
    const auto grid = gradient_grid(scn);
    experiment::validate(build_plan(scn, grid.empty() ? 0.0 : grid.front(), scn.noise.master_seed));
  } catch (const experiment::ConfigError& e) {
    throw ValidationError("phase_policy", e.what());
  } catch (const std::invalid_argument& e) {
    if (dynamic_cast<const ValidationError*>(&e)) throw;
    throw ValidationError("alpha_hz_per_v_per_mm2", e.what());
  }
  return scn;
}

std::vector<std::string> builtin_names() {
  std::vector<std::string> names;
  for (const auto& [n, _] : registry()) names.emplace_back(n);
  return names;
}

std::string_view builtin_text(std::string_view name) {
  for (const auto& [n, text] : registry()) {
    if (n == name) return text;
  }
  throw UnknownScenario(std::string(name));
}

std::vector<std::string> resolve_builtin(std::string_view name_or_family) {
  std::vector<std::string> out;
  for (const auto& [n, _] : registry()) {
    if (n == name_or_family) return {std::string(n)};
  }
  for (const auto& [n, _] : registry()) {
    if (n.size() > name_or_family.size() && n.substr(0, name_or_family.size()) == name_or_family &&
        n[name_or_family.size()] == '_') {
      out.emplace_back(n);
    }
  }
  if (out.empty()) throw UnknownScenario(std::string(name_or_family));
  return out;
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t block_seed(std::uint64_t seed, std::uint64_t block) {
  return noise::mix64(seed + 0x632BE59BD9B4E019ULL * (block + 1));
}

std::vector<double> gradient_grid(const Scenario& scn) {
  std::vector<double> grid = scn.gradients;
  for (double f : scn.axial_freqs) {
    trap::TrapConfig cfg = scn.trap;
    cfg.axial_freq = f;
    grid.push_back(trap::gradient_from_axial_freq(cfg));
  }
  return grid;
}

std::array<atomic::LevelPair, 2> level_pairs(const Scenario& scn) {
  const auto lv = scn.levels ? *scn.levels : default_levels(scn);
  atomic::QuadrupoleEnvironment env{0.0, scn.beta, 0.0};
  if (scn.theta) {
    env.theta_moment = *scn.theta;
  } else if (scn.alpha) {
    const double factor = (atomic::quadrupole_angular_factor(lv[1]) - atomic::quadrupole_angular_factor(lv[0])) -
                          (atomic::quadrupole_angular_factor(lv[3]) - atomic::quadrupole_angular_factor(lv[2]));
    env.theta_moment = atomic::moment_for_slope(*scn.alpha, factor, scn.beta);
  }
  env = atomic::normalized(env);
  return {atomic::coherence_sensitivities(lv[0], lv[1], env, laser_coupled(lv[0], lv[1]), scn.detunings[0]),
          atomic::coherence_sensitivities(lv[2], lv[3], env, laser_coupled(lv[2], lv[3]), scn.detunings[1])};
}

double parity_slope(const Scenario& scn) {
  const auto pairs = level_pairs(scn);
  return std::abs(pairs[0].quadrupole_sensitivity - pairs[1].quadrupole_sensitivity);
}

experiment::RamseyPlan build_plan(const Scenario& scn, double gradient, std::uint64_t seed) {
  experiment::RamseyPlan plan;
  plan.preparation = scn.preparation;
  const auto pairs = level_pairs(scn);
  plan.pair1 = pairs[0];
  plan.pair2 = pairs[1];
  if (scn.kind == Kind::Linewidth || !scn.phases.empty()) {
    plan.scan = experiment::PhaseScan{scn.phases, scn.waits.front()};
  } else {
    plan.scan = experiment::WaitScan{scn.waits};
  }
  plan.policy = scn.policy;
  plan.shots_per_point = scn.shots_per_point;
  plan.noise = scn.noise;
  plan.noise.master_seed = seed;
  plan.env = atomic::normalized({gradient, scn.beta, 0.0});
  plan.b0 = scn.b0;
  plan.leak = scn.leak;
  return plan;
}

std::string describe(const Scenario& scn) {
  std::ostringstream os;
  os << "name: " << scn.name << "\n";
  os << "kind: " << kind_name(scn.kind) << "\n";
  if (!scn.description.empty()) os << "description: " << scn.description << "\n";
  const auto grid = gradient_grid(scn);
  if (!grid.empty()) os << "gradients (V/mm^2): " << format_list(grid) << "\n";
  if (scn.kind == Kind::QuadrupoleProduct || scn.kind == Kind::QuadrupoleBell) {
    os << "parity slope (Hz per V/mm^2): " << parity_slope(scn) << "\n";
  }
  os << "waits (s): " << scn.waits.size() << " points, " << scn.waits.front() << " .. " << scn.waits.back() << "\n";
  if (!scn.phases.empty()) os << "phases (rad): " << scn.phases.size() << " points\n";
  const std::size_t blocks = scn.kind == Kind::Linewidth ? scn.waits.size() : std::max<std::size_t>(grid.size(), 1);
  const std::size_t per_block = scn.kind == Kind::Linewidth ? scn.phases.size() : scn.waits.size();
  os << "shots per point (N): " << scn.shots_per_point << "\n";
  os << "total shots: " << blocks * per_block * static_cast<std::size_t>(scn.shots_per_point) << "\n";
  os << "noise: b_rms=" << scn.noise.b_rms << " G, b_corr_time=" << scn.noise.b_corr_time
     << " s, laser_fwhm=" << scn.noise.laser_fwhm << " Hz, seed=" << scn.noise.master_seed << "\n";
  return os.str();
}

ScenarioResult run_scenario(Scenario scn, const RunOptions& options) {
  if (options.seed) scn.noise.master_seed = *options.seed;
  if (options.shots_override) {
    if (*options.shots_override < 1) throw ValidationError("shots_per_point", "override must be >= 1");
    scn.shots_per_point = *options.shots_override;
  }
  const experiment::ExecutionOptions exec{options.threads};
  const std::uint64_t seed = scn.noise.master_seed;

  ScenarioResult result;
  auto& report = result.report;
  report["name"] = scn.name;
  report["kind"] = kind_name(scn.kind);
  report["seed"] = seed;
  report["shots_per_point"] = scn.shots_per_point;

  switch (scn.kind) {
    case Kind::QuadrupoleProduct:
    case Kind::QuadrupoleBell: {
      const auto grid = gradient_grid(scn);
      const auto pairs = level_pairs(scn);
      const double slope = parity_slope(scn);
      report["alpha_true_hz_per_v_per_mm2"] = slope;
      std::vector<double> gx, fy, fe;
      nlohmann::json per = nlohmann::json::array();
      for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        const auto plan = build_plan(scn, grid[gi], block_seed(seed, gi));
        TraceBlock block{grid[gi], false, experiment::run_plan(plan, exec)};
        const double analytic = std::abs((pairs[0].static_detuning + pairs[0].quadrupole_sensitivity * grid[gi]) -
                                         (pairs[1].static_detuning + pairs[1].quadrupole_sensitivity * grid[gi]));
        nlohmann::json entry{{"gradient_v_per_mm2", grid[gi]}, {"analytic_frequency_hz", analytic}};
        try {
          const auto fit = analysis::fit_damped_sinusoid(block.traces, scn.exclude_below);
          entry["fit"] = fit_json(fit);
          if (fit.converged) {
            gx.push_back(grid[gi]);
            fy.push_back(fit.value("freq"));
            fe.push_back(fit.error("freq"));
          } else {
            result.fits_converged = false;
          }
        } catch (const analysis::FitError& e) {
          entry["fit_error"] = e.what();
          result.fits_converged = false;
        }
        per.push_back(entry);
        result.blocks.push_back(std::move(block));
      }
      report["per_gradient"] = per;
      if (grid.size() > 1) {
        if (gx.size() >= 2 && result.fits_converged) {
          report["line_fit"] = fit_json(analysis::fit_line(gx, fy, fe));
        } else {
          result.fits_converged = false;
        }
      }
      const double contrast = scn.preparation.kind == experiment::Preparation::Kind::Bell ? 1.0 : 0.5;
      const long n_total = static_cast<long>(scn.waits.size()) * scn.shots_per_point;
      report["projection_noise_sigma_hz"] =
          analysis::projection_noise_sigma(*std::max_element(scn.waits.begin(), scn.waits.end()),
                                           contrast, n_total);
      break;
    }
    case Kind::Linewidth: {
      std::vector<double> t, c, ce;
      nlohmann::json per = nlohmann::json::array();
      double worst = 0.0;
      for (std::size_t wi = 0; wi < scn.waits.size(); ++wi) {
        auto plan = build_plan(scn, 0.0, block_seed(seed, wi));
        plan.scan = experiment::PhaseScan{scn.phases, scn.waits[wi]};
        TraceBlock block{std::nullopt, true, experiment::run_plan(plan, exec)};
        const auto fringe = analysis::fit_phase_fringe(block.traces);
        double dev = 0.0;
        for (const auto& tr : block.traces) {
          dev = std::max({dev, std::abs(tr.single_ion_means[0]), std::abs(tr.single_ion_means[1])});
        }
        worst = std::max(worst, dev);
        per.push_back({{"wait_s", scn.waits[wi]},
                       {"contrast", fringe.contrast},
                       {"contrast_err", fringe.contrast_err},
                       {"expected_contrast", std::abs(experiment::expected_parity(plan, {scn.waits[wi], -plan.policy.phi0}))},
                       {"single_ion_max_abs_mean", dev}});
        t.push_back(scn.waits[wi]);
        c.push_back(fringe.contrast);
        ce.push_back(std::max(fringe.contrast_err, 1e-12));
        result.blocks.push_back(std::move(block));
      }
      report["per_wait"] = per;
      report["single_ion_max_abs_mean"] = worst;
      report["single_ion_flatness_bound"] = 4.0 / std::sqrt(static_cast<double>(scn.shots_per_point));
      if (t.size() >= 5) {
        try {
          const auto fit = analysis::fit_contrast_gaussian({t, c, ce});
          report["gaussian_fit"] = fit_json(fit);
          if (fit.converged) {
            report["tau_half_s"] = fit.value("tau_half");
            report["fwhm_hz"] = analysis::linewidth_from_tau_half(fit.value("tau_half"));
          } else {
            result.fits_converged = false;
          }
        } catch (const analysis::FitError& e) {
          report["fit_error"] = e.what();
          result.fits_converged = false;
        }
      }
      break;
    }
    case Kind::Gradient: {
      experiment::GradientSetup setup;
      setup.db_dz = scn.db_dz;
      setup.distance = scn.ion_distance ? *scn.ion_distance : trap::two_ion_distance(scn.trap);
      setup.plan = build_plan(scn, 0.0, block_seed(seed, 0));
      auto g = experiment::gradient_scenario(setup, exec);
      report["ion_distance_m"] = setup.distance;
      report["field_difference_gauss"] = g.field_difference;
      report["analytic_frequency_hz"] = g.analytic_frequency;
      if (g.analytic_frequency > 0.0) {
        try {
          const auto fit = analysis::fit_damped_sinusoid(g.traces, scn.exclude_below);
          report["fit"] = fit_json(fit);
          result.fits_converged = fit.converged;
        } catch (const analysis::FitError& e) {
          report["fit_error"] = e.what();
          result.fits_converged = false;
        }
      }
      result.blocks.push_back({std::nullopt, false, std::move(g.traces)});
      break;
    }
    case Kind::Custom: {
      if (scn.phases.empty()) {
        const auto plan = build_plan(scn, gradient_grid(scn).empty() ? 0.0 : gradient_grid(scn).front(),
                                     block_seed(seed, 0));
        result.blocks.push_back({std::nullopt, false, experiment::run_plan(plan, exec)});
      } else {
        for (std::size_t wi = 0; wi < scn.waits.size(); ++wi) {
          auto plan = build_plan(scn, gradient_grid(scn).empty() ? 0.0 : gradient_grid(scn).front(),
                                 block_seed(seed, wi));
          plan.scan = experiment::PhaseScan{scn.phases, scn.waits[wi]};
          result.blocks.push_back({std::nullopt, true, experiment::run_plan(plan, exec)});
        }
      }
      break;
    }
  }
  report["fits_converged"] = result.fits_converged;
  result.scenario = std::move(scn);
  return result;
}

}  // namespace ionpair::scenario
