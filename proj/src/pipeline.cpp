#include "rydpol/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include "rydpol/errors.hpp"
#include "rydpol/table.hpp"
#include "rydpol/units.hpp"

namespace rydpol {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config

PipelineConfig PipelineConfig::demo() {
  PipelineConfig c;
  c.cutoffs = {1, -1, 6.0, 2, 1.0};
  c.grids.r_min_um = 1.5;
  c.grids.r_max_um = 30.0;
  c.grids.r_points = 24;
  c.grids.theta_points = 6;
  c.grids.z_nodes = 129;
  c.grids.transverse_nodes = 6;
  c.grids.t_points = 11;
  c.sweep.n = {50};
  c.sweep.omega_mhz = {6.1, 8.3, 10.8, 16.6, 26.3};
  c.output.dir = "demo_out";
  return c;
}

json PipelineConfig::to_json() const {
  json j;
  j["species"] = species;
  j["seed"] = seed;
  j["target"] = {{"l", target.l}, {"j", target.j}, {"mj1", target.mj1}, {"mj2", target.mj2}};
  j["cutoffs"] = {{"delta_n", cutoffs.delta_n},
                  {"l_max", cutoffs.l_max},
                  {"delta_e_ghz", cutoffs.delta_e_ghz},
                  {"depth", cutoffs.depth},
                  {"r_floor_um", cutoffs.r_floor_um}};
  j["grids"] = {{"radial_step", grids.radial_step},     {"r_min_um", grids.r_min_um},
                {"r_max_um", grids.r_max_um},           {"r_points", grids.r_points},
                {"theta_points", grids.theta_points},   {"z_nodes", grids.z_nodes},
                {"transverse_nodes", grids.transverse_nodes}, {"t_max_us", grids.t_max_us},
                {"t_points", grids.t_points},           {"field_stride", grids.field_stride}};
  j["dephasing"] = {{"potential", dephasing.potential},
                    {"window_us", dephasing.window_us},
                    {"band_mhz", dephasing.band_mhz},
                    {"samples_per_window", dephasing.samples_per_window},
                    {"phase_step", dephasing.phase_step}};
  j["medium"] = {{"od", medium.od},
                 {"sigma_z_um", medium.sigma_z_um},
                 {"gamma_e_mhz", medium.gamma_e_mhz},
                 {"gamma_gr_mhz", medium.gamma_gr_mhz},
                 {"w_eff_um", medium.w_eff_um},
                 {"max_step_rate", medium.max_step_rate}};
  j["sweep"] = {{"n", sweep.n}, {"omega_mhz", sweep.omega_mhz}, {"r_in", sweep.r_in}};
  j["potentials"] = {{"theta_deg", potentials.theta_deg}};
  j["fit"] = {{"t_lo_us", fit.t_lo_us},
              {"t_hi_us", fit.t_hi_us},
              {"photons", fit.photons},
              {"od_sat", fit.od_sat},
              {"input", fit.input}};
  j["output"] = {{"dir", output.dir}};
  j["cache"] = {{"policy", cache.policy}, {"dir", cache.dir}};
  return j;
}

namespace {

void check_keys(const json& given, const json& known, const std::string& where) {
  if (!given.is_object()) throw ConfigError("config " + (where.empty() ? "root" : where) + " must be an object");
  for (auto it = given.begin(); it != given.end(); ++it) {
    const std::string path = where.empty() ? it.key() : where + "." + it.key();
    if (!known.contains(it.key())) throw ConfigError("unknown config key '" + path + "'");
    if (known[it.key()].is_object()) check_keys(it.value(), known[it.key()], path);
  }
}

template <typename T>
void read(const json& j, const char* section, const char* key, T& field) {
  try {
    field = j.at(section).at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + section + "." + key + "' has the wrong type");
  }
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& given) {
  PipelineConfig c;
  json merged = c.to_json();
  check_keys(given, merged, "");
  merged.merge_patch(given);
  try {
    c.species = merged.at("species").get<std::string>();
    c.seed = merged.at("seed").get<unsigned>();
  } catch (const json::exception&) {
    throw ConfigError("config keys 'species' and 'seed' must be a string and an unsigned integer");
  }
  read(merged, "target", "l", c.target.l);
  read(merged, "target", "j", c.target.j);
  read(merged, "target", "mj1", c.target.mj1);
  read(merged, "target", "mj2", c.target.mj2);
  read(merged, "cutoffs", "delta_n", c.cutoffs.delta_n);
  read(merged, "cutoffs", "l_max", c.cutoffs.l_max);
  read(merged, "cutoffs", "delta_e_ghz", c.cutoffs.delta_e_ghz);
  read(merged, "cutoffs", "depth", c.cutoffs.depth);
  read(merged, "cutoffs", "r_floor_um", c.cutoffs.r_floor_um);
  read(merged, "grids", "radial_step", c.grids.radial_step);
  read(merged, "grids", "r_min_um", c.grids.r_min_um);
  read(merged, "grids", "r_max_um", c.grids.r_max_um);
  read(merged, "grids", "r_points", c.grids.r_points);
  read(merged, "grids", "theta_points", c.grids.theta_points);
  read(merged, "grids", "z_nodes", c.grids.z_nodes);
  read(merged, "grids", "transverse_nodes", c.grids.transverse_nodes);
  read(merged, "grids", "t_max_us", c.grids.t_max_us);
  read(merged, "grids", "t_points", c.grids.t_points);
  read(merged, "grids", "field_stride", c.grids.field_stride);
  read(merged, "dephasing", "potential", c.dephasing.potential);
  read(merged, "dephasing", "window_us", c.dephasing.window_us);
  read(merged, "dephasing", "band_mhz", c.dephasing.band_mhz);
  read(merged, "dephasing", "samples_per_window", c.dephasing.samples_per_window);
  read(merged, "dephasing", "phase_step", c.dephasing.phase_step);
  read(merged, "medium", "od", c.medium.od);
  read(merged, "medium", "sigma_z_um", c.medium.sigma_z_um);
  read(merged, "medium", "gamma_e_mhz", c.medium.gamma_e_mhz);
  read(merged, "medium", "gamma_gr_mhz", c.medium.gamma_gr_mhz);
  read(merged, "medium", "w_eff_um", c.medium.w_eff_um);
  read(merged, "medium", "max_step_rate", c.medium.max_step_rate);
  read(merged, "sweep", "n", c.sweep.n);
  read(merged, "sweep", "omega_mhz", c.sweep.omega_mhz);
  read(merged, "sweep", "r_in", c.sweep.r_in);
  read(merged, "potentials", "theta_deg", c.potentials.theta_deg);
  read(merged, "fit", "t_lo_us", c.fit.t_lo_us);
  read(merged, "fit", "t_hi_us", c.fit.t_hi_us);
  read(merged, "fit", "photons", c.fit.photons);
  read(merged, "fit", "od_sat", c.fit.od_sat);
  read(merged, "fit", "input", c.fit.input);
  read(merged, "output", "dir", c.output.dir);
  read(merged, "cache", "policy", c.cache.policy);
  read(merged, "cache", "dir", c.cache.dir);
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config " + file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
  return from_json(j);
}

std::string PipelineConfig::dump() const { return to_json().dump(2) + "\n"; }

std::string PipelineConfig::inputs_dump() const {
  json j = to_json();
  j.erase("output");
  j.erase("cache");
  return j.dump(2) + "\n";
}

std::string PipelineConfig::hash() const { return sha256_hex(inputs_dump()); }

void PipelineConfig::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json patch = value;
  std::vector<std::string> keys;
  std::stringstream ss(path);
  for (std::string k; std::getline(ss, k, '.');) keys.push_back(k);
  for (auto it = keys.rbegin(); it != keys.rend(); ++it) patch = json{{*it, patch}};
  json merged = to_json();
  check_keys(patch, merged, "");
  merged.merge_patch(patch);
  *this = from_json(merged);
}

void PipelineConfig::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(what) + " must be positive");
  };
  if (target.l.size() != 1) throw ConfigError("target.l must be a single orbital letter");
  const int l = orbital_from_letter(target.l[0]);
  const int two_j = static_cast<int>(std::lround(2.0 * target.j));
  if (std::abs(2.0 * target.j - two_j) > 1e-12 || std::abs(two_j - 2 * l) != 1)
    throw ConfigError("target.j must be l +- 1/2");
  for (double mj : {target.mj1, target.mj2}) {
    const int two_mj = static_cast<int>(std::lround(2.0 * mj));
    if (std::abs(2.0 * mj - two_mj) > 1e-12 || std::abs(two_mj) > two_j || (two_j - two_mj) % 2 != 0)
      throw ConfigError("target.mj1 and target.mj2 must be in -j..j");
  }
  if (cutoffs.delta_n < 0 || cutoffs.depth < 1) throw ConfigError("cutoffs.delta_n >= 0 and cutoffs.depth >= 1 required");
  positive(cutoffs.delta_e_ghz, "cutoffs.delta_e_ghz");
  positive(cutoffs.r_floor_um, "cutoffs.r_floor_um");
  positive(grids.radial_step, "grids.radial_step");
  positive(grids.r_min_um, "grids.r_min_um");
  if (!(grids.r_max_um > grids.r_min_um)) throw ConfigError("grids.r_max_um must exceed grids.r_min_um");
  if (grids.r_points < 2) throw ConfigError("grids.r_points must be at least 2");
  if (grids.theta_points < 2) throw ConfigError("grids.theta_points must be at least 2");
  if (grids.z_nodes < 3) throw ConfigError("grids.z_nodes must be at least 3");
  if (grids.transverse_nodes < 1) throw ConfigError("grids.transverse_nodes must be at least 1");
  positive(grids.t_max_us, "grids.t_max_us");
  if (grids.t_points < 3) throw ConfigError("grids.t_points must be at least 3");
  if (grids.field_stride < 1) throw ConfigError("grids.field_stride must be at least 1");
  potential_definition_from_string(dephasing.potential);
  positive(dephasing.window_us, "dephasing.window_us");
  if (dephasing.samples_per_window < 3) throw ConfigError("dephasing.samples_per_window must be at least 3");
  positive(dephasing.phase_step, "dephasing.phase_step");
  positive(medium.od, "medium.od");
  positive(medium.sigma_z_um, "medium.sigma_z_um");
  positive(medium.gamma_e_mhz, "medium.gamma_e_mhz");
  if (!(medium.gamma_gr_mhz >= 0.0)) throw ConfigError("medium.gamma_gr_mhz must be non-negative");
  positive(medium.w_eff_um, "medium.w_eff_um");
  positive(medium.max_step_rate, "medium.max_step_rate");
  if (sweep.n.empty() || sweep.omega_mhz.empty() || sweep.r_in.empty())
    throw ConfigError("sweep.n, sweep.omega_mhz and sweep.r_in must be non-empty");
  for (int n : sweep.n)
    if (n <= l) throw ConfigError("sweep.n entries must exceed the target l");
  for (double w : sweep.omega_mhz) positive(w, "sweep.omega_mhz entries");
  for (double r : sweep.r_in) positive(r, "sweep.r_in entries");
  if (!(potentials.theta_deg >= 0.0 && potentials.theta_deg <= 180.0))
    throw ConfigError("potentials.theta_deg must be in [0, 180]");
  positive(fit.photons, "fit.photons");
  if (!(fit.od_sat >= 0.0)) throw ConfigError("fit.od_sat must be non-negative");
  if (cache.policy != "use" && cache.policy != "refresh" && cache.policy != "off")
    throw ConfigError("cache.policy must be use, refresh or off");
  if (output.dir.empty()) throw ConfigError("output.dir must be set");
}

SpeciesParameters PipelineConfig::species_parameters() const {
  if (species == "rb87") return SpeciesParameters::rubidium87();
  if (species == "hydrogen") return SpeciesParameters::hydrogen();
  return SpeciesParameters::load(species);
}

PairTarget PipelineConfig::pair_target(int n) const {
  const Level lv = make_level(n, orbital_from_letter(target.l[0]), target.j);
  return {lv, lv};
}

MediumConfig PipelineConfig::medium_config(double omega_mhz, double r_in) const {
  MediumConfig m;
  m.od = medium.od;
  m.sigma_z_um = medium.sigma_z_um;
  m.length_um = 4.0 * medium.sigma_z_um;
  m.gamma_e = units::two_pi_mhz(medium.gamma_e_mhz);
  m.gamma_gr = units::two_pi_mhz(medium.gamma_gr_mhz);
  m.omega = units::two_pi_mhz(omega_mhz);
  m.w_eff_um = medium.w_eff_um;
  m.r_in = r_in;
  return m;
}

MapOptions PipelineConfig::map_options(int jobs) const {
  MapOptions o;
  for (int i = 0; i < grids.theta_points; ++i)
    o.theta_grid.push_back(0.5 * units::kPi * i / (grids.theta_points - 1));
  o.two_m1_lab = static_cast<int>(std::lround(2.0 * target.mj1));
  o.two_m2_lab = static_cast<int>(std::lround(2.0 * target.mj2));
  o.gamma.window_us = dephasing.window_us;
  o.gamma.band = units::two_pi_mhz(dephasing.band_mhz);
  o.gamma.samples_per_window = static_cast<std::size_t>(dephasing.samples_per_window);
  o.gamma.phase_step = dephasing.phase_step;
  o.potential = potential_definition_from_string(dephasing.potential);
  o.jobs = jobs;
  return o;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

RunContext RunContext::make(PipelineConfig config, int jobs, std::ostream* log) {
  config.validate();
  RunContext ctx;
  ctx.out_dir = config.output.dir;
  if (!config.cache.dir.empty()) ctx.cache_dir = config.cache.dir;
  else if (const char* env = std::getenv("RYDPOL_CACHE_DIR"); env && *env) ctx.cache_dir = env;
  else ctx.cache_dir = ctx.out_dir / "cache";
  ctx.config = std::move(config);
  ctx.jobs = std::max(1, jobs);
  ctx.log = log;
  return ctx;
}

// ---------------------------------------------------------------------------
// Stage keys

std::string potentials_key(const PipelineConfig& c, int n) {
  const json j = {{"code_version", kCodeVersion},
                  {"species", c.species_parameters().to_json()},
                  {"target", {{"n", n}, {"l", c.target.l}, {"j", c.target.j}}},
                  {"cutoffs", c.to_json()["cutoffs"]},
                  {"radial_step", c.grids.radial_step},
                  {"r_grid", {c.grids.r_min_um, c.grids.r_max_um, c.grids.r_points}}};
  return sha256_hex(j.dump());
}

std::string map_key(const PipelineConfig& c, int n) {
  const json j = {{"potentials", potentials_key(c, n)},
                  {"lab_state", {c.target.mj1, c.target.mj2}},
                  {"dephasing", c.to_json()["dephasing"]},
                  {"theta_points", c.grids.theta_points}};
  return sha256_hex(j.dump());
}

std::string propagate_key(const PipelineConfig& c, int n) {
  const json g = c.to_json()["grids"];
  const json j = {{"map", map_key(c, n)},
                  {"medium", c.to_json()["medium"]},
                  {"omega_mhz", c.sweep.omega_mhz},
                  {"r_in", c.sweep.r_in},
                  {"grids",
                   {g["z_nodes"], g["transverse_nodes"], g["t_max_us"], g["t_points"], g["field_stride"]}}};
  return sha256_hex(j.dump());
}

// ---------------------------------------------------------------------------
// Artifacts

namespace {

void note(const RunContext& ctx, const std::string& line) {
  if (ctx.log) *ctx.log << line << std::endl;
}

std::string brief(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string artifact_name(const std::string& stem, int n) { return stem + "_n" + std::to_string(n) + ".csv"; }

std::vector<std::pair<std::string, std::string>> header(const RunContext& ctx, const std::string& stage,
                                                        const std::string& key) {
  return {{"config_hash", ctx.config.hash()},
          {"code_version", kCodeVersion},
          {"stage", stage},
          {"stage_key", key}};
}

std::string file_digest(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

void write_text_atomic(const fs::path& file, const std::string& text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  const fs::path tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << text;
  }
  fs::rename(tmp, file);
}

fs::path sidecar(const fs::path& csv) { return fs::path(csv.string() + ".json"); }

// Sidecar JSON describing a written CSV.
void write_sidecar(const RunContext& ctx, const fs::path& csv, const std::string& stage, const std::string& key,
                   const json& units, const json& extra = json::object()) {
  const Table t = read_table(csv);
  json j = {{"artifact", csv.filename().string()},
            {"stage", stage},
            {"stage_key", key},
            {"config_hash", ctx.config.hash()},
            {"code_version", kCodeVersion},
            {"columns", t.columns},
            {"rows", t.rows.size()},
            {"units", units},
            {"sha256", file_digest(csv)}};
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  write_text_atomic(sidecar(csv), j.dump(2) + "\n");
}

// Upstream artifact must exist and carry the key this config expects.
void require_upstream(const fs::path& csv, const std::string& expected_key,
                      const std::string& producer) {
  const fs::path meta = sidecar(csv);
  if (!fs::exists(csv) || !fs::exists(meta))
    throw ConfigError("missing upstream artifact " + csv.string() + "; run `rydpol " + producer +
                      "` with this config first");
  std::ifstream in(meta);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error&) {
    throw ConfigError("unreadable metadata " + meta.string() + "; rerun `rydpol " + producer + "`");
  }
  const std::string found = j.value("stage_key", "");
  if (found != expected_key)
    throw ConfigError("provenance mismatch: " + csv.string() + " was produced with stage key " +
                      found.substr(0, 16) + " but this config expects " + expected_key.substr(0, 16) +
                      "; rerun `rydpol " + producer + "`");
  if (j.value("sha256", "") != file_digest(csv))
    throw ConfigError(csv.string() + " does not match the digest in its metadata; rerun `rydpol " +
                      producer + "`");
}

// Runs one stage, prefixing failures with the stage name and inputs key.
template <typename Body>
auto stage(const std::string& name, const std::string& key, Body&& body) {
  const std::string prefix = "stage '" + name + "' (inputs " + key.substr(0, 16) + "): ";
  try {
    return body();
  } catch (const ResolutionError& e) {
    throw ResolutionError(prefix + e.what(), e.required_step_um);
  } catch (const FitError& e) {
    throw FitError(prefix + e.what());
  } catch (const NumericError& e) {
    throw NumericError(prefix + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const DomainError& e) {
    throw DomainError(prefix + e.what());
  }
}

std::vector<double> time_grid(const PipelineConfig& c) {
  std::vector<double> t;
  for (int i = 0; i < c.grids.t_points; ++i) t.push_back(c.grids.t_max_us * i / (c.grids.t_points - 1));
  return t;
}

}  // namespace

PairEigensystem cached_eigensystem(const RunContext& ctx, int n) {
  const PipelineConfig& c = ctx.config;
  const std::string key = potentials_key(c, n);
  const fs::path file = ctx.cache_dir / ("eig_" + key.substr(0, 32) + ".bin");
  if (c.cache.policy == "use" && fs::exists(file)) {
    note(ctx, "potentials n=" + std::to_string(n) + ": cache hit " + file.filename().string());
    return load_eigensystem(file);
  }
  const SpeciesParameters sp = c.species_parameters();
  RadialGridSpec grid;
  grid.step = c.grids.radial_step;
  RadialCache radial(sp, grid);
  const auto bases = build_pair_basis(sp, c.pair_target(n), c.cutoffs);
  std::size_t dim = 0;
  for (const auto& b : bases) dim += b.states.size();
  note(ctx, "potentials n=" + std::to_string(n) + ": diagonalizing " + std::to_string(bases.size()) +
                " M blocks, " + std::to_string(dim) + " pair states, " + std::to_string(c.grids.r_points) +
                " distances");
  DiagonalizeOptions opts;
  opts.jobs = ctx.jobs;
  PairEigensystem eig =
      diagonalize_over_grid(bases, log_grid(c.grids.r_min_um, c.grids.r_max_um, c.grids.r_points), radial, opts);
  if (c.cache.policy != "off") save_eigensystem(file, eig);
  return eig;
}

void run_potentials(const RunContext& ctx) {
  const PipelineConfig& c = ctx.config;
  for (int n : c.sweep.n) {
    const std::string key = potentials_key(c, n);
    stage("potentials", key, [&] {
      const PairEigensystem eig = cached_eigensystem(ctx, n);
      const double theta = c.potentials.theta_deg * units::kPi / 180.0;
      const MapOptions mo = c.map_options(ctx.jobs);
      const OverlapTable ov =
          project_onto_eigenstates(eig, rotate_pair_state(eig.target, mo.two_m1_lab, mo.two_m2_lab, theta));
      std::vector<std::string> lines;
      for (const auto& [k, v] : header(ctx, "potentials", key)) lines.push_back(k + ": " + v);
      lines.push_back("species: " + eig.species);
      lines.push_back("target: " + to_string(eig.target.a) + ";" + to_string(eig.target.b));
      lines.push_back("overlap_theta_deg: " + format_double(c.potentials.theta_deg));
      const fs::path csv = ctx.out_dir / artifact_name("potentials", n);
      write_eigensystem_table(csv, eig, ov, lines);
      write_sidecar(ctx, csv, "potentials", key,
                    {{"R_um", "um"}, {"M", "hbar"}, {"track", "index"}, {"eigenvalue_ghz", "GHz"}, {"weight", "1"}});
      note(ctx, "potentials n=" + std::to_string(n) + ": wrote " + csv.string());
    });
  }
}

void run_map(const RunContext& ctx) {
  const PipelineConfig& c = ctx.config;
  for (int n : c.sweep.n) {
    const std::string key = map_key(c, n);
    require_upstream(ctx.out_dir / artifact_name("potentials", n), potentials_key(c, n), "potentials");
    stage("map", key, [&] {
      const PairEigensystem eig = cached_eigensystem(ctx, n);
      DephasingMap map = build_map(eig, c.map_options(ctx.jobs));
      auto meta = header(ctx, "map", key);
      meta.insert(meta.end(), map.provenance.begin(), map.provenance.end());
      map.provenance = meta;
      const fs::path csv = ctx.out_dir / artifact_name("map", n);
      write_map(csv, map);
      json extra = {{"max_gamma_rad_per_us", map.gamma.maxCoeff()}};
      write_sidecar(ctx, csv, "map", key,
                    {{"R_um", "um"},
                     {"theta_rad", "rad"},
                     {"z_um", "um"},
                     {"r_perp_um", "um"},
                     {"V_rad_per_us", "rad/us"},
                     {"Gamma_rad_per_us", "rad/us"},
                     {"window_us", "us"}},
                    extra);
      note(ctx, "map n=" + std::to_string(n) + ": wrote " + csv.string() + ", max Gamma = 2pi x " +
                    brief(units::to_mhz(map.gamma.maxCoeff())) + " MHz");
    });
  }
}

void run_propagate(const RunContext& ctx) {
  const PipelineConfig& c = ctx.config;
  const std::vector<double> t = time_grid(c);
  for (int n : c.sweep.n) {
    const std::string key = propagate_key(c, n);
    const fs::path map_csv = ctx.out_dir / artifact_name("map", n);
    require_upstream(map_csv, map_key(c, n), "map");
    stage("propagate", key, [&] {
      const DephasingMap map = read_map(map_csv);
      Table conv, series, field;
      conv.meta = series.meta = field.meta = header(ctx, "propagate", key);
      conv.meta.emplace_back("units", "omega 2pi MHz, N events/us, C us, v_g um/us, delay us");
      conv.columns = {"omega_mhz", "N", "od_im", "C", "group_velocity_um_per_us", "delay_us", "single_transmission"};
      series.meta.emplace_back("units", "omega 2pi MHz, r_in photons/us, t us");
      series.columns = {"n", "omega_mhz", "r_in", "t_us", "transmission"};
      field.meta.emplace_back("units", "omega 2pi MHz, z um, amplitudes per unit input field");
      field.columns = {"omega_mhz", "r_perp_um", "z1_um", "z2_um", "ss_re", "ss_im", "ss_abs2", "ee_abs2"};
      for (double om : c.sweep.omega_mhz) {
        const MediumConfig m = c.medium_config(om);
        ConversionOptions co;
        co.transverse_nodes = c.grids.transverse_nodes;
        co.solver.nodes = c.grids.z_nodes;
        co.solver.max_step_rate = c.medium.max_step_rate;
        co.jobs = ctx.jobs;
        const ConversionResult r = conversion_rate(m, map, co);
        const SinglePolariton sp = single_polariton_transmission(m);
        conv.rows.push_back({om, r.n, r.od_im, r.rate_constant, sp.group_velocity, sp.delay_us, sp.transmission});
        // N scales as R_in^2 at fixed medium.
        for (double rin : c.sweep.r_in) {
          const MediumConfig mr = c.medium_config(om, rin);
          const double scale = (rin / m.r_in) * (rin / m.r_in);
          const TransmissionSeries s = transmission_time_series(mr, r.n * scale, 0.0, r.od_im, t);
          for (std::size_t i = 0; i < t.size(); ++i)
            series.rows.push_back({static_cast<double>(n), om, rin, t[i], s.transmission[i]});
        }
        const double rp = r.nodes.front().r_perp_um;
        const Profile v = [&](double z) { return map.v_at(z, rp); };
        const Profile g = [&](double z) { return map.gamma_at(z, rp); };
        const TwoPhotonField f = solve_two_photon(m, v, g, co.solver);
        const auto nz = static_cast<Eigen::Index>(f.z_um.size());
        for (Eigen::Index i = 0; i < nz; i += c.grids.field_stride)
          for (Eigen::Index j = 0; j < nz; j += c.grids.field_stride) {
            const auto ss = f.ss(i, j);
            field.rows.push_back({om, rp, f.z_um[static_cast<std::size_t>(i)], f.z_um[static_cast<std::size_t>(j)],
                                  ss.real(), ss.imag(), std::norm(ss), std::norm(f.ee(i, j))});
          }
        note(ctx, "propagate n=" + std::to_string(n) + " Omega=2pi x " + brief(om) + " MHz: N = " +
                      brief(r.n) + "/us, OD_im = " + brief(r.od_im) + ", C = " +
                      brief(r.rate_constant));
      }
      const fs::path conv_csv = ctx.out_dir / artifact_name("conversion", n);
      const fs::path series_csv = ctx.out_dir / artifact_name("transmission", n);
      const fs::path field_csv = ctx.out_dir / artifact_name("field", n);
      write_table(conv_csv, conv);
      write_table(series_csv, series);
      write_table(field_csv, field);
      write_sidecar(ctx, conv_csv, "propagate", key,
                    {{"omega_mhz", "2pi MHz"},
                     {"N", "1/us"},
                     {"od_im", "1"},
                     {"C", "us"},
                     {"group_velocity_um_per_us", "um/us"},
                     {"delay_us", "us"},
                     {"single_transmission", "1"}});
      write_sidecar(ctx, series_csv, "propagate", key,
                    {{"n", "1"}, {"omega_mhz", "2pi MHz"}, {"r_in", "photons/us"}, {"t_us", "us"}, {"transmission", "1"}});
      write_sidecar(ctx, field_csv, "propagate", key,
                    {{"omega_mhz", "2pi MHz"},
                     {"r_perp_um", "um"},
                     {"z1_um", "um"},
                     {"z2_um", "um"},
                     {"ss_re", "1"},
                     {"ss_im", "1"},
                     {"ss_abs2", "1"},
                     {"ee_abs2", "1"}});
    });
  }
}

const PowerLawRow& FitSummary::power_law(int n) const {
  for (const auto& p : power_laws)
    if (p.n == n) return p;
  throw ConfigError("fit summary has no power law for n = " + std::to_string(n));
}

FitSummary run_fit(const RunContext& ctx) {
  const PipelineConfig& c = ctx.config;
  // (n, omega, r_in) -> series
  std::map<std::tuple<int, double, double>, TransmissionSeries> groups;
  auto collect = [&](const Table& t) {
    const std::size_t cn = t.column("n"), co = t.column("omega_mhz"), cr = t.column("r_in"),
                      ct = t.column("t_us"), cT = t.column("transmission");
    for (const auto& row : t.rows) {
      const int n = static_cast<int>(std::lround(row[cn]));
      auto& s = groups[{n, row[co], row[cr]}];
      s.n = n;
      s.omega = units::two_pi_mhz(row[co]);
      s.r_in = row[cr];
      s.t_us.push_back(row[ct]);
      s.transmission.push_back(row[cT]);
    }
  };
  std::string key_material = c.to_json()["fit"].dump();
  if (!c.fit.input.empty()) {
    collect(read_table(c.fit.input));
    key_material += file_digest(c.fit.input);
  } else {
    for (int n : c.sweep.n) {
      const fs::path csv = ctx.out_dir / artifact_name("transmission", n);
      require_upstream(csv, propagate_key(c, n), "propagate");
      collect(read_table(csv));
      key_material += propagate_key(c, n);
    }
  }
  const std::string key = sha256_hex(key_material);
  return stage("fit", key, [&] {
    if (groups.empty()) throw FitError("no transmission series to fit");
    Table rod, summary;
    rod.meta = summary.meta = header(ctx, "fit", key);
    rod.meta.emplace_back("units", "omega 2pi MHz, r_in photons/us, R_OD 1/us");
    rod.columns = {"n", "omega_mhz", "r_in", "R_OD", "R_OD_sigma", "OD_0", "in_window"};
    summary.meta.emplace_back("units", "omega 2pi MHz, C us, a us (C at Omega = 2pi x 1 MHz)");
    summary.columns = {"n", "omega_mhz", "C", "C_sigma", "r_in_max", "points", "a", "a_sigma", "k", "k_sigma"};

    FitSummary out;
    std::map<std::pair<int, double>, std::vector<RatePoint>> rate_points;
    for (const auto& [gk, s] : groups) {
      const auto od = effective_od(s);
      const double hi = c.fit.t_hi_us < 0.0 ? s.t_us.back() : c.fit.t_hi_us;
      const FitResult f = fit_R_OD(s.t_us, od, c.fit.t_lo_us, hi);
      const double r_in_max =
          quadratic_window(c.medium_config(std::get<1>(gk)).delay_us(), c.fit.photons);
      rate_points[{std::get<0>(gk), std::get<1>(gk)}].push_back({s.r_in, f.value("R_OD")});
      rod.rows.push_back({static_cast<double>(std::get<0>(gk)), std::get<1>(gk), s.r_in, f.value("R_OD"),
                          f.sigma("R_OD"), f.value("OD_0"), s.r_in <= r_in_max ? 1.0 : 0.0});
    }
    std::map<int, std::vector<PowerLawPoint>> laws;
    for (const auto& [rk, pts] : rate_points) {
      const double r_in_max = quadratic_window(c.medium_config(rk.second).delay_us(), c.fit.photons);
      const FitResult f = fit_rate_constant(pts, r_in_max);
      out.rates.push_back({rk.first, rk.second, f.value("C"), f.sigma("C"), r_in_max, f.points_used});
      laws[rk.first].push_back({units::two_pi_mhz(rk.second), f.value("C")});
    }
    for (const auto& [n, pts] : laws) {
      PowerLawRow row{n, std::nan(""), std::nan(""), std::nan(""), std::nan(""), pts.size()};
      if (pts.size() >= 2) {
        const FitResult f = fit_power_law(pts);
        row.a = f.value("a");
        row.a_sigma = f.sigma("a");
        row.k = f.value("k");
        row.k_sigma = f.sigma("k");
        note(ctx, "fit n=" + std::to_string(n) + ": k = " + brief(row.k) + " +- " + brief(row.k_sigma));
      }
      out.power_laws.push_back(row);
    }
    for (const auto& r : out.rates) {
      const PowerLawRow& p = out.power_law(r.n);
      summary.rows.push_back({static_cast<double>(r.n), r.omega_mhz, r.c, r.c_sigma, r.r_in_max,
                              static_cast<double>(r.points), p.a, p.a_sigma, p.k, p.k_sigma});
    }
    const fs::path rod_csv = ctx.out_dir / "rate_od.csv";
    const fs::path sum_csv = ctx.out_dir / "fit_summary.csv";
    write_table(rod_csv, rod);
    write_table(sum_csv, summary);
    write_sidecar(ctx, rod_csv, "fit", key,
                  {{"n", "1"}, {"omega_mhz", "2pi MHz"}, {"r_in", "photons/us"}, {"R_OD", "1/us"},
                   {"R_OD_sigma", "1/us"}, {"OD_0", "1"}, {"in_window", "bool"}});
    write_sidecar(ctx, sum_csv, "fit", key,
                  {{"n", "1"}, {"omega_mhz", "2pi MHz"}, {"C", "us"}, {"C_sigma", "us"},
                   {"r_in_max", "photons/us"}, {"points", "1"}, {"a", "us"}, {"a_sigma", "us"},
                   {"k", "1"}, {"k_sigma", "1"}});
    return out;
  });
}

FitSummary run_pipeline(const RunContext& ctx) {
  fs::create_directories(ctx.out_dir);
  write_text_atomic(ctx.out_dir / "config.json", ctx.config.inputs_dump());
  run_potentials(ctx);
  run_map(ctx);
  run_propagate(ctx);
  return run_fit(ctx);
}

std::vector<fs::path> bundle_files(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), root));
  std::sort(files.begin(), files.end());
  return files;
}

std::string bundle_hash(const fs::path& root) {
  std::string material;
  for (const auto& f : bundle_files(root)) material += f.generic_string() + '\0' + file_digest(root / f) + '\n';
  return sha256_hex(material);
}

}  // namespace rydpol
