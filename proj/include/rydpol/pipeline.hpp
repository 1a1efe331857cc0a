#pragma once

// Config-driven orchestration: potentials -> map -> propagate -> fit, with an
// eigensystem cache, headered CSV artifacts and sidecar JSON metadata.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "rydpol/dephasing.hpp"
#include "rydpol/fits.hpp"
#include "rydpol/pair.hpp"
#include "rydpol/propagation.hpp"

namespace rydpol {

inline constexpr const char* kCodeVersion = "0.1.0";

struct PipelineConfig {
  // Built-in name ("rb87", "hydrogen") or path to a species JSON file.
  std::string species = "rb87";

  struct Target {
    std::string l = "D";
    double j = 2.5;
    double mj1 = 2.5;  // lab-frame Zeeman state of each atom
    double mj2 = 2.5;
  } target;

  PairCutoffs cutoffs{2, -1, 8.0, 2, 1.0};

  struct Grids {
    double radial_step = 0.01;
    double r_min_um = 2.0;
    double r_max_um = 48.0;
    int r_points = 48;
    int theta_points = 10;  // uniform over [0, pi/2]
    int z_nodes = 257;
    int transverse_nodes = 12;
    double t_max_us = 10.0;
    int t_points = 21;
    int field_stride = 8;  // subsampling of exported (z1, z2) slices
  } grids;

  struct Dephasing {
    std::string potential = "max_overlap";
    double window_us = 1.0;
    double band_mhz = 200.0;
    int samples_per_window = 400;
    double phase_step = 0.05;
  } dephasing;

  struct Medium {
    double od = 146.0;
    double sigma_z_um = 80.0;  // L = 4 sigma_z
    double gamma_e_mhz = 6.1;
    double gamma_gr_mhz = 0.2;
    double w_eff_um = 7.0;
    double max_step_rate = 1.0;
  } medium;

  struct Sweep {
    std::vector<int> n{80, 88, 100};
    std::vector<double> omega_mhz{6.1, 8.3, 10.8, 12.0, 16.6, 26.3};
    std::vector<double> r_in{0.2, 0.4, 0.6, 0.8, 1.0, 1.5, 2.0, 3.0};  // photons/us
  } sweep;

  struct Potentials {
    double theta_deg = 60.0;  // rotation used to color the exported curves
  } potentials;

  struct Fit {
    double t_lo_us = 0.0;
    double t_hi_us = -1.0;  // < 0: end of the series
    double photons = 2.0;   // quadratic window edge in mean photon number
    double od_sat = 0.0;
    std::string input;  // external T(t) table; empty: simulated series
  } fit;

  struct Output {
    std::string dir = "out";
  } output;

  struct Cache {
    std::string policy = "use";  // use | refresh | off
    std::string dir;             // empty: $RYDPOL_CACHE_DIR, else <out>/cache
  } cache;

  unsigned seed = 0;

  static PipelineConfig demo();
  static PipelineConfig from_json(const nlohmann::json& j);  // rejects unknown keys
  static PipelineConfig load(const std::filesystem::path& file);

  nlohmann::json to_json() const;
  std::string dump() const;  // canonical: sorted keys, 2-space indent
  // Canonical dump without the output and cache sections, which do not
  // change results, and its SHA-256.
  std::string inputs_dump() const;
  std::string hash() const;

  // "section.key=value"; value parsed as JSON, falling back to a string.
  void set(const std::string& assignment);
  void validate() const;

  SpeciesParameters species_parameters() const;
  PairTarget pair_target(int n) const;
  MediumConfig medium_config(double omega_mhz, double r_in = 1.0) const;
  MapOptions map_options(int jobs) const;
};

std::string sha256_hex(const std::string& bytes);

struct RunContext {
  PipelineConfig config;
  std::filesystem::path out_dir;
  std::filesystem::path cache_dir;
  int jobs = 1;
  std::ostream* log = nullptr;

  static RunContext make(PipelineConfig config, int jobs = 1, std::ostream* log = nullptr);
};

// Keys over the config sections each stage reads.
std::string potentials_key(const PipelineConfig& c, int n);
std::string map_key(const PipelineConfig& c, int n);
std::string propagate_key(const PipelineConfig& c, int n);

// Eigensystem for one n, from the cache when the key matches.
PairEigensystem cached_eigensystem(const RunContext& ctx, int n);

struct RateConstantFit {
  int n = 0;
  double omega_mhz = 0.0;
  double c = 0.0;
  double c_sigma = 0.0;
  double r_in_max = 0.0;
  std::size_t points = 0;
};

struct PowerLawRow {
  int n = 0;
  double a = 0.0;
  double a_sigma = 0.0;
  double k = 0.0;
  double k_sigma = 0.0;
  std::size_t points = 0;
};

struct FitSummary {
  std::vector<RateConstantFit> rates;
  std::vector<PowerLawRow> power_laws;

  const PowerLawRow& power_law(int n) const;
};

void run_potentials(const RunContext& ctx);
void run_map(const RunContext& ctx);
void run_propagate(const RunContext& ctx);
FitSummary run_fit(const RunContext& ctx);
FitSummary run_pipeline(const RunContext& ctx);

// Files of an output bundle in sorted order, relative to the root.
std::vector<std::filesystem::path> bundle_files(const std::filesystem::path& root);
std::string bundle_hash(const std::filesystem::path& root);

}  // namespace rydpol
