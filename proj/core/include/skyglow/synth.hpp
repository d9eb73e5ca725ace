#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "skyglow/raster.hpp"
#include "skyglow/regions.hpp"
#include "skyglow/streaming.hpp"

namespace skyglow {

using Kernel3 = std::array<std::array<double, 3>, 3>;  // rows Neg, Neu, Pos

// Counter-based generator: every draw is keyed by (seed, pixel, year,
// stream), so generation order and chunking never change the output.
namespace rng {
std::uint64_t mix64(std::uint64_t x);
std::uint64_t draw(std::uint64_t seed, std::uint64_t pixel, std::uint64_t year,
                   std::uint64_t stream);
double uniform(std::uint64_t seed, std::uint64_t pixel, std::uint64_t year,
               std::uint64_t stream);
}  // namespace rng

// Planted per-year dispersion for the synthetic change law.
struct SigmaSchedule {
  enum class Mode { Constant, Linear, List };
  Mode mode = Mode::Constant;
  double value = 2.0;
  double from = 0.0, to = 0.0;
  std::vector<double> values;

  static SigmaSchedule constant(double s);
  static SigmaSchedule linear(double from, double to);
  static SigmaSchedule list(std::vector<double> values);

  // k-th diff year out of n (k in [0, n)).
  double at(std::size_t k, std::size_t n) const;
};

struct PanelSpec {
  GridGeometry geometry;
  int year_start = 1992;
  int year_end = 2013;
  std::uint64_t seed = 1;
  std::uint8_t base_dn = 20;
  std::vector<double> active_fraction{0.05};  // one value, or one per diff year
  SigmaSchedule sigma;
  std::optional<Kernel3> kernel;  // planted transition kernel, overrides sigma
  int region_count = 0;           // vertical bands; 0 = no regions
  std::vector<double> drift;      // per-region probability of a +1 DN bump

  void validate() const;
  std::size_t diff_year_count() const {
    return static_cast<std::size_t>(year_end - year_start);
  }
  double active_fraction_at(std::size_t k) const {
    return active_fraction.size() == 1 ? active_fraction[0] : active_fraction[k];
  }
};

struct GroundTruth {
  std::vector<int> diff_years;
  std::vector<double> sigma;  // planted dispersion per diff year
  std::optional<Kernel3> kernel;
  std::array<double, 3> kernel_pi{};  // stationary law of the planted kernel
  std::vector<double> drift;
  double clip_rate = 0.0;
  std::uint64_t seed = 0;
};

struct SynthPanel {
  Panel panel;
  std::optional<RegionMask> mask;
  GroundTruth truth;
};

// Year-by-year generator holding one evolving DN plane, for panels too large
// to keep fully resident. Years must be consumed in order.
class PanelGenerator {
 public:
  explicit PanelGenerator(const PanelSpec& spec);

  bool done() const { return next_year_ > spec_.year_end; }
  int next_year() const { return next_year_; }
  RasterGrid take_year();  // grid for next_year(), advancing the walk

  // Zero-copy variant for panels too large to duplicate: steps the resident
  // plane to next_year() and exposes it. current() views the plane of
  // current_year() until the following advance().
  void advance();
  int current_year() const { return next_year_ - 1; }
  const std::vector<std::uint8_t>& current() const { return current_; }

  std::optional<RegionMask> make_mask() const;
  GroundTruth truth() const;

  std::int64_t clipped_draws() const { return clipped_; }
  std::int64_t active_draws() const { return active_draws_; }

 private:
  PanelSpec spec_;
  int next_year_;
  std::vector<std::uint8_t> current_;
  PackedStatePlane chain_states_;  // planted chain state per pixel (kernel mode)
  std::int64_t clipped_ = 0;
  std::int64_t active_draws_ = 0;
};

// Deterministic panel with planted dynamics; clip rate above 1% of active
// draws raises FeasibilityError.
SynthPanel gen_panel(const PanelSpec& spec);

// Markov state paths (codes 0=Neg, 1=Neu, 2=Pos), pixel-major: the path of
// pixel p occupies [p*n_years, (p+1)*n_years). Paths start from the
// stationary law of the kernel.
std::vector<std::uint8_t> gen_state_sequences(const Kernel3& kernel,
                                              std::size_t n_pixels,
                                              std::size_t n_years,
                                              std::uint64_t seed);

// Stationary law of a 3x3 row-stochastic kernel by direct linear solve
// (independent of the power-iteration path used for estimates).
std::array<double, 3> kernel_stationary(const Kernel3& kernel);

// Plain-text key=value spec file (see README for the key list).
PanelSpec parse_panel_spec(const std::filesystem::path& path);

}  // namespace skyglow
