#include "skyglow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

namespace skyglow {

namespace rng {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t draw(std::uint64_t seed, std::uint64_t pixel, std::uint64_t year,
                   std::uint64_t stream) {
  std::uint64_t h = mix64(seed ^ 0xA0761D6478BD642Full);
  h = mix64(h ^ pixel);
  h = mix64(h ^ (year << 8) ^ stream);
  return h;
}

double uniform(std::uint64_t seed, std::uint64_t pixel, std::uint64_t year,
               std::uint64_t stream) {
  return static_cast<double>(draw(seed, pixel, year, stream) >> 11) * 0x1.0p-53;
}

}  // namespace rng

SigmaSchedule SigmaSchedule::constant(double s) {
  SigmaSchedule sch;
  sch.mode = Mode::Constant;
  sch.value = s;
  return sch;
}

SigmaSchedule SigmaSchedule::linear(double from, double to) {
  SigmaSchedule sch;
  sch.mode = Mode::Linear;
  sch.from = from;
  sch.to = to;
  return sch;
}

SigmaSchedule SigmaSchedule::list(std::vector<double> values) {
  SigmaSchedule sch;
  sch.mode = Mode::List;
  sch.values = std::move(values);
  return sch;
}

double SigmaSchedule::at(std::size_t k, std::size_t n) const {
  switch (mode) {
    case Mode::Constant:
      return value;
    case Mode::Linear:
      if (n <= 1) return from;
      return from + (to - from) * static_cast<double>(k) / static_cast<double>(n - 1);
    case Mode::List:
      if (k >= values.size()) {
        throw ArgumentError("sigma schedule list shorter than diff years");
      }
      return values[k];
  }
  throw ArgumentError("invalid sigma schedule");
}

namespace {

// Change magnitude law for a planted dispersion s >= 1: magnitudes are the
// two integers bracketing s, mixed so that E[m^2] = s^2 exactly; signs are
// balanced, so the law has mean zero and population std s.
struct MagnitudeLaw {
  std::int32_t m1;
  std::int32_t m2;
  double alpha;  // probability of m1

  explicit MagnitudeLaw(double s) {
    m1 = static_cast<std::int32_t>(std::floor(s));
    if (static_cast<double>(m1) == s) {
      m2 = m1;
      alpha = 1.0;
    } else {
      m2 = m1 + 1;
      alpha = (double(m2) * m2 - s * s) / (double(m2) * m2 - double(m1) * m1);
    }
  }

  std::int32_t sample(double u_mag, double u_sign) const {
    const std::int32_t m = u_mag < alpha ? m1 : m2;
    return u_sign < 0.5 ? -m : m;
  }
};

// Planted kernel deltas: large moves for the persistent states, a 1-DN
// wiggle for the neutral state. Chosen so the classifier's own sigma
// threshold separates them with margin.
constexpr std::int32_t kKernelJump = 3;

std::uint8_t sample_state(const std::array<double, 3>& dist, double u) {
  double acc = 0.0;
  for (int s = 0; s < 3; ++s) {
    acc += dist[s];
    if (u < acc) return static_cast<std::uint8_t>(s);
  }
  return 2;
}

double kernel_sigma(const std::array<double, 3>& pi) {
  return std::sqrt((pi[0] + pi[2]) * double(kKernelJump) * kKernelJump + pi[1]);
}

enum Stream : std::uint64_t {
  kStreamActive = 0,
  kStreamMagnitude = 1,
  kStreamSign = 2,
  kStreamDrift = 3,
  kStreamInitState = 4,
  kStreamStep = 5,
  kStreamNeutralSign = 6,
};

}  // namespace

namespace {

// Kernels without a unique stationary law (absorbing/periodic) start from the
// uniform distribution; every distribution is stationary for the identity.
std::array<double, 3> start_distribution(const Kernel3& kernel) {
  try {
    return kernel_stationary(kernel);
  } catch (const ArgumentError&) {
    return {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  }
}

}  // namespace

std::array<double, 3> kernel_stationary(const Kernel3& kernel) {
  // Solve pi (P - I) = 0 with sum(pi) = 1: three unknowns, replace the last
  // column equation by the normalization.
  double a[3][4];
  for (int col = 0; col < 2; ++col) {
    for (int row = 0; row < 3; ++row) {
      a[col][row] = kernel[row][col] - (row == col ? 1.0 : 0.0);
    }
    a[col][3] = 0.0;
  }
  for (int row = 0; row < 3; ++row) a[2][row] = 1.0;
  a[2][3] = 1.0;

  // Gaussian elimination with partial pivoting on the 3x4 system.
  for (int c = 0; c < 3; ++c) {
    int pivot = c;
    for (int r = c + 1; r < 3; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[pivot][c])) pivot = r;
    }
    std::swap(a[c], a[pivot]);
    if (std::abs(a[c][c]) < 1e-14) {
      throw ArgumentError("kernel has no unique stationary law");
    }
    for (int r = 0; r < 3; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (int k = c; k < 4; ++k) a[r][k] -= f * a[c][k];
    }
  }
  std::array<double, 3> pi{};
  for (int c = 0; c < 3; ++c) pi[c] = a[c][3] / a[c][c];
  return pi;
}

void PanelSpec::validate() const {
  geometry.validate();
  if (year_end <= year_start) {
    throw ArgumentError("panel spec needs at least two years");
  }
  if (base_dn > kMaxDn) throw ArgumentError("base DN above 63");
  const std::size_t n = diff_year_count();
  if (active_fraction.empty() ||
      (active_fraction.size() != 1 && active_fraction.size() != n)) {
    throw ArgumentError("active_fraction needs one value or one per diff year");
  }
  for (double af : active_fraction) {
    if (!(af > 0.0) || af > 1.0) {
      throw ArgumentError("active_fraction must lie in (0, 1]");
    }
  }
  if (region_count < 0 || region_count > 0xFFFF) {
    throw ArgumentError("region count out of range");
  }
  if (!drift.empty()) {
    if (region_count == 0 || drift.size() != static_cast<std::size_t>(region_count)) {
      throw ArgumentError("drift needs one value per region");
    }
    for (double d : drift) {
      if (d < 0.0 || d >= 1.0) throw ArgumentError("drift must lie in [0, 1)");
    }
  }
  if (kernel) {
    for (const auto& row : *kernel) {
      double sum = 0.0;
      for (double p : row) {
        if (p < 0.0) throw ArgumentError("kernel entries must be nonnegative");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9) {
        throw ArgumentError("kernel rows must sum to 1");
      }
    }
    const auto pi = start_distribution(*kernel);
    const double s = kernel_sigma(pi);
    if (s <= 1.2 || s >= kKernelJump - 0.3) {
      throw FeasibilityError(
          "planted kernel dispersion leaves no classification margin");
    }
  } else {
    for (std::size_t k = 0; k < n; ++k) {
      const double s = sigma.at(k, n);
      if (s < 1.0) {
        throw FeasibilityError("dispersion below 1 DN cannot be planted with integer changes");
      }
      if (s > 20.0) {
        throw FeasibilityError("dispersion above 20 DN would clip against the DN range");
      }
    }
  }
}

PanelGenerator::PanelGenerator(const PanelSpec& spec)
    : spec_(spec), next_year_(spec.year_start) {
  spec_.validate();
  current_.assign(spec_.geometry.pixel_count(), spec_.base_dn);
  if (spec_.kernel) {
    chain_states_ = PackedStatePlane(spec_.geometry.width, spec_.geometry.height);
  }
}

RasterGrid PanelGenerator::take_year() {
  advance();
  return RasterGrid(spec_.geometry, current_year(), current_, kNoData);
}

void PanelGenerator::advance() {
  if (done()) throw ArgumentError("panel generator exhausted");
  const int year = next_year_;
  const std::size_t n = spec_.geometry.pixel_count();
  const std::uint32_t width = spec_.geometry.width;

  if (year > spec_.year_start) {
    const std::size_t k = static_cast<std::size_t>(year - spec_.year_start - 1);
    const double af = spec_.active_fraction_at(k);
    const std::size_t n_diff = spec_.diff_year_count();
    MagnitudeLaw law(spec_.kernel ? 1.0 : spec_.sigma.at(k, n_diff));
    const std::uint64_t seed = spec_.seed;
    const bool kernel_mode = spec_.kernel.has_value();
    std::array<double, 3> pi{};
    if (kernel_mode) pi = start_distribution(*spec_.kernel);

    const int regions = spec_.region_count;
    const bool has_drift = !spec_.drift.empty();

    for (std::size_t p = 0; p < n; ++p) {
      std::int32_t delta = 0;
      std::uint8_t new_state = 0;
      if (kernel_mode) {
        const std::uint32_t x = static_cast<std::uint32_t>(p % width);
        const std::uint32_t j = static_cast<std::uint32_t>(p / width);
        const std::uint8_t prev = chain_states_.get(x, j);
        std::uint8_t st;
        if (prev == 0) {
          st = sample_state(pi, rng::uniform(seed, p, year, kStreamInitState));
        } else {
          st = sample_state((*spec_.kernel)[prev - 1],
                            rng::uniform(seed, p, year, kStreamStep));
        }
        new_state = static_cast<std::uint8_t>(st + 1);
        chain_states_.set(x, j, new_state);
        if (rng::uniform(seed, p, year, kStreamActive) < af) {
          if (st == 2) {
            delta = kKernelJump;
          } else if (st == 0) {
            delta = -kKernelJump;
          } else {
            delta = rng::uniform(seed, p, year, kStreamNeutralSign) < 0.5 ? -1 : 1;
          }
        }
      } else if (rng::uniform(seed, p, year, kStreamActive) < af) {
        delta = law.sample(rng::uniform(seed, p, year, kStreamMagnitude),
                           rng::uniform(seed, p, year, kStreamSign));
      }
      if (has_drift && regions > 0) {
        const std::size_t col = p % width;
        const std::size_t r = col * static_cast<std::size_t>(regions) / width;
        if (rng::uniform(seed, p, year, kStreamDrift) < spec_.drift[r]) {
          delta += 1;
        }
      }
      if (delta != 0) {
        ++active_draws_;
        const int raw = int(current_[p]) + delta;
        const int clamped = std::clamp(raw, 0, int(kMaxDn));
        if (clamped != raw) ++clipped_;
        current_[p] = static_cast<std::uint8_t>(clamped);
      }
    }
  }
  ++next_year_;
}

std::optional<RegionMask> PanelGenerator::make_mask() const {
  if (spec_.region_count == 0) return std::nullopt;
  const std::size_t n = spec_.geometry.pixel_count();
  const std::uint32_t width = spec_.geometry.width;
  std::vector<std::uint16_t> ids(n);
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t col = p % width;
    ids[p] = static_cast<std::uint16_t>(
        1 + col * static_cast<std::size_t>(spec_.region_count) / width);
  }
  std::vector<RegionInfo> table;
  int digits = 1;
  for (int v = spec_.region_count; v >= 10; v /= 10) ++digits;
  for (int r = 1; r <= spec_.region_count; ++r) {
    std::string name = std::to_string(r);
    name.insert(0, static_cast<std::size_t>(digits) - name.size(), '0');
    table.push_back(RegionInfo{static_cast<std::uint16_t>(r), "R" + name,
                               RegionKind::Country});
  }
  return RegionMask(spec_.geometry, std::move(ids), std::move(table));
}

GroundTruth PanelGenerator::truth() const {
  GroundTruth t;
  const std::size_t n = spec_.diff_year_count();
  for (std::size_t k = 0; k < n; ++k) {
    t.diff_years.push_back(spec_.year_start + 1 + static_cast<int>(k));
  }
  if (spec_.kernel) {
    t.kernel = spec_.kernel;
    t.kernel_pi = start_distribution(*spec_.kernel);
    t.sigma.assign(n, kernel_sigma(t.kernel_pi));
  } else {
    for (std::size_t k = 0; k < n; ++k) t.sigma.push_back(spec_.sigma.at(k, n));
  }
  t.drift = spec_.drift;
  t.seed = spec_.seed;
  t.clip_rate = active_draws_ > 0 ? static_cast<double>(clipped_) /
                                        static_cast<double>(active_draws_)
                                  : 0.0;
  return t;
}

SynthPanel gen_panel(const PanelSpec& spec) {
  PanelGenerator gen(spec);
  std::vector<RasterGrid> grids;
  while (!gen.done()) grids.push_back(gen.take_year());
  GroundTruth truth = gen.truth();
  if (truth.clip_rate >= 0.01) {
    throw FeasibilityError("clipping rate " + std::to_string(truth.clip_rate) +
                           " exceeds 1%; lower the dispersion or recenter base DN");
  }
  return SynthPanel{Panel(std::move(grids)), gen.make_mask(), std::move(truth)};
}

std::vector<std::uint8_t> gen_state_sequences(const Kernel3& kernel,
                                              std::size_t n_pixels,
                                              std::size_t n_years,
                                              std::uint64_t seed) {
  for (const auto& row : kernel) {
    double sum = 0.0;
    for (double p : row) {
      if (p < 0.0) throw ArgumentError("kernel entries must be nonnegative");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ArgumentError("kernel rows must sum to 1");
    }
  }
  if (n_years == 0) throw ArgumentError("state sequences need at least one year");
  const auto pi = start_distribution(kernel);
  std::vector<std::uint8_t> out(n_pixels * n_years);
  for (std::size_t p = 0; p < n_pixels; ++p) {
    std::uint8_t st = sample_state(pi, rng::uniform(seed, p, 0, kStreamInitState));
    out[p * n_years] = st;
    for (std::size_t t = 1; t < n_years; ++t) {
      st = sample_state(kernel[st], rng::uniform(seed, p, t, kStreamStep));
      out[p * n_years + t] = st;
    }
  }
  return out;
}

namespace {

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  return out;
}

}  // namespace

PanelSpec parse_panel_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  PanelSpec spec;
  spec.geometry = GridGeometry::from_extent(0.0, 64.0, -32.0, 0.0, 1.0);
  bool geometry_set = false;
  std::uint32_t width = 0, height = 0;
  double lon_min = 0.0, lat_max = 0.0, cell = 1.0 / 120.0;

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) {
        throw FormatError(path.string() + ":" + std::to_string(line_no) +
                          ": expected key = value");
      }
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "geometry") {
        if (value == "global") {
          spec.geometry = GridGeometry::dmsp_global();
        } else if (value == "global-tenth") {
          spec.geometry = GridGeometry::from_extent(-180.0, 180.0, -65.0, 75.0, 1.0 / 12.0);
        } else {
          throw FormatError("unknown geometry preset '" + value + "'");
        }
        geometry_set = true;
      } else if (key == "width") {
        width = static_cast<std::uint32_t>(std::stoul(value));
      } else if (key == "height") {
        height = static_cast<std::uint32_t>(std::stoul(value));
      } else if (key == "lon_min") {
        lon_min = std::stod(value);
      } else if (key == "lat_max") {
        lat_max = std::stod(value);
      } else if (key == "cell_size") {
        cell = std::stod(value);
      } else if (key == "years") {
        const auto colon = value.find(':');
        if (colon == std::string::npos) throw FormatError("years must be first:last");
        spec.year_start = std::stoi(value.substr(0, colon));
        spec.year_end = std::stoi(value.substr(colon + 1));
      } else if (key == "seed") {
        spec.seed = std::stoull(value);
      } else if (key == "base_dn") {
        spec.base_dn = static_cast<std::uint8_t>(std::stoul(value));
      } else if (key == "active_fraction") {
        spec.active_fraction = parse_double_list(value);
      } else if (key == "sigma") {
        if (value.rfind("linear:", 0) == 0) {
          const auto rest = value.substr(7);
          const auto colon = rest.find(':');
          if (colon == std::string::npos) {
            throw FormatError("sigma linear needs linear:from:to");
          }
          spec.sigma = SigmaSchedule::linear(std::stod(rest.substr(0, colon)),
                                             std::stod(rest.substr(colon + 1)));
        } else if (value.rfind("list:", 0) == 0) {
          spec.sigma = SigmaSchedule::list(parse_double_list(value.substr(5)));
        } else {
          spec.sigma = SigmaSchedule::constant(std::stod(value));
        }
      } else if (key == "kernel") {
        Kernel3 kernel{};
        std::stringstream rows(value);
        std::string row;
        int r = 0;
        while (std::getline(rows, row, ';')) {
          if (r >= 3) throw FormatError("kernel needs exactly 3 rows");
          const auto vals = parse_double_list(row);
          if (vals.size() != 3) throw FormatError("kernel rows need 3 entries");
          for (int c = 0; c < 3; ++c) kernel[r][c] = vals[static_cast<std::size_t>(c)];
          ++r;
        }
        if (r != 3) throw FormatError("kernel needs exactly 3 rows");
        spec.kernel = kernel;
      } else if (key == "regions") {
        spec.region_count = std::stoi(value);
      } else if (key == "drift") {
        spec.drift = parse_double_list(value);
      } else {
        throw FormatError("unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": bad value for " + key);
    }
  }
  if (!geometry_set) {
    if (width == 0 || height == 0) {
      throw FormatError(path.string() + ": spec needs geometry or width/height");
    }
    spec.geometry = GridGeometry::from_extent(
        lon_min, lon_min + width * cell, lat_max - height * cell, lat_max, cell);
  }
  spec.validate();
  return spec;
}

}  // namespace skyglow
