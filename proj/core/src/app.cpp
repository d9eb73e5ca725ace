#include "skyglow/app.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "skyglow/detail/binio.hpp"
#include "skyglow/growth.hpp"
#include "skyglow/markov.hpp"
#include "skyglow/raster_io.hpp"
#include "skyglow/render.hpp"
#include "skyglow/stats.hpp"
#include "skyglow/synth.hpp"

namespace skyglow {

namespace fs = std::filesystem;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

YearRange parse_period(const std::string& value) {
  const auto sep = value.find_first_of(":-");
  if (sep == std::string::npos) {
    throw FormatError("period must be first:last, got '" + value + "'");
  }
  YearRange r{std::stoi(value.substr(0, sep)), std::stoi(value.substr(sep + 1))};
  r.validate();
  return r;
}

// Formatting helpers. NaN prints as the literal NaN everywhere.
std::string fmt(const char* spec, double v) {
  if (std::isnan(v)) return "NaN";
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}
std::string fmt_g(double v) { return fmt("%.12g", v); }
std::string fmt_pct1(double fraction) { return fmt("%.1f", 100.0 * fraction); }
std::string fmt_2(double v) { return fmt("%.2f", v); }
std::string fmt_1(double v) { return fmt("%.1f", v); }

std::string period_suffix(YearRange p) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d%02d", p.first % 100, p.last % 100);
  return buf;
}

std::string period_label(YearRange p) {
  return std::to_string(p.first) + "-" + std::to_string(p.last);
}

std::string sanitize(const std::string& name) {
  std::string out;
  for (char c : name) {
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-') ? c : '_';
  }
  return out;
}

std::ofstream open_out(const fs::path& path) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

// Annual NLG1 files in a directory, loadable year by year so only a sliding
// pair is ever resident.
class PanelStore {
 public:
  explicit PanelStore(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
      throw IoError("panel directory " + dir.string() + " does not exist");
    }
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      if (entry.path().extension() != ".nlg1") continue;
      const RasterHeader h = load_raster_header(entry.path());
      if (!paths_.emplace(h.year, entry.path()).second) {
        throw ConsistencyError("duplicate year " + std::to_string(h.year) +
                               " in panel directory");
      }
      if (paths_.size() == 1) {
        geometry_ = h.geometry;
      } else if (!(h.geometry == geometry_)) {
        throw ShapeError(entry.path().string() + ": geometry differs from panel");
      }
    }
    if (paths_.size() < 2) {
      throw IoError("panel directory " + dir.string() +
                    " needs at least two .nlg1 files");
    }
    int prev = 0;
    bool first = true;
    for (const auto& [year, path] : paths_) {
      if (!first && year != prev + 1) {
        throw SequencingError("panel years have a gap: " + std::to_string(prev) +
                              " then " + std::to_string(year));
      }
      prev = year;
      first = false;
    }
  }

  const GridGeometry& geometry() const { return geometry_; }
  int first_year() const { return paths_.begin()->first; }
  int last_year() const { return paths_.rbegin()->first; }
  std::vector<int> diff_years() const {
    std::vector<int> out;
    for (auto it = std::next(paths_.begin()); it != paths_.end(); ++it) {
      out.push_back(it->first);
    }
    return out;
  }

  // Keeps the two most recently used grids resident.
  const RasterGrid& load(int year) {
    for (auto& slot : cache_) {
      if (slot && slot->year() == year) return *slot;
    }
    auto it = paths_.find(year);
    if (it == paths_.end()) {
      throw SequencingError("year " + std::to_string(year) + " not in panel");
    }
    auto& slot = cache_[next_slot_];
    next_slot_ = 1 - next_slot_;
    slot.emplace(load_raster(it->second));
    return *slot;
  }

 private:
  std::map<int, fs::path> paths_;
  GridGeometry geometry_;
  std::array<std::optional<RasterGrid>, 2> cache_;
  int next_slot_ = 0;
};

struct ScopeJob {
  std::string name;
  Scope scope = Scope::world();
};

std::vector<ScopeJob> resolve_scopes(const std::vector<std::string>& names,
                                     const RegionMask* mask, bool ensure_world) {
  std::vector<ScopeJob> jobs;
  bool have_world = false;
  for (const std::string& raw : names) {
    ScopeJob job;
    std::string lowered = raw;
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (lowered == "world") {
      job.name = "World";
      job.scope = Scope::world();
      have_world = true;
    } else {
      if (mask == nullptr) {
        throw ArgumentError("scope '" + raw + "' needs a region mask");
      }
      const RegionInfo* info = mask->find(std::string_view(raw));
      if (info == nullptr) {
        throw LookupError("scope '" + raw + "' not in region table");
      }
      job.name = info->name;
      job.scope = Scope::region(info->id);
    }
    jobs.push_back(std::move(job));
  }
  // An explicitly empty scope list stays a vacuous run (header-only outputs).
  if (ensure_world && !have_world && !names.empty()) {
    jobs.insert(jobs.begin(), ScopeJob{"World", Scope::world()});
  }
  return jobs;
}

// Everything the streaming engine produces for one scope.
struct ScopeResult {
  std::string name;
  Scope scope = Scope::world();
  std::vector<SigmaEntry> sigma_entries;
  std::vector<StationaryResult> stationaries;  // per transition year
  std::vector<std::int64_t> n_transitions;     // parallel to stationaries
  std::vector<double> gaps;                    // parallel to stationaries
  CumulativeChangeGrid cumulative;
  CumulativeChangeGrid avg_a;
  CumulativeChangeGrid avg_b;
  std::vector<double> qq_a;
  std::vector<double> qq_b;
  double percent_scale = 1.0;  // applied to sigma/moments/qq/scatter outputs
  bool any_data = false;
};

struct EngineOptions {
  bool maps = false;        // per-pixel accumulation planes
  bool markov = true;       // classification + transitions
  bool qq = false;          // collect demeaned values for two years
  int qq_year_a = 0;
  int qq_year_b = 0;
  YearRange period_a{1993, 2006};
  YearRange period_b{2007, 2013};
  std::uint32_t chunk_rows = 256;
  int threads = 1;
  bool percent_units = false;
};

CumulativeChangeGrid make_plane(const GridGeometry& g, YearRange years, Scope scope) {
  CumulativeChangeGrid out;
  out.geometry = g;
  out.years = years;
  out.scope = scope;
  out.values.assign(g.pixel_count(), 0.0);
  out.active_years.assign(g.pixel_count(), 0);
  return out;
}

void finalize_plane(CumulativeChangeGrid& plane, bool average) {
  for (std::size_t i = 0; i < plane.values.size(); ++i) {
    if (plane.active_years[i] == 0) {
      plane.values[i] = kNan;
    } else if (average) {
      plane.values[i] /= plane.active_years[i];
    }
  }
}

ScopeResult analyze_scope(PanelStore& store, const RegionMask* mask,
                          const ScopeJob& job, const EngineOptions& opt) {
  ScopeResult res;
  res.name = job.name;
  res.scope = job.scope;
  const GridGeometry& geom = store.geometry();
  const ScopeFilter filter = job.scope.is_world()
                                 ? ScopeFilter::world()
                                 : ScopeFilter::region(*mask, job.scope.region_id());
  const BandPlan plan{geom.height, opt.chunk_rows};
  const auto diff_years = store.diff_years();
  const YearRange full_span{diff_years.front(), diff_years.back()};

  PackedStatePlane states;
  if (opt.markov) states = PackedStatePlane(geom.width, geom.height);
  if (opt.maps) {
    res.cumulative = make_plane(geom, full_span, job.scope);
    res.avg_a = make_plane(geom, opt.period_a, job.scope);
    res.avg_b = make_plane(geom, opt.period_b, job.scope);
  }
  const int qq_a = opt.qq_year_a > 0 ? opt.qq_year_a : diff_years.front();
  const int qq_b = opt.qq_year_b > 0 ? opt.qq_year_b : diff_years.back();

  // Percent normalization: 100 / mean lit DN pooled over the panel.
  std::int64_t lit_sum = 0, lit_count = 0;

  bool prev_had_states = false;
  for (int year : diff_years) {
    const RasterGrid& prev = store.load(year - 1);
    const RasterGrid& curr = store.load(year);

    if (opt.percent_units) {
      const std::uint8_t* v = curr.data();
      const std::uint8_t nd = curr.nodata();
      const std::size_t n = curr.values().size();
      const std::uint16_t* ids = filter.ids;
      for (std::size_t i = 0; i < n; ++i) {
        if (v[i] == nd || v[i] == 0) continue;
        if (ids != nullptr && ids[i] != filter.id) continue;
        lit_sum += v[i];
        ++lit_count;
      }
    }

    const PairSums sums = scan_pair_sums(prev, curr, filter, plan, opt.threads);
    SigmaEntry entry;
    entry.year = year;
    entry.n = sums.active_count;
    if (sums.active_count < 2) {
      entry.sigma = kNan;
      res.sigma_entries.push_back(entry);
      if (opt.markov) {
        states.clear();  // no states this year: next year has no pairs
        if (prev_had_states || year != diff_years.front()) {
          StationaryResult empty;
          empty.year = year;
          empty.converged = false;
          empty.pi = {kNan, kNan, kNan};
          empty.a_pp = empty.a_00 = empty.a_mm = kNan;
          res.stationaries.push_back(empty);
          res.n_transitions.push_back(0);
          res.gaps.push_back(kNan);
        }
        prev_had_states = false;
      }
      continue;
    }
    res.any_data = true;
    const double ss = scan_squared_sum(prev, curr, filter, sums, plan, opt.threads);
    entry.sigma = std::sqrt(ss / static_cast<double>(sums.active_count));
    res.sigma_entries.push_back(entry);

    if (opt.markov) {
      const TransitionCounts tc = scan_classify(prev, curr, filter, sums,
                                                entry.sigma, states, plan,
                                                opt.threads);
      if (year != diff_years.front()) {
        StationaryResult st;
        std::int64_t pairs = tc.total_pairs();
        try {
          if (pairs == 0) {
            throw EmptyEstimateError("no state pairs");
          }
          const TransitionMatrix m =
              transitions_from_counts(year, job.scope, tc.counts);
          st = stationary(m);
        } catch (const Error&) {
          st.year = year;
          st.converged = false;
          st.pi = {kNan, kNan, kNan};
          st.a_pp = st.a_00 = st.a_mm = kNan;
        }
        st.year = year;
        res.stationaries.push_back(st);
        res.n_transitions.push_back(pairs);
        res.gaps.push_back(gap(st));
      }
      prev_had_states = true;
    }

    if (opt.maps) {
      scan_accumulate(prev, curr, filter, sums, res.cumulative.values,
                      res.cumulative.active_years, plan, opt.threads);
      if (opt.period_a.contains(year)) {
        scan_accumulate(prev, curr, filter, sums, res.avg_a.values,
                        res.avg_a.active_years, plan, opt.threads);
      }
      if (opt.period_b.contains(year)) {
        scan_accumulate(prev, curr, filter, sums, res.avg_b.values,
                        res.avg_b.active_years, plan, opt.threads);
      }
    }
    if (opt.qq && year == qq_a) {
      res.qq_a = collect_demeaned(prev, curr, filter, sums);
    }
    if (opt.qq && year == qq_b) {
      res.qq_b = collect_demeaned(prev, curr, filter, sums);
    }
  }

  if (opt.maps) {
    finalize_plane(res.cumulative, false);
    finalize_plane(res.avg_a, true);
    finalize_plane(res.avg_b, true);
  }
  if (opt.percent_units && lit_count > 0 && lit_sum > 0) {
    res.percent_scale =
        100.0 / (static_cast<double>(lit_sum) / static_cast<double>(lit_count));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Artifact writers

void write_sigma_csv(const fs::path& path, const std::vector<ScopeResult>& results) {
  auto out = open_out(path);
  out << "scope,year,sigma,n\n";
  for (const ScopeResult& r : results) {
    for (const SigmaEntry& e : r.sigma_entries) {
      out << r.name << ',' << e.year << ','
          << fmt_g(e.sigma * r.percent_scale) << ',' << e.n << '\n';
    }
  }
}

void write_markov_csv(const fs::path& path, const std::vector<ScopeResult>& results) {
  auto out = open_out(path);
  out << "scope,year,a_pp,a_00,a_mm,gap,converged,n_transitions\n";
  for (const ScopeResult& r : results) {
    for (std::size_t k = 0; k < r.stationaries.size(); ++k) {
      const StationaryResult& s = r.stationaries[k];
      out << r.name << ',' << s.year << ',' << fmt_pct1(s.a_pp) << ','
          << fmt_pct1(s.a_00) << ',' << fmt_pct1(s.a_mm) << ','
          << fmt_pct1(r.gaps[k]) << ',' << (s.converged ? 1 : 0) << ','
          << r.n_transitions[k] << '\n';
    }
  }
}

void write_qq_csv(const fs::path& path, const std::vector<ScopeResult>& results,
                  int quantiles, int year_a, int year_b) {
  auto out = open_out(path);
  out << "scope,year_a,year_b,p,quantile_a,quantile_b\n";
  for (const ScopeResult& r : results) {
    if (r.qq_a.empty() || r.qq_b.empty()) continue;
    const auto pairs = qq_data(r.qq_a, r.qq_b, quantiles);
    for (int k = 1; k <= quantiles; ++k) {
      const auto& [qa, qb] = pairs[static_cast<std::size_t>(k - 1)];
      out << r.name << ',' << year_a << ',' << year_b << ','
          << fmt_g((k - 0.5) / quantiles) << ',' << fmt_g(qa * r.percent_scale)
          << ',' << fmt_g(qb * r.percent_scale) << '\n';
    }
  }
}

void write_scatter_csv(const fs::path& path, const std::vector<ScopeResult>& results) {
  auto out = open_out(path);
  out << "scope,i,j,a,b,total\n";
  for (const ScopeResult& r : results) {
    if (r.avg_a.values.empty()) continue;
    const GridGeometry& g = r.cumulative.geometry;
    for (std::uint32_t j = 0; j < g.height; ++j) {
      for (std::uint32_t i = 0; i < g.width; ++i) {
        const std::size_t idx = g.index_of(i, j);
        const bool in_a = r.avg_a.active_years[idx] > 0;
        const bool in_b = r.avg_b.active_years[idx] > 0;
        if (!in_a && !in_b) continue;
        // Period sums, not averages: undo the per-pixel division.
        const double a =
            in_a ? r.avg_a.values[idx] * r.avg_a.active_years[idx] : 0.0;
        const double b =
            in_b ? r.avg_b.values[idx] * r.avg_b.active_years[idx] : 0.0;
        const double total =
            r.cumulative.active_years[idx] > 0 ? r.cumulative.values[idx] : 0.0;
        out << r.name << ',' << i << ',' << j << ','
            << fmt_g(a * r.percent_scale) << ',' << fmt_g(b * r.percent_scale)
            << ',' << fmt_g(total * r.percent_scale) << '\n';
      }
    }
  }
}

void write_moments_json(const fs::path& path,
                        const std::vector<ScopeResult>& results,
                        std::optional<double> light_gdp_pearson) {
  nlohmann::ordered_json doc;
  doc["scopes"] = nlohmann::ordered_json::array();
  for (const ScopeResult& r : results) {
    nlohmann::ordered_json entry;
    entry["scope"] = r.name;
    std::vector<double> vals;
    for (std::size_t i = 0; i < r.cumulative.values.size(); ++i) {
      if (r.cumulative.active_years[i] > 0) {
        vals.push_back(r.cumulative.values[i] * r.percent_scale);
      }
    }
    try {
      const MomentSummary m = moments(vals);
      entry["n"] = m.n;
      entry["mean"] = m.mean;
      entry["std"] = m.std;
      entry["skewness"] = std::isnan(m.skewness) ? nlohmann::ordered_json()
                                                 : nlohmann::ordered_json(m.skewness);
      entry["excess_kurtosis"] = std::isnan(m.excess_kurtosis)
                                     ? nlohmann::ordered_json()
                                     : nlohmann::ordered_json(m.excess_kurtosis);
    } catch (const InsufficientDataError&) {
      entry["n"] = vals.size();
      entry["mean"] = nullptr;
      entry["std"] = nullptr;
      entry["skewness"] = nullptr;
      entry["excess_kurtosis"] = nullptr;
    }
    doc["scopes"].push_back(entry);
  }
  if (light_gdp_pearson) {
    doc["light_gdp_pearson"] = *light_gdp_pearson;
  }
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
}

void write_growth_csv(const fs::path& path,
                      const std::vector<std::pair<std::string,
                                                  std::array<GrowthEstimate, 2>>>& rows) {
  auto out = open_out(path);
  out << "scope,period,y_hat,sigma_y,n_years\n";
  for (const auto& [name, estimates] : rows) {
    for (const GrowthEstimate& e : estimates) {
      out << name << ',' << period_label(e.period) << ',' << fmt_2(e.y_hat) << ','
          << fmt_2(e.sigma_y) << ',' << e.n_years << '\n';
    }
  }
}

void render_maps(const fs::path& dir, const std::vector<ScopeResult>& results,
                 double clamp, std::uint32_t max_width, const std::string& format) {
  fs::create_directories(dir);
  Palette palette;
  palette.clamp = clamp;
  const ImageFormat fmt =
      format == "png" ? ImageFormat::Png : ImageFormat::Ppm;
  const char* ext = format == "png" ? ".png" : ".ppm";
  for (const ScopeResult& r : results) {
    const std::string base = sanitize(r.name);
    struct MapJob {
      const CumulativeChangeGrid* grid;
      std::string name;
    };
    const MapJob jobs[3] = {
        {&r.cumulative, base + "_cumulative_" + period_label(r.cumulative.years)},
        {&r.avg_a, base + "_average_" + period_label(r.avg_a.years)},
        {&r.avg_b, base + "_average_" + period_label(r.avg_b.years)},
    };
    for (const MapJob& job : jobs) {
      if (job.grid->values.empty()) continue;
      try {
        const CumulativeChangeGrid small = downsample_mean(*job.grid, max_width);
        const ImageBuffer img = render_change_map(small, palette);
        write_image(img, dir / (job.name + ext), fmt);
      } catch (const EmptyRenderError&) {
        // Scope produced no valued pixels; skip the map, keep the run going.
      }
    }
  }
}

// External economic series: CSV with header year,value.
std::map<int, double> load_external_series(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file");
  std::map<int, double> out;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw FormatError(path.string() + ": expected year,value row");
    }
    out[std::stoi(line.substr(0, comma))] = std::stod(line.substr(comma + 1));
  }
  return out;
}

struct GrowthTable {
  // Aggregate series per job, in job order; year effects pooled over regions.
  std::vector<AggregateSeries> series;
  YearEffects effects;
  bool identified = false;
  std::string failure;
};

GrowthTable build_growth_table(PanelStore& store, const RegionMask* mask,
                               const std::vector<ScopeJob>& jobs,
                               const BandPlan& plan, int threads) {
  GrowthTable table;
  // One pass per year computes every scope's totals.
  std::vector<int> years;
  for (int y = store.first_year(); y <= store.last_year(); ++y) years.push_back(y);
  std::vector<YearTotals> totals;
  totals.reserve(years.size());
  const std::uint16_t* ids = mask ? mask->data() : nullptr;
  for (int y : years) {
    totals.push_back(scan_year_totals(store.load(y), ids, plan, threads));
  }
  for (const ScopeJob& job : jobs) {
    AggregateSeries s;
    s.scope = job.scope;
    s.label = job.name;
    for (std::size_t k = 0; k < years.size(); ++k) {
      const std::int64_t total =
          job.scope.is_world() ? totals[k].world
                               : totals[k].by_region[job.scope.region_id()];
      AggregateEntry e;
      e.year = years[k];
      e.total_light = static_cast<double>(total);
      e.log_light = total > 0 ? std::log(static_cast<double>(total)) : kNan;
      s.entries.push_back(e);
    }
    table.series.push_back(std::move(s));
  }
  std::vector<AggregateSeries> region_series;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    if (!jobs[k].scope.is_world()) region_series.push_back(table.series[k]);
  }
  try {
    table.effects = fit_year_effects(region_series);
    table.identified = true;
  } catch (const Error& e) {
    table.failure = e.what();
    table.effects = YearEffects::zero({});
  }
  return table;
}

std::array<GrowthEstimate, 2> growth_row(const AggregateSeries& series,
                                         const GrowthTable& table,
                                         YearRange period_a, YearRange period_b) {
  std::array<GrowthEstimate, 2> out;
  const YearRange periods[2] = {period_a, period_b};
  for (int k = 0; k < 2; ++k) {
    out[k].label = series.label;
    out[k].period = periods[k];
    out[k].y_hat = kNan;
    out[k].sigma_y = kNan;
    out[k].n_years = 0;
    if (!table.identified) continue;
    try {
      out[k] = estimate_growth(series, table.effects, periods[k]);
    } catch (const Error&) {
      // leave the NaN row
    }
  }
  return out;
}

std::optional<double> world_light_gdp_pearson(const GrowthTable& table,
                                              const std::map<int, double>& external) {
  const AggregateSeries* world = nullptr;
  for (const AggregateSeries& s : table.series) {
    if (s.scope.is_world()) world = &s;
  }
  if (world == nullptr) return std::nullopt;
  std::vector<double> light, gdp;
  for (std::size_t k = 1; k < world->entries.size(); ++k) {
    const AggregateEntry& curr = world->entries[k];
    const AggregateEntry& prev = world->entries[k - 1];
    if (std::isnan(curr.log_light) || std::isnan(prev.log_light)) continue;
    const auto it = external.find(curr.year);
    if (it == external.end()) continue;
    light.push_back(curr.log_light - prev.log_light);
    gdp.push_back(it->second);
  }
  if (light.size() < 2) return std::nullopt;
  try {
    return pearson(light, gdp);
  } catch (const Error&) {
    return std::nullopt;
  }
}

struct LoadedInputs {
  PanelStore store;
  std::optional<RegionMask> mask;
};

LoadedInputs load_inputs(const RunConfig& config) {
  if (config.panel_dir.empty()) {
    throw ArgumentError("config needs panel_dir");
  }
  PanelStore store(config.panel_dir);
  std::optional<RegionMask> mask;
  if (!config.mask_path.empty()) {
    if (config.table_path.empty()) {
      throw ArgumentError("mask needs a region table (table = ...)");
    }
    mask.emplace(load_mask(config.mask_path, config.table_path));
    if (!(mask->geometry().width == store.geometry().width &&
          mask->geometry().height == store.geometry().height)) {
      throw ShapeError("mask geometry does not match panel geometry");
    }
  }
  return LoadedInputs{std::move(store), std::move(mask)};
}

void check_periods(const RunConfig& config, const PanelStore& store) {
  const auto dy = store.diff_years();
  for (const YearRange& p : {config.period_a, config.period_b}) {
    if (p.first < dy.front() || p.last > dy.back()) {
      throw ArgumentError("period " + period_label(p) +
                          " outside panel diff years " + period_label(YearRange{
                              dy.front(), dy.back()}));
    }
  }
}

int scope_failures(const std::vector<ScopeResult>& results) {
  int failures = 0;
  for (const ScopeResult& r : results) {
    if (!r.any_data) ++failures;
  }
  return failures;
}

}  // namespace

RunConfig RunConfig::from_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  RunConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected key = value");
    }
    config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return config;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "panel_dir") {
    panel_dir = value;
  } else if (key == "mask") {
    mask_path = value;
  } else if (key == "table") {
    table_path = value;
  } else if (key == "series") {
    series_path = value;
  } else if (key == "out") {
    out_dir = value;
  } else if (key == "scopes") {
    scopes = split(value, ',');
  } else if (key == "period_a") {
    period_a = parse_period(value);
  } else if (key == "period_b") {
    period_b = parse_period(value);
  } else if (key == "threads") {
    threads = std::stoi(value);
  } else if (key == "chunk_rows") {
    chunk_rows = static_cast<std::uint32_t>(std::stoul(value));
    if (chunk_rows == 0) throw FormatError("chunk_rows must be positive");
  } else if (key == "palette_clamp") {
    palette_clamp = std::stod(value);
  } else if (key == "max_render_width") {
    max_render_width = static_cast<std::uint32_t>(std::stoul(value));
  } else if (key == "percent_units") {
    percent_units = (value == "true" || value == "1" || value == "on");
  } else if (key == "qq_year_a") {
    qq_year_a = std::stoi(value);
  } else if (key == "qq_year_b") {
    qq_year_b = std::stoi(value);
  } else if (key == "quantiles") {
    quantiles = std::stoi(value);
    if (quantiles < 2) throw FormatError("quantiles must be at least 2");
  } else if (key == "map_format") {
    if (value != "ppm" && value != "png") {
      throw FormatError("map_format must be ppm or png");
    }
    map_format = value;
  } else {
    throw FormatError("unknown config key '" + key + "'");
  }
}

int RunConfig::effective_threads() const {
  if (threads > 0) return threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

int cmd_ingest(const fs::path& input, int year, const fs::path& output) {
  try {
    const RasterGrid grid = import_ascii_grid(input, year);
    if (!output.parent_path().empty()) fs::create_directories(output.parent_path());
    write_raster(grid, output);
    std::cout << "wrote " << output.string() << " (" << grid.geometry().width << "x"
              << grid.geometry().height << ", year " << year << ")\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "ingest: " << e.what() << '\n';
    return 2;
  }
}

int cmd_synth(const fs::path& spec_path, const fs::path& out_dir) {
  try {
    const PanelSpec spec = parse_panel_spec(spec_path);
    fs::create_directories(out_dir);
    PanelGenerator gen(spec);
    while (!gen.done()) {
      const int year = gen.next_year();
      const RasterGrid grid = gen.take_year();
      write_raster(grid, out_dir / (std::to_string(year) + ".nlg1"));
    }
    if (const auto mask = gen.make_mask()) {
      write_mask(*mask, out_dir / "regions.rmsk", out_dir / "regions.csv");
    }
    const GroundTruth truth = gen.truth();
    if (truth.clip_rate >= 0.01) {
      throw FeasibilityError("clipping rate " + std::to_string(truth.clip_rate) +
                             " exceeds 1%");
    }
    nlohmann::ordered_json doc;
    doc["seed"] = truth.seed;
    doc["diff_years"] = truth.diff_years;
    doc["sigma"] = truth.sigma;
    doc["clip_rate"] = truth.clip_rate;
    if (truth.kernel) {
      doc["kernel"] = *truth.kernel;
      doc["kernel_pi"] = truth.kernel_pi;
    }
    if (!truth.drift.empty()) doc["drift"] = truth.drift;
    auto out = open_out(out_dir / "ground_truth.json");
    out << doc.dump(2) << '\n';
    std::cout << "wrote synthetic panel to " << out_dir.string() << '\n';
    return 0;
  } catch (const Error& e) {
    std::cerr << "synth: " << e.what() << '\n';
    return 2;
  }
}

int cmd_diff(const RunConfig& config) {
  try {
    LoadedInputs inputs = load_inputs(config);
    const RegionMask* mask = inputs.mask ? &*inputs.mask : nullptr;
    const auto jobs = resolve_scopes(config.scopes, mask, false);
    const BandPlan plan{inputs.store.geometry().height, config.chunk_rows};
    const int threads = config.effective_threads();
    const fs::path dir = config.out_dir / "demeaned";
    fs::create_directories(dir);
    const bool tiny = inputs.store.geometry().pixel_count() <= 262144;
    int failures = 0;
    for (const ScopeJob& job : jobs) {
      const ScopeFilter filter =
          job.scope.is_world() ? ScopeFilter::world()
                               : ScopeFilter::region(*mask, job.scope.region_id());
      for (int year : inputs.store.diff_years()) {
        const RasterGrid& prev = inputs.store.load(year - 1);
        const RasterGrid& curr = inputs.store.load(year);
        const PairSums sums = scan_pair_sums(prev, curr, filter, plan, threads);
        if (sums.active_count == 0) {
          ++failures;
          continue;
        }
        const DiffGrid diff = diff_year(prev, curr);
        const DemeanedDiffGrid dm =
            demean(diff, active_mask(diff), mask, job.scope);
        const std::string base =
            sanitize(job.name) + "_" + std::to_string(year);
        write_demeaned_grid(dm, dir / (base + ".nld1"));
        if (tiny) write_sparse_csv(dm, dir / (base + ".csv"));
      }
    }
    return failures > 0 ? 1 : 0;
  } catch (const Error& e) {
    std::cerr << "diff: " << e.what() << '\n';
    return 2;
  }
}

namespace {

// Shared driver for metrics/markov/render/run.
struct AnalysisProducts {
  std::vector<ScopeJob> jobs;
  std::vector<ScopeResult> results;
  std::optional<GrowthTable> growth;
  std::optional<double> light_gdp;
  int qq_year_a = 0;
  int qq_year_b = 0;
};

AnalysisProducts run_analysis(const RunConfig& config, LoadedInputs& inputs,
                              bool maps, bool markov, bool qq, bool growth,
                              bool ensure_world) {
  const RegionMask* mask = inputs.mask ? &*inputs.mask : nullptr;
  AnalysisProducts out;
  out.jobs = resolve_scopes(config.scopes, mask, ensure_world);
  check_periods(config, inputs.store);

  EngineOptions opt;
  opt.maps = maps;
  opt.markov = markov;
  opt.qq = qq;
  opt.qq_year_a = config.qq_year_a;
  opt.qq_year_b = config.qq_year_b;
  opt.period_a = config.period_a;
  opt.period_b = config.period_b;
  opt.chunk_rows = config.chunk_rows;
  opt.threads = config.effective_threads();
  opt.percent_units = config.percent_units;

  const auto dy = inputs.store.diff_years();
  out.qq_year_a = config.qq_year_a > 0 ? config.qq_year_a : dy.front();
  out.qq_year_b = config.qq_year_b > 0 ? config.qq_year_b : dy.back();

  for (const ScopeJob& job : out.jobs) {
    out.results.push_back(analyze_scope(inputs.store, mask, job, opt));
  }
  if (growth) {
    const BandPlan plan{inputs.store.geometry().height, config.chunk_rows};
    out.growth = build_growth_table(inputs.store, mask, out.jobs, plan,
                                    config.effective_threads());
    if (!config.series_path.empty()) {
      out.light_gdp =
          world_light_gdp_pearson(*out.growth, load_external_series(config.series_path));
    }
  }
  return out;
}

void write_report_csv(const fs::path& path, const AnalysisProducts& products,
                      YearRange period_a, YearRange period_b) {
  auto out = open_out(path);
  out << report_header(period_a, period_b) << '\n';
  for (std::size_t k = 0; k < products.jobs.size(); ++k) {
    const ScopeResult& r = products.results[k];
    std::array<GrowthEstimate, 2> g;
    if (products.growth) {
      g = growth_row(products.growth->series[k], *products.growth, period_a,
                     period_b);
    } else {
      for (auto& e : g) {
        e.y_hat = kNan;
        e.sigma_y = kNan;
      }
    }
    const PeriodMeans ma = period_means(r.stationaries, period_a);
    const PeriodMeans mb = period_means(r.stationaries, period_b);
    ReportRow row;
    row.name = r.name;
    row.y_a = g[0].y_hat;
    row.y_b = g[1].y_hat;
    row.sy_a = g[0].sigma_y;
    row.sy_b = g[1].sigma_y;
    row.app_a = ma.a_pp;
    row.app_b = mb.a_pp;
    row.amm_a = ma.a_mm;
    row.amm_b = mb.a_mm;
    row.a00_a = ma.a_00;
    row.a00_b = mb.a_00;
    out << format_report_row(row) << '\n';
  }
}

}  // namespace

std::string report_header(YearRange period_a, YearRange period_b) {
  const std::string sa = period_suffix(period_a);
  const std::string sb = period_suffix(period_b);
  return "name,y" + sa + ",y" + sb + ",sy" + sa + ",sy" + sb + ",app" + sa +
         ",app" + sb + ",amm" + sa + ",amm" + sb + ",a00" + sa + ",a00" + sb;
}

std::string format_report_row(const ReportRow& row) {
  return row.name + ',' + fmt_2(row.y_a) + ',' + fmt_2(row.y_b) + ',' +
         fmt_1(row.sy_a) + ',' + fmt_1(row.sy_b) + ',' + fmt_pct1(row.app_a) +
         ',' + fmt_pct1(row.app_b) + ',' + fmt_pct1(row.amm_a) + ',' +
         fmt_pct1(row.amm_b) + ',' + fmt_pct1(row.a00_a) + ',' +
         fmt_pct1(row.a00_b);
}

int cmd_metrics(const RunConfig& config) {
  try {
    LoadedInputs inputs = load_inputs(config);
    auto products = run_analysis(config, inputs, /*maps=*/true, /*markov=*/false,
                                 /*qq=*/true, /*growth=*/!config.series_path.empty(),
                                 /*ensure_world=*/false);
    write_sigma_csv(config.out_dir / "sigma_series.csv", products.results);
    write_moments_json(config.out_dir / "moments.json", products.results,
                       products.light_gdp);
    write_qq_csv(config.out_dir / "qq.csv", products.results, config.quantiles,
                 products.qq_year_a, products.qq_year_b);
    write_scatter_csv(config.out_dir / "scatter.csv", products.results);
    return scope_failures(products.results) > 0 ? 1 : 0;
  } catch (const Error& e) {
    std::cerr << "metrics: " << e.what() << '\n';
    return 2;
  }
}

int cmd_markov(const RunConfig& config) {
  try {
    LoadedInputs inputs = load_inputs(config);
    auto products = run_analysis(config, inputs, false, true, false, false, false);
    write_markov_csv(config.out_dir / "markov.csv", products.results);
    return scope_failures(products.results) > 0 ? 1 : 0;
  } catch (const Error& e) {
    std::cerr << "markov: " << e.what() << '\n';
    return 2;
  }
}

int cmd_growth(const RunConfig& config) {
  try {
    LoadedInputs inputs = load_inputs(config);
    const RegionMask* mask = inputs.mask ? &*inputs.mask : nullptr;
    const auto jobs = resolve_scopes(config.scopes, mask, false);
    check_periods(config, inputs.store);
    const BandPlan plan{inputs.store.geometry().height, config.chunk_rows};
    const GrowthTable table = build_growth_table(inputs.store, mask, jobs, plan,
                                                 config.effective_threads());
    if (!table.identified) {
      std::cerr << "growth: " << table.failure << '\n';
      return 2;
    }
    std::vector<std::pair<std::string, std::array<GrowthEstimate, 2>>> rows;
    for (std::size_t k = 0; k < jobs.size(); ++k) {
      rows.emplace_back(jobs[k].name, growth_row(table.series[k], table,
                                                 config.period_a, config.period_b));
    }
    write_growth_csv(config.out_dir / "growth.csv", rows);
    return 0;
  } catch (const Error& e) {
    std::cerr << "growth: " << e.what() << '\n';
    return 2;
  }
}

int cmd_render(const RunConfig& config) {
  try {
    LoadedInputs inputs = load_inputs(config);
    auto products = run_analysis(config, inputs, true, false, false, false, false);
    render_maps(config.out_dir / "maps", products.results, config.palette_clamp,
                config.max_render_width, config.map_format);
    return scope_failures(products.results) > 0 ? 1 : 0;
  } catch (const Error& e) {
    std::cerr << "render: " << e.what() << '\n';
    return 2;
  }
}

int cmd_report(const RunConfig& config) {
  try {
    LoadedInputs inputs = load_inputs(config);
    auto products = run_analysis(config, inputs, false, true, false, true,
                                 /*ensure_world=*/true);
    write_report_csv(config.out_dir / "report.csv", products, config.period_a,
                     config.period_b);
    return scope_failures(products.results) > 0 ? 1 : 0;
  } catch (const Error& e) {
    std::cerr << "report: " << e.what() << '\n';
    return 2;
  }
}

int cmd_run(const RunConfig& config) {
  try {
    LoadedInputs inputs = load_inputs(config);
    auto products = run_analysis(config, inputs, true, true, true, true,
                                 /*ensure_world=*/true);
    write_sigma_csv(config.out_dir / "sigma_series.csv", products.results);
    write_markov_csv(config.out_dir / "markov.csv", products.results);
    write_moments_json(config.out_dir / "moments.json", products.results,
                       products.light_gdp);
    write_qq_csv(config.out_dir / "qq.csv", products.results, config.quantiles,
                 products.qq_year_a, products.qq_year_b);
    write_scatter_csv(config.out_dir / "scatter.csv", products.results);
    std::vector<std::pair<std::string, std::array<GrowthEstimate, 2>>> rows;
    for (std::size_t k = 0; k < products.jobs.size(); ++k) {
      rows.emplace_back(products.jobs[k].name,
                        growth_row(products.growth->series[k], *products.growth,
                                   config.period_a, config.period_b));
    }
    write_growth_csv(config.out_dir / "growth.csv", rows);
    render_maps(config.out_dir / "maps", products.results, config.palette_clamp,
                config.max_render_width, config.map_format);
    write_report_csv(config.out_dir / "report.csv", products, config.period_a,
                     config.period_b);
    return scope_failures(products.results) > 0 ? 1 : 0;
  } catch (const Error& e) {
    std::cerr << "run: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace skyglow
