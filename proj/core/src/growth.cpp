#include "skyglow/growth.hpp"

#include <Eigen/Dense>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "skyglow/streaming.hpp"

namespace skyglow {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
}

const AggregateEntry* AggregateSeries::find(int year) const {
  for (const AggregateEntry& e : entries) {
    if (e.year == year) return &e;
  }
  return nullptr;
}

AggregateSeries build_aggregate_series(const Panel& panel, const RegionMask* mask,
                                       Scope scope) {
  if (!scope.is_world()) {
    if (mask == nullptr) {
      throw ArgumentError("aggregate series: region scope requires a mask");
    }
    if (!mask->has(scope.region_id())) {
      throw LookupError("aggregate series: region id " +
                        std::to_string(scope.region_id()) + " not in mask table");
    }
  }
  AggregateSeries out;
  out.scope = scope;
  out.label = scope.label(mask);
  const std::uint16_t* ids = mask ? mask->data() : nullptr;
  for (const RasterGrid& grid : panel.grids()) {
    std::int64_t total = 0;
    const std::uint8_t* v = grid.data();
    const std::uint8_t nd = grid.nodata();
    const std::size_t n = grid.values().size();
    for (std::size_t i = 0; i < n; ++i) {
      if (v[i] == nd) continue;
      if (ids != nullptr && !scope.is_world() && ids[i] != scope.region_id()) continue;
      total += v[i];
    }
    AggregateEntry e;
    e.year = grid.year();
    e.total_light = static_cast<double>(total);
    e.log_light = total > 0 ? std::log(static_cast<double>(total)) : kNan;
    out.entries.push_back(e);
  }
  return out;
}

double YearEffects::at(int year) const {
  for (std::size_t k = 0; k < years.size(); ++k) {
    if (years[k] == year) return gamma[k];
  }
  throw DataError("no year effect for " + std::to_string(year));
}

bool YearEffects::covers(int year) const {
  return std::find(years.begin(), years.end(), year) != years.end();
}

YearEffects YearEffects::zero(std::vector<int> years) {
  YearEffects e;
  e.gamma.assign(years.size(), 0.0);
  e.years = std::move(years);
  return e;
}

YearEffects fit_year_effects(std::span<const AggregateSeries> all_series) {
  if (all_series.size() < 2) {
    throw IdentificationError("year effects need at least 2 regions, got " +
                              std::to_string(all_series.size()));
  }
  // Observation list over defined logs; collect the year set.
  std::map<int, int> year_index;
  for (const AggregateSeries& s : all_series) {
    for (const AggregateEntry& e : s.entries) {
      if (!std::isnan(e.log_light)) year_index.emplace(e.year, 0);
    }
  }
  const int T = static_cast<int>(year_index.size());
  if (T < 3) {
    throw IdentificationError("year effects need at least 3 years, got " +
                              std::to_string(T));
  }
  {
    int k = 0;
    for (auto& [year, idx] : year_index) idx = k++;
  }
  double tau_mean = 0.0;
  for (const auto& [year, idx] : year_index) tau_mean += year;
  tau_mean /= T;

  // Basis of the year-effect subspace orthogonal to {1, tau}: QR of the
  // T x 2 matrix [1 tau], columns 3..T of Q span the constrained space.
  Eigen::MatrixXd constraint(T, 2);
  for (const auto& [year, idx] : year_index) {
    constraint(idx, 0) = 1.0;
    constraint(idx, 1) = year - tau_mean;
  }
  const Eigen::MatrixXd q_full =
      Eigen::HouseholderQR<Eigen::MatrixXd>(constraint).householderQ();
  const Eigen::MatrixXd basis = q_full.rightCols(T - 2);

  const int R = static_cast<int>(all_series.size());
  const int n_params = 2 * R + (T - 2);
  std::size_t n_obs = 0;
  for (const AggregateSeries& s : all_series) {
    for (const AggregateEntry& e : s.entries) {
      if (!std::isnan(e.log_light)) ++n_obs;
    }
  }
  if (n_obs < static_cast<std::size_t>(n_params)) {
    throw IdentificationError("year-effects design has more parameters than observations");
  }

  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_obs), n_params);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n_obs));
  Eigen::Index row = 0;
  for (int r = 0; r < R; ++r) {
    for (const AggregateEntry& e : all_series[static_cast<std::size_t>(r)].entries) {
      if (std::isnan(e.log_light)) continue;
      const int t = year_index.at(e.year);
      X(row, 2 * r) = 1.0;
      X(row, 2 * r + 1) = e.year - tau_mean;
      X.block(row, 2 * R, 1, T - 2) = basis.row(t);
      y(row) = e.log_light;
      ++row;
    }
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < n_params) {
    throw IdentificationError("year-effects design is rank deficient (rank " +
                              std::to_string(qr.rank()) + " of " +
                              std::to_string(n_params) + ")");
  }
  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd gamma = basis * beta.tail(T - 2);

  YearEffects out;
  out.years.resize(static_cast<std::size_t>(T));
  out.gamma.resize(static_cast<std::size_t>(T));
  for (const auto& [year, idx] : year_index) {
    out.years[static_cast<std::size_t>(idx)] = year;
    out.gamma[static_cast<std::size_t>(idx)] = gamma(idx);
  }
  return out;
}

GrowthEstimate estimate_growth(const AggregateSeries& series,
                               const YearEffects& effects, YearRange period) {
  period.validate();
  std::vector<double> growth;
  for (int t = period.first; t <= period.last; ++t) {
    const AggregateEntry* curr = series.find(t);
    const AggregateEntry* prev = series.find(t - 1);
    if (curr == nullptr || prev == nullptr) {
      throw DataError(series.label + ": no totals for " + std::to_string(t - 1) +
                      "->" + std::to_string(t));
    }
    if (std::isnan(curr->log_light) || std::isnan(prev->log_light)) {
      throw DataError(series.label + ": log total undefined in " +
                      std::to_string(t - 1) + "->" + std::to_string(t));
    }
    if (!effects.covers(t) || !effects.covers(t - 1)) {
      throw DataError(series.label + ": year effects missing for " +
                      std::to_string(t));
    }
    const double resid_curr = curr->log_light - effects.at(t);
    const double resid_prev = prev->log_light - effects.at(t - 1);
    growth.push_back(resid_curr - resid_prev);
  }
  if (growth.size() < 2) {
    throw InsufficientDataError(series.label + ": fewer than 2 growth observations");
  }
  CompensatedSum s1;
  for (double g : growth) s1.add(g);
  const double mean = s1.value() / static_cast<double>(growth.size());
  CompensatedSum s2;
  for (double g : growth) s2.add((g - mean) * (g - mean));
  const double var = s2.value() / static_cast<double>(growth.size());

  GrowthEstimate out;
  out.label = series.label;
  out.period = period;
  out.y_hat = 100.0 * mean;
  out.sigma_y = 100.0 * std::sqrt(var);
  out.n_years = static_cast<int>(growth.size());
  return out;
}

}  // namespace skyglow
