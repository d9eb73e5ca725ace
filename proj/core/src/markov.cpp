#include "skyglow/markov.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace skyglow {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
}

StateGrid classify(const DemeanedDiffGrid& d, double sigma) {
  if (sigma < 0.0 || std::isnan(sigma)) {
    throw ArgumentError("classify: sigma must be nonnegative");
  }
  StateGrid out;
  out.geometry = d.geometry;
  out.year = d.year;
  out.scope = d.scope;
  out.sigma_used = sigma;
  out.codes.assign(d.values.size(), kStateNone);
  for (std::size_t i = 0; i < d.values.size(); ++i) {
    if (!d.active[i]) continue;
    const double v = d.values[i];
    const std::uint8_t code =
        v > sigma ? kStatePos : (v < -sigma ? kStateNeg : kStateNeu);
    out.codes[i] = code;
    ++out.state_counts[code - 1];
  }
  return out;
}

TransitionMatrix estimate_transitions(const StateGrid& prev, const StateGrid& curr) {
  if (!(prev.geometry == curr.geometry)) {
    throw ShapeError("estimate_transitions: geometry mismatch");
  }
  if (curr.year != prev.year + 1) {
    throw SequencingError("estimate_transitions: years are not consecutive");
  }
  if (!(prev.scope == curr.scope)) {
    throw ArgumentError("estimate_transitions: scope mismatch");
  }
  std::array<std::array<std::int64_t, 3>, 3> counts{};
  for (std::size_t i = 0; i < prev.codes.size(); ++i) {
    const std::uint8_t f = prev.codes[i];
    const std::uint8_t t = curr.codes[i];
    if (f == kStateNone || t == kStateNone) continue;
    ++counts[f - 1][t - 1];
  }
  TransitionMatrix m = transitions_from_counts(curr.year, curr.scope, counts);
  if (m.total_pairs() == 0) {
    throw EmptyEstimateError("no pixel holds a state in both " +
                             std::to_string(prev.year) + " and " +
                             std::to_string(curr.year));
  }
  return m;
}

TransitionMatrix transitions_from_counts(
    int year, Scope scope, const std::array<std::array<std::int64_t, 3>, 3>& counts) {
  TransitionMatrix m;
  m.year = year;
  m.scope = scope;
  m.counts = counts;
  for (int f = 0; f < 3; ++f) {
    const std::int64_t total = m.row_total(f);
    for (int t = 0; t < 3; ++t) {
      m.p[f][t] = total > 0 ? static_cast<double>(counts[f][t]) /
                                  static_cast<double>(total)
                            : kNan;
    }
  }
  return m;
}

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 square(const Mat3& m) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      r[i][j] = m[i][0] * m[0][j] + m[i][1] * m[1][j] + m[i][2] * m[2][j];
    }
  }
  return r;
}

double max_diff(const Mat3& a, const Mat3& b) {
  double d = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) d = std::max(d, std::abs(a[i][j] - b[i][j]));
  return d;
}

}  // namespace

StationaryResult stationary(const TransitionMatrix& P) {
  for (int f = 0; f < 3; ++f) {
    if (P.row_total(f) == 0 || std::isnan(P.p[f][0])) {
      throw UndefinedChainError("stationary: row " + std::to_string(f) +
                                " has no observed transitions");
    }
  }
  constexpr double kIterTol = 1e-12;
  constexpr double kErgodicTol = 1e-10;
  constexpr int kMaxSquarings = 200;

  StationaryResult out;
  out.year = P.year;
  Mat3 m = P.p;
  int iter = 0;
  bool converged = false;
  while (iter < kMaxSquarings) {
    const Mat3 next = square(m);
    ++iter;
    if (max_diff(next, m) < kIterTol) {
      m = next;
      converged = true;
      break;
    }
    m = next;
  }
  out.iterations = iter;
  out.converged = converged;
  out.p_bar = m;

  if (!converged) {
    out.pi = {kNan, kNan, kNan};
    out.a_pp = out.a_00 = out.a_mm = kNan;
    return out;
  }

  double row_spread = 0.0;
  for (int j = 0; j < 3; ++j) {
    const double lo = std::min({m[0][j], m[1][j], m[2][j]});
    const double hi = std::max({m[0][j], m[1][j], m[2][j]});
    row_spread = std::max(row_spread, hi - lo);
  }
  out.ergodic = row_spread < kErgodicTol;

  out.a_mm = m[0][0];
  out.a_00 = m[1][1];
  out.a_pp = m[2][2];
  if (out.ergodic) {
    for (int j = 0; j < 3; ++j) {
      out.pi[j] = (m[0][j] + m[1][j] + m[2][j]) / 3.0;
    }
  } else {
    out.pi = {kNan, kNan, kNan};
  }
  return out;
}

double gap(const StationaryResult& s) {
  if (!s.converged || !s.ergodic) return kNan;
  return s.a_pp - s.a_mm;
}

PeriodMeans period_means(std::span<const StationaryResult> series,
                         YearRange period) {
  period.validate();
  PeriodMeans out;
  double spp = 0.0, s00 = 0.0, smm = 0.0;
  for (const StationaryResult& s : series) {
    if (!period.contains(s.year) || !s.converged) continue;
    if (std::isnan(s.a_pp) || std::isnan(s.a_00) || std::isnan(s.a_mm)) continue;
    spp += s.a_pp;
    s00 += s.a_00;
    smm += s.a_mm;
    ++out.n_used;
  }
  if (out.n_used == 0) {
    out.a_pp = out.a_00 = out.a_mm = kNan;
    return out;
  }
  out.a_pp = spp / out.n_used;
  out.a_00 = s00 / out.n_used;
  out.a_mm = smm / out.n_used;
  return out;
}

}  // namespace skyglow
