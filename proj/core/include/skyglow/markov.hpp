#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "skyglow/pipeline.hpp"
#include "skyglow/streaming.hpp"

namespace skyglow {

// Growth states ordered Neg < Neu < Pos; this order fixes row/column layout
// and serialization everywhere.
enum class GrowthState : std::uint8_t { Neg = 0, Neu = 1, Pos = 2 };

// Per-pixel growth state for one year: Pos above +sigma, Neg below -sigma,
// Neu within (boundary inclusive). Code 0 marks pixels without a state.
struct StateGrid {
  GridGeometry geometry;
  int year = 0;
  Scope scope = Scope::world();
  double sigma_used = 0.0;
  std::vector<std::uint8_t> codes;  // kStateNone or kStateNeg/Neu/Pos
  std::array<std::int64_t, 3> state_counts{};

  std::int64_t stateful_count() const {
    return state_counts[0] + state_counts[1] + state_counts[2];
  }
};

StateGrid classify(const DemeanedDiffGrid& d, double sigma);

// Row-stochastic annual transition matrix: rows are the source state, columns
// the destination, each estimated row sums to 1. Rows with zero observed
// pairs hold NaN probabilities.
struct TransitionMatrix {
  int year = 0;
  Scope scope = Scope::world();
  std::array<std::array<double, 3>, 3> p{};
  std::array<std::array<std::int64_t, 3>, 3> counts{};

  std::int64_t row_total(int from) const {
    return counts[from][0] + counts[from][1] + counts[from][2];
  }
  std::int64_t total_pairs() const {
    return row_total(0) + row_total(1) + row_total(2);
  }
};

// Pairs are tallied only over pixels holding a state in both years.
TransitionMatrix estimate_transitions(const StateGrid& prev, const StateGrid& curr);
TransitionMatrix transitions_from_counts(
    int year, Scope scope, const std::array<std::array<std::int64_t, 3>, 3>& counts);

// Limit of repeated squaring of P. For an ergodic chain the limit is rank one
// and the diagonals equal the stationary distribution componentwise.
struct StationaryResult {
  int year = 0;
  std::array<double, 3> pi{};  // Neg, Neu, Pos; NaN unless converged & ergodic
  double a_pp = 0.0;           // persistent growth   (Pos diagonal)
  double a_00 = 0.0;           // persistent neutral  (Neu diagonal)
  double a_mm = 0.0;           // persistent decay    (Neg diagonal)
  bool converged = false;
  bool ergodic = false;
  int iterations = 0;
  std::array<std::array<double, 3>, 3> p_bar{};  // last squaring iterate
};

// Squares until successive iterates differ by < 1e-12 in max norm or 200
// squarings elapse. Throws UndefinedChainError when a row is unestimated.
StationaryResult stationary(const TransitionMatrix& P);

// a_pp - a_mm; NaN unless the result converged to an ergodic limit.
double gap(const StationaryResult& s);

struct PeriodMeans {
  double a_pp = 0.0;
  double a_00 = 0.0;
  double a_mm = 0.0;
  int n_used = 0;
};

// Arithmetic means of the diagonals over converged entries whose year lies in
// the period; non-converged entries are skipped. All-NaN input yields a NaN
// triple with n_used = 0.
PeriodMeans period_means(std::span<const StationaryResult> series, YearRange period);

}  // namespace skyglow
