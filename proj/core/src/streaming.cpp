#include "skyglow/streaming.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "skyglow/errors.hpp"

namespace skyglow {

void run_bands(const BandPlan& plan, int threads,
               const std::function<void(std::size_t)>& fn) {
  const std::size_t n = plan.band_count();
  if (threads <= 1 || n <= 1) {
    for (std::size_t b = 0; b < n; ++b) fn(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= n) return;
      fn(b);
    }
  };
  const int nw = std::min<int>(threads, static_cast<int>(n));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nw) - 1);
  for (int t = 1; t < nw; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

PackedStatePlane::PackedStatePlane(std::uint32_t width, std::uint32_t height)
    : width_(width), height_(height), row_stride_((width + 3u) / 4u) {
  bytes_.assign(row_stride_ * height_, 0);
}

void PackedStatePlane::clear() {
  std::fill(bytes_.begin(), bytes_.end(), std::uint8_t{0});
}

std::int64_t TransitionCounts::total_pairs() const {
  std::int64_t t = 0;
  for (const auto& row : counts)
    for (std::int64_t c : row) t += c;
  return t;
}

void TransitionCounts::merge(const TransitionCounts& o) {
  for (int f = 0; f < 3; ++f) {
    for (int t = 0; t < 3; ++t) counts[f][t] += o.counts[f][t];
    state_totals[f] += o.state_totals[f];
  }
}

namespace {

void check_pair(const GridView& prev, const GridView& curr) {
  if (!(prev.geometry == curr.geometry)) {
    throw ShapeError("streaming scan: geometry mismatch");
  }
  if (curr.year != prev.year + 1) {
    throw SequencingError("streaming scan: years are not consecutive");
  }
}

}  // namespace

PairSums scan_pair_sums(const GridView& prev, const GridView& curr,
                        const ScopeFilter& scope, const BandPlan& plan,
                        int threads) {
  check_pair(prev, curr);
  const std::uint32_t width = prev.geometry.width;
  const std::uint8_t* a = prev.values;
  const std::uint8_t* b = curr.values;
  const std::uint8_t nd_a = prev.nodata;
  const std::uint8_t nd_b = curr.nodata;

  std::vector<PairSums> partial(plan.band_count());
  run_bands(plan, threads, [&](std::size_t band) {
    std::int64_t sum = 0, count = 0;
    const std::size_t begin = std::size_t(plan.row_begin(band)) * width;
    const std::size_t end = std::size_t(plan.row_end(band)) * width;
    for (std::size_t i = begin; i < end; ++i) {
      if (a[i] == nd_a || b[i] == nd_b) continue;
      const int d = int(b[i]) - int(a[i]);
      if (d == 0) continue;
      if (!scope.contains(i)) continue;
      sum += d;
      ++count;
    }
    partial[band] = PairSums{sum, count};
  });
  PairSums total;
  for (const PairSums& p : partial) {
    total.delta_sum += p.delta_sum;
    total.active_count += p.active_count;
  }
  return total;
}

double scan_squared_sum(const GridView& prev, const GridView& curr,
                        const ScopeFilter& scope, PairSums sums,
                        const BandPlan& plan, int threads) {
  check_pair(prev, curr);
  const std::uint32_t width = prev.geometry.width;
  const std::uint8_t* a = prev.values;
  const std::uint8_t* b = curr.values;
  const std::uint8_t nd_a = prev.nodata;
  const std::uint8_t nd_b = curr.nodata;
  const std::int64_t S = sums.delta_sum;
  const std::int64_t n = sums.active_count;
  const double denom = static_cast<double>(n);

  std::vector<CompensatedSum> partial(plan.band_count());
  run_bands(plan, threads, [&](std::size_t band) {
    CompensatedSum acc;
    const std::size_t begin = std::size_t(plan.row_begin(band)) * width;
    const std::size_t end = std::size_t(plan.row_end(band)) * width;
    for (std::size_t i = begin; i < end; ++i) {
      if (a[i] == nd_a || b[i] == nd_b) continue;
      const std::int64_t d = std::int64_t(b[i]) - std::int64_t(a[i]);
      if (d == 0) continue;
      if (!scope.contains(i)) continue;
      const double v = static_cast<double>(d * n - S) / denom;
      acc.add(v * v);
    }
    partial[band] = acc;
  });
  CompensatedSum total;
  for (const CompensatedSum& p : partial) total.merge(p);
  return total.value();
}

TransitionCounts scan_classify(const GridView& prev, const GridView& curr,
                               const ScopeFilter& scope, PairSums sums,
                               double sigma, PackedStatePlane& states,
                               const BandPlan& plan, int threads) {
  check_pair(prev, curr);
  const std::uint32_t width = prev.geometry.width;
  const std::uint8_t* a = prev.values;
  const std::uint8_t* b = curr.values;
  const std::uint8_t nd_a = prev.nodata;
  const std::uint8_t nd_b = curr.nodata;
  const std::int64_t S = sums.delta_sum;
  const std::int64_t n = sums.active_count;
  const double denom = static_cast<double>(n);

  std::vector<TransitionCounts> partial(plan.band_count());
  run_bands(plan, threads, [&](std::size_t band) {
    TransitionCounts tc;
    for (std::uint32_t j = plan.row_begin(band); j < plan.row_end(band); ++j) {
      const std::size_t row = std::size_t(j) * width;
      for (std::uint32_t x = 0; x < width; ++x) {
        const std::size_t i = row + x;
        std::uint8_t code = kStateNone;
        if (a[i] != nd_a && b[i] != nd_b) {
          const std::int64_t d = std::int64_t(b[i]) - std::int64_t(a[i]);
          if (d != 0 && scope.contains(i)) {
            const double v = static_cast<double>(d * n - S) / denom;
            code = v > sigma ? kStatePos : (v < -sigma ? kStateNeg : kStateNeu);
          }
        }
        const std::uint8_t from = states.get(x, j);
        if (from != kStateNone && code != kStateNone) {
          ++tc.counts[from - 1][code - 1];
        }
        if (code != kStateNone) ++tc.state_totals[code - 1];
        if (code != from) states.set(x, j, code);
      }
    }
    partial[band] = tc;
  });
  TransitionCounts total;
  for (const TransitionCounts& p : partial) total.merge(p);
  return total;
}

void scan_accumulate(const GridView& prev, const GridView& curr,
                     const ScopeFilter& scope, PairSums sums,
                     std::vector<double>& value_sums,
                     std::vector<std::uint16_t>& year_counts, const BandPlan& plan,
                     int threads) {
  check_pair(prev, curr);
  const std::uint32_t width = prev.geometry.width;
  const std::uint8_t* a = prev.values;
  const std::uint8_t* b = curr.values;
  const std::uint8_t nd_a = prev.nodata;
  const std::uint8_t nd_b = curr.nodata;
  const std::int64_t S = sums.delta_sum;
  const std::int64_t n = sums.active_count;
  const double denom = static_cast<double>(n);

  run_bands(plan, threads, [&](std::size_t band) {
    const std::size_t begin = std::size_t(plan.row_begin(band)) * width;
    const std::size_t end = std::size_t(plan.row_end(band)) * width;
    for (std::size_t i = begin; i < end; ++i) {
      if (a[i] == nd_a || b[i] == nd_b) continue;
      const std::int64_t d = std::int64_t(b[i]) - std::int64_t(a[i]);
      if (d == 0) continue;
      if (!scope.contains(i)) continue;
      value_sums[i] += static_cast<double>(d * n - S) / denom;
      ++year_counts[i];
    }
  });
}

std::vector<double> collect_demeaned(const GridView& prev, const GridView& curr,
                                     const ScopeFilter& scope, PairSums sums) {
  check_pair(prev, curr);
  const std::uint8_t* a = prev.values;
  const std::uint8_t* b = curr.values;
  const std::uint8_t nd_a = prev.nodata;
  const std::uint8_t nd_b = curr.nodata;
  const std::int64_t S = sums.delta_sum;
  const std::int64_t n = sums.active_count;
  const double denom = static_cast<double>(n);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(sums.active_count));
  const std::size_t total = prev.geometry.pixel_count();
  for (std::size_t i = 0; i < total; ++i) {
    if (a[i] == nd_a || b[i] == nd_b) continue;
    const std::int64_t d = std::int64_t(b[i]) - std::int64_t(a[i]);
    if (d == 0) continue;
    if (!scope.contains(i)) continue;
    out.push_back(static_cast<double>(d * n - S) / denom);
  }
  return out;
}

YearTotals scan_year_totals(const GridView& grid, const std::uint16_t* ids,
                            const BandPlan& plan, int threads) {
  const std::uint32_t width = grid.geometry.width;
  const std::uint8_t* a = grid.values;
  const std::uint8_t nd = grid.nodata;

  struct Partial {
    std::int64_t world = 0;
    std::vector<std::int64_t> by_region;
  };
  std::vector<Partial> partial(plan.band_count());
  run_bands(plan, threads, [&](std::size_t band) {
    Partial p;
    if (ids != nullptr) p.by_region.assign(65536, 0);
    const std::size_t begin = std::size_t(plan.row_begin(band)) * width;
    const std::size_t end = std::size_t(plan.row_end(band)) * width;
    for (std::size_t i = begin; i < end; ++i) {
      if (a[i] == nd) continue;
      p.world += a[i];
      if (ids != nullptr) p.by_region[ids[i]] += a[i];
    }
    partial[band] = std::move(p);
  });
  YearTotals total;
  if (ids != nullptr) total.by_region.assign(65536, 0);
  for (const Partial& p : partial) {
    total.world += p.world;
    for (std::size_t r = 0; r < p.by_region.size(); ++r) {
      total.by_region[r] += p.by_region[r];
    }
  }
  return total;
}

}  // namespace skyglow
