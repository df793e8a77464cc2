#pragma once

// Brute-force dispersion-threshold reference. Every window and every
// extension step recomputes its centroid from scratch over the original
// sample array; nothing is carried between steps except the scan position.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "genread/gaze.hpp"

namespace oracle {

struct RefFixation {
  std::size_t first = 0;  // index into the input stream
  std::size_t last = 0;   // inclusive
  double x = 0.0;
  double y = 0.0;
  double duration_ms = 0.0;
};

inline void mean_of(const std::vector<genread::GazePoint>& pts, std::size_t from, std::size_t to, double& mx,
                    double& my) {
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = from; i < to; ++i) {
    sx += pts[i].x_px;
    sy += pts[i].y_px;
  }
  mx = sx / static_cast<double>(to - from);
  my = sy / static_cast<double>(to - from);
}

inline std::vector<RefFixation> reference_fixations(const std::vector<genread::GazePoint>& pts,
                                                    const genread::FixationParams& p) {
  const std::size_t n = pts.size();
  const auto k = static_cast<std::size_t>(p.min_points);
  std::vector<RefFixation> out;
  std::size_t i = 0;
  while (i + k <= n) {
    bool all_valid = true;
    for (std::size_t j = i; j < i + k; ++j) all_valid = all_valid && pts[j].valid;
    if (!all_valid) {
      ++i;
      continue;
    }
    double cx = 0.0, cy = 0.0;
    mean_of(pts, i, i + k, cx, cy);
    bool tight = true;
    for (std::size_t j = i; j < i + k; ++j) {
      if (std::hypot(pts[j].x_px - cx, pts[j].y_px - cy) > p.init_dispersion_px) tight = false;
    }
    if (!tight) {
      ++i;
      continue;
    }
    std::size_t end = i + k;
    while (end < n && pts[end].valid) {
      mean_of(pts, i, end, cx, cy);
      if (std::hypot(pts[end].x_px - cx, pts[end].y_px - cy) > p.extend_dispersion_px) break;
      ++end;
    }
    RefFixation f;
    f.first = i;
    f.last = end - 1;
    mean_of(pts, i, end, f.x, f.y);
    f.duration_ms = 1000.0 * static_cast<double>(end - i) / p.sample_rate_hz;
    out.push_back(f);
    i = end;
  }
  return out;
}

// Dwell-and-jump gaze with jitter, slow drift, blinks and occasional noise
// bursts, sampled at 90 Hz.
inline std::vector<genread::GazePoint> random_walk_stream(std::uint64_t seed, std::size_t n = 600) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> screen_x(0.0, 1920.0), screen_y(0.0, 1080.0), unit(0.0, 1.0);
  std::uniform_int_distribution<int> dwell_len(2, 45);
  std::normal_distribution<double> jitter_scale(0.0, 1.0);

  std::vector<genread::GazePoint> pts;
  pts.reserve(n);
  double cx = screen_x(gen), cy = screen_y(gen);
  while (pts.size() < n) {
    const int len = dwell_len(gen);
    const double sigma = 2.0 + 28.0 * unit(gen);
    const double drift_x = (unit(gen) - 0.5) * 6.0, drift_y = (unit(gen) - 0.5) * 6.0;
    const bool blink = unit(gen) < 0.08;
    for (int s = 0; s < len && pts.size() < n; ++s) {
      genread::GazePoint p;
      p.t_ms = static_cast<std::int64_t>(std::llround(static_cast<double>(pts.size()) * 1000.0 / 90.0));
      if (blink && s < 4) {
        p.valid = false;
      } else {
        p.x_px = cx + sigma * jitter_scale(gen) + drift_x * s;
        p.y_px = cy + sigma * jitter_scale(gen) + drift_y * s;
      }
      pts.push_back(p);
    }
    if (unit(gen) < 0.7) {
      cx = screen_x(gen);
      cy = screen_y(gen);
    } else {
      cx += (unit(gen) - 0.5) * 140.0;
      cy += (unit(gen) - 0.5) * 140.0;
    }
  }
  return pts;
}

}  // namespace oracle
