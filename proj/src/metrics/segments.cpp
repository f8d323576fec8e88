#include "wifisense/metrics/segments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "wifisense/error.hpp"
#include "wifisense/metrics/pck.hpp"

namespace wifisense::metrics {

using keypoints::index;
using J = keypoints::Joint;

std::vector<Segment> default_segments() {
  return {
      {"head", {index(J::nose), index(J::eye_r), index(J::eye_l), index(J::ear_r), index(J::ear_l)}},
      {"torso", {index(J::shoulder_r), index(J::shoulder_l)}},
      {"arms", {index(J::elbow_r), index(J::elbow_l), index(J::hand_r), index(J::hand_l)}},
      {"pelvis", {index(J::pelvis_r), index(J::pelvis_l)}},
      {"legs", {index(J::knee_r), index(J::knee_l), index(J::foot_r), index(J::foot_l)}},
  };
}

namespace {

// Linear-interpolated quantile of sorted data.
double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::vector<SegmentError> segment_tracking_error(std::span<const keypoints::Skeleton> preds,
                                                 std::span<const keypoints::Skeleton> gts,
                                                 const std::vector<Segment>& segments) {
  if (preds.size() != gts.size()) {
    throw DataError(fmt::format("segment error: {} predictions but {} ground-truth frames",
                                preds.size(), gts.size()));
  }
  for (const auto& s : segments) {
    if (s.joints.empty()) throw ConfigError(fmt::format("segment '{}' has no joints", s.name));
    for (std::size_t j : s.joints)
      if (j >= kJoints) throw ConfigError(fmt::format("segment '{}' names joint {}", s.name, j));
  }
  std::vector<SegmentError> out;
  for (const auto& s : segments) out.push_back({s.name, {}, 0.0, 0.0, 0.0});

  for (std::size_t f = 0; f < gts.size(); ++f) {
    const auto diag = torso_diagonal(gts[f]);
    if (!diag) continue;
    for (std::size_t i = 0; i < segments.size(); ++i) {
      double px = 0, py = 0, gx = 0, gy = 0;
      bool usable = true;
      for (std::size_t j : segments[i].joints) {
        const auto& p = preds[f].keypoints[j];
        const auto& g = gts[f].keypoints[j];
        if (!p.valid || !g.valid) {
          usable = false;
          break;
        }
        px += p.x;
        py += p.y;
        gx += g.x;
        gy += g.y;
      }
      if (!usable) continue;
      const double n = static_cast<double>(segments[i].joints.size());
      out[i].samples.push_back(std::hypot((px - gx) / n, (py - gy) / n) / *diag);
    }
  }
  for (auto& e : out) {
    if (e.samples.empty()) {
      e.mean = e.median = e.p90 = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    e.mean = std::accumulate(e.samples.begin(), e.samples.end(), 0.0) /
             static_cast<double>(e.samples.size());
    std::vector<double> sorted = e.samples;
    std::sort(sorted.begin(), sorted.end());
    e.median = quantile(sorted, 0.5);
    e.p90 = quantile(sorted, 0.9);
  }
  return out;
}

std::string format_segment_csv(const std::vector<SegmentError>& errors) {
  std::string out = "segment,frames,mean,median,p90\n";
  for (const auto& e : errors)
    out += fmt::format("{},{},{:.6f},{:.6f},{:.6f}\n", e.name, e.samples.size(), e.mean, e.median,
                       e.p90);
  return out;
}

}  // namespace wifisense::metrics
