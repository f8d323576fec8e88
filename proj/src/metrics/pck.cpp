#include "wifisense/metrics/pck.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "wifisense/error.hpp"

namespace wifisense::metrics {

using keypoints::Joint;

std::optional<double> torso_diagonal(const Skeleton& gt) {
  const auto& sl = gt[Joint::shoulder_l];
  const auto& pr = gt[Joint::pelvis_r];
  const auto& sr = gt[Joint::shoulder_r];
  const auto& pl = gt[Joint::pelvis_l];
  double d = 0.0;
  if (sl.valid && pr.valid) {
    d = keypoints::distance(sl, pr);
  } else if (sr.valid && pl.valid) {
    d = keypoints::distance(sr, pl);
  } else {
    return std::nullopt;
  }
  if (!(d > 0.0)) return std::nullopt;
  return d;
}

PckReport pck(std::span<const Skeleton> preds, std::span<const Skeleton> gts,
              const PckConfig& config) {
  if (preds.size() != gts.size()) {
    throw DataError(fmt::format("PCK: {} predictions but {} ground-truth frames", preds.size(),
                                gts.size()));
  }
  for (double a : config.alphas)
    if (!(a > 0.0 && a <= 1.0)) throw ConfigError(fmt::format("PCK alpha {} outside (0, 1]", a));

  PckReport r;
  r.alphas = config.alphas;
  r.frames = gts.size();
  const std::size_t na = config.alphas.size();
  std::array<std::vector<std::size_t>, kJoints> hits;
  for (auto& h : hits) h.assign(na, 0);

  for (std::size_t f = 0; f < gts.size(); ++f) {
    const auto diag = torso_diagonal(gts[f]);
    if (!diag) {
      r.excluded_frames.push_back(gts[f].frame_index);
      continue;
    }
    for (std::size_t k = 0; k < kJoints; ++k) {
      const auto& g = gts[f].keypoints[k];
      if (!g.valid) continue;
      ++r.counted[k];
      const auto& p = preds[f].keypoints[k];
      if (!p.valid) continue;
      const double d = keypoints::distance(p, g) / *diag;
      for (std::size_t a = 0; a < na; ++a)
        if (d <= config.alphas[a]) ++hits[k][a];
    }
  }

  for (std::size_t k = 0; k < kJoints; ++k) {
    r.percent[k].assign(na, std::numeric_limits<double>::quiet_NaN());
    if (r.counted[k] == 0) continue;
    for (std::size_t a = 0; a < na; ++a)
      r.percent[k][a] = 100.0 * static_cast<double>(hits[k][a]) / static_cast<double>(r.counted[k]);
  }
  r.avg = joint_average(r.percent, na);
  return r;
}

std::vector<double> joint_average(const std::array<std::vector<double>, kJoints>& percent,
                                  std::size_t alphas) {
  std::vector<double> avg(alphas, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t a = 0; a < alphas; ++a) {
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& row : percent) {
      if (a >= row.size() || std::isnan(row[a])) continue;
      total += row[a];
      ++n;
    }
    if (n) avg[a] = total / static_cast<double>(n);
  }
  return avg;
}

bool is_monotone(const PckReport& report) {
  auto check = [](const std::vector<double>& row) {
    for (std::size_t a = 1; a < row.size(); ++a)
      if (!std::isnan(row[a]) && row[a] < row[a - 1]) return false;
    return true;
  };
  for (const auto& row : report.percent)
    if (!check(row)) return false;
  return check(report.avg);
}

namespace {

std::string cell(double v) { return std::isnan(v) ? std::string("n/a") : fmt::format("{:.1f}", v); }

std::string alpha_label(double a) { return fmt::format("PCK{}", static_cast<int>(std::lround(a * 100))); }

void check_same_alphas(const PckReport& a, const PckReport& b) {
  if (a.alphas != b.alphas) throw ConfigError("fall split reports use different alpha sets");
}

}  // namespace

std::string format_pck_table(const PckReport& report) {
  std::string out = fmt::format("{:<12}", "");
  for (double a : report.alphas) out += fmt::format(" {:>7}", alpha_label(a));
  out += '\n';
  auto row = [&](std::string_view name, const std::vector<double>& values) {
    out += fmt::format("{:<12}", name);
    for (double v : values) out += fmt::format(" {:>7}", cell(v));
    out += '\n';
  };
  for (std::size_t k = 0; k < kJoints; ++k) row(keypoints::joint_name(k), report.percent[k]);
  row("AVG", report.avg);
  return out;
}

std::string format_pck_csv(const PckReport& report) {
  std::string out = "keypoint";
  for (double a : report.alphas) out += "," + alpha_label(a);
  out += '\n';
  auto row = [&](std::string_view name, const std::vector<double>& values) {
    out += name;
    for (double v : values) out += "," + cell(v);
    out += '\n';
  };
  for (std::size_t k = 0; k < kJoints; ++k) row(keypoints::joint_name(k), report.percent[k]);
  row("AVG", report.avg);
  return out;
}

std::string format_fall_split_table(const PckReport& non_fall, const PckReport& fall) {
  check_same_alphas(non_fall, fall);
  std::string out = fmt::format("{:<12}", "");
  for (double a : non_fall.alphas) out += fmt::format(" {:^13}", alpha_label(a));
  out += fmt::format("\n{:<12}", "Fall");
  for (std::size_t a = 0; a < non_fall.alphas.size(); ++a) out += fmt::format(" {:>6} {:>6}", "X", "O");
  out += '\n';
  auto row = [&](std::string_view name, const std::vector<double>& x, const std::vector<double>& o) {
    out += fmt::format("{:<12}", name);
    for (std::size_t a = 0; a < x.size(); ++a) out += fmt::format(" {:>6} {:>6}", cell(x[a]), cell(o[a]));
    out += '\n';
  };
  for (std::size_t k = 0; k < kJoints; ++k)
    row(keypoints::joint_name(k), non_fall.percent[k], fall.percent[k]);
  row("AVG", non_fall.avg, fall.avg);
  return out;
}

std::string format_fall_split_csv(const PckReport& non_fall, const PckReport& fall) {
  check_same_alphas(non_fall, fall);
  std::string out = "keypoint";
  for (double a : non_fall.alphas) out += fmt::format(",{0}_nonfall,{0}_fall", alpha_label(a));
  out += '\n';
  auto row = [&](std::string_view name, const std::vector<double>& x, const std::vector<double>& o) {
    out += name;
    for (std::size_t a = 0; a < x.size(); ++a) out += "," + cell(x[a]) + "," + cell(o[a]);
    out += '\n';
  };
  for (std::size_t k = 0; k < kJoints; ++k)
    row(keypoints::joint_name(k), non_fall.percent[k], fall.percent[k]);
  row("AVG", non_fall.avg, fall.avg);
  return out;
}

}  // namespace wifisense::metrics
