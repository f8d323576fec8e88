#include "wifisense/synth/motion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "wifisense/error.hpp"

namespace wifisense::synth {

using keypoints::kJoints;
using keypoints::Skeleton;

std::string_view to_string(Action action) {
  switch (action) {
    case Action::stand:
      return "stand";
    case Action::walk:
      return "walk";
    case Action::squat:
      return "squat";
    case Action::fall_backward:
      return "fall_backward";
    case Action::fall_sideways:
      return "fall_sideways";
  }
  return "unknown";
}

Action parse_action(std::string_view name) {
  for (Action a : {Action::stand, Action::walk, Action::squat, Action::fall_backward,
                   Action::fall_sideways})
    if (to_string(a) == name) return a;
  throw ConfigError(fmt::format("unknown action '{}'", name));
}

bool is_fall(Action action) {
  return action == Action::fall_backward || action == Action::fall_sideways;
}

int lead_in_label(Action action) {
  switch (action) {
    case Action::stand:
      return 0;
    case Action::walk:
    case Action::fall_backward:
      return 1;
    case Action::squat:
    case Action::fall_sideways:
      return 2;
  }
  return 0;
}

std::size_t frame_count(double seconds) {
  return static_cast<std::size_t>(std::llround(seconds * kFrameRate));
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kGround = 0.85;

struct Vec {
  double x, y;
};
using Pose = std::array<Vec, kJoints>;

// Upright template in body units: origin at the pelvis center, y down,
// feet at +0.5. Right-side joints sit at smaller x (subject faces the camera).
constexpr Pose kTemplate{{
    {0.0, -0.80},
    {-0.025, -0.83},
    {0.025, -0.83},
    {-0.05, -0.81},
    {0.05, -0.81},
    {-0.10, -0.62},
    {0.10, -0.62},
    {-0.12, -0.44},
    {0.12, -0.44},
    {-0.13, -0.27},
    {0.13, -0.27},
    {-0.06, 0.0},
    {0.06, 0.0},
    {-0.065, 0.26},
    {0.065, 0.26},
    {-0.07, 0.50},
    {0.07, 0.50},
}};

struct Subject {
  double scale;
  double width;
  double phase;
  double step_hz;
  double squat_period;
  double sway_hz;
};

Subject draw_subject(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Subject s;
  s.scale = 0.34 + 0.04 * u(rng);
  s.width = 0.9 + 0.2 * u(rng);
  s.phase = kTwoPi * u(rng);
  s.step_hz = 0.9 + 0.2 * u(rng);
  s.squat_period = 2.5 + 1.0 * u(rng);
  s.sway_hz = 0.1 + 0.1 * u(rng);
  return s;
}

using J = keypoints::Joint;
constexpr std::size_t I(J j) { return keypoints::index(j); }

// Body-unit pose plus horizontal center for an action at time t.
struct Frame {
  Pose pose;
  double cx;
};

Frame stand_frame(const Subject& s, double start_x, double t) {
  Frame f{kTemplate, start_x + 0.006 * std::sin(kTwoPi * s.sway_hz * t + s.phase)};
  const double arm = 0.008 * std::sin(kTwoPi * 0.25 * t + s.phase);
  f.pose[I(J::hand_r)].y += arm;
  f.pose[I(J::hand_l)].y += arm;
  return f;
}

Frame walk_frame(const Subject& s, double start_x, double t) {
  Frame f{kTemplate, start_x + 0.18 * std::sin(kTwoPi * t / 10.0)};
  const double g = kTwoPi * s.step_hz * t + s.phase;
  const double sw = std::sin(g);
  auto& p = f.pose;
  p[I(J::knee_r)].x += 0.04 * sw;
  p[I(J::foot_r)].x += 0.08 * sw;
  p[I(J::knee_l)].x -= 0.04 * sw;
  p[I(J::foot_l)].x -= 0.08 * sw;
  p[I(J::knee_r)].y -= 0.04 * std::max(0.0, sw);
  p[I(J::foot_r)].y -= 0.06 * std::max(0.0, sw);
  p[I(J::knee_l)].y -= 0.04 * std::max(0.0, -sw);
  p[I(J::foot_l)].y -= 0.06 * std::max(0.0, -sw);
  p[I(J::elbow_r)].x -= 0.03 * sw;
  p[I(J::hand_r)].x -= 0.06 * sw;
  p[I(J::elbow_l)].x += 0.03 * sw;
  p[I(J::hand_l)].x += 0.06 * sw;
  const double bob = 0.012 * std::abs(sw);
  for (std::size_t j = 0; j < I(J::foot_r); ++j) p[j].y -= bob;
  return f;
}

Frame squat_frame(const Subject& s, double start_x, double t) {
  Frame f{kTemplate, start_x + 0.01 * std::sin(kTwoPi * s.sway_hz * t + s.phase)};
  const double d = 0.5 * (1.0 - std::cos(kTwoPi * t / s.squat_period));
  auto& p = f.pose;
  for (std::size_t j = 0; j <= I(J::pelvis_l); ++j) p[j].y += 0.28 * d;
  p[I(J::pelvis_r)].x *= 1.0 + 0.3 * d;
  p[I(J::pelvis_l)].x *= 1.0 + 0.3 * d;
  p[I(J::knee_r)].x -= 0.08 * d;
  p[I(J::knee_l)].x += 0.08 * d;
  p[I(J::knee_r)].y += 0.10 * d;
  p[I(J::knee_l)].y += 0.10 * d;
  p[I(J::hand_r)].y -= 0.12 * d;
  p[I(J::hand_l)].y -= 0.12 * d;
  p[I(J::elbow_r)].y -= 0.05 * d;
  p[I(J::elbow_l)].y -= 0.05 * d;
  return f;
}

std::array<Vec, kJoints> to_image(const Frame& f, const Subject& s) {
  const double pelvis_y = kGround - 0.5 * s.scale;
  std::array<Vec, kJoints> out;
  for (std::size_t j = 0; j < kJoints; ++j)
    out[j] = {f.cx + s.scale * s.width * f.pose[j].x, pelvis_y + s.scale * f.pose[j].y};
  return out;
}

double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

// Vertical collapse toward the ground with lateral spread.
std::array<Vec, kJoints> collapse(std::array<Vec, kJoints> pts, double cx, double u, double t) {
  for (auto& p : pts) {
    p.y = kGround - (kGround - p.y) * (1.0 - 0.78 * u);
    p.x = cx + (p.x - cx) * (1.0 + 0.35 * u);
  }
  const double breath = 0.002 * u * std::sin(kTwoPi * 0.3 * t);
  for (std::size_t j = 0; j <= I(J::pelvis_l); ++j) pts[j].y += breath;
  return pts;
}

// Rotation about the feet toward the frame center.
std::array<Vec, kJoints> topple(std::array<Vec, kJoints> pts, double u, double t) {
  const Vec pivot{0.5 * (pts[I(J::foot_r)].x + pts[I(J::foot_l)].x),
                  0.5 * (pts[I(J::foot_r)].y + pts[I(J::foot_l)].y)};
  const double dir = pivot.x < 0.5 ? 1.0 : -1.0;
  const double theta = dir * u * (80.0 * std::numbers::pi / 180.0);
  const double c = std::cos(theta), sn = std::sin(theta);
  for (auto& p : pts) {
    const double dx = p.x - pivot.x, dy = p.y - pivot.y;
    p = {pivot.x + dx * c - dy * sn, pivot.y + dx * sn + dy * c};
  }
  const double breath = 0.002 * u * std::sin(kTwoPi * 0.3 * t);
  for (std::size_t j = 0; j <= I(J::pelvis_l); ++j) pts[j].x += breath * dir;
  return pts;
}

}  // namespace

Motion generate_motion(const MotionScript& script) {
  if (!(script.duration_s > 0.0)) throw ConfigError("motion duration must be positive");
  const std::size_t n = frame_count(script.duration_s);
  const std::size_t pre = is_fall(script.action) ? frame_count(script.pre_fall_s) : n;
  if (is_fall(script.action) && (pre == 0 || pre >= n)) {
    throw ConfigError(fmt::format("fall script needs 0 < lead-in {} s < duration {} s",
                                  script.pre_fall_s, script.duration_s));
  }
  const Subject subject = draw_subject(script.seed);
  auto lead_in = [&](double t) {
    switch (script.action) {
      case Action::stand:
        return stand_frame(subject, script.start_x, t);
      case Action::walk:
      case Action::fall_backward:
        return walk_frame(subject, script.start_x, t);
      default:
        return squat_frame(subject, script.start_x, t);
    }
  };

  Motion m;
  m.frames.resize(n);
  m.labels.resize(n);
  const double t_fall = static_cast<double>(pre) / kFrameRate;
  const Frame at_fall = lead_in(t_fall);
  const auto fall_base = to_image(at_fall, subject);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kFrameRate;
    std::array<Vec, kJoints> pts;
    if (i < pre) {
      pts = to_image(lead_in(t), subject);
      m.labels[i] = lead_in_label(script.action);
    } else {
      const double u = smoothstep((t - t_fall) / 1.2);
      pts = script.action == Action::fall_backward ? collapse(fall_base, at_fall.cx, u, t)
                                                   : topple(fall_base, u, t);
      m.labels[i] = 3;
    }
    Skeleton& s = m.frames[i];
    s.frame_index = i;
    for (std::size_t j = 0; j < kJoints; ++j) {
      const double x = std::clamp(pts[j].x, 0.0, 1.0), y = std::clamp(pts[j].y, 0.0, 1.0);
      s.keypoints[j] = {x, y, true, x != pts[j].x || y != pts[j].y};
    }
  }
  return m;
}

}  // namespace wifisense::synth
