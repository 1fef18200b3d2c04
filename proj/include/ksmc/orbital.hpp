/*
 * Copyright 2026 The ksmc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "ksmc/error.hpp"

namespace ksmc {

/// Keplerian two-body motion on an ellipse, in abstract length/time units.
///
/// The true anomaly v is the angle at the occupied focus measured from the
/// periapsis direction. All anomalies in this module are unwrapped (monotone
/// increasing over time); wrapping back into [0, 2*pi) is the job of the
/// automaton layer.

/// Absolute angle tolerance for "reached 2*pi" style comparisons.
/// Far below the boundary-location error of the run semantics, far above
/// accumulated integration error per revolution.
inline constexpr double kAngleEps = 1e-9;

/// Elliptic orbit geometry. `b` and `p` are derived from (a, e) at
/// construction and kept consistent by construction.
struct Orbit {
  double a = 0.0;  ///< semi-major axis, length units
  double e = 0.0;  ///< eccentricity, 0 <= e < 1
  double T = 0.0;  ///< revolution period, time units
  double b = 0.0;  ///< semi-minor axis, a*sqrt(1 - e^2)
  double p = 0.0;  ///< semi-latus rectum, b^2/a
};

/// Builds an orbit from semi-major axis, eccentricity and period.
/// Rejects open conics (e >= 1) and nonpositive a or T.
inline Orbit make_orbit(double a, double e, double T) {
  if (!(a > 0.0)) throw DomainError("orbit semi-major axis must be positive");
  if (!(T > 0.0)) throw DomainError("orbit period must be positive");
  if (!(e >= 0.0 && e < 1.0))
    throw DomainError("orbit eccentricity must satisfy 0 <= e < 1, got " +
                      std::to_string(e));
  Orbit o;
  o.a = a;
  o.e = e;
  o.T = T;
  o.b = a * std::sqrt(1.0 - e * e);
  o.p = o.b * o.b / a;
  return o;
}

/// Eccentricity from the two semi-axes: e = sqrt(a^2 - b^2)/a.
/// Inverse of b = a*sqrt(1 - e^2).
inline double eccentricity_from_axes(double a, double b) {
  if (!(b > 0.0)) throw DomainError("semi-minor axis must be positive");
  if (b > a) throw DomainError("semi-minor axis exceeds semi-major axis");
  return std::sqrt(a * a - b * b) / a;
}

/// First Kepler's law: r = p / (1 + e*cos v). Periodic in v with period
/// 2*pi; bounded by [a(1-e), a(1+e)].
inline double radius(const Orbit& o, double v) {
  return o.p / (1.0 + o.e * std::cos(v));
}

/// Second Kepler's law constant C = 2*pi*a*b/T, so that r^2 * dv/dt = C.
inline double areal_constant(const Orbit& o) {
  return 2.0 * std::numbers::pi * o.a * o.b / o.T;
}

/// True-anomaly rate dv/dt = (2*pi*a^3)/(T*b^3) * (1 + e*cos v)^2.
/// Strictly positive; maximal at periapsis (v = 0), minimal at apoapsis.
inline double anomaly_rate(const Orbit& o, double v) {
  const double c = 1.0 + o.e * std::cos(v);
  return 2.0 * std::numbers::pi * (o.a * o.a * o.a) / (o.T * o.b * o.b * o.b) *
         c * c;
}

/// Default integration step used throughout the artifact.
inline double default_step(const Orbit& o) { return o.T * 1e-4; }

/// Propagates the true anomaly forward by dt with classical fixed-step RK4
/// and a final partial step. Monotone nondecreasing in dt.
inline double propagate(const Orbit& o, double v0, double dt, double step) {
  if (dt < 0.0) throw DomainError("propagate requires dt >= 0");
  if (!(step > 0.0)) throw DomainError("propagate requires step > 0");
  double v = v0;
  double remaining = dt;
  while (remaining > 0.0) {
    const double h = remaining < step ? remaining : step;
    const double k1 = anomaly_rate(o, v);
    const double k2 = anomaly_rate(o, v + 0.5 * h * k1);
    const double k3 = anomaly_rate(o, v + 0.5 * h * k2);
    const double k4 = anomaly_rate(o, v + h * k3);
    v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    remaining -= h;
  }
  return v;
}

inline double propagate(const Orbit& o, double v0, double dt) {
  return propagate(o, v0, dt, default_step(o));
}

namespace detail {

/// Mean anomaly M(v) = E - e*sin E with the eccentric anomaly
/// E = 2*atan(sqrt((1-e)/(1+e)) * tan(v/2)), continued to unwrapped v by
/// adding 2*pi per completed revolution. Strictly increasing in v.
inline double mean_anomaly(const Orbit& o, double v) {
  const double two_pi = 2.0 * std::numbers::pi;
  const double k = std::floor((v + std::numbers::pi) / two_pi);
  const double vp = v - k * two_pi;  // principal value in [-pi, pi)
  const double E =
      2.0 * std::atan(std::sqrt((1.0 - o.e) / (1.0 + o.e)) * std::tan(vp / 2.0));
  return E - o.e * std::sin(E) + k * two_pi;
}

}  // namespace detail

/// Elapsed time along the orbit from anomaly v0 to v_target >= v0, exact to
/// floating precision via Kepler's equation. time_to_anomaly(v, v + 2*pi)
/// equals T for every v.
inline double time_to_anomaly(const Orbit& o, double v0, double v_target) {
  if (v_target < v0)
    throw DomainError("time_to_anomaly requires v_target >= v0");
  const double m0 = detail::mean_anomaly(o, v0);
  const double m1 = detail::mean_anomaly(o, v_target);
  return o.T / (2.0 * std::numbers::pi) * (m1 - m0);
}

}  // namespace ksmc
