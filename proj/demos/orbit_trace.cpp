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

// Prints one revolution of a Keplerian orbit as CSV: time, true anomaly,
// radius. Usage: orbit_trace [a e T]

#include <cstdio>
#include <cstdlib>

#include "ksmc/orbital.hpp"

int main(int argc, char** argv) {
  double a = 10.0, e = 0.2, T = 1.0;
  if (argc == 4) {
    a = std::atof(argv[1]);
    e = std::atof(argv[2]);
    T = std::atof(argv[3]);
  }
  const ksmc::Orbit orbit = ksmc::make_orbit(a, e, T);
  std::printf("t,anomaly,radius\n");
  const int samples = 200;
  for (int i = 0; i <= samples; ++i) {
    const double t = orbit.T * i / samples;
    const double v = ksmc::propagate(orbit, 0.0, t);
    std::printf("%.9g,%.9g,%.9g\n", t, v, ksmc::radius(orbit, v));
  }
  return 0;
}
