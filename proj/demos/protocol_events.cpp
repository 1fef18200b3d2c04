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

// Builds the two-spacecraft scenario programmatically, runs it once and
// prints the protocol's event log with the locations after each event.

#include <cstdio>

#include "ksmc/cfl.hpp"
#include "ksmc/smc.hpp"

int main() {
  using namespace ksmc;
  const Network net = stochastic_cfl(default_scenario());

  std::printf("%-10s %-28s %s\n", "time", "event", "locations");
  const RunObserver log = [&](double t, const HybridState& s,
                              const std::string& event) {
    if (event.empty()) return;
    std::string locs;
    for (std::size_t i = 0; i < net.instances.size(); ++i) {
      if (i) locs += ' ';
      locs += net.instances[i].name + "@" +
              net.instances[i].locs[static_cast<std::size_t>(s.loc[i])].name;
    }
    std::printf("%-10.6f %-28s %s\n", t, event.c_str(), locs.c_str());
  };

  RunConfig cfg;
  cfg.bound = 2.5;
  cfg.seed = 1;
  simulate_run(net, nullptr, cfg, 0, log);
  return 0;
}
