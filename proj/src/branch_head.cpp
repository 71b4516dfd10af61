/*
 * Copyright 2026 The artscore Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "artscore/branch_head.hpp"

namespace artscore {

int eca_kernel_size(int channels, const EcaConfig& config) {
  if (config.kernel_override) {
    const int k = *config.kernel_override;
    if (k < 1 || k % 2 == 0) throw ConfigError("ECA kernel override must be an odd positive integer");
    return k;
  }
  if (channels < 1) throw DomainError("channel count must be positive");
  if (config.gamma < 1) throw ConfigError("ECA gamma must be >= 1");

  const double t = std::log2(static_cast<double>(channels)) / config.gamma +
                   static_cast<double>(config.b) / config.gamma;
  // Tolerance so exact odd values (e.g. 5.0 for C = 512) are not bumped.
  constexpr double kEps = 1e-9;
  int k = 1;
  if (config.rounding == OddRounding::kCeilOdd) {
    k = static_cast<int>(std::ceil(t - kEps));
    if (k % 2 == 0) ++k;
  } else {
    const int below = 2 * static_cast<int>(std::floor((t - 1.0) / 2.0 + kEps)) + 1;
    const int above = below + 2;
    k = (t - below < above - t) ? below : above;
  }
  return std::max(k, 1);
}

}  // namespace artscore
