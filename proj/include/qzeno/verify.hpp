// Copyright 2026 The qzeno Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qzeno {

struct VerifyResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Quick agreement checks between the integrators and the brute-force
// oracles. Runs in a few seconds; used by the `verify` subcommand.
std::vector<VerifyResult> run_verification_suite(std::uint64_t seed = 20260101);

}  // namespace qzeno
