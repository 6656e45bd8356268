// Copyright 2026 The EGLR Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end. run_cli never calls exit(); it returns the process
// exit code so tests can drive it in-process.

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace eglr::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,        // anything not covered below
  kExitUsage = 2,          // bad command line
  kExitMissingFile = 3,    // an input path does not exist
  kExitInvalidConfig = 4,  // config fails to parse or validate (including K > M)
  kExitCheckpoint = 5,     // unreadable, incompatible or wrong-version checkpoint
  kExitBadData = 6,        // malformed JSONL or ids outside the world
};

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace eglr::cli
