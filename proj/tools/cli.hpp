// Copyright 2026 The resistive-pricing Authors
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


#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace rp::cli {

std::string_view version();

// Runs one command line (args[0] is the program name) and returns the exit
// code: 0 success, 2 usage or validation error, 3 solver NoConvergence,
// 1 any other failure. Results go to the files named on the command line;
// summaries go to `out` and diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Re-executes the argv recorded in a run manifest after checking that every
// input file still has its recorded SHA-256. Throws Errc::kMalformedInput on
// a hash mismatch or an unreadable manifest.
int replay(const std::string& manifest_path, std::ostream& out, std::ostream& err);

std::string sha256_hex(std::string_view data);

}  // namespace rp::cli
