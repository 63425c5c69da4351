// Copyright 2026 The levexp Authors
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

// The levexp command line, as a library so tests can drive it in-process.
//
//   levexp simulate <config> --axis z --t-r 260us
//   levexp scan     <config> --axis z --engine analytic
//   levexp fit      <curve.csv> --model inverted --config <config> --axis z
//   levexp coherence <fit.json> --heating-scale 1e-3
//
// Exit codes: 0 ok, 2 bad config / input / flags, 3 simulation failure,
// 4 fit failure. Output directory: --output-dir, else $LEVEXP_OUTPUT_DIR,
// else output_dir from the config, else the working directory.

#ifndef LEVEXP_CLI_HPP
#define LEVEXP_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace levexp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitSimulation = 3;
inline constexpr int kExitFit = 4;

/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace levexp::cli

#endif  // LEVEXP_CLI_HPP
