/*
 * Copyright 2026 The scs2s Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#ifndef SCS2S_CLI_HPP
#define SCS2S_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace scs2s {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumeric = 3 };

/// The whole command line: `args` excludes the program name. `envp` may be
/// null. Nothing is written to the process streams directly.
int run_cli(const std::vector<std::string>& args, char** envp, std::istream& in,
            std::ostream& out, std::ostream& err);

}  // namespace scs2s

#endif  // SCS2S_CLI_HPP
