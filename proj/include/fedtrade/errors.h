// Copyright 2026 The Fedtrade Authors
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

#ifndef FEDTRADE_ERRORS_H_
#define FEDTRADE_ERRORS_H_

#include <stdexcept>
#include <string>

namespace fedtrade {

// Raised when caller-supplied functions or parameters break an assumption the
// algorithm relies on (monotonicity, positivity, ...). Maps to CLI exit code 3
// together with std::domain_error.
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// Malformed or inconsistent experiment configuration. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fedtrade

#endif  // FEDTRADE_ERRORS_H_
