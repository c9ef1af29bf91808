//
// Copyright 2026 The mistlab Authors.
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
//

#ifndef MISTLAB_ERROR_H_
#define MISTLAB_ERROR_H_

#include <stdexcept>
#include <string>

namespace mistlab {

// Coarse error category. The CLI maps these onto process exit codes.
enum class ErrorKind {
  kConfig,   // bad configuration or precondition on arguments
  kData,     // malformed or inconsistent input data
  kNumeric,  // non-finite values or shape mismatches found at runtime
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error ConfigError(const std::string& message) {
  return Error(ErrorKind::kConfig, message);
}
inline Error DataError(const std::string& message) {
  return Error(ErrorKind::kData, message);
}
inline Error NumericError(const std::string& message) {
  return Error(ErrorKind::kNumeric, message);
}

// 0 success, 2 config error, 3 data error, 4 runtime numeric error.
inline int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
      return 2;
    case ErrorKind::kData:
      return 3;
    case ErrorKind::kNumeric:
      return 4;
  }
  return 1;
}

}  // namespace mistlab

#endif  // MISTLAB_ERROR_H_
