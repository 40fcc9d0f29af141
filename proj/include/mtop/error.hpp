// Copyright 2026 The mtop Authors
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

#ifndef MTOP_ERROR_HPP_
#define MTOP_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace mtop {

// Error classes map one-to-one onto the status codes of the C API.
enum class ErrorKind {
  kUsage,
  kConfig,
  kIo,
  kNumeric,
  kRefinement,
  kContract,
  kDimension,
  kDomain,
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

#define MTOP_DEFINE_ERROR(Name, Kind)                                   \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

MTOP_DEFINE_ERROR(UsageError, kUsage)
MTOP_DEFINE_ERROR(ConfigError, kConfig)
MTOP_DEFINE_ERROR(IoError, kIo)
MTOP_DEFINE_ERROR(NumericError, kNumeric)
MTOP_DEFINE_ERROR(RefinementError, kRefinement)
MTOP_DEFINE_ERROR(ContractError, kContract)
MTOP_DEFINE_ERROR(DimensionError, kDimension)
MTOP_DEFINE_ERROR(DomainError, kDomain)

#undef MTOP_DEFINE_ERROR

}  // namespace mtop

#endif  // MTOP_ERROR_HPP_
