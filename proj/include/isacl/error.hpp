// Copyright 2026 The ISACL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ISACL_ERROR_HPP_
#define ISACL_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace isacl {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller passed a value outside the documented domain (bad p, nprobe, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Input data is malformed or inconsistent: bad magic, truncation, NaN
// payloads, id mismatches, dimension mismatches.
class DataError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public DataError {
 public:
  using DataError::DataError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace isacl

#endif  // ISACL_ERROR_HPP_
