// Copyright 2026 The nbhd Authors. All Rights Reserved.
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

#ifndef NBHD_ERRORS_H_
#define NBHD_ERRORS_H_

#include <stdexcept>
#include <string>
#include <vector>

namespace nbhd {

// Base of every error raised by the library. Each subclass corresponds to one
// failure mode of one operation so callers can catch precisely.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define NBHD_DEFINE_ERROR(Name)            \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

// Geometry.
NBHD_DEFINE_ERROR(DegeneratePolyline);
NBHD_DEFINE_ERROR(InvalidGeometry);

// I/O and decoding.
NBHD_DEFINE_ERROR(IoError);
NBHD_DEFINE_ERROR(DecodeError);
NBHD_DEFINE_ERROR(ParseError);
NBHD_DEFINE_ERROR(EmptyPolygon);

// Network.
class HttpError : public Error {
 public:
  HttpError(int status, const std::string& what)
      : Error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};
NBHD_DEFINE_ERROR(QuotaExceeded);
NBHD_DEFINE_ERROR(Timeout);
NBHD_DEFINE_ERROR(MalformedResponse);

// Prompts and answers.
NBHD_DEFINE_ERROR(MissingTemplate);
NBHD_DEFINE_ERROR(EmptyResponse);
class CountMismatch : public Error {
 public:
  explicit CountMismatch(int found)
      : Error("expected 6 answers, found " + std::to_string(found)),
        found_(found) {}
  int found() const { return found_; }

 private:
  int found_;
};
class AmbiguousToken : public Error {
 public:
  explicit AmbiguousToken(std::string token)
      : Error("ambiguous answer token: '" + token + "'"),
        token_(std::move(token)) {}
  const std::string& token() const { return token_; }

 private:
  std::string token_;
};

// Voting.
NBHD_DEFINE_ERROR(InsufficientVoters);
NBHD_DEFINE_ERROR(MixedImages);

// Metrics.
class ImageSetMismatch : public Error {
 public:
  explicit ImageSetMismatch(std::vector<std::string> difference);
  const std::vector<std::string>& difference() const { return difference_; }

 private:
  std::vector<std::string> difference_;
};
NBHD_DEFINE_ERROR(EmptySet);
NBHD_DEFINE_ERROR(AllUndefined);

// Image transforms.
NBHD_DEFINE_ERROR(InvalidAngle);
NBHD_DEFINE_ERROR(DegenerateBox);

// Orchestration.
NBHD_DEFINE_ERROR(ConfigError);
NBHD_DEFINE_ERROR(PartialFailure);

#undef NBHD_DEFINE_ERROR

}  // namespace nbhd

#endif  // NBHD_ERRORS_H_
