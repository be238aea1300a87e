// Copyright 2026 The Drivescene Authors.
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

#include <stdexcept>
#include <string>

namespace drivescene {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Errors that point at a location inside a document.
class PathError : public Error {
 public:
  PathError(const std::string& kind, std::string path, const std::string& message)
      : Error(kind + " at " + path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class SchemaError : public PathError {
 public:
  SchemaError(std::string path, const std::string& message)
      : PathError("schema error", std::move(path), message) {}
};

class InvariantError : public PathError {
 public:
  InvariantError(std::string path, const std::string& message)
      : PathError("invariant violated", std::move(path), message) {}
};

class AlreadyCalibrated : public Error {
 public:
  explicit AlreadyCalibrated(const std::string& scene_id)
      : Error("scene already calibrated: " + scene_id) {}
};

class MissingImage : public Error {
 public:
  explicit MissingImage(std::string ref)
      : Error("missing image: " + ref), ref_(std::move(ref)) {}
  const std::string& ref() const { return ref_; }

 private:
  std::string ref_;
};

class ClientError : public Error {
 public:
  using Error::Error;
};

class InvalidCategory : public Error {
 public:
  using Error::Error;
};

class MissingTrack : public Error {
 public:
  using Error::Error;
};

class ZeroDt : public Error {
 public:
  using Error::Error;
};

class PairingError : public Error {
 public:
  using Error::Error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

class DuplicateVerdict : public Error {
 public:
  using Error::Error;
};

class DuplicateAnswer : public Error {
 public:
  using Error::Error;
};

class BadFilter : public Error {
 public:
  using Error::Error;
};

// A generator found no candidate satisfying one of its constraints.
class NoEligibleCandidates : public Error {
 public:
  explicit NoEligibleCandidates(std::string constraint)
      : Error("no eligible candidates: " + constraint), constraint_(std::move(constraint)) {}
  const std::string& constraint() const { return constraint_; }

 private:
  std::string constraint_;
};

// One or more input files failed validation; the message lists each problem
// as "file: path: message".
class ValidationFailed : public Error {
 public:
  using Error::Error;
};

class AnswerTypeError : public Error {
 public:
  using Error::Error;
};

}  // namespace drivescene
