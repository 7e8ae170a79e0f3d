// Copyright 2026 The omnieval Authors.
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

#ifndef OMNIEVAL_ERRORS_HPP_
#define OMNIEVAL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace omnieval {

// Root of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dataset ingestion.
class ParseError : public Error {
 public:
  using Error::Error;
};

// `record` identifies the offending record (id and index), `field` names the
// offending key; what() carries both plus the detail.
class SchemaError : public Error {
 public:
  SchemaError(std::string record, std::string field, const std::string& detail)
      : Error("record " + record + ": " + detail),
        record_(std::move(record)),
        field_(std::move(field)) {}

  const std::string& record() const { return record_; }
  const std::string& field() const { return field_; }

 private:
  std::string record_;
  std::string field_;
};

class EmptyDataset : public Error {
 public:
  using Error::Error;
};

// Prompt rendering.
class EmptyChoices : public Error {
 public:
  EmptyChoices() : Error("choice list is empty") {}
};

class ChoiceOverflow : public Error {
 public:
  explicit ChoiceOverflow(std::size_t n)
      : Error("too many choices: " + std::to_string(n) + " (max 26)") {}
};

// Backends. TransportError and RateLimited are retryable.
class TransportError : public Error {
 public:
  using Error::Error;
};

class RateLimited : public Error {
 public:
  explicit RateLimited(double retry_after_s)
      : Error("rate limited (retry after " + std::to_string(retry_after_s) +
              "s)"),
        retry_after_s_(retry_after_s) {}

  double retry_after_s() const { return retry_after_s_; }

 private:
  double retry_after_s_;
};

class BackendRefused : public Error {
 public:
  BackendRefused(int status, const std::string& body)
      : Error("backend refused request with status " + std::to_string(status) +
              (body.empty() ? "" : ": " + body)),
        status_(status) {}

  int status() const { return status_; }

 private:
  int status_;
};

class MalformedReply : public Error {
 public:
  using Error::Error;
};

// An image attachment could not be read at send time.
class AttachmentError : public Error {
 public:
  using Error::Error;
};

class UnsupportedCapability : public Error {
 public:
  using Error::Error;
};

// Caller broke an operation precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Estimators and reports.
class EmptyReferences : public Error {
 public:
  EmptyReferences() : Error("reference list is empty") {}
};

class EmptyRun : public Error {
 public:
  EmptyRun() : Error("no records to aggregate") {}
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace omnieval

#endif  // OMNIEVAL_ERRORS_HPP_
