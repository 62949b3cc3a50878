// Copyright 2026 The mmrag Authors.
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
#include <string_view>

namespace mmrag {

enum class ErrorCode {
  // corpus
  MissingFile,
  DuplicatePage,
  DimensionMismatch,
  DanglingChunk,
  UnknownUnit,
  MissingEmbedding,
  SchemaError,
  UnresolvedReference,
  UnknownPage,
  UnknownQuery,
  // similarity / recall
  ZeroVector,
  LengthMismatch,
  EmptyCorpus,
  DegenerateInput,
  NonFinite,
  MissingModality,
  // gateway
  Transport,
  AuthFailure,
  ContextOverflow,
  BackendError,
  ParseFailure,
  SchemaViolation,
  AmbiguousVariant,
  TranscriptExhausted,
  MatcherMismatch,
  // workflow / eval
  EmptyRetrieval,
  EmptyGolden,
  JudgeFailure,
  // plumbing
  InvalidArgument,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this exception; the code is stable and is
// what callers (CLI exit status, HTTP status mapping, tests) dispatch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mmrag
