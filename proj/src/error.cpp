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

#include "mmrag/error.hpp"

namespace mmrag {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::DuplicatePage: return "DuplicatePage";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DanglingChunk: return "DanglingChunk";
    case ErrorCode::UnknownUnit: return "UnknownUnit";
    case ErrorCode::MissingEmbedding: return "MissingEmbedding";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::UnresolvedReference: return "UnresolvedReference";
    case ErrorCode::UnknownPage: return "UnknownPage";
    case ErrorCode::UnknownQuery: return "UnknownQuery";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::MissingModality: return "MissingModality";
    case ErrorCode::Transport: return "Transport";
    case ErrorCode::AuthFailure: return "AuthFailure";
    case ErrorCode::ContextOverflow: return "ContextOverflow";
    case ErrorCode::BackendError: return "BackendError";
    case ErrorCode::ParseFailure: return "ParseFailure";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::AmbiguousVariant: return "AmbiguousVariant";
    case ErrorCode::TranscriptExhausted: return "TranscriptExhausted";
    case ErrorCode::MatcherMismatch: return "MatcherMismatch";
    case ErrorCode::EmptyRetrieval: return "EmptyRetrieval";
    case ErrorCode::EmptyGolden: return "EmptyGolden";
    case ErrorCode::JudgeFailure: return "JudgeFailure";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace mmrag
