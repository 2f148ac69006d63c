// Copyright 2026 The Lightfield Authors
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

#ifndef LIGHTFIELD_ERROR_HPP
#define LIGHTFIELD_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace lightfield {

enum class ErrorCode {
  InvalidArgument,
  PolarLatitude,
  OutOfFrame,
  DegeneratePolygon,
  NegativeDistance,
  NonPositiveScale,
  UnknownProfile,
  TooFewSamples,
  SingularSystem,
  NoSources,
  GridTooLarge,
  EmptyTarget,
  Infeasible,
  LinAlgFailure,
  UnknownSource,
  MalformedHeader,
  EmptyFile,
  NotAFeatureCollection,
  StaleRevision,
  CorruptDocument,
  NotFound,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::PolarLatitude: return "PolarLatitude";
    case ErrorCode::OutOfFrame: return "OutOfFrame";
    case ErrorCode::DegeneratePolygon: return "DegeneratePolygon";
    case ErrorCode::NegativeDistance: return "NegativeDistance";
    case ErrorCode::NonPositiveScale: return "NonPositiveScale";
    case ErrorCode::UnknownProfile: return "UnknownProfile";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NoSources: return "NoSources";
    case ErrorCode::GridTooLarge: return "GridTooLarge";
    case ErrorCode::EmptyTarget: return "EmptyTarget";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::LinAlgFailure: return "LinAlgFailure";
    case ErrorCode::UnknownSource: return "UnknownSource";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::NotAFeatureCollection: return "NotAFeatureCollection";
    case ErrorCode::StaleRevision: return "StaleRevision";
    case ErrorCode::CorruptDocument: return "CorruptDocument";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (CLI exit codes, HTTP status mapping) can dispatch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lightfield

#endif  // LIGHTFIELD_ERROR_HPP
