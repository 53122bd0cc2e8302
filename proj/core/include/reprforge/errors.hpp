// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace reprforge {

/// Base class for all reprforge errors.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// --- tensor / autodiff ---
struct ShapeMismatch : Error { using Error::Error; };
struct NotScalar : Error { using Error::Error; };
struct DetachedRoot : Error { using Error::Error; };
struct IndexOutOfRange : Error { using Error::Error; };

// --- losses ---
struct LabelOutOfRange : Error { using Error::Error; };
struct DegenerateBatch : Error { using Error::Error; };
struct CosineOutOfRange : Error { using Error::Error; };
struct NonPositiveNorm : Error { using Error::Error; };

// --- optimizers / schedule ---
struct MissingGrad : Error { using Error::Error; };
struct EpochOutOfRange : Error { using Error::Error; };

// --- metrics ---
struct KOutOfRange : Error { using Error::Error; };
struct EmptyGallery : Error { using Error::Error; };
struct SingleClass : Error { using Error::Error; };

// --- config / checkpoint / trainer ---
struct ParseError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };
struct CorruptTensor : Error { using Error::Error; };
struct EmptySplit : Error { using Error::Error; };
struct NumericalDivergence : Error { using Error::Error; };

// --- explain ---
struct WrongEncoderKind : Error { using Error::Error; };
struct ClassOutOfRange : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

} // namespace reprforge
