// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace molgen {

// Base class for everything this library throws on bad data or bad usage.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define MOLGEN_DEFINE_ERROR(NAME)                              \
  struct NAME : Error {                                        \
    explicit NAME(const std::string& msg) : Error(msg) {}      \
  }

// SMILES / tokenization
MOLGEN_DEFINE_ERROR(UnknownCharacter);
MOLGEN_DEFINE_ERROR(TooLong);
MOLGEN_DEFINE_ERROR(MalformedSequence);
MOLGEN_DEFINE_ERROR(SyntaxError);
MOLGEN_DEFINE_ERROR(UnclosedRing);
MOLGEN_DEFINE_ERROR(BadBracketAtom);

// fingerprints
MOLGEN_DEFINE_ERROR(EmptyGraph);
MOLGEN_DEFINE_ERROR(WidthMismatch);

// properties
MOLGEN_DEFINE_ERROR(ParseError);
MOLGEN_DEFINE_ERROR(RangeError);
MOLGEN_DEFINE_ERROR(UnfittedScaler);
MOLGEN_DEFINE_ERROR(MissingProperties);

// tensor engine
MOLGEN_DEFINE_ERROR(ShapeMismatch);
MOLGEN_DEFINE_ERROR(NonScalarLoss);
MOLGEN_DEFINE_ERROR(NumericError);

// networks / training
MOLGEN_DEFINE_ERROR(EmptySequence);
MOLGEN_DEFINE_ERROR(EmptyCorpus);
MOLGEN_DEFINE_ERROR(DegenerateLabels);
MOLGEN_DEFINE_ERROR(VocabMismatch);
MOLGEN_DEFINE_ERROR(ConfigMismatch);

// decoding
MOLGEN_DEFINE_ERROR(NoCompleteCandidate);
MOLGEN_DEFINE_ERROR(EmptyCandidates);

// data pipeline
MOLGEN_DEFINE_ERROR(InsufficientNegatives);
MOLGEN_DEFINE_ERROR(TooFewRows);

// file formats
MOLGEN_DEFINE_ERROR(IoError);
MOLGEN_DEFINE_ERROR(FormatError);

#undef MOLGEN_DEFINE_ERROR

}  // namespace molgen
