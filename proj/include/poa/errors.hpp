// Copyright (C) 2026 The poa authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace poa {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Intermediate bases take the fully-formatted message from derived classes.
class FitError : public Error {
public:
    explicit FitError(const std::string& what_arg) : Error(what_arg) {}
};

class BackendError : public Error {
public:
    explicit BackendError(const std::string& what_arg) : Error(what_arg) {}
};

#define POA_DEFINE_LEAF(Name, Base)                 \
    class Name : public Base {                      \
    public:                                         \
        explicit Name(const std::string& what_arg)  \
            : Base(#Name ": " + what_arg) {}        \
    }

POA_DEFINE_LEAF(DuplicateIdentity, Error);
POA_DEFINE_LEAF(UnknownIdentity, Error);
POA_DEFINE_LEAF(ShapeMismatch, Error);
POA_DEFINE_LEAF(InvalidAlpha, Error);
POA_DEFINE_LEAF(InvalidParams, Error);
POA_DEFINE_LEAF(DomainError, Error);
POA_DEFINE_LEAF(SingularTransform, Error);
POA_DEFINE_LEAF(ZeroLatent, Error);
POA_DEFINE_LEAF(InconsistentReport, Error);
POA_DEFINE_LEAF(IllegalQuery, Error);
POA_DEFINE_LEAF(FormatError, Error);
POA_DEFINE_LEAF(UsageError, Error);

POA_DEFINE_LEAF(DegenerateSample, FitError);
POA_DEFINE_LEAF(NonConvergence, FitError);

POA_DEFINE_LEAF(TransportError, BackendError);
POA_DEFINE_LEAF(ProtocolVersionMismatch, BackendError);

#undef POA_DEFINE_LEAF

}  // namespace poa
