// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 KGSR Contributors
#pragma once

#include <stdexcept>
#include <string>

namespace kgsr {

// Every failure raised by the library derives from Error so callers (the CLI in
// particular) can map the whole family to a single exit path.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define KGSR_DEFINE_ERROR(Name)                 \
    class Name : public Error {                 \
    public:                                     \
        using Error::Error;                     \
    }

KGSR_DEFINE_ERROR(ArgumentError);
KGSR_DEFINE_ERROR(ParseError);
KGSR_DEFINE_ERROR(ConsistencyError);
KGSR_DEFINE_ERROR(NotFoundError);
KGSR_DEFINE_ERROR(ReferenceError);
KGSR_DEFINE_ERROR(KindError);
KGSR_DEFINE_ERROR(InjectionError);
KGSR_DEFINE_ERROR(ClientError);
KGSR_DEFINE_ERROR(NumericError);
KGSR_DEFINE_ERROR(FormatError);
KGSR_DEFINE_ERROR(VersionError);
KGSR_DEFINE_ERROR(CorruptionError);
KGSR_DEFINE_ERROR(IoError);

#undef KGSR_DEFINE_ERROR

}  // namespace kgsr
