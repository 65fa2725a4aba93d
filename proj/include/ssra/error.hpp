// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 SSRA Contributors

#pragma once

#include <stdexcept>
#include <string>

namespace ssra {

// Error categories map 1:1 onto CLI exit codes (see tools/ssra_main.cpp).
enum class ErrorKind {
    config,     // bad configuration / bad CLI usage         -> exit 2
    io,         // unreadable/unwritable files, malformed input -> exit 3
    parse,      // malformed record or report content         -> exit 3
    precondition, // operation called outside its contract    -> exit 3
    stage,      // stage-internal failure                     -> exit 3
    digest,     // manifest digest mismatch / staleness       -> exit 4
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace ssra
