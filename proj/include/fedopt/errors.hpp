// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace fedopt {

// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid or inconsistent configuration (bad field, missing key, S > N, ...).
// The CLI maps this to exit code 2.
struct ConfigError : Error {
    using Error::Error;
};

// Mathematical domain violation (vacuous bound, unstable dynamics, singular
// system). The CLI maps this to exit code 3.
struct DomainError : Error {
    using Error::Error;
};

// Non-finite value where a finite one is required.
struct NumericError : Error {
    using Error::Error;
};

// A block partition that does not form a disjoint cover of [0, d).
struct InvalidPartitionError : Error {
    using Error::Error;
};

// Server received an inconsistent set of client updates.
struct ProtocolError : Error {
    using Error::Error;
};

// A client produced a non-finite loss/gradient/iterate mid-round.
struct DivergedError : Error {
    int round;
    int client;
    int step;
    DivergedError(const std::string& msg, int round_, int client_, int step_)
        : Error(msg + " (round " + std::to_string(round_) + ", client " +
                std::to_string(client_) + ", step " + std::to_string(step_) + ")"),
          round(round_), client(client_), step(step_) {}
};

}  // namespace fedopt
