#pragma once

#include <stdexcept>
#include <string>

namespace deid {

struct DeidError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// corpus
struct MalformedXml : DeidError {
    using DeidError::DeidError;
};
struct OffsetMismatch : DeidError {
    using DeidError::DeidError;
};
struct IoError : DeidError {
    using DeidError::DeidError;
};
struct EmptyCorpus : DeidError {
    using DeidError::DeidError;
};
struct InvalidSpec : DeidError {
    using DeidError::DeidError;
};

// hipaa mapping
struct InvalidThreshold : DeidError {
    using DeidError::DeidError;
};

// prompting
struct EmptyMapping : DeidError {
    using DeidError::DeidError;
};

// redaction
struct OverlappingSpans : DeidError {
    using DeidError::DeidError;
};
struct SpanOutOfRange : DeidError {
    using DeidError::DeidError;
};
struct EmptyCompletion : DeidError {
    using DeidError::DeidError;
};

// llm client
struct AuthError : DeidError {
    using DeidError::DeidError;
};
struct ProtocolError : DeidError {
    using DeidError::DeidError;
};
struct TransportError : DeidError {
    TransportError(const std::string& what, int attempts_made)
        : DeidError(what), attempts(attempts_made) {}
    int attempts = 0;
};
struct EmptyPrompt : DeidError {
    using DeidError::DeidError;
};
struct EmptyNote : DeidError {
    using DeidError::DeidError;
};

// evaluation
struct EmptyCounts : DeidError {
    using DeidError::DeidError;
};
struct InvalidGold : DeidError {
    using DeidError::DeidError;
};

}  // namespace deid
