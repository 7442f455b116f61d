#pragma once

#include <stdexcept>
#include <string>

namespace metalake {

// Base for all recoverable engine errors. Callers that need to distinguish
// failure classes catch the derived type; everything else catches this.
class MetalakeError : public std::runtime_error {
public:
    explicit MetalakeError(const std::string& msg) : std::runtime_error(msg) {}
};

#define METALAKE_DEFINE_ERROR(Name)                                        \
    class Name : public MetalakeError {                                    \
    public:                                                                \
        explicit Name(const std::string& msg)                              \
            : MetalakeError(std::string(#Name) + ": " + msg) {}            \
    }

METALAKE_DEFINE_ERROR(UnreadableFile);
METALAKE_DEFINE_ERROR(CorruptCatalog);
METALAKE_DEFINE_ERROR(CorruptIndex);
METALAKE_DEFINE_ERROR(NotNumeric);
METALAKE_DEFINE_ERROR(UnknownTable);
METALAKE_DEFINE_ERROR(UnknownColumn);
METALAKE_DEFINE_ERROR(EmptyQuery);
METALAKE_DEFINE_ERROR(EmptyText);
METALAKE_DEFINE_ERROR(ProviderUnavailable);
METALAKE_DEFINE_ERROR(ScriptExhausted);
METALAKE_DEFINE_ERROR(DimensionMismatch);
METALAKE_DEFINE_ERROR(UnsupportedSQL);
METALAKE_DEFINE_ERROR(EmptyReference);
METALAKE_DEFINE_ERROR(UnknownLineage);
METALAKE_DEFINE_ERROR(MissingStage);
METALAKE_DEFINE_ERROR(NoActionFound);
METALAKE_DEFINE_ERROR(UnknownTool);
METALAKE_DEFINE_ERROR(BadArgs);
METALAKE_DEFINE_ERROR(PolicyParseFailure);

#undef METALAKE_DEFINE_ERROR

}  // namespace metalake
