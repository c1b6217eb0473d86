#pragma once

#include <stdexcept>
#include <string>

namespace spicula {

// Base of every error raised by the library. kind() is the stable,
// machine-readable name used in CLI error records.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
    virtual const char* kind() const noexcept { return "Error"; }
};

#define SPICULA_DEFINE_ERROR(Name)                                        \
    class Name : public Error {                                           \
    public:                                                               \
        explicit Name(const std::string& what) : Error(what) {}           \
        const char* kind() const noexcept override { return #Name; }      \
    }

SPICULA_DEFINE_ERROR(ParseError);
SPICULA_DEFINE_ERROR(TopologyError);
SPICULA_DEFINE_ERROR(DegenerateError);
SPICULA_DEFINE_ERROR(ConvergenceError);
SPICULA_DEFINE_ERROR(SplitError);
SPICULA_DEFINE_ERROR(ParamError);
SPICULA_DEFINE_ERROR(EmptyMaskError);
SPICULA_DEFINE_ERROR(OverlapError);

#undef SPICULA_DEFINE_ERROR

} // namespace spicula
