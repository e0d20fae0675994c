// error.hpp
// Exception types with stable machine-parseable codes.

#pragma once

#include <stdexcept>
#include <string>

namespace cemb {

class error : public std::runtime_error {
public:
    error(std::string code, const std::string& msg)
        : std::runtime_error(msg), code_(std::move(code)) {}

    // Short stable identifier, e.g. "E_SHAPE". CLI prints it on stderr.
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

struct shape_error : error {
    explicit shape_error(const std::string& msg) : error("E_SHAPE", msg) {}
};

struct param_error : error {
    explicit param_error(const std::string& msg) : error("E_PARAM", msg) {}
};

struct index_error : error {
    explicit index_error(const std::string& msg) : error("E_INDEX", msg) {}
};

struct config_error : error {
    explicit config_error(const std::string& msg) : error("E_CONFIG", msg) {}
};

struct io_error : error {
    explicit io_error(const std::string& msg) : error("E_IO", msg) {}
};

struct integrity_error : error {
    explicit integrity_error(const std::string& msg) : error("E_INTEGRITY", msg) {}
};

struct version_error : error {
    explicit version_error(const std::string& msg) : error("E_VERSION", msg) {}
};

struct metric_error : error {
    explicit metric_error(const std::string& msg) : error("E_METRIC", msg) {}
};

struct divergence_error : error {
    explicit divergence_error(const std::string& msg) : error("E_DIVERGE", msg) {}
};

} // namespace cemb
