#pragma once

#include <stdexcept>
#include <string>

namespace scanvol {

// Error codes are short stable strings; the CLI prints them as a
// machine-parsable prefix and maps them to exit codes.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

namespace errc {
inline constexpr const char* config = "config";
inline constexpr const char* parse = "parse";
inline constexpr const char* io = "io";
inline constexpr const char* invalid_depth = "invalid_depth";
inline constexpr const char* empty_cloud = "empty_cloud";
inline constexpr const char* arity = "arity";
inline constexpr const char* rank_deficient = "rank_deficient";
inline constexpr const char* alignment_failure = "alignment_failure";
inline constexpr const char* icp_diverged = "icp_diverged";
inline constexpr const char* out_of_domain = "out_of_domain";
inline constexpr const char* no_convergence = "no_convergence";
inline constexpr const char* empty_mesh = "empty_mesh";
inline constexpr const char* no_plane = "no_plane";
inline constexpr const char* unreliable = "unreliable";
}  // namespace errc

}  // namespace scanvol
