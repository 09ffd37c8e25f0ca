#pragma once

// Strict field readers for JSON configs. Every failure is a ValidationError
// that names the field path.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "timetrail/domain.hpp"
#include "timetrail/error.hpp"

namespace timetrail::detail {

[[noreturn]] inline void bad_field(std::string_view path, std::string_view why) {
    throw ValidationError(fmt::format("invalid config field '{}': {}", path, why));
}

inline void require_object(const nlohmann::json& j, std::string_view path) {
    if (!j.is_object()) bad_field(path, "expected an object");
}

inline void reject_unknown(const nlohmann::json& j, std::string_view path,
                           std::initializer_list<std::string_view> known) {
    require_object(j, path);
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (auto k : known) ok = ok || key == k;
        if (!ok) bad_field(path.empty() ? key : fmt::format("{}.{}", path, key), "unknown field");
    }
}

inline std::string join_path(std::string_view path, std::string_view key) {
    return path.empty() ? std::string(key) : fmt::format("{}.{}", path, key);
}

inline std::uint64_t read_u64(const nlohmann::json& v, std::string_view path) {
    if (!v.is_number_unsigned()) bad_field(path, "expected a non-negative integer");
    return v.get<std::uint64_t>();
}

inline std::int64_t read_i64(const nlohmann::json& v, std::string_view path) {
    if (!v.is_number_integer()) bad_field(path, "expected an integer");
    return v.get<std::int64_t>();
}

inline double read_double(const nlohmann::json& v, std::string_view path) {
    if (!v.is_number()) bad_field(path, "expected a number");
    return v.get<double>();
}

inline bool read_bool(const nlohmann::json& v, std::string_view path) {
    if (!v.is_boolean()) bad_field(path, "expected true or false");
    return v.get<bool>();
}

inline std::string read_string(const nlohmann::json& v, std::string_view path) {
    if (!v.is_string()) bad_field(path, "expected a string");
    return v.get<std::string>();
}

// Epoch seconds or an ISO-8601 string.
inline Timestamp read_time(const nlohmann::json& v, std::string_view path) {
    if (v.is_number_integer()) return v.get<Timestamp>();
    if (v.is_string()) {
        try {
            return parse_timestamp(v.get<std::string>());
        } catch (const ValidationError& e) {
            bad_field(path, e.what());
        }
    }
    bad_field(path, "expected epoch seconds or an ISO-8601 string");
}

// Assigns `out` only when `key` is present.
template <typename T, typename Reader>
void optional_field(const nlohmann::json& j, std::string_view path, std::string_view key, T& out, Reader read) {
    auto it = j.find(std::string(key));
    if (it != j.end()) out = static_cast<T>(read(*it, join_path(path, key)));
}

}  // namespace timetrail::detail
