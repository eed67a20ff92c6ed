#pragma once

// Strict TOML readers shared by the environment and run-config loaders.

#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <toml.hpp>

#include "stray/environment.hpp"
#include "stray/errors.hpp"

namespace stray::detail {

toml::table parse_toml(std::string_view text);

std::string join_path(std::string_view table, std::string_view key);

/// Throws ValidationError naming the first key of `t` not listed in `allowed`.
void reject_unknown_keys(const toml::table& t, std::string_view path,
                         std::initializer_list<std::string_view> allowed);

const toml::table& require_table(const toml::table& doc, std::string_view name);
const toml::table* find_table(const toml::table& doc, std::string_view name);

std::optional<double> opt_double(const toml::table& t, std::string_view path, std::string_view key);
double get_double(const toml::table& t, std::string_view path, std::string_view key);
double get_double(const toml::table& t, std::string_view path, std::string_view key, double fallback);
std::optional<std::int64_t> opt_int(const toml::table& t, std::string_view path, std::string_view key);
std::optional<std::string> opt_string(const toml::table& t, std::string_view path, std::string_view key);
std::optional<bool> opt_bool(const toml::table& t, std::string_view path, std::string_view key);
std::optional<std::vector<double>> opt_doubles(const toml::table& t, std::string_view path,
                                               std::string_view key);
std::optional<std::vector<std::vector<double>>> opt_double_rows(const toml::table& t,
                                                                std::string_view path,
                                                                std::string_view key);

/// Environment from the [units], [medium] and [bathymetry] tables of `doc`.
Environment environment_from_table(const toml::table& doc);

}  // namespace stray::detail
