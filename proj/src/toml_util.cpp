#include "toml_util.hpp"

#include <algorithm>

namespace stray::detail {

toml::table parse_toml(std::string_view text) {
  try {
    return toml::parse(text);
  } catch (const toml::parse_error& e) {
    const auto& src = e.source();
    throw Error(ErrorKind::Parse, std::string(e.description()) + " at line " + std::to_string(src.begin.line) +
                                      ", column " + std::to_string(src.begin.column));
  }
}

std::string join_path(std::string_view table, std::string_view key) {
  if (table.empty()) return std::string(key);
  return std::string(table) + "." + std::string(key);
}

void reject_unknown_keys(const toml::table& t, std::string_view path,
                         std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, node] : t) {
    const std::string_view k = key.str();
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      throw Error(ErrorKind::Validation, "unknown key '" + join_path(path, k) + "'", join_path(path, k));
  }
}

const toml::table* find_table(const toml::table& doc, std::string_view name) {
  const toml::node* n = doc.get(name);
  if (!n) return nullptr;
  const toml::table* t = n->as_table();
  if (!t) throw Error(ErrorKind::Validation, "'" + std::string(name) + "' must be a table", std::string(name));
  return t;
}

const toml::table& require_table(const toml::table& doc, std::string_view name) {
  const toml::table* t = find_table(doc, name);
  if (!t) throw Error(ErrorKind::Validation, "missing table [" + std::string(name) + "]", std::string(name));
  return *t;
}

namespace {

double as_number(const toml::node& n, const std::string& field) {
  if (auto d = n.value<double>()) return *d;  // integers convert too
  throw Error(ErrorKind::Validation, "'" + field + "' must be a number", field);
}

}  // namespace

std::optional<double> opt_double(const toml::table& t, std::string_view path, std::string_view key) {
  const toml::node* n = t.get(key);
  if (!n) return std::nullopt;
  if (!n->is_number()) throw Error(ErrorKind::Validation, "'" + join_path(path, key) + "' must be a number", join_path(path, key));
  return as_number(*n, join_path(path, key));
}

double get_double(const toml::table& t, std::string_view path, std::string_view key) {
  auto v = opt_double(t, path, key);
  if (!v) throw Error(ErrorKind::Validation, "missing '" + join_path(path, key) + "'", join_path(path, key));
  return *v;
}

double get_double(const toml::table& t, std::string_view path, std::string_view key, double fallback) {
  return opt_double(t, path, key).value_or(fallback);
}

std::optional<std::int64_t> opt_int(const toml::table& t, std::string_view path, std::string_view key) {
  const toml::node* n = t.get(key);
  if (!n) return std::nullopt;
  if (!n->is_integer())
    throw Error(ErrorKind::Validation, "'" + join_path(path, key) + "' must be an integer", join_path(path, key));
  return n->value<std::int64_t>();
}

std::optional<std::string> opt_string(const toml::table& t, std::string_view path, std::string_view key) {
  const toml::node* n = t.get(key);
  if (!n) return std::nullopt;
  if (!n->is_string())
    throw Error(ErrorKind::Validation, "'" + join_path(path, key) + "' must be a string", join_path(path, key));
  return n->value<std::string>();
}

std::optional<bool> opt_bool(const toml::table& t, std::string_view path, std::string_view key) {
  const toml::node* n = t.get(key);
  if (!n) return std::nullopt;
  if (!n->is_boolean())
    throw Error(ErrorKind::Validation, "'" + join_path(path, key) + "' must be a boolean", join_path(path, key));
  return n->value<bool>();
}

std::optional<std::vector<double>> opt_doubles(const toml::table& t, std::string_view path, std::string_view key) {
  const toml::node* n = t.get(key);
  if (!n) return std::nullopt;
  const std::string field = join_path(path, key);
  const toml::array* a = n->as_array();
  if (!a) throw Error(ErrorKind::Validation, "'" + field + "' must be an array of numbers", field);
  std::vector<double> out;
  for (const auto& e : *a) {
    if (!e.is_number()) throw Error(ErrorKind::Validation, "'" + field + "' must be an array of numbers", field);
    out.push_back(as_number(e, field));
  }
  return out;
}

std::optional<std::vector<std::vector<double>>> opt_double_rows(const toml::table& t, std::string_view path,
                                                                std::string_view key) {
  const toml::node* n = t.get(key);
  if (!n) return std::nullopt;
  const std::string field = join_path(path, key);
  const toml::array* a = n->as_array();
  if (!a) throw Error(ErrorKind::Validation, "'" + field + "' must be an array of arrays", field);
  std::vector<std::vector<double>> rows;
  for (const auto& r : *a) {
    const toml::array* ra = r.as_array();
    if (!ra) throw Error(ErrorKind::Validation, "'" + field + "' must be an array of arrays", field);
    std::vector<double> row;
    for (const auto& e : *ra) {
      if (!e.is_number()) throw Error(ErrorKind::Validation, "'" + field + "' must hold numbers", field);
      row.push_back(as_number(e, field));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace stray::detail
