#include "stray/environment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "stray/errors.hpp"
#include "toml_util.hpp"

namespace stray {

namespace {

constexpr double kIndexLow = 0.5;
constexpr double kIndexHigh = 2.0;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  // TOML needs a decimal point or exponent for floats.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

}  // namespace

// ---------------------------------------------------------------- Bathymetry

Bathymetry Bathymetry::constant(double depth) {
  Bathymetry b;
  b.kind_ = Kind::Constant;
  b.depth_ = depth;
  return b;
}

Bathymetry Bathymetry::wedge(double depth, double gx, double gy) {
  Bathymetry b;
  b.kind_ = Kind::Wedge;
  b.depth_ = depth;
  b.gx_ = gx;
  b.gy_ = gy;
  return b;
}

Bathymetry Bathymetry::grid(double x0, double dx, int nx, double y0, double dy, int ny,
                            std::vector<double> depths) {
  if (nx < 2 || ny < 2 || dx <= 0.0 || dy <= 0.0)
    throw Error(ErrorKind::Validation, "depth grid needs at least 2x2 nodes and positive spacing",
                "bathymetry");
  if (depths.size() != static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny))
    throw Error(ErrorKind::Validation, "depth grid size does not match nx*ny", "bathymetry.depths");
  Bathymetry b;
  b.kind_ = Kind::Grid;
  b.x0_ = x0;
  b.dx_ = dx;
  b.nx_ = nx;
  b.y0_ = y0;
  b.dy_ = dy;
  b.ny_ = ny;
  b.values_ = std::move(depths);
  b.domain_ = DomainBox{x0, x0 + dx * (nx - 1), y0, y0 + dy * (ny - 1)};
  return b;
}

bool Bathymetry::in_domain(double x, double y) const {
  if (!std::isfinite(x) || !std::isfinite(y)) return false;
  return !domain_ || domain_->contains(x, y);
}

Jet<2> Bathymetry::depth_jet(double x, double y) const {
  if (!in_domain(x, y))
    throw Error(ErrorKind::OutOfDomain, "point (" + fmt17(x) + ", " + fmt17(y) + ") outside bathymetry domain");
  Jet<2> h;
  switch (kind_) {
    case Kind::Constant:
      h = Jet<2>(depth_);
      break;
    case Kind::Wedge: {
      h = Jet<2>(depth_ + gx_ * x + gy_ * y);
      h.set_coeff({1, 0}, gx_);
      h.set_coeff({0, 1}, gy_);
      break;
    }
    case Kind::Grid: {
      const double fx = (x - x0_) / dx_, fy = (y - y0_) / dy_;
      const int i = std::clamp(static_cast<int>(std::floor(fx)), 0, nx_ - 2);
      const int j = std::clamp(static_cast<int>(std::floor(fy)), 0, ny_ - 2);
      const double u = fx - i, v = fy - j;
      const double h00 = values_[j * nx_ + i], h10 = values_[j * nx_ + i + 1];
      const double h01 = values_[(j + 1) * nx_ + i], h11 = values_[(j + 1) * nx_ + i + 1];
      const double cross = h00 - h10 - h01 + h11;
      const double val = h00 * (1 - u) * (1 - v) + h10 * u * (1 - v) + h01 * (1 - u) * v + h11 * u * v;
      h = Jet<2>(val);
      h.set_coeff({1, 0}, ((h10 - h00) + cross * v) / dx_);
      h.set_coeff({0, 1}, ((h01 - h00) + cross * u) / dy_);
      h.set_coeff({1, 1}, cross / (dx_ * dy_));
      break;
    }
  }
  if (!(h.value() > 0.0))
    throw Error(ErrorKind::OutOfDomain, "non-positive depth at (" + fmt17(x) + ", " + fmt17(y) + ")");
  return h;
}

double Bathymetry::depth(double x, double y) const { return depth_jet(x, y).value(); }

// --------------------------------------------------------------- Environment

Environment::Environment(double c0, std::vector<double> profile_z, std::vector<double> profile_speed,
                         double bottom_speed, double water_density, double bottom_density,
                         Bathymetry bathymetry)
    : c0_(c0),
      profile_z_(std::move(profile_z)),
      n_bottom_(0.0),
      rho_water_(water_density),
      rho_bottom_(bottom_density),
      bathymetry_(std::move(bathymetry)) {
  if (!(c0_ > 0.0)) throw Error(ErrorKind::Validation, "reference speed must be positive", "units.reference_speed");
  if (profile_z_.empty() || profile_z_.size() != profile_speed.size())
    throw Error(ErrorKind::Validation, "water profile needs matching depth and speed nodes", "medium.water_profile");
  for (std::size_t i = 1; i < profile_z_.size(); ++i)
    if (!(profile_z_[i] > profile_z_[i - 1]))
      throw Error(ErrorKind::Validation, "water profile depths must increase", "medium.water_profile");
  for (double c : profile_speed) {
    if (!(c > 0.0)) throw Error(ErrorKind::Validation, "sound speed must be positive", "medium.water_profile");
    profile_n_.push_back(c0_ / c);
  }
  if (!(bottom_speed > 0.0)) throw Error(ErrorKind::Validation, "bottom speed must be positive", "medium.bottom_speed");
  n_bottom_ = c0_ / bottom_speed;
  if (!(rho_water_ > 0.0)) throw Error(ErrorKind::Validation, "water density must be positive", "medium.water_density");
  if (!(rho_bottom_ > 0.0)) throw Error(ErrorKind::Validation, "bottom density must be positive", "medium.bottom_density");
  for (double n : profile_n_)
    if (n < kIndexLow || n > kIndexHigh)
      throw Error(ErrorKind::Validation, "water index outside [0.5, 2]", "medium.water_profile");
  if (n_bottom_ < kIndexLow || n_bottom_ > kIndexHigh)
    throw Error(ErrorKind::Validation, "bottom index outside [0.5, 2]", "medium.bottom_speed");
  if (!(n_water_min() > n_bottom_))
    throw Error(ErrorKind::Validation, "bottom must be faster than all water for trapped modes", "medium.bottom_speed");

  const Bathymetry& b = bathymetry_;
  switch (b.kind()) {
    case Bathymetry::Kind::Constant:
      if (!(b.base_depth() > 0.0)) throw Error(ErrorKind::Validation, "depth must be positive", "bathymetry");
      break;
    case Bathymetry::Kind::Wedge: {
      // Without a declared domain, a sloping wedge is valid where its depth stays positive.
      if (!b.domain()) {
        if (!(b.base_depth() > 0.0)) throw Error(ErrorKind::Validation, "depth must be positive", "bathymetry");
        break;
      }
      const DomainBox& d = *b.domain();
      for (double x : {d.x_min, d.x_max})
        for (double y : {d.y_min, d.y_max})
          if (!(b.base_depth() + b.gx() * x + b.gy() * y > 0.0))
            throw Error(ErrorKind::Validation, "depth must be positive over the domain", "bathymetry");
      break;
    }
    case Bathymetry::Kind::Grid:
      for (double h : b.values())
        if (!(h > 0.0)) throw Error(ErrorKind::Validation, "grid depths must be positive", "bathymetry");
      break;
  }
  if (b.domain()) {
    const DomainBox& d = *b.domain();
    if (!(d.x_max > d.x_min) || !(d.y_max > d.y_min))
      throw Error(ErrorKind::Validation, "empty domain", "bathymetry.domain");
  }
}

double Environment::n_water_max() const { return *std::max_element(profile_n_.begin(), profile_n_.end()); }
double Environment::n_water_min() const { return *std::min_element(profile_n_.begin(), profile_n_.end()); }

double Environment::n_water(double z) const {
  if (profile_n_.size() == 1 || z <= profile_z_.front()) return profile_n_.front();
  if (z >= profile_z_.back()) return profile_n_.back();
  const auto it = std::upper_bound(profile_z_.begin(), profile_z_.end(), z);
  const std::size_t k = static_cast<std::size_t>(it - profile_z_.begin());
  const double t = (z - profile_z_[k - 1]) / (profile_z_[k] - profile_z_[k - 1]);
  return profile_n_[k - 1] + t * (profile_n_[k] - profile_n_[k - 1]);
}

double Environment::n_water_slope(double z) const {
  if (profile_n_.size() == 1 || z < profile_z_.front() || z >= profile_z_.back()) return 0.0;
  const auto it = std::upper_bound(profile_z_.begin(), profile_z_.end(), z);
  const std::size_t k = static_cast<std::size_t>(it - profile_z_.begin());
  return (profile_n_[k] - profile_n_[k - 1]) / (profile_z_[k] - profile_z_[k - 1]);
}

double Environment::depth_at(double x, double y) const { return bathymetry_.depth(x, y); }

double Environment::index_at(double x, double y, double z) const {
  if (!(z >= 0.0)) throw Error(ErrorKind::OutOfDomain, "depth z must be non-negative");
  const double h = depth_at(x, y);
  return z <= h ? n_water(z) : n_bottom_;
}

double Environment::wavenumber(double frequency_hz) const {
  return 2.0 * std::numbers::pi * frequency_hz / c0_;
}

// ------------------------------------------------------------------ loading

namespace detail {

Environment environment_from_table(const toml::table& doc) {
  double c0 = 1500.0;
  if (const auto* units = find_table(doc, "units")) {
    reject_unknown_keys(*units, "units", {"reference_speed", "length", "speed", "density"});
    c0 = get_double(*units, "units", "reference_speed", c0);
    const std::pair<const char*, const char*> expected[] = {{"length", "m"}, {"speed", "m/s"}, {"density", "kg/m^3"}};
    for (const auto& [key, unit] : expected) {
      if (auto u = opt_string(*units, "units", key); u && *u != unit)
        throw Error(ErrorKind::Validation, std::string("unsupported unit '") + *u + "'", join_path("units", key));
    }
  }

  const toml::table& medium = require_table(doc, "medium");
  reject_unknown_keys(medium, "medium",
                      {"water_speed", "water_profile", "bottom_speed", "water_density", "bottom_density"});
  std::vector<double> pz, pc;
  const auto profile = opt_double_rows(medium, "medium", "water_profile");
  const auto speed = opt_double(medium, "medium", "water_speed");
  if (profile && speed)
    throw Error(ErrorKind::Validation, "give either water_speed or water_profile", "medium.water_profile");
  if (profile) {
    for (const auto& row : *profile) {
      if (row.size() != 2)
        throw Error(ErrorKind::Validation, "profile rows are [depth, speed]", "medium.water_profile");
      pz.push_back(row[0]);
      pc.push_back(row[1]);
    }
  } else if (speed) {
    pz.push_back(0.0);
    pc.push_back(*speed);
  } else {
    throw Error(ErrorKind::Validation, "missing water sound speed", "medium.water_speed");
  }
  const double cb = get_double(medium, "medium", "bottom_speed");
  const double rw = get_double(medium, "medium", "water_density");
  const double rb = get_double(medium, "medium", "bottom_density");

  const toml::table& bt = require_table(doc, "bathymetry");
  reject_unknown_keys(bt, "bathymetry", {"kind", "depth", "gradient", "x0", "dx", "y0", "dy", "depths", "domain"});
  const std::string kind = opt_string(bt, "bathymetry", "kind").value_or("constant");
  Bathymetry bathy = Bathymetry::constant(1.0);
  if (kind == "constant") {
    bathy = Bathymetry::constant(get_double(bt, "bathymetry", "depth"));
  } else if (kind == "wedge") {
    const auto g = opt_doubles(bt, "bathymetry", "gradient");
    if (!g || g->size() != 2)
      throw Error(ErrorKind::Validation, "wedge needs gradient = [gx, gy]", "bathymetry.gradient");
    bathy = Bathymetry::wedge(get_double(bt, "bathymetry", "depth"), (*g)[0], (*g)[1]);
  } else if (kind == "grid") {
    const auto rows = opt_double_rows(bt, "bathymetry", "depths");
    if (!rows || rows->empty()) throw Error(ErrorKind::Validation, "grid needs depths", "bathymetry.depths");
    const int ny = static_cast<int>(rows->size());
    const int nx = static_cast<int>(rows->front().size());
    std::vector<double> v;
    for (const auto& r : *rows) {
      if (static_cast<int>(r.size()) != nx)
        throw Error(ErrorKind::Validation, "ragged depth grid", "bathymetry.depths");
      v.insert(v.end(), r.begin(), r.end());
    }
    bathy = Bathymetry::grid(get_double(bt, "bathymetry", "x0"), get_double(bt, "bathymetry", "dx"), nx,
                             get_double(bt, "bathymetry", "y0"), get_double(bt, "bathymetry", "dy"), ny,
                             std::move(v));
  } else {
    throw Error(ErrorKind::Validation, "unknown bathymetry kind '" + kind + "'", "bathymetry.kind");
  }
  if (const auto d = opt_doubles(bt, "bathymetry", "domain")) {
    if (d->size() != 4)
      throw Error(ErrorKind::Validation, "domain = [x_min, x_max, y_min, y_max]", "bathymetry.domain");
    if (kind == "grid") throw Error(ErrorKind::Validation, "grid domain is its extent", "bathymetry.domain");
    bathy.set_domain(DomainBox{(*d)[0], (*d)[1], (*d)[2], (*d)[3]});
  }
  return Environment(c0, std::move(pz), std::move(pc), cb, rw, rb, std::move(bathy));
}

}  // namespace detail

Environment load_environment(std::string_view config_text) {
  return detail::environment_from_table(detail::parse_toml(config_text));
}

std::string serialize(const Environment& env) {
  std::ostringstream os;
  os << "[units]\nreference_speed = " << fmt17(env.c0()) << "\nlength = \"m\"\nspeed = \"m/s\"\n"
     << "density = \"kg/m^3\"\n\n[medium]\n";
  if (env.isovelocity()) {
    os << "water_speed = " << fmt17(env.c0() / env.profile_n()[0]) << "\n";
  } else {
    os << "water_profile = [";
    for (std::size_t i = 0; i < env.profile_z().size(); ++i)
      os << (i ? ", " : "") << "[" << fmt17(env.profile_z()[i]) << ", " << fmt17(env.c0() / env.profile_n()[i]) << "]";
    os << "]\n";
  }
  os << "bottom_speed = " << fmt17(env.bottom_speed()) << "\nwater_density = " << fmt17(env.water_density())
     << "\nbottom_density = " << fmt17(env.bottom_density()) << "\n\n[bathymetry]\n";
  const Bathymetry& b = env.bathymetry();
  switch (b.kind()) {
    case Bathymetry::Kind::Constant:
      os << "kind = \"constant\"\ndepth = " << fmt17(b.base_depth()) << "\n";
      break;
    case Bathymetry::Kind::Wedge:
      os << "kind = \"wedge\"\ndepth = " << fmt17(b.base_depth()) << "\ngradient = [" << fmt17(b.gx()) << ", "
         << fmt17(b.gy()) << "]\n";
      break;
    case Bathymetry::Kind::Grid:
      os << "kind = \"grid\"\nx0 = " << fmt17(b.x0()) << "\ndx = " << fmt17(b.dx()) << "\ny0 = " << fmt17(b.y0())
         << "\ndy = " << fmt17(b.dy()) << "\ndepths = [\n";
      for (int j = 0; j < b.ny(); ++j) {
        os << "  [";
        for (int i = 0; i < b.nx(); ++i) os << (i ? ", " : "") << fmt17(b.values()[j * b.nx() + i]);
        os << "],\n";
      }
      os << "]\n";
      break;
  }
  if (b.domain() && b.kind() != Bathymetry::Kind::Grid) {
    const DomainBox& d = *b.domain();
    os << "domain = [" << fmt17(d.x_min) << ", " << fmt17(d.x_max) << ", " << fmt17(d.y_min) << ", "
       << fmt17(d.y_max) << "]\n";
  }
  return os.str();
}

}  // namespace stray
