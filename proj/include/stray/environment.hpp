#pragma once

// Shallow-water waveguide: water column over a fluid half-space bottom.
//
// Internal units are "wavenumber units": lengths in metres, temporal
// frequency as w = 2*pi*f/c0 (1/m), time as tau = c0*T (m). The medium is
// described by the refraction index n = c0/c.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stray/jet.hpp"

namespace stray {

struct DomainBox {
  double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
  bool contains(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
};

class Bathymetry {
 public:
  enum class Kind { Constant, Wedge, Grid };

  static Bathymetry constant(double depth);
  /// h(x, y) = depth + gx*x + gy*y.
  static Bathymetry wedge(double depth, double gx, double gy);
  /// Row-major depths: depths[j*nx + i] sits at (x0 + i*dx, y0 + j*dy).
  static Bathymetry grid(double x0, double dx, int nx, double y0, double dy, int ny,
                         std::vector<double> depths);

  Kind kind() const { return kind_; }
  void set_domain(DomainBox box) { domain_ = box; }
  const std::optional<DomainBox>& domain() const { return domain_; }

  bool in_domain(double x, double y) const;
  double depth(double x, double y) const;
  /// Depth as a jet in (x, y) around the query point, exact for every kind.
  Jet<2> depth_jet(double x, double y) const;

  // Raw parameters, used for serialization.
  double base_depth() const { return depth_; }
  double gx() const { return gx_; }
  double gy() const { return gy_; }
  double x0() const { return x0_; }
  double dx() const { return dx_; }
  int nx() const { return nx_; }
  double y0() const { return y0_; }
  double dy() const { return dy_; }
  int ny() const { return ny_; }
  const std::vector<double>& values() const { return values_; }

 private:
  Kind kind_ = Kind::Constant;
  double depth_ = 0.0, gx_ = 0.0, gy_ = 0.0;
  double x0_ = 0.0, dx_ = 1.0, y0_ = 0.0, dy_ = 1.0;
  int nx_ = 0, ny_ = 0;
  std::vector<double> values_;
  std::optional<DomainBox> domain_;
};

class Environment {
 public:
  Environment(double c0, std::vector<double> profile_z, std::vector<double> profile_speed,
              double bottom_speed, double water_density, double bottom_density,
              Bathymetry bathymetry);

  double c0() const { return c0_; }
  double water_density() const { return rho_water_; }
  double bottom_density() const { return rho_bottom_; }
  double n_bottom() const { return n_bottom_; }
  double bottom_speed() const { return c0_ / n_bottom_; }
  const Bathymetry& bathymetry() const { return bathymetry_; }

  /// Water profile nodes (depth, index). A single node means isovelocity water.
  const std::vector<double>& profile_z() const { return profile_z_; }
  const std::vector<double>& profile_n() const { return profile_n_; }
  bool isovelocity() const { return profile_n_.size() == 1; }
  double n_water_max() const;
  double n_water_min() const;
  /// Water index at depth z (piecewise linear between nodes, flat outside).
  double n_water(double z) const;
  /// Slope dn/dz of the water profile at z (zero outside the node span).
  double n_water_slope(double z) const;

  double depth_at(double x, double y) const;
  double index_at(double x, double y, double z) const;

  /// Temporal wavenumber w = 2*pi*f/c0 for a frequency in Hz.
  double wavenumber(double frequency_hz) const;

 private:
  double c0_;
  std::vector<double> profile_z_, profile_n_;
  double n_bottom_;
  double rho_water_, rho_bottom_;
  Bathymetry bathymetry_;
};

/// Parse an environment from TOML text with [units], [medium] and [bathymetry] tables.
Environment load_environment(std::string_view config_text);

/// TOML text that load_environment() reads back into an equivalent environment.
std::string serialize(const Environment& env);

}  // namespace stray
