#include "vpdirac/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "vpdirac/error.hpp"

namespace vpdirac {

namespace {

constexpr double kPi = std::numbers::pi;

double gauss_volume(double sigma) { return std::pow(2.0 * kPi * sigma * sigma, 1.5); }

// Integral of s^k * shape(s) ds over [0, S] for shape(s) = min(s,1)^alpha e^{-s}.
double shape_moment(double k, double alpha, double S) {
  using boost::math::tgamma_lower;
  if (S <= 0.0) return 0.0;
  if (S <= 1.0) return tgamma_lower(k + 1.0 + alpha, S);
  return tgamma_lower(k + 1.0 + alpha, 1.0) + (tgamma_lower(k + 1.0, S) - tgamma_lower(k + 1.0, 1.0));
}

double clamp_unit(double u) {
  constexpr double lo = 0x1p-53;
  return std::clamp(u, lo, 1.0 - lo);
}

Vec3 unit_direction(double u1, double u2) {
  const double cos_t = 1.0 - 2.0 * u1;
  const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
  const double phi = 2.0 * kPi * u2;
  return {sin_t * std::cos(phi), sin_t * std::sin(phi), cos_t};
}

double normal_quantile(double u) { return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * clamp_unit(u)); }

void require(bool ok, const std::string& msg) {
  if (!ok) throw InvalidArgument(msg);
}

}  // namespace

std::string to_string(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::RadialGaussian:
      return "radial_gaussian";
    case ProfileKind::UniformBall:
      return "uniform_ball";
    case ProfileKind::UniformBox:
      return "uniform_box";
  }
  return "unknown";
}

ProfileKind profile_kind_from_string(const std::string& name) {
  if (name == "radial_gaussian" || name == "default") return ProfileKind::RadialGaussian;
  if (name == "uniform_ball") return ProfileKind::UniformBall;
  if (name == "uniform_box") return ProfileKind::UniformBox;
  throw InvalidArgument("unknown density profile '" + name + "'");
}

InitialDensity::InitialDensity(const ProfileSpec& spec, const Vec3& xi0, const Vec3& eta0, double m0)
    : spec_(spec), xi0_(xi0), eta0_(eta0), m0_(m0) {}

InitialDensity InitialDensity::create(const ProfileSpec& spec, const Vec3& xi0, const Vec3& eta0, double m0) {
  require(std::isfinite(spec.mass) && spec.mass > 0.0,
          "profile mass must be positive and finite (got " + std::to_string(spec.mass) + ")");
  require(spec.mass < 1.0, "initial total charge M0 = " + std::to_string(spec.mass) + " violates M0 < 1");
  require(std::isfinite(m0) && m0 > 6.0, "moment order m0 must exceed 6 (got " + std::to_string(m0) + ")");
  for (int i = 0; i < 3; ++i)
    require(std::isfinite(xi0[i]) && std::isfinite(eta0[i]), "charge initial state must be finite");

  InitialDensity d(spec, xi0, eta0, m0);
  switch (spec.kind) {
    case ProfileKind::RadialGaussian: {
      require(spec.r_scale > 0.0 && std::isfinite(spec.r_scale), "r_scale must be positive");
      require(spec.v_scale > 0.0 && std::isfinite(spec.v_scale), "v_scale must be positive");
      require(std::isfinite(spec.alpha) && spec.alpha > -3.0,
              "radial_gaussian with alpha <= -3 is not normalizable");
      const double l = spec.r_scale;
      const double radial = 4.0 * kPi * l * l * l * shape_moment(2.0, spec.alpha, INFINITY);
      d.norm_ = spec.mass / (radial * gauss_volume(spec.v_scale));
      require(std::isfinite(d.norm_) && d.norm_ > 0.0, "profile is not normalizable");
      break;
    }
    case ProfileKind::UniformBall:
      require(spec.radius > 0.0 && std::isfinite(spec.radius), "radius must be positive");
      require(spec.v_scale > 0.0 && std::isfinite(spec.v_scale), "v_scale must be positive");
      d.norm_ = spec.mass / (4.0 / 3.0 * kPi * std::pow(spec.radius, 3) * gauss_volume(spec.v_scale));
      break;
    case ProfileKind::UniformBox:
      require(spec.half_x > 0.0 && spec.half_v > 0.0, "box half widths must be positive");
      d.norm_ = spec.mass / (std::pow(2.0 * spec.half_x, 3) * std::pow(2.0 * spec.half_v, 3));
      break;
  }

  const double a = d.near_charge_exponent();
  require(a >= m0 / 2.0 - 3.0, "near-charge exponent " + std::to_string(a) + " < m0/2 - 3 = " +
                                   std::to_string(m0 / 2.0 - 3.0) + ": energy moments below m0 diverge");
  if (spec.kind == ProfileKind::RadialGaussian) {
    const double h0 = d.reference_energy().total();
    require(std::isfinite(h0), "initial energy is not finite");
  }
  return d;
}

InitialDensity InitialDensity::default_profile() {
  return create(ProfileSpec{}, Vec3{0.0, 0.0, 0.0}, Vec3{0.5, 0.0, 0.0});
}

double InitialDensity::radial_shape(double s) const {
  return std::pow(std::min(s, 1.0), spec_.alpha) * std::exp(-s);
}

double InitialDensity::x_part(const Vec3& x) const {
  switch (spec_.kind) {
    case ProfileKind::RadialGaussian:
      return radial_shape(norm(x - xi0_) / spec_.r_scale);
    case ProfileKind::UniformBall:
      return norm2(x - spec_.center) < spec_.radius * spec_.radius ? 1.0 : 0.0;
    case ProfileKind::UniformBox: {
      const Vec3 d = x - spec_.center;
      return (std::abs(d.x) < spec_.half_x && std::abs(d.y) < spec_.half_x && std::abs(d.z) < spec_.half_x) ? 1.0
                                                                                                             : 0.0;
    }
  }
  return 0.0;
}

double InitialDensity::v_part(const Vec3& v) const {
  switch (spec_.kind) {
    case ProfileKind::RadialGaussian:
    case ProfileKind::UniformBall:
      return std::exp(-0.5 * norm2(v) / (spec_.v_scale * spec_.v_scale));
    case ProfileKind::UniformBox:
      return (std::abs(v.x) < spec_.half_v && std::abs(v.y) < spec_.half_v && std::abs(v.z) < spec_.half_v) ? 1.0
                                                                                                           : 0.0;
  }
  return 0.0;
}

double InitialDensity::operator()(const Vec3& x, const Vec3& v) const { return norm_ * x_part(x) * v_part(v); }

double InitialDensity::near_charge_exponent() const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (spec_.kind) {
    case ProfileKind::RadialGaussian:
      return spec_.alpha;
    case ProfileKind::UniformBall:
      return norm(xi0_ - spec_.center) <= spec_.radius ? 0.0 : inf;
    case ProfileKind::UniformBox: {
      const Vec3 d = xi0_ - spec_.center;
      const bool inside = std::abs(d.x) <= spec_.half_x && std::abs(d.y) <= spec_.half_x && std::abs(d.z) <= spec_.half_x;
      return inside ? 0.0 : inf;
    }
  }
  return 0.0;
}

double InitialDensity::sup_norm() const {
  if (spec_.kind == ProfileKind::RadialGaussian) {
    // s^alpha e^{-s} peaks at s = alpha on [0, 1]; e^{-s} decreases beyond.
    const double s = std::clamp(spec_.alpha, 0.0, 1.0);
    return norm_ * radial_shape(s);
  }
  return norm_;
}

InitialDensity::Mapped InitialDensity::map_unit_cube(const std::array<double, 6>& u) const {
  Mapped out{};
  switch (spec_.kind) {
    case ProfileKind::RadialGaussian: {
      // Proposal: radius ~ Gamma(3, l) about xi0, velocity ~ N(0, sigma^2 I).
      const double l = spec_.r_scale;
      const double sigma = spec_.v_scale;
      const double s = boost::math::gamma_p_inv(3.0, clamp_unit(u[0]));
      out.x = xi0_ + (l * s) * unit_direction(u[1], u[2]);
      out.v = Vec3{normal_quantile(u[3]), normal_quantile(u[4]), normal_quantile(u[5])} * sigma;
      const double gx = std::exp(-s) / (8.0 * kPi * l * l * l);
      const double gv = std::exp(-0.5 * norm2(out.v) / (sigma * sigma)) / gauss_volume(sigma);
      out.jacobian = 1.0 / (gx * gv);
      break;
    }
    case ProfileKind::UniformBall: {
      const double r = spec_.radius * std::cbrt(u[0]);
      out.x = spec_.center + r * unit_direction(u[1], u[2]);
      out.v = Vec3{normal_quantile(u[3]), normal_quantile(u[4]), normal_quantile(u[5])} * spec_.v_scale;
      const double gv = std::exp(-0.5 * norm2(out.v) / (spec_.v_scale * spec_.v_scale)) / gauss_volume(spec_.v_scale);
      out.jacobian = 4.0 / 3.0 * kPi * std::pow(spec_.radius, 3) / gv;
      break;
    }
    case ProfileKind::UniformBox: {
      const double a = spec_.half_x;
      const double b = spec_.half_v;
      out.x = spec_.center + Vec3{a * (2 * u[0] - 1), a * (2 * u[1] - 1), a * (2 * u[2] - 1)};
      out.v = Vec3{b * (2 * u[3] - 1), b * (2 * u[4] - 1), b * (2 * u[5] - 1)};
      out.jacobian = std::pow(2 * a, 3) * std::pow(2 * b, 3);
      break;
    }
  }
  return out;
}

double InitialDensity::reference_mass() const {
  if (spec_.kind != ProfileKind::RadialGaussian) return spec_.mass;
  const double l = spec_.r_scale;
  return norm_ * gauss_volume(spec_.v_scale) * 4.0 * kPi * l * l * l * shape_moment(2.0, spec_.alpha, INFINITY);
}

double InitialDensity::reference_rho(double r) const {
  if (spec_.kind != ProfileKind::RadialGaussian) throw InvalidArgument("reference_rho needs radial_gaussian");
  return norm_ * gauss_volume(spec_.v_scale) * radial_shape(r / spec_.r_scale);
}

double InitialDensity::reference_enclosed_mass(double r) const {
  if (spec_.kind != ProfileKind::RadialGaussian)
    throw InvalidArgument("reference_enclosed_mass needs radial_gaussian");
  const double l = spec_.r_scale;
  return norm_ * gauss_volume(spec_.v_scale) * 4.0 * kPi * l * l * l * shape_moment(2.0, spec_.alpha, r / l);
}

EnergyComponents InitialDensity::reference_energy() const {
  if (spec_.kind != ProfileKind::RadialGaussian) throw InvalidArgument("reference_energy needs radial_gaussian");
  const double l = spec_.r_scale;
  const double rho0 = norm_ * gauss_volume(spec_.v_scale);
  EnergyComponents e;
  e.plasma_kinetic = 1.5 * spec_.v_scale * spec_.v_scale * spec_.mass;
  e.charge_kinetic = 0.5 * norm2(eta0_);
  e.plasma_charge = rho0 * 4.0 * kPi * l * l * shape_moment(1.0, spec_.alpha, INFINITY);
  // Self energy of a radial charge: int M(r) rho(r) 4 pi r dr.
  auto integrand = [&](double s) {
    return reference_enclosed_mass(l * s) * rho0 * radial_shape(s) * 4.0 * kPi * l * s * l;
  };
  using boost::math::quadrature::gauss_kronrod;
  double inner = gauss_kronrod<double, 61>::integrate(integrand, 0.0, 1.0, 15, 1e-13);
  boost::math::quadrature::exp_sinh<double> tail;
  double outer = tail.integrate([&](double t) { return integrand(1.0 + t); }, 1e-13);
  e.plasma_plasma = inner + outer;
  return e;
}

double InitialDensity::reference_moment(double m) const {
  if (spec_.kind != ProfileKind::RadialGaussian) throw InvalidArgument("reference_moment needs radial_gaussian");
  if (m < 0.0) throw InvalidArgument("moment order must be non-negative");
  const double l = spec_.r_scale;
  const double sigma = spec_.v_scale;
  const double rho0 = norm_ * gauss_volume(sigma);
  using boost::math::quadrature::gauss_kronrod;
  // (|v|^2 + 1/r)^{m/2} = r^{-m/2} (r |v|^2 + 1)^{m/2}; the power of r is
  // folded into the radial weight so the integrand stays finite as r -> 0.
  auto v_average = [&](double r) {
    auto f = [&](double w) {
      const double v = sigma * w;
      return 4.0 * kPi * w * w * std::exp(-0.5 * w * w) / gauss_volume(1.0) * std::pow(r * v * v + 1.0, 0.5 * m);
    };
    return gauss_kronrod<double, 61>::integrate(f, 0.0, 12.0, 10, 1e-13);
  };
  auto radial = [&](double s) {
    if (s > 700.0) return 0.0;
    const double power = s < 1.0 ? std::pow(s, spec_.alpha + 2.0 - 0.5 * m) : std::pow(s, 2.0 - 0.5 * m);
    return 4.0 * kPi * l * l * l * std::pow(l, -0.5 * m) * rho0 * power * std::exp(-s) * v_average(l * s);
  };
  boost::math::quadrature::tanh_sinh<double> near;
  const double a = near.integrate(radial, 0.0, 1.0, 1e-12);
  boost::math::quadrature::exp_sinh<double> tail;
  const double b = tail.integrate([&](double t) { return radial(1.0 + t); }, 1e-12);
  return a + b;
}

double InitialDensity::reference_retained_mass(int n) const {
  if (spec_.kind != ProfileKind::RadialGaussian)
    throw InvalidArgument("reference_retained_mass needs radial_gaussian");
  if (n < 1) throw InvalidArgument("cutoff index n must be >= 1");
  const double lo = 1.0 / n;
  const double hi = static_cast<double>(n);
  const double x_mass = reference_enclosed_mass(hi) - reference_enclosed_mass(lo);
  const double sigma = spec_.v_scale;
  const double lambda = norm2(eta0_) / (sigma * sigma);
  double pv = 0.0;
  if (lambda == 0.0) {
    pv = boost::math::gamma_p(1.5, 0.5 * hi * hi / (sigma * sigma));
  } else {
    boost::math::non_central_chi_squared dist(3.0, lambda);
    pv = boost::math::cdf(dist, hi * hi / (sigma * sigma));
  }
  return x_mass * pv;
}

}  // namespace vpdirac
