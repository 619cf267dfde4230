#include "vpdirac/flowmetrics.hpp"

#include <algorithm>
#include <cmath>

#include "vpdirac/error.hpp"

namespace vpdirac::flowmetrics {

void MetricParams::validate() const {
  if (!(r > 0.0) || !(lambda > 0.0) || !(gamma > 0.0) || !(delta1 > 0.0) || !(delta2 > 0.0))
    throw InvalidArgument("metric parameters r, lambda, gamma, delta1, delta2 must be positive");
  if (delta1 > delta2) throw InvalidArgument("metric parameters need delta1 <= delta2");
}

std::vector<std::uint8_t> ball_flags(const FlowRecord& flow, double r) {
  if (!(r > 0.0)) throw InvalidArgument("ball radius must be positive");
  if (flow.samples() == 0) throw InvalidArgument("flow has no samples");
  std::vector<std::uint8_t> in(flow.seeds(), 0);
  const Vec3 xi0 = flow.xi[0];
  const Vec3 eta0 = flow.eta[0];
  for (std::size_t i = 0; i < flow.seeds(); ++i)
    in[i] = phase_norm(flow.X[0][i] - xi0, flow.V[0][i] - eta0) <= r;
  return in;
}

std::vector<std::uint8_t> sublevel_flags(const FlowRecord& flow, double lambda) {
  if (!(lambda > 0.0)) throw InvalidArgument("sublevel threshold must be positive");
  std::vector<std::uint8_t> in(flow.seeds(), 1);
  for (std::size_t i = 0; i < flow.seeds(); ++i) {
    if (flow.floor_hit[i]) {
      in[i] = 0;
      continue;
    }
    for (std::size_t k = 0; k < flow.samples() && in[i]; ++k)
      if (phase_norm(flow.X[k][i], flow.V[k][i]) > lambda) in[i] = 0;
  }
  return in;
}

SublevelReport sublevel_report(const FlowRecord& flow, double r, double lambda) {
  SublevelReport rep;
  rep.flags = sublevel_flags(flow, lambda);
  const auto ball = ball_flags(flow, r);
  for (std::size_t i = 0; i < flow.seeds(); ++i) {
    if (!ball[i]) continue;
    const double w = flow.reference_weights[i];
    (rep.flags[i] ? rep.retained : rep.superlevel) += w;
    if (flow.floor_hit[i]) rep.excluded += w;
  }
  return rep;
}

double superlevel_measure(const FlowRecord& flow, double r, double lambda) {
  return sublevel_report(flow, r, lambda).superlevel;
}

double beta(const Vec3& z) { return std::log1p(std::log1p(0.5 * norm2(z))); }

Vec3 beta_prime(const Vec3& z) {
  const double q = 0.5 * norm2(z);
  return z / ((1.0 + q) * (1.0 + std::log1p(q)));
}

double beta_envelope_constant(double z_min, double z_max, std::size_t count) {
  if (!(z_min > 0.0) || !(z_max > z_min) || count < 2) throw InvalidArgument("bad envelope grid");
  double c = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(count - 1);
    const double s = z_min * std::pow(z_max / z_min, t);
    const double env = s / ((1.0 + s * s) * (1.0 + std::log1p(s * s)));
    c = std::max(c, norm(beta_prime({s, 0.0, 0.0})) / env);
  }
  return c;
}

double loglog_moment(const FlowRecord& flow, double r) {
  const auto ball = ball_flags(flow, r);
  double total = 0.0;
  for (std::size_t i = 0; i < flow.seeds(); ++i) {
    if (!ball[i]) continue;
    double m = 0.0;
    for (std::size_t k = 0; k < flow.samples(); ++k) m = std::max(m, beta(flow.V[k][i]));
    total += flow.reference_weights[i] * m;
  }
  return total;
}

void require_same_seeds(const FlowRecord& a, const FlowRecord& b) {
  if (a.ids != b.ids) throw SeedMismatch("flow records do not share the same seed ids");
  if (a.reference_weights != b.reference_weights) throw SeedMismatch("flow records use different reference weights");
  if (a.times != b.times) throw SeedMismatch("flow records are stored at different times");
}

namespace {

void require_index(const FlowRecord& f, std::size_t k) {
  if (k >= f.samples()) throw InvalidArgument("stored time index out of range");
}

double phi_impl(const FlowRecord& a, const FlowRecord& b, const MetricParams& p, std::size_t k,
                const std::vector<std::uint8_t>& ball, const std::vector<std::uint8_t>& ga,
                const std::vector<std::uint8_t>& gb) {
  double phi = 0.0;
  for (std::size_t i = 0; i < a.seeds(); ++i) {
    if (!ball[i] || !ga[i] || !gb[i]) continue;
    const Vec3 dx = (a.X[k][i] - b.X[k][i]) / p.delta1;
    const Vec3 dv = (a.V[k][i] - b.V[k][i]) / p.delta2;
    phi += a.reference_weights[i] * std::log1p(phase_norm(dx, dv));
  }
  return phi;
}

double cim_impl(const FlowRecord& a, const FlowRecord& b, double gamma, std::size_t k,
                const std::vector<std::uint8_t>& ball) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.seeds(); ++i) {
    if (!ball[i] || a.floor_hit[i] || b.floor_hit[i]) continue;
    if (phase_norm(a.X[k][i] - b.X[k][i], a.V[k][i] - b.V[k][i]) > gamma) m += a.reference_weights[i];
  }
  return m;
}

}  // namespace

double phi_functional(const FlowRecord& a, const FlowRecord& b, const MetricParams& params, std::size_t k) {
  params.validate();
  require_same_seeds(a, b);
  require_index(a, k);
  return phi_impl(a, b, params, k, ball_flags(a, params.r), sublevel_flags(a, params.lambda),
                  sublevel_flags(b, params.lambda));
}

double convergence_in_measure(const FlowRecord& a, const FlowRecord& b, double gamma, double r, std::size_t k) {
  if (!(gamma > 0.0)) throw InvalidArgument("closeness threshold must be positive");
  require_same_seeds(a, b);
  require_index(a, k);
  return cim_impl(a, b, gamma, k, ball_flags(a, r));
}

ChebyshevPair chebyshev_consistency(const FlowRecord& a, const FlowRecord& b, const MetricParams& params,
                                    std::size_t k) {
  params.validate();
  require_same_seeds(a, b);
  require_index(a, k);
  const auto ball = ball_flags(a, params.r);
  const auto ga = sublevel_flags(a, params.lambda);
  const auto gb = sublevel_flags(b, params.lambda);
  double sa = 0.0, sb = 0.0;
  for (std::size_t i = 0; i < a.seeds(); ++i) {
    if (!ball[i]) continue;
    if (!ga[i]) sa += a.reference_weights[i];
    if (!gb[i]) sb += a.reference_weights[i];
  }
  ChebyshevPair out;
  out.lhs = cim_impl(a, b, params.gamma, k, ball);
  out.rhs = phi_impl(a, b, params, k, ball, ga, gb) / std::log1p(params.gamma / params.delta2) + sa + sb;
  return out;
}

bool PhaseBox::contains(const Vec3& x, const Vec3& v) const {
  for (int c = 0; c < 3; ++c) {
    if (x[c] < x_lo[c] || x[c] >= x_hi[c]) return false;
    if (v[c] < v_lo[c] || v[c] >= v_hi[c]) return false;
  }
  return true;
}

std::pair<double, double> compressibility_range(const FlowRecord& flow, std::span<const PhaseBox> boxes,
                                                std::size_t k, std::span<const double> measure) {
  require_index(flow, k);
  if (measure.empty()) measure = flow.reference_weights;
  if (measure.size() != flow.seeds()) throw InvalidArgument("measure does not match the seed count");
  double hi = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& box : boxes) {
    double before = 0.0, after = 0.0;
    for (std::size_t i = 0; i < flow.seeds(); ++i) {
      if (box.contains(flow.X[0][i], flow.V[0][i])) before += measure[i];
      if (box.contains(flow.X[k][i], flow.V[k][i])) after += measure[i];
    }
    if (before == 0.0) continue;
    hi = std::max(hi, after / before);
    lo = std::min(lo, after / before);
  }
  return {hi, lo};
}

}  // namespace vpdirac::flowmetrics
