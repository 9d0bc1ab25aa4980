#pragma once

// Closed-form Markov-chain model of dynamic bandwidth channel access (DBCA)
// with a bonding-aware collision probability. Every quantity is a free
// function templated on the scalar type so the same code evaluates in
// double, long double, or an exact rational type.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace ibac::model {

/// Raised when the conditioning probability r of the bonded-collision term is
/// zero (no other station can become active, so there is nothing to condition on).
class DegenerateDenominator : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

template <typename Scalar>
struct ModelParams {
  int n = 1;      // contending stations
  int W = 16;     // CW_min in slots
  int m = 3;      // maximum backoff stage
  int u = 4;      // maximum bonding level; 2^(u-1) channels exist
  Scalar kappa{0};
  Scalar p{0};      // per-channel busy probability in a random slot
  Scalar gamma{0};  // access probability after an idle slot

  int channel_count() const { return 1 << (u - 1); }
};

/// Durations in microseconds.
template <typename Scalar>
struct MacTiming {
  Scalar sigma{9};
  Scalar sifs{16};
  Scalar difs{34};
  Scalar header{40};
  Scalar ack{30};
  Scalar delta{1};
  Scalar payload{1000};
};

template <typename Scalar>
struct SlotDurations {
  Scalar t_s;
  Scalar t_c;
};

template <typename Scalar>
struct SuccessProbs {
  Scalar p_one;
  Scalar p_s;
};

/// base^e by repeated squaring; exact for rational scalars.
template <typename Scalar>
Scalar ipow(Scalar base, std::uint64_t e) {
  Scalar result{1};
  while (e != 0) {
    if (e & 1u) result = result * base;
    base = base * base;
    e >>= 1u;
  }
  return result;
}

template <typename Scalar>
void validate(const ModelParams<Scalar>& params) {
  if (params.n < 1) throw std::invalid_argument("ModelParams.n must be >= 1");
  if (params.W < 2 || (params.W & (params.W - 1)) != 0)
    throw std::invalid_argument("ModelParams.W must be a power of two >= 2");
  if (params.m < 0) throw std::invalid_argument("ModelParams.m must be >= 0");
  if (params.u < 1 || params.u > 6)
    throw std::invalid_argument("ModelParams.u must lie in [1, 6]");
  const Scalar zero{0};
  const Scalar one{1};
  if (params.p < zero || params.p > one)
    throw std::invalid_argument("ModelParams.p must lie in [0, 1]");
  if (params.gamma < zero || params.gamma > one)
    throw std::invalid_argument("ModelParams.gamma must lie in [0, 1]");
  if (params.kappa < zero || params.kappa > one)
    throw std::invalid_argument("ModelParams.kappa must lie in [0, 1]");
}

template <typename Scalar>
void validate(const MacTiming<Scalar>& timing) {
  const Scalar zero{0};
  if (!(timing.sigma > zero) || !(timing.sifs > zero) || !(timing.difs > zero) ||
      !(timing.header > zero) || !(timing.ack > zero) || !(timing.delta > zero) ||
      !(timing.payload > zero))
    throw std::invalid_argument("MacTiming durations must be strictly positive");
  if (!(timing.difs > timing.sifs))
    throw std::invalid_argument("MacTiming.difs must exceed MacTiming.sifs");
}

namespace detail {
inline void check_level(int c, int u) {
  if (c < 1 || c > u)
    throw std::domain_error("bonding level " + std::to_string(c) + " outside [1, " +
                            std::to_string(u) + "]");
}
}  // namespace detail

/// Probability that a station can use bonding level c: both the primary block
/// and the secondary block of 2^(c-1) channels are idle. At c = u only the
/// 2^(u-1) existing channels can be sensed.
template <typename Scalar>
Scalar bonding_prob(const ModelParams<Scalar>& params, int c) {
  detail::check_level(c, params.u);
  const Scalar idle = Scalar{1} - params.p;
  const std::uint64_t block = std::uint64_t{1} << (c - 1);
  if (c < params.u) return ipow(idle, 2 * block);
  return ipow(idle, block);
}

/// Collision probability over the 2^(c-1) channels of level c, with the
/// per-channel probability growing linearly with the occupied bandwidth.
template <typename Scalar>
Scalar bonded_collision_prob(const ModelParams<Scalar>& params, int c) {
  detail::check_level(c, params.u);
  const std::uint64_t block = std::uint64_t{1} << (c - 1);
  const std::uint64_t total = std::uint64_t{1} << (params.u - 1);
  const Scalar q = params.kappa * Scalar(static_cast<long long>(block)) /
                   Scalar(static_cast<long long>(total));
  return Scalar{1} - ipow(Scalar{1} - q, block);
}

/// r: previous slot idle and at least one other station active now.
template <typename Scalar>
Scalar idle_then_busy_prob(const ModelParams<Scalar>& params) {
  if (params.n < 1) throw std::invalid_argument("ModelParams.n must be >= 1");
  const Scalar others_silent =
      ipow(Scalar{1} - params.gamma, static_cast<std::uint64_t>(params.n - 1));
  return (Scalar{1} - params.p) * (Scalar{1} - others_silent);
}

template <typename Scalar>
struct OwrpCollision {
  Scalar value;       // clamped to [0, 1]
  Scalar raw;         // before clamping
  bool clamped = false;
};

/// Conditional collision probability of a bonding station given an idle
/// previous slot and a busy current slot. Throws DegenerateDenominator when r = 0.
template <typename Scalar>
OwrpCollision<Scalar> owrp_collision(const ModelParams<Scalar>& params) {
  const Scalar r = idle_then_busy_prob(params);
  if (!(r > Scalar{0}))
    throw DegenerateDenominator("idle-then-busy probability is zero");
  Scalar numerator{0};
  for (int c = 1; c <= params.u; ++c)
    numerator = numerator + bonding_prob(params, c) * bonded_collision_prob(params, c);
  OwrpCollision<Scalar> out{numerator / r, numerator / r, false};
  if (out.raw > Scalar{1}) {
    out.value = Scalar{1};
    out.clamped = true;
  } else if (out.raw < Scalar{0}) {
    out.value = Scalar{0};
    out.clamped = true;
  }
  return out;
}

template <typename Scalar>
Scalar owrp_collision_prob(const ModelParams<Scalar>& params) {
  return owrp_collision(params).value;
}

/// Width of the removable singularity window around upsilon = 1/2.
inline constexpr double kHalfSingularityEps = 1e-9;

namespace detail {
template <typename Scalar>
bool near_half(const Scalar& upsilon) {
  using std::abs;
  const Scalar gap = Scalar{1} - Scalar{2} * upsilon;
  return abs(static_cast<double>(gap)) < kHalfSingularityEps;
}

template <typename Scalar>
Scalar backoff_denominator(const Scalar& upsilon, int W, int m) {
  const Scalar gap = Scalar{1} - Scalar{2} * upsilon;
  const Scalar w(W);
  return gap * (w + Scalar{1}) +
         upsilon * w * (Scalar{1} - ipow(Scalar{2} * upsilon, static_cast<std::uint64_t>(m)));
}
}  // namespace detail

/// Per-slot transmission probability nu given the conditional collision
/// probability. At upsilon = 1/2 the 0/0 form is replaced by its limit.
template <typename Scalar>
Scalar transmission_prob(const Scalar& upsilon, int W, int m) {
  if (upsilon < Scalar{0} || upsilon > Scalar{1})
    throw std::domain_error("collision probability outside [0, 1]");
  if (detail::near_half(upsilon))
    return Scalar{4} / (Scalar{2} * Scalar(W + 1) + Scalar(m) * Scalar(W));
  const Scalar gap = Scalar{1} - Scalar{2} * upsilon;
  return Scalar{2} * gap / detail::backoff_denominator(upsilon, W, m);
}

/// Stationary probability of state (0, 0) from the normalization condition.
template <typename Scalar>
Scalar stationary_b00(const Scalar& upsilon, int W, int m) {
  if (upsilon < Scalar{0} || !(upsilon < Scalar{1}))
    throw std::domain_error("stationary_b00 requires collision probability in [0, 1)");
  if (detail::near_half(upsilon)) return transmission_prob(upsilon, W, m) * (Scalar{1} - upsilon);
  const Scalar gap = Scalar{1} - Scalar{2} * upsilon;
  return Scalar{2} * gap * (Scalar{1} - upsilon) / detail::backoff_denominator(upsilon, W, m);
}

/// Full stationary vector b_{i,k}, stage-major (stage 0 first, counter 0..W_i-1).
/// Stage m uses the saturating-stage rule; with m = 0 that rule also covers stage 0.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> stationary_vector(const Scalar& upsilon, int W, int m,
                                                           const Scalar& b00) {
  Eigen::Index size = 0;
  for (int i = 0; i <= m; ++i) size += Eigen::Index{W} << i;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> b(size);
  Eigen::Index offset = 0;
  for (int i = 0; i <= m; ++i) {
    const Eigen::Index wi = Eigen::Index{W} << i;
    Scalar head;
    if (i == m)
      head = ipow(upsilon, static_cast<std::uint64_t>(m)) / (Scalar{1} - upsilon) * b00;
    else
      head = ipow(upsilon, static_cast<std::uint64_t>(i)) * b00;
    for (Eigen::Index k = 0; k < wi; ++k)
      b(offset + k) = Scalar(static_cast<long long>(wi - k)) / Scalar(static_cast<long long>(wi)) * head;
    offset += wi;
  }
  return b;
}

template <typename Scalar>
SuccessProbs<Scalar> success_probs(const Scalar& nu, int n) {
  if (n < 1) throw std::invalid_argument("station count must be >= 1");
  if (nu < Scalar{0} || nu > Scalar{1})
    throw std::domain_error("transmission probability outside [0, 1]");
  const Scalar silent_others = ipow(Scalar{1} - nu, static_cast<std::uint64_t>(n - 1));
  const Scalar p_one = Scalar{1} - silent_others * (Scalar{1} - nu);
  if (!(p_one > Scalar{0})) return {Scalar{0}, Scalar{0}};
  return {p_one, Scalar(n) * nu * silent_others / p_one};
}

template <typename Scalar>
SlotDurations<Scalar> slot_durations(const MacTiming<Scalar>& t) {
  return {t.header + t.payload + t.sifs + t.delta + t.ack + t.difs + t.delta,
          t.header + t.payload + t.difs + t.delta};
}

/// Fraction of airtime carrying successfully delivered payload.
template <typename Scalar>
Scalar normalized_throughput(const SuccessProbs<Scalar>& probs, const MacTiming<Scalar>& timing) {
  const auto [t_s, t_c] = slot_durations(timing);
  const Scalar success = probs.p_one * probs.p_s;
  const Scalar denom = (Scalar{1} - probs.p_one) * timing.sigma + success * t_s +
                       probs.p_one * (Scalar{1} - probs.p_s) * t_c;
  if (!(denom > Scalar{0})) return Scalar{0};
  return success * timing.payload / denom;
}

}  // namespace ibac::model
