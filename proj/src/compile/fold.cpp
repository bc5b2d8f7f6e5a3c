#include <cmath>
#include <limits>
#include <string>

#include "bcop/compile.hpp"
#include "bcop/error.hpp"

namespace bcop {
namespace {

// Accumulator domain [lo, hi] with real value a = scale * v + offset.
struct Domain {
  std::int64_t lo;
  std::int64_t hi;
  double scale;
  double offset;
};

std::int64_t clamp_candidate(double v, std::int64_t lo, std::int64_t hi) {
  if (!(v > static_cast<double>(lo))) return lo;  // also catches NaN
  if (v > static_cast<double>(hi)) return hi;
  return static_cast<std::int64_t>(v);
}

// Smallest v in [lo, hi + 1] with decide(v) true (decide non-decreasing).
template <typename Decide>
std::int64_t first_true(std::int64_t lo, std::int64_t hi, std::int64_t guess, Decide decide) {
  if (guess >= lo && guess <= hi + 1) {
    const bool at = guess > hi || decide(guess);
    const bool below = guess > lo && decide(guess - 1);
    if (at && !below) return guess;
  }
  std::int64_t a = lo;
  std::int64_t b = hi + 1;
  while (a < b) {
    const std::int64_t mid = a + (b - a) / 2;
    if (decide(mid)) {
      b = mid;
    } else {
      a = mid + 1;
    }
  }
  return a;
}

FoldResult fold(const BatchNormParams& bn, int fan_in, const Domain& d) {
  if (fan_in < 1) fail(ErrorCode::kInvalidArgument, "fold: fan-in must be >= 1");
  FoldResult out;
  const std::size_t n = bn.channels();
  out.params.fan_in = fan_in;
  out.params.thresholds.resize(n);
  out.params.flip.assign(n, 0);
  const auto always_on = static_cast<std::int32_t>(d.lo);
  const auto always_off = static_cast<std::int32_t>(d.hi + 1);

  for (std::size_t c = 0; c < n; ++c) {
    auto decide = [&](std::int64_t v) {
      return bn_inference(bn, c, d.scale * static_cast<double>(v) + d.offset) >= 0.0f;
    };
    const double gamma = bn.gamma[c];
    if (gamma == 0.0) {
      out.zero_gamma_channels.push_back(c);
      out.params.thresholds[c] = bn.beta[c] >= 0.0f ? always_on : always_off;
      continue;
    }
    const double tau = static_cast<double>(bn.mean[c]) -
                       static_cast<double>(bn.beta[c]) *
                           std::sqrt(static_cast<double>(bn.var[c]) + static_cast<double>(bn.eps)) / gamma;
    const double v_tau = (tau - d.offset) / d.scale;
    if (gamma > 0.0) {
      const std::int64_t guess = clamp_candidate(std::ceil(v_tau), d.lo, d.hi + 1);
      out.params.thresholds[c] = static_cast<std::int32_t>(first_true(d.lo, d.hi, guess, decide));
    } else {
      // Largest v with decide(v); decide is non-increasing here.
      auto negated = [&](std::int64_t v) { return !decide(v); };
      const std::int64_t guess = clamp_candidate(std::floor(v_tau) + 1.0, d.lo, d.hi + 1);
      const std::int64_t last_on = first_true(d.lo, d.hi, guess, negated) - 1;
      if (last_on < d.lo) {
        out.params.thresholds[c] = always_off;
      } else if (last_on >= d.hi) {
        out.params.thresholds[c] = always_on;
      } else {
        out.params.thresholds[c] = static_cast<std::int32_t>(last_on);
        out.params.flip[c] = 1;
      }
    }
  }
  return out;
}

}  // namespace

FoldResult fold_batchnorm_to_threshold(const BatchNormParams& bn, int fan_in) {
  return fold(bn, fan_in, {0, fan_in, 2.0, -static_cast<double>(fan_in)});
}

FoldResult fold_batchnorm_to_integer_threshold(const BatchNormParams& bn, int fan_in) {
  const std::int64_t span = std::int64_t{128} * fan_in;
  return fold(bn, fan_in, {-span, span, 1.0 / 128.0, 0.0});
}

}  // namespace bcop
