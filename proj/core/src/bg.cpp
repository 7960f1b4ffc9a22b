#include "autodml/bg.hpp"

#include <cmath>
#include <string>

namespace autodml {

namespace {

void check_domain(double a, double b, int t) {
  if (t < 1) throw InvalidTime("beta-geometric time must be a positive integer; got " +
                               std::to_string(t));
  if (!std::isfinite(a) || !std::isfinite(b) || std::abs(a) > 30.0 || std::abs(b) > 30.0) {
    throw NumericRange("beta-geometric log-shapes must satisfy |a|,|b| <= 30; got a=" +
                       std::to_string(a) + ", b=" + std::to_string(b));
  }
}

}  // namespace

BgDerivs bg_log_derivatives(double a, double b, int t) {
  check_domain(a, b, t);
  const double alpha = std::exp(a);
  const double beta = std::exp(b);

  // Running sums over s = 1..t of the survival pieces. With v_s = beta+s-1
  // and w_s = alpha+beta+s-1:
  //   log P(T>t)        = sum log(v_s/w_s)
  //   d_a log P(T>t)    = -sum alpha/w_s
  //   d_b log P(T>t)    =  sum alpha*beta/(v_s*w_s)
  //   d_aa log P(T>t)   = -sum alpha*v_s/w_s^2
  //   d_ab log P(T>t)   =  sum alpha*beta/w_s^2
  //   d_bb log P(T>t)   =  sum beta*(s-1)/v_s^2 - beta*(alpha+s-1)/w_s^2
  // P(T=t) shares the sums through s = t-1 plus a hazard term at s = t; its
  // a-a and a-b second derivatives coincide with the survival ones at t.
  double logp = 0.0, sa = 0.0, sb = 0.0, haa = 0.0, hab = 0.0, hbb = 0.0;
  double logp1 = 0.0, sa1 = 0.0, sb1 = 0.0, hbb1 = 0.0;  // snapshots at t-1
  double vt = 0.0, wt = 0.0;
  for (int s = 1; s <= t; ++s) {
    if (s == t) {
      logp1 = logp; sa1 = sa; sb1 = sb; hbb1 = hbb;
    }
    const double v = beta + s - 1;
    const double w = alpha + beta + s - 1;
    logp += std::log(v / w);
    sa += alpha / w;
    sb += alpha * beta / (v * w);
    haa += alpha * v / (w * w);
    hab += alpha * beta / (w * w);
    hbb += beta * (s - 1) / (v * v) - beta * (alpha + s - 1) / (w * w);
    if (s == t) { vt = v; wt = w; }
  }

  BgDerivs d;
  d.log_p_gt = logp;
  d.g_gt << -sa, sb;
  d.h_gt << -haa, hab, hab, hbb;

  d.log_p_eq = a - std::log(wt) + logp1;
  d.g_eq << 1.0 - alpha / wt - sa1, -beta / wt + sb1;
  d.h_eq(0, 0) = -haa;                               // equals the survival a-a sum at t
  d.h_eq(0, 1) = d.h_eq(1, 0) = hab;                 // likewise for a-b
  d.h_eq(1, 1) = hbb1 - beta * (alpha + t - 1) / (wt * wt);
  return d;
}

double bg_log_survival(double a, double b, int t) {
  if (t == 0) {
    check_domain(a, b, 1);
    return 0.0;
  }
  check_domain(a, b, t);
  const double alpha = std::exp(a);
  const double beta = std::exp(b);
  double logp = 0.0;
  for (int s = 1; s <= t; ++s) logp += std::log((beta + s - 1) / (alpha + beta + s - 1));
  return logp;
}

}  // namespace autodml
