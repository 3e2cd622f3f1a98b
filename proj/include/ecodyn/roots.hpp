#pragma once

// Bracketed bisection. Unconditionally convergent whenever the bracket
// carries a sign change, which is exactly what the fixed-point theory
// guarantees for the boundary equations here.

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace ecodyn {

struct BracketError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shrinks [lo, hi] until it is narrower than xtol and returns the midpoint.
// Throws BracketError when f(lo) and f(hi) have the same (nonzero) sign.
template <class F>
double bisect(F&& f, double lo, double hi, double xtol = 1e-13,
              int max_iter = 200) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo < 0.0) == (fhi < 0.0)) {
    std::ostringstream msg;
    msg << "bisect: no sign change on [" << lo << ", " << hi << "], f(lo)="
        << flo << ", f(hi)=" << fhi;
    throw BracketError(msg.str());
  }
  for (int i = 0; i < max_iter && hi - lo > xtol; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace ecodyn
