#include "sbfl/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sbfl/types.hpp"

namespace sbfl::quadrature {
namespace {

struct Status {
  const std::function<double(double)>* f = nullptr;
  double leftover = 0.0;  // error estimate stuck below max_depth
};

// Classic adaptive Simpson with Richardson extrapolation; err is the
// standard |S2 - S1| / 15 estimate.
double adapt(Status& st, double a, double b, double fa, double fm, double fb,
             double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m);
  double rm = 0.5 * (m + b);
  if (lm <= a || rm <= m || m >= b) return whole;  // interval exhausted in double
  double flm = (*st.f)(lm);
  double frm = (*st.f)(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double err = (left + right - whole) / 15.0;
  if (std::abs(err) <= tol) return left + right + err;
  if (depth <= 0) {
    st.leftover += std::abs(err);
    return left + right + err;
  }
  return adapt(st, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adapt(st, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate_one(Status& st, double a, double b, double abs_tol, int max_depth) {
  const auto& f = *st.f;
  double m = 0.5 * (a + b);
  double fa = f(a), fm = f(m), fb = f(b);
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adapt(st, a, b, fa, fm, fb, whole, abs_tol, max_depth);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol, int max_depth) {
  return integrate_segments(f, a, b, {}, abs_tol, max_depth);
}

double integrate_segments(const std::function<double(double)>& f, double a,
                          double b, const std::vector<double>& interior_knots,
                          double abs_tol, int max_depth) {
  if (!(b >= a)) throw std::invalid_argument("integration bounds out of order");
  if (a == b) return 0.0;

  std::vector<double> pts{a};
  for (double k : interior_knots)
    if (k > a && k < b) pts.push_back(k);
  pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  Status st;
  st.f = &f;
  double per_segment = abs_tol / static_cast<double>(pts.size() - 1);
  double total = 0.0, comp = 0.0;  // Kahan
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    double v = integrate_one(st, pts[i], pts[i + 1], per_segment, max_depth);
    double y = v - comp;
    double t = total + y;
    comp = (t - total) - y;
    total = t;
  }
  if (st.leftover > abs_tol) {
    std::ostringstream msg;
    msg << "adaptive quadrature did not converge: achieved abs error ~"
        << st.leftover << ", requested " << abs_tol;
    throw numerical_error(msg.str());
  }
  return total;
}

}  // namespace sbfl::quadrature
