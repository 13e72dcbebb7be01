#pragma once

// Truncated Taylor jets carrying the five derivative slots the KdV residual
// needs: u, u_t, u_x, u_xx, u_xxx. Mixed t-x slots are deliberately absent.

#include <cmath>

namespace kdv::autodiff {

template <class T>
struct BasicJet {
  T v{};     // value
  T vt{};    // d/dt
  T vx{};    // d/dx
  T vxx{};   // d2/dx2
  T vxxx{};  // d3/dx3
};

using Jet = BasicJet<double>;

/// Identity chart in x: (x, 0, 1, 0, 0).
inline Jet seed_x(double x) { return {x, 0.0, 1.0, 0.0, 0.0}; }

/// Identity chart in t: (t, 1, 0, 0, 0).
inline Jet seed_t(double t) { return {t, 1.0, 0.0, 0.0, 0.0}; }

/// Constant jet (c, 0, 0, 0, 0).
inline Jet constant_jet(double c) { return {c, 0.0, 0.0, 0.0, 0.0}; }

template <class T>
BasicJet<T> operator+(const BasicJet<T>& a, const BasicJet<T>& b) {
  return {a.v + b.v, a.vt + b.vt, a.vx + b.vx, a.vxx + b.vxx, a.vxxx + b.vxxx};
}

template <class T>
BasicJet<T> operator-(const BasicJet<T>& a, const BasicJet<T>& b) {
  return {a.v - b.v, a.vt - b.vt, a.vx - b.vx, a.vxx - b.vxx, a.vxxx - b.vxxx};
}

template <class T>
BasicJet<T> operator-(const BasicJet<T>& a) {
  return {-a.v, -a.vt, -a.vx, -a.vxx, -a.vxxx};
}

template <class T>
BasicJet<T> scale(const BasicJet<T>& a, double k) {
  return {k * a.v, k * a.vt, k * a.vx, k * a.vxx, k * a.vxxx};
}

/// Adds a constant to the value slot only.
template <class T>
BasicJet<T> shift(const BasicJet<T>& a, double c) {
  return {a.v + c, a.vt, a.vx, a.vxx, a.vxxx};
}

/// Leibniz rule per slot.
template <class T>
BasicJet<T> operator*(const BasicJet<T>& a, const BasicJet<T>& b) {
  BasicJet<T> r;
  r.v = a.v * b.v;
  r.vt = a.vt * b.v + a.v * b.vt;
  r.vx = a.vx * b.v + a.v * b.vx;
  r.vxx = a.vxx * b.v + 2.0 * (a.vx * b.vx) + a.v * b.vxx;
  r.vxxx = a.vxxx * b.v + 3.0 * (a.vxx * b.vx) + 3.0 * (a.vx * b.vxx) +
           a.v * b.vxxx;
  return r;
}

/// Applies a scalar function f to a jet given f(a), f'(a), f''(a), f'''(a)
/// (Faa di Bruno through third order, no mixed slots).
template <class T>
BasicJet<T> compose(const BasicJet<T>& a, const T& d0, const T& d1,
                    const T& d2, const T& d3) {
  BasicJet<T> r;
  r.v = d0;
  r.vt = d1 * a.vt;
  r.vx = d1 * a.vx;
  r.vxx = d2 * (a.vx * a.vx) + d1 * a.vxx;
  r.vxxx = d3 * (a.vx * a.vx * a.vx) + 3.0 * (d2 * (a.vx * a.vxx)) +
           d1 * a.vxxx;
  return r;
}

template <class T>
BasicJet<T> sin(const BasicJet<T>& a) {
  using std::cos;
  using std::sin;
  const T s = sin(a.v);
  const T c = cos(a.v);
  return compose(a, s, c, -s, -c);
}

template <class T>
BasicJet<T> cos(const BasicJet<T>& a) {
  using std::cos;
  using std::sin;
  const T s = sin(a.v);
  const T c = cos(a.v);
  return compose(a, c, -s, -c, s);
}

}  // namespace kdv::autodiff
