#include "streamcqr/piecewise.hpp"

#include <algorithm>
#include <cmath>

#include "streamcqr/errors.hpp"

namespace streamcqr {

PiecewisePolynomial::PiecewisePolynomial(std::vector<PolyPiece> pieces) : pieces_(std::move(pieces)) {
  for (std::size_t k = 0; k < pieces_.size(); ++k) {
    const auto& p = pieces_[k];
    if (!std::isfinite(p.lo) || !std::isfinite(p.hi) || !(p.lo < p.hi)) {
      throw InvalidArgument("piecewise polynomial: piece bounds must be finite with lo < hi");
    }
    if (k > 0 && p.lo < pieces_[k - 1].hi) {
      throw InvalidArgument("piecewise polynomial: pieces must be sorted and disjoint");
    }
    if (k > 0 && p.lo == pieces_[k - 1].hi && p.lo_closed) {
      throw InvalidArgument("piecewise polynomial: shared endpoint claimed twice");
    }
  }
}

PiecewisePolynomial PiecewisePolynomial::constant(double lo, double hi, double value, bool lo_closed) {
  return PiecewisePolynomial({PolyPiece{lo, hi, lo_closed, ShiftedPolynomial{lo, {value}}}});
}

const PolyPiece* PiecewisePolynomial::piece_at(double x) const noexcept {
  // first piece with hi >= x
  auto it = std::lower_bound(pieces_.begin(), pieces_.end(), x,
                             [](const PolyPiece& p, double v) { return p.hi < v; });
  if (it == pieces_.end() || !it->contains(x)) return nullptr;
  return &*it;
}

double PiecewisePolynomial::operator()(double x) const noexcept {
  const PolyPiece* p = piece_at(x);
  return p ? p->poly(x) : 0.0;
}

std::vector<double> PiecewisePolynomial::breakpoints() const {
  std::vector<double> out;
  out.reserve(2 * pieces_.size());
  for (const auto& p : pieces_) {
    out.push_back(p.lo);
    out.push_back(p.hi);
  }
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double PiecewisePolynomial::support_lo() const noexcept { return pieces_.empty() ? 0.0 : pieces_.front().lo; }
double PiecewisePolynomial::support_hi() const noexcept { return pieces_.empty() ? 0.0 : pieces_.back().hi; }

double PiecewisePolynomial::integral() const noexcept {
  double s = 0.0;
  for (const auto& p : pieces_) s += p.poly.integral(p.lo, p.hi);
  return s;
}

double PiecewisePolynomial::integral(double a, double b) const noexcept {
  double s = 0.0;
  for (const auto& p : pieces_) {
    const double lo = std::max(a, p.lo), hi = std::min(b, p.hi);
    if (lo < hi) s += p.poly.integral(lo, hi);
  }
  return s;
}

double PiecewisePolynomial::moment(int k) const {
  double s = 0.0;
  for (const auto& p : pieces_) {
    // x^k expanded around the piece center, multiplied into the piece polynomial
    const double c = p.poly.center;
    std::vector<double> xk(static_cast<std::size_t>(k) + 1, 0.0);
    double binom = 1.0;
    for (int j = 0; j <= k; ++j) {
      xk[static_cast<std::size_t>(j)] = binom * std::pow(c, k - j);
      binom = binom * (k - j) / (j + 1);
    }
    ShiftedPolynomial prod{c, std::vector<double>(p.poly.coeffs.size() + xk.size() - 1, 0.0)};
    for (std::size_t i = 0; i < p.poly.coeffs.size(); ++i)
      for (std::size_t j = 0; j < xk.size(); ++j) prod.coeffs[i + j] += p.poly.coeffs[i] * xk[j];
    s += prod.integral(p.lo, p.hi);
  }
  return s;
}

PiecewisePolynomial PiecewisePolynomial::scaled(double s) const {
  PiecewisePolynomial out = *this;
  for (auto& p : out.pieces_)
    for (auto& c : p.poly.coeffs) c *= s;
  return out;
}

PiecewisePolynomial PiecewisePolynomial::combine(double a, const PiecewisePolynomial& f, double b,
                                                 const PiecewisePolynomial& g) {
  std::vector<double> cuts = f.breakpoints();
  const auto gb = g.breakpoints();
  cuts.insert(cuts.end(), gb.begin(), gb.end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<PolyPiece> out;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double lo = cuts[k], hi = cuts[k + 1], mid = 0.5 * (lo + hi);
    const PolyPiece* pf = f.piece_at(mid);
    const PolyPiece* pg = g.piece_at(mid);
    if (!pf && !pg) continue;
    std::size_t deg = std::max(pf ? pf->poly.coeffs.size() : 0, pg ? pg->poly.coeffs.size() : 0);
    ShiftedPolynomial poly{lo, std::vector<double>(deg, 0.0)};
    if (pf) {
      const auto r = pf->poly.recentered(lo);
      for (std::size_t i = 0; i < r.coeffs.size(); ++i) poly.coeffs[i] += a * r.coeffs[i];
    }
    if (pg) {
      const auto r = pg->poly.recentered(lo);
      for (std::size_t i = 0; i < r.coeffs.size(); ++i) poly.coeffs[i] += b * r.coeffs[i];
    }
    const bool follows = !out.empty() && out.back().hi == lo;
    const bool lo_closed = !follows && (f.piece_at(lo) != nullptr || g.piece_at(lo) != nullptr);
    out.push_back(PolyPiece{lo, hi, lo_closed, std::move(poly)});
  }
  return PiecewisePolynomial(std::move(out));
}

}  // namespace streamcqr
