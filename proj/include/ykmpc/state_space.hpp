#pragma once

#include <complex>
#include <string>
#include <vector>

#include "ykmpc/lina.hpp"

namespace ykmpc {

// Discrete LTI system x+ = A x + B u, y = C x + D u.
template <typename Scalar>
struct BasicStateSpace {
  Matrix<Scalar> A, B, C, D;
  Scalar Ts = 1;

  BasicStateSpace() : A(0, 0), B(0, 0), C(0, 0), D(0, 0) {}
  BasicStateSpace(Matrix<Scalar> a, Matrix<Scalar> b, Matrix<Scalar> c, Matrix<Scalar> d, Scalar ts = 1)
      : A(std::move(a)), B(std::move(b)), C(std::move(c)), D(std::move(d)), Ts(ts) {
    validate();
  }

  Index nx() const { return A.rows(); }
  Index nu() const { return D.cols(); }
  Index ny() const { return D.rows(); }

  void validate() const {
    const Index n = A.rows();
    if (A.cols() != n || B.rows() != n || C.cols() != n || B.cols() != D.cols() || C.rows() != D.rows())
      throw Error(ErrorCode::InvalidArgument, "state-space dimensions inconsistent");
    if (!(Ts > 0)) throw Error(ErrorCode::InvalidArgument, "sampling period must be positive");
    if (!A.allFinite() || !B.allFinite() || !C.allFinite() || !D.allFinite())
      throw Error(ErrorCode::InvalidArgument, "state-space entries must be finite");
  }

  static BasicStateSpace gain(const Matrix<Scalar>& d, Scalar ts = 1) {
    return {Matrix<Scalar>(0, 0), Matrix<Scalar>(0, d.cols()), Matrix<Scalar>(d.rows(), 0), d, ts};
  }
  static BasicStateSpace zero(Index ny, Index nu, Scalar ts = 1) {
    return gain(Matrix<Scalar>::Zero(ny, nu), ts);
  }
  static BasicStateSpace identity(Index n, Scalar ts = 1) {
    return gain(Matrix<Scalar>::Identity(n, n), ts);
  }
};

using StateSpace = BasicStateSpace<double>;

struct ChannelGroup {
  std::string name;
  Index start = 0;
  Index size = 0;
};

// Named channel ranges kept next to a system; the algebra never reads them.
struct IoPartition {
  std::vector<ChannelGroup> inputs;
  std::vector<ChannelGroup> outputs;

  static IoPartition from_sizes(const std::vector<std::pair<std::string, Index>>& in,
                                const std::vector<std::pair<std::string, Index>>& out) {
    IoPartition p;
    Index at = 0;
    for (const auto& [name, n] : in) {
      p.inputs.push_back({name, at, n});
      at += n;
    }
    at = 0;
    for (const auto& [name, n] : out) {
      p.outputs.push_back({name, at, n});
      at += n;
    }
    return p;
  }

  const ChannelGroup& input(const std::string& name) const { return find(inputs, name); }
  const ChannelGroup& output(const std::string& name) const { return find(outputs, name); }

  void validate(Index nu, Index ny) const {
    check(inputs, nu);
    check(outputs, ny);
  }

 private:
  static const ChannelGroup& find(const std::vector<ChannelGroup>& groups, const std::string& name) {
    for (const auto& g : groups)
      if (g.name == name) return g;
    throw Error(ErrorCode::InvalidArgument, "no channel group named " + name);
  }
  static void check(const std::vector<ChannelGroup>& groups, Index n) {
    std::vector<int> hits(static_cast<size_t>(n), 0);
    for (const auto& g : groups) {
      if (g.start < 0 || g.size < 0 || g.start + g.size > n)
        throw Error(ErrorCode::InvalidArgument, "channel group out of range: " + g.name);
      for (Index i = g.start; i < g.start + g.size; ++i) ++hits[static_cast<size_t>(i)];
    }
    for (int h : hits)
      if (h != 1) throw Error(ErrorCode::InvalidArgument, "channel groups must be disjoint and cover");
  }
};

namespace detail {

template <typename Scalar>
void check_ts(const BasicStateSpace<Scalar>& a, const BasicStateSpace<Scalar>& b) {
  using std::abs;
  if (abs(a.Ts - b.Ts) > Scalar(1e-12) * abs(a.Ts))
    throw Error(ErrorCode::InvalidArgument, "sampling periods differ");
}

// (I - M)^{-1} X with a conditioning test on I - M.
template <typename Scalar>
Matrix<Scalar> loop_solve(const Matrix<Scalar>& M, const Matrix<Scalar>& X) {
  const Index n = M.rows();
  if (n == 0) return X;
  const Matrix<Scalar> W = Matrix<Scalar>::Identity(n, n) - M;
  Eigen::PartialPivLU<Matrix<Scalar>> lu(W);
  if (!(lu.rcond() > Scalar(tol::well_posed_rcond)))
    throw Error(ErrorCode::IllPosed, "algebraic loop is ill-posed");
  return lu.solve(X);
}

}  // namespace detail

template <typename Scalar>
bool is_stable(const BasicStateSpace<Scalar>& sys, Scalar margin = Scalar(tol::stability_margin)) {
  return spectral_radius(sys.A) < Scalar(1) - margin;
}

// Cascade: u -> g1 -> g2 -> y, i.e. the transfer product g2 * g1.
template <typename Scalar>
BasicStateSpace<Scalar> series(const BasicStateSpace<Scalar>& g1, const BasicStateSpace<Scalar>& g2) {
  using M = Matrix<Scalar>;
  if (g1.ny() != g2.nu()) throw Error(ErrorCode::InvalidArgument, "series: channel mismatch");
  detail::check_ts(g1, g2);
  const Index n1 = g1.nx(), n2 = g2.nx();
  M A = M::Zero(n1 + n2, n1 + n2);
  A.topLeftCorner(n1, n1) = g1.A;
  A.bottomLeftCorner(n2, n1) = g2.B * g1.C;
  A.bottomRightCorner(n2, n2) = g2.A;
  M B(n1 + n2, g1.nu());
  B << g1.B, g2.B * g1.D;
  M C(g2.ny(), n1 + n2);
  C << g2.D * g1.C, g2.C;
  return {A, B, C, g2.D * g1.D, g1.Ts};
}

template <typename Scalar>
BasicStateSpace<Scalar> parallel(const BasicStateSpace<Scalar>& g1, const BasicStateSpace<Scalar>& g2) {
  using M = Matrix<Scalar>;
  if (g1.nu() != g2.nu() || g1.ny() != g2.ny()) throw Error(ErrorCode::InvalidArgument, "parallel: channel mismatch");
  detail::check_ts(g1, g2);
  M B(g1.nx() + g2.nx(), g1.nu());
  B << g1.B, g2.B;
  M C(g1.ny(), g1.nx() + g2.nx());
  C << g1.C, g2.C;
  return {block_diag(g1.A, g2.A), B, C, g1.D + g2.D, g1.Ts};
}

// Outputs stacked, shared input.
template <typename Scalar>
BasicStateSpace<Scalar> vconcat(const BasicStateSpace<Scalar>& g1, const BasicStateSpace<Scalar>& g2) {
  using M = Matrix<Scalar>;
  if (g1.nu() != g2.nu()) throw Error(ErrorCode::InvalidArgument, "vconcat: input mismatch");
  detail::check_ts(g1, g2);
  M B(g1.nx() + g2.nx(), g1.nu());
  B << g1.B, g2.B;
  M D(g1.ny() + g2.ny(), g1.nu());
  D << g1.D, g2.D;
  return {block_diag(g1.A, g2.A), B, block_diag(g1.C, g2.C), D, g1.Ts};
}

// Inputs stacked, outputs summed.
template <typename Scalar>
BasicStateSpace<Scalar> hconcat(const BasicStateSpace<Scalar>& g1, const BasicStateSpace<Scalar>& g2) {
  using M = Matrix<Scalar>;
  if (g1.ny() != g2.ny()) throw Error(ErrorCode::InvalidArgument, "hconcat: output mismatch");
  detail::check_ts(g1, g2);
  M C(g1.ny(), g1.nx() + g2.nx());
  C << g1.C, g2.C;
  M D(g1.ny(), g1.nu() + g2.nu());
  D << g1.D, g2.D;
  return {block_diag(g1.A, g2.A), block_diag(g1.B, g2.B), C, D, g1.Ts};
}

// Block-diagonal interconnection: independent inputs and outputs.
template <typename Scalar>
BasicStateSpace<Scalar> append(const BasicStateSpace<Scalar>& g1, const BasicStateSpace<Scalar>& g2) {
  detail::check_ts(g1, g2);
  return {block_diag(g1.A, g2.A), block_diag(g1.B, g2.B), block_diag(g1.C, g2.C), block_diag(g1.D, g2.D), g1.Ts};
}

// Block transfer matrix [[rows[0][0], rows[0][1], ...], ...]; states of every block are kept.
template <typename Scalar>
BasicStateSpace<Scalar> block(const std::vector<std::vector<BasicStateSpace<Scalar>>>& rows) {
  if (rows.empty() || rows.front().empty()) throw Error(ErrorCode::InvalidArgument, "block: empty layout");
  BasicStateSpace<Scalar> out;
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) throw Error(ErrorCode::InvalidArgument, "block: ragged layout");
    BasicStateSpace<Scalar> row = rows[i].front();
    for (size_t j = 1; j < rows[i].size(); ++j) row = hconcat(row, rows[i][j]);
    out = (i == 0) ? row : vconcat(out, row);
  }
  return out;
}

template <typename Scalar>
BasicStateSpace<Scalar> scale(const Matrix<Scalar>& k, const BasicStateSpace<Scalar>& g) {
  if (k.cols() != g.ny()) throw Error(ErrorCode::InvalidArgument, "scale: channel mismatch");
  return {g.A, g.B, k * g.C, k * g.D, g.Ts};
}

template <typename Scalar>
BasicStateSpace<Scalar> scale(const BasicStateSpace<Scalar>& g, const Matrix<Scalar>& k) {
  if (k.rows() != g.nu()) throw Error(ErrorCode::InvalidArgument, "scale: channel mismatch");
  return {g.A, g.B * k, g.C, g.D * k, g.Ts};
}

template <typename Scalar>
BasicStateSpace<Scalar> operator-(const BasicStateSpace<Scalar>& g) {
  return {g.A, g.B, -g.C, -g.D, g.Ts};
}
template <typename Scalar>
BasicStateSpace<Scalar> operator+(const BasicStateSpace<Scalar>& a, const BasicStateSpace<Scalar>& b) {
  return parallel(a, b);
}
template <typename Scalar>
BasicStateSpace<Scalar> operator-(const BasicStateSpace<Scalar>& a, const BasicStateSpace<Scalar>& b) {
  return parallel(a, -b);
}
// Transfer-matrix product: (a * b)(z) = a(z) b(z), so b acts first.
template <typename Scalar>
BasicStateSpace<Scalar> operator*(const BasicStateSpace<Scalar>& a, const BasicStateSpace<Scalar>& b) {
  return series(b, a);
}

// Keeps every state; selects output rows [r0, r0+nr) and input columns [c0, c0+nc).
template <typename Scalar>
BasicStateSpace<Scalar> subsystem(const BasicStateSpace<Scalar>& g, Index r0, Index nr, Index c0, Index nc) {
  if (r0 < 0 || c0 < 0 || r0 + nr > g.ny() || c0 + nc > g.nu())
    throw Error(ErrorCode::InvalidArgument, "subsystem: range out of bounds");
  return {g.A, g.B.middleCols(c0, nc), g.C.middleRows(r0, nr), g.D.block(r0, c0, nr, nc), g.Ts};
}

template <typename Scalar>
BasicStateSpace<Scalar> subsystem(const BasicStateSpace<Scalar>& g, const IoPartition& io, const std::string& out,
                                  const std::string& in) {
  const auto& o = io.output(out);
  const auto& i = io.input(in);
  return subsystem(g, o.start, o.size, i.start, i.size);
}

// Lower star product. p: [w; u] -> [z; y] with dim(u) = nu_loop, dim(y) = ny_loop;
// k: [y; a] -> [u; b]. The result maps [w; a] -> [z; b].
template <typename Scalar>
BasicStateSpace<Scalar> star_lower(const BasicStateSpace<Scalar>& p, const BasicStateSpace<Scalar>& k,
                                   Index nu_loop, Index ny_loop) {
  using M = Matrix<Scalar>;
  detail::check_ts(p, k);
  const Index m1 = p.nu() - nu_loop, p1 = p.ny() - ny_loop;
  const Index ma = k.nu() - ny_loop, pb = k.ny() - nu_loop;
  if (m1 < 0 || p1 < 0 || ma < 0 || pb < 0) throw Error(ErrorCode::InvalidArgument, "star_lower: channel mismatch");
  const Index n = p.nx(), nk = k.nx(), N = n + nk;
  const M B1 = p.B.leftCols(m1), B2 = p.B.rightCols(nu_loop);
  const M C1 = p.C.topRows(p1), C2 = p.C.bottomRows(ny_loop);
  const M D11 = p.D.topLeftCorner(p1, m1), D12 = p.D.topRightCorner(p1, nu_loop);
  const M D21 = p.D.bottomLeftCorner(ny_loop, m1), D22 = p.D.bottomRightCorner(ny_loop, nu_loop);
  const M Bk1 = k.B.leftCols(ny_loop), Bk2 = k.B.rightCols(ma);
  const M Ck1 = k.C.topRows(nu_loop), Ck2 = k.C.bottomRows(pb);
  const M Dk11 = k.D.topLeftCorner(nu_loop, ny_loop), Dk12 = k.D.topRightCorner(nu_loop, ma);
  const M Dk21 = k.D.bottomLeftCorner(pb, ny_loop), Dk22 = k.D.bottomRightCorner(pb, ma);

  // u = Ux [x; xk] + Uw [w; a]
  M rhs_x(nu_loop, N), rhs_w(nu_loop, m1 + ma);
  rhs_x << Dk11 * C2, Ck1;
  rhs_w << Dk11 * D21, Dk12;
  const M Ux = detail::loop_solve<Scalar>(Dk11 * D22, rhs_x);
  const M Uw = detail::loop_solve<Scalar>(Dk11 * D22, rhs_w);
  M Yx(ny_loop, N), Yw(ny_loop, m1 + ma);
  Yx << C2, M::Zero(ny_loop, nk);
  Yw << D21, M::Zero(ny_loop, ma);
  Yx += D22 * Ux;
  Yw += D22 * Uw;

  M A = M::Zero(N, N), B = M::Zero(N, m1 + ma), C = M::Zero(p1 + pb, N), D = M::Zero(p1 + pb, m1 + ma);
  A.topLeftCorner(n, n) = p.A;
  A.topRows(n) += B2 * Ux;
  A.bottomRightCorner(nk, nk) = k.A;
  A.bottomRows(nk) += Bk1 * Yx;
  B.topLeftCorner(n, m1) = B1;
  B.topRows(n) += B2 * Uw;
  B.bottomRightCorner(nk, ma) = Bk2;
  B.bottomRows(nk) += Bk1 * Yw;
  C.topLeftCorner(p1, n) = C1;
  C.topRows(p1) += D12 * Ux;
  C.bottomRightCorner(pb, nk) = Ck2;
  C.bottomRows(pb) += Dk21 * Yx;
  D.topLeftCorner(p1, m1) = D11;
  D.topRows(p1) += D12 * Uw;
  D.bottomRightCorner(pb, ma) = Dk22;
  D.bottomRows(pb) += Dk21 * Yw;
  return {A, B, C, D, p.Ts};
}

// Lower LFT: k closes p's last k.ny() inputs and last k.nu() outputs.
template <typename Scalar>
BasicStateSpace<Scalar> lft_lower(const BasicStateSpace<Scalar>& p, const BasicStateSpace<Scalar>& k) {
  return star_lower(p, k, k.ny(), k.nu());
}

// Moves the first `in` inputs and first `out` outputs to the end.
template <typename Scalar>
BasicStateSpace<Scalar> rotate_channels(const BasicStateSpace<Scalar>& p, Index in, Index out) {
  using M = Matrix<Scalar>;
  M B(p.nx(), p.nu()), C(p.ny(), p.nx()), D(p.ny(), p.nu());
  const Index ri = p.nu() - in, ro = p.ny() - out;
  B << p.B.rightCols(ri), p.B.leftCols(in);
  C << p.C.bottomRows(ro), p.C.topRows(out);
  M Dc(p.ny(), p.nu());
  Dc << p.D.rightCols(ri), p.D.leftCols(in);
  D << Dc.bottomRows(ro), Dc.topRows(out);
  return {p.A, B, C, D, p.Ts};
}

// Upper LFT: s closes p's first s.ny() inputs and first s.nu() outputs.
template <typename Scalar>
BasicStateSpace<Scalar> lft_upper(const BasicStateSpace<Scalar>& p, const BasicStateSpace<Scalar>& s) {
  if (s.ny() > p.nu() || s.nu() > p.ny()) throw Error(ErrorCode::InvalidArgument, "lft_upper: channel mismatch");
  return lft_lower(rotate_channels(p, s.ny(), s.nu()), s);
}

// Closed loop from r to y for u = r + sign * k(y).
template <typename Scalar>
BasicStateSpace<Scalar> feedback(const BasicStateSpace<Scalar>& g, const BasicStateSpace<Scalar>& k, int sign = -1) {
  using M = Matrix<Scalar>;
  if (k.nu() != g.ny() || k.ny() != g.nu()) throw Error(ErrorCode::InvalidArgument, "feedback: channel mismatch");
  const Scalar s = static_cast<Scalar>(sign);
  M B(g.nx(), 2 * g.nu()), C(2 * g.ny(), g.nx()), D(2 * g.ny(), 2 * g.nu());
  B << g.B, s * g.B;
  C << g.C, g.C;
  D << g.D, s * g.D, g.D, s * g.D;
  return lft_lower(BasicStateSpace<Scalar>(g.A, B, C, D, g.Ts), k);
}

// Feedthrough inversion; requires square nonsingular D.
template <typename Scalar>
BasicStateSpace<Scalar> inverse(const BasicStateSpace<Scalar>& g) {
  using M = Matrix<Scalar>;
  if (g.nu() != g.ny()) throw Error(ErrorCode::IllPosed, "inverse: non-square system");
  Eigen::PartialPivLU<M> lu(g.D);
  if (g.nu() > 0 && !(lu.rcond() > Scalar(tol::well_posed_rcond)))
    throw Error(ErrorCode::IllPosed, "inverse: singular feedthrough");
  const M Di = g.nu() > 0 ? M(lu.inverse()) : M(0, 0);
  return {g.A - g.B * Di * g.C, g.B * Di, -Di * g.C, Di, g.Ts};
}

template <typename Scalar>
std::vector<Matrix<Scalar>> impulse_response(const BasicStateSpace<Scalar>& g, Index L) {
  std::vector<Matrix<Scalar>> h;
  if (L < 1) throw Error(ErrorCode::InvalidArgument, "impulse_response: L must be positive");
  h.reserve(static_cast<size_t>(L));
  h.push_back(g.D);
  Matrix<Scalar> AkB = g.B;
  for (Index k = 1; k < L; ++k) {
    h.push_back(g.C * AkB);
    AkB = (g.A * AkB).eval();
  }
  return h;
}

// Max absolute entrywise difference of impulse responses over L samples.
template <typename Scalar>
Scalar impulse_distance(const BasicStateSpace<Scalar>& a, const BasicStateSpace<Scalar>& b, Index L) {
  if (a.nu() != b.nu() || a.ny() != b.ny()) throw Error(ErrorCode::InvalidArgument, "impulse_distance: shape mismatch");
  const auto ha = impulse_response(a, L), hb = impulse_response(b, L);
  Scalar worst = 0;
  for (size_t k = 0; k < ha.size(); ++k)
    if (ha[k].size() > 0) worst = std::max(worst, (ha[k] - hb[k]).cwiseAbs().maxCoeff());
  return worst;
}

template <typename Scalar>
Scalar h2_norm(const BasicStateSpace<Scalar>& g) {
  if (g.nx() == 0) return g.D.norm();
  if (!is_stable(g)) throw Error(ErrorCode::UnstableSystem, "h2_norm of an unstable system");
  const Matrix<Scalar> P = solve_dlyap(g.A, (g.B * g.B.transpose()).eval());
  using std::sqrt;
  const Scalar v = (g.C * P * g.C.transpose()).trace() + g.D.squaredNorm();
  return sqrt(std::max(v, Scalar(0)));
}

template <typename Scalar>
Matrix<Scalar> dc_gain(const BasicStateSpace<Scalar>& g) {
  const Index n = g.nx();
  if (n == 0) return g.D;
  try {
    return g.C * solve_linear((Matrix<Scalar>::Identity(n, n) - g.A).eval(), g.B) + g.D;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SingularMatrix) throw Error(ErrorCode::PoleAtOne, "I - A singular");
    throw;
  }
}

// Zero-initial-state response; column k of u is the input at sample k.
template <typename Scalar>
Matrix<Scalar> step_response_sim(const BasicStateSpace<Scalar>& g, const Matrix<Scalar>& u) {
  if (u.rows() != g.nu()) throw Error(ErrorCode::InvalidArgument, "step_response_sim: channel mismatch");
  Matrix<Scalar> y(g.ny(), u.cols());
  Vector<Scalar> x = Vector<Scalar>::Zero(g.nx());
  for (Index k = 0; k < u.cols(); ++k) {
    y.col(k) = g.C * x + g.D * u.col(k);
    x = (g.A * x + g.B * u.col(k)).eval();
  }
  return y;
}

template <typename Scalar>
Matrix<std::complex<Scalar>> frequency_response(const BasicStateSpace<Scalar>& g, std::complex<Scalar> z) {
  using CM = Matrix<std::complex<Scalar>>;
  const Index n = g.nx();
  CM D = g.D.template cast<std::complex<Scalar>>();
  if (n == 0) return D;
  CM zI_A = z * CM::Identity(n, n) - g.A.template cast<std::complex<Scalar>>();
  return g.C.template cast<std::complex<Scalar>>() *
             zI_A.partialPivLu().solve(g.B.template cast<std::complex<Scalar>>()) +
         D;
}

}  // namespace ykmpc
