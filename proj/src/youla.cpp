#include "ykmpc/youla.hpp"

#include <numeric>

namespace ykmpc {

namespace {

std::vector<Index> range(Index start, Index count) {
  std::vector<Index> r(static_cast<size_t>(count));
  std::iota(r.begin(), r.end(), start);
  return r;
}

std::vector<Index> concat(std::initializer_list<std::vector<Index>> parts) {
  std::vector<Index> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace

StateSpace build_nominal_controller(const Mat& A, const Mat& B, const Mat& C, const Mat& Lx, const Mat& Kfx,
                                    double Ts) {
  const Index n = A.rows(), nu = B.cols(), ny = C.rows();
  if (Kfx.rows() != n || Kfx.cols() != ny || Lx.rows() != nu || Lx.cols() != n)
    throw Error(ErrorCode::InvalidArgument, "build_nominal_controller: gain dimensions");
  const Mat IK = Mat::Identity(n, n) - Kfx * C;
  Mat Bk(n, ny + nu), Dk(nu, ny + nu);
  Bk << Kfx, IK * B;
  Dk << Lx * Kfx, Lx * IK * B;
  return {IK * A, Bk, Lx * IK * A, Dk, Ts};
}

StateSpace build_nominal_plant(const Mat& A, const Mat& B, const Mat& C, double Ts) {
  const Index n = A.rows(), nu = B.cols(), ny = C.rows();
  Mat Cn(ny + nu, n), Dn(ny + nu, nu);
  Cn << C, Mat::Zero(nu, n);
  Dn << Mat::Zero(ny, nu), Mat::Identity(nu, nu);
  return {A, B, Cn, Dn, Ts};
}

CoprimeFactors coprime_factorize(const StateSpace& G, const StateSpace& K, const Mat& F, const Mat& Fc) {
  const Index n = G.nx(), nk = K.nx(), m = G.nu(), p = G.ny();
  if (K.nu() != p || K.ny() != m) throw Error(ErrorCode::InvalidArgument, "coprime_factorize: G and K not conformant");
  if (F.rows() != m || F.cols() != n || Fc.rows() != p || Fc.cols() != nk)
    throw Error(ErrorCode::InvalidArgument, "coprime_factorize: ancillary gain dimensions");
  const Mat &A = G.A, &B = G.B, &C = G.C, &D = G.D;
  const Mat &Ak = K.A, &Bk = K.B, &Ck = K.C, &Dk = K.D;
  if (spectral_radius((A + B * F).eval()) >= 1.0 - tol::stability_margin ||
      spectral_radius((Ak + Bk * Fc).eval()) >= 1.0 - tol::stability_margin)
    throw Error(ErrorCode::UnstableAncillary, "ancillary gains do not stabilize");
  Mat Y, Z;
  try {
    Y = inverse((Mat::Identity(m, m) - Dk * D).eval());
    Z = inverse((Mat::Identity(p, p) - D * Dk).eval());
  } catch (const Error&) {
    throw Error(ErrorCode::IllPosedFeedthrough, "I - Dk D is singular");
  }

  CoprimeFactors f;
  f.F = F;
  f.Fc = Fc;
  f.G = G;
  f.K = K;
  {
    Mat Cr(m + p, n + nk), Dr(m + p, m + p);
    Cr << F, Ck + Dk * Fc, C + D * F, Fc;
    Dr << Mat::Identity(m, m), Dk, D, Mat::Identity(p, p);
    f.right = StateSpace(block_diag(A + B * F, Ak + Bk * Fc), block_diag(B, Bk), Cr, Dr, G.Ts);
  }
  {
    Mat Al(n + nk, n + nk), Bl(n + nk, m + p), Cl(m + p, n + nk), Dl(m + p, m + p);
    Al << A + B * Y * Dk * C, -B * Y * Ck, -Bk * Z * C, Ak + Bk * Z * D * Ck;
    Bl << -B * Y, B * Y * Dk, Bk * Z * D, -Bk * Z;
    Cl << F - Y * Dk * C, Y * Ck, Z * C, Fc - Z * D * Ck;
    Dl << Y, -Y * Dk, -Z * D, Z;
    f.left = StateSpace(Al, Bl, Cl, Dl, G.Ts);
  }
  if (!is_stable(f.left)) throw Error(ErrorCode::InternalInstability, "controller does not stabilize the plant");
  f.M = subsystem(f.right, 0, m, 0, m);
  f.U = subsystem(f.right, 0, m, m, p);
  f.N = subsystem(f.right, m, p, 0, m);
  f.V = subsystem(f.right, m, p, m, p);
  f.Vt = subsystem(f.left, 0, m, 0, m);
  f.Ut = -subsystem(f.left, 0, m, m, p);
  f.Nt = -subsystem(f.left, m, p, 0, m);
  f.Mt = subsystem(f.left, m, p, m, p);
  return f;
}

double verify_bezout(const CoprimeFactors& f, Index L) {
  const StateSpace prod = f.left * f.right;
  return impulse_distance(prod, StateSpace::identity(prod.nu(), prod.Ts), L);
}

StateSpace build_J(const CoprimeFactors& f, const StateSpace& Kn) {
  const StateSpace Vi = inverse(f.V);
  const StateSpace Vti = inverse(f.Vt);
  return block<double>({{Kn, Vti}, {Vi, -(Vi * f.N)}});
}

StateSpace build_JG(const CoprimeFactors& f, const StateSpace& Gn) {
  const StateSpace Mi = inverse(f.M);
  const StateSpace Mti = inverse(f.Mt);
  return block<double>({{-(Mi * f.U), Mi}, {Mti, Gn}});
}

Mat feedforward_gain(const Mat& A, const Mat& B, const Mat& C, const Mat& Lx) {
  try {
    const Mat dc = C * solve_linear((Mat::Identity(A.rows(), A.cols()) - A - B * Lx).eval(), B);
    return inverse(dc);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SingularMatrix) throw Error(ErrorCode::SingularDcGain, "closed-loop DC gain singular");
    throw;
  }
}

std::pair<StateSpace, StateSpace> augment_J(const StateSpace& J, const StateSpace& Kff_sys, const CoprimeFactors& f) {
  const StateSpace Uf = f.Vt * Kff_sys;
  const StateSpace col = vconcat(Kff_sys, -(inverse(f.V) * f.N * Uf));
  return {hconcat(col, J), Uf};
}

std::pair<StateSpace, StateSpace> augment_JG(const StateSpace& JG, const StateSpace& Gd, const CoprimeFactors& f) {
  const StateSpace Nd = f.Mt * Gd;
  const StateSpace col = vconcat(-(inverse(f.M) * f.U * Nd), Gd);
  return {hconcat(JG, col), Nd};
}

StateSpace parameterize_controller(const CoprimeFactors& f, const StateSpace& Q) {
  return (f.U + f.M * Q) * inverse(f.V + f.N * Q);
}

StateSpace parameterize_plant(const CoprimeFactors& f, const StateSpace& S) {
  return (f.N + f.V * S) * inverse(f.M + f.U * S);
}

StateSpace yk_parameter_stable(const StateSpace& Gs, const StateSpace& Ks) { return feedback(Ks, Gs, -1); }

DualS dual_s_from_actual(const CoprimeFactors& f, const StateSpace& G_act, const StateSpace& Kn, Index L, double tol) {
  DualS out;
  out.actual = coprime_factorize(G_act, Kn, f.F, f.Fc);
  const CoprimeFactors& a = out.actual;
  out.S = inverse(f.V) * a.V * (a.Nt * f.M - a.Mt * f.N);
  const StateSpace JG = build_JG(f, f.G);
  out.validation_error = impulse_distance(lft_upper(JG, out.S), G_act, L);
  if (!(out.validation_error <= tol))
    throw Error(ErrorCode::ValidationFailed,
                "G(S) does not reproduce G_act (deviation " + std::to_string(out.validation_error) + ")");
  return out;
}

StateSpace select_channels(const StateSpace& g, const std::vector<Index>& outs, const std::vector<Index>& ins) {
  Mat B(g.nx(), static_cast<Index>(ins.size())), C(static_cast<Index>(outs.size()), g.nx());
  Mat D(static_cast<Index>(outs.size()), static_cast<Index>(ins.size()));
  for (size_t j = 0; j < ins.size(); ++j) {
    if (ins[j] < 0 || ins[j] >= g.nu()) throw Error(ErrorCode::InvalidArgument, "select_channels: input index");
    B.col(static_cast<Index>(j)) = g.B.col(ins[j]);
  }
  for (size_t i = 0; i < outs.size(); ++i) {
    if (outs[i] < 0 || outs[i] >= g.ny()) throw Error(ErrorCode::InvalidArgument, "select_channels: output index");
    C.row(static_cast<Index>(i)) = g.C.row(outs[i]);
    for (size_t j = 0; j < ins.size(); ++j) D(static_cast<Index>(i), static_cast<Index>(j)) = g.D(outs[i], ins[j]);
  }
  return {g.A, B, C, D, g.Ts};
}

StateSpace close_self_loop(const StateSpace& k, Index nu) {
  if (k.ny() != nu || k.nu() < nu) throw Error(ErrorCode::InvalidArgument, "close_self_loop: dimensions");
  const StateSpace dup = select_channels(k, concat({range(0, nu), range(0, nu)}), range(0, k.nu()));
  return lft_lower(dup, StateSpace::identity(nu, k.Ts));
}

StateSpace assemble_closed_loop(const StateSpace& JGaug, const StateSpace& Jaug, const StateSpace& Q,
                                const StateSpace& S) {
  const StateSpace Gp = lft_upper(JGaug, S);  // [u; d] -> m
  const StateSpace Kc = lft_lower(Jaug, Q);   // [r; m] -> u
  const Index nm = Gp.ny(), nu = Kc.ny();
  const Index nr = Kc.nu() - nm, nd = Gp.nu() - nu;
  if (nr < 0 || nd < 0) throw Error(ErrorCode::InvalidArgument, "assemble_closed_loop: block dimensions");
  // append: inputs [r, m_in, u_in, d], outputs [u_out, m_out]
  const StateSpace big = append(Kc, Gp);
  const Index r0 = 0, m_in0 = nr, u_in0 = nr + nm, d0 = nr + nm + nu;
  const Index u_out0 = 0, m_out0 = nu;
  const StateSpace wired = select_channels(big, concat({range(m_out0, nm), range(u_out0, nu), range(m_out0, nm)}),
                                           concat({range(r0, nr), range(d0, nd), range(u_in0, nu), range(m_in0, nm)}));
  const StateSpace cl = lft_lower(wired, StateSpace::identity(nu + nm, big.Ts));
  if (!is_stable(cl)) throw Error(ErrorCode::InternalInstability, "closed loop is not internally stable");
  return cl;
}

YkBlocks build_yk_blocks(const CoprimeFactors& f, const StateSpace& Kn, const StateSpace& Gn, const Mat& Kff,
                         const StateSpace& Gd) {
  YkBlocks b;
  const Index nu = Gn.nu(), nm = Gn.ny(), nd = Gd.nu();
  b.J = build_J(f, Kn);
  b.JG = build_JG(f, Gn);
  std::tie(b.Jaug, b.Uf) = augment_J(b.J, StateSpace::gain(Kff, Gn.Ts), f);
  std::tie(b.JGaug, b.Nd) = augment_JG(b.JG, Gd, f);
  b.J_io = IoPartition::from_sizes({{"meas", nm}, {"eps", nu}}, {{"u", nu}, {"eta", nm}});
  b.JG_io = IoPartition::from_sizes({{"s_out", nm}, {"u", nu}}, {{"s_in", nu}, {"meas", nm}});
  b.Jaug_io = IoPartition::from_sizes({{"r", Kff.cols()}, {"meas", nm}, {"eps", nu}}, {{"u", nu}, {"eta", nm}});
  b.JGaug_io = IoPartition::from_sizes({{"s_out", nm}, {"u", nu}, {"d", nd}}, {{"s_in", nu}, {"meas", nm}});
  b.J_io.validate(b.J.nu(), b.J.ny());
  b.JG_io.validate(b.JG.nu(), b.JG.ny());
  b.Jaug_io.validate(b.Jaug.nu(), b.Jaug.ny());
  b.JGaug_io.validate(b.JGaug.nu(), b.JGaug.ny());
  return b;
}

}  // namespace ykmpc
