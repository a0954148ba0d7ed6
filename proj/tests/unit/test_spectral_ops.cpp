#include <random>

#include <gtest/gtest.h>

#include "bdd/errors.hpp"
#include "bdd/instance_gen.hpp"
#include "bdd/spectral_ops.hpp"
#include "oracles.hpp"

using namespace bdd;

namespace {

double rel_diff(const CVector &a, const CVector &b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

double rel_diff(const CMatrix &a, const CMatrix &b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

MeasurementEnsemble all_ones_ensemble(const Dimensions &d) {
  std::vector<RVector> r(d.N, RVector::Ones(d.Q));
  std::vector<RMatrix> c;
  for (int n = 0; n < d.N; ++n)
    c.push_back(make_coding_matrix(d.Q, d.K, n, d.N));
  return MeasurementEnsemble(d, r, c);
}

} // namespace

TEST(Dimensions, RejectsBrokenOrderings) {
  EXPECT_NO_THROW((Dimensions{16, 8, 4, 3, 2}.validate()));
  EXPECT_THROW((Dimensions{16, 8, 4, 9, 2}.validate()), InvalidArgument); // K > Q
  EXPECT_THROW((Dimensions{16, 17, 4, 3, 2}.validate()), InvalidArgument); // Q > L
  EXPECT_THROW((Dimensions{16, 8, 17, 3, 2}.validate()), InvalidArgument); // M > L
  EXPECT_THROW((Dimensions{16, 8, 4, 3, 0}.validate()), InvalidArgument);
  EXPECT_THROW((Dimensions{16, 8, 4, 0, 1}.validate()), InvalidArgument);
}

TEST(MeasurementEnsemble, ValidatesSignsAndOrthonormality) {
  const Dimensions d{16, 8, 4, 3, 1};
  std::mt19937_64 rng(3);
  RMatrix c = oracle::random_orthonormal(rng, 8, 3);
  RVector r = oracle::random_signs(rng, 8);
  EXPECT_NO_THROW(MeasurementEnsemble(d, {r}, {c}));
  RVector bad = r;
  bad[2] = 0.5;
  EXPECT_THROW(MeasurementEnsemble(d, {bad}, {c}), InvalidArgument);
  RMatrix skew = c;
  skew(0, 0) += 1e-6;
  EXPECT_THROW(MeasurementEnsemble(d, {r}, {skew}), InvalidArgument);
  EXPECT_THROW(MeasurementEnsemble(d, {r, r}, {c}), InvalidArgument);
}

TEST(PartialDft, FirstColumnIsConstant) {
  CVector e(1);
  e << 1.0;
  const CVector out = partial_dft_apply(4, e);
  ASSERT_EQ(out.size(), 4);
  for (int i = 0; i < 4; ++i)
    EXPECT_NEAR(std::abs(out[i] - cplx(0.5, 0.0)), 0.0, 1e-15);
}

TEST(PartialDft, ZeroInputGivesZero) {
  EXPECT_EQ(partial_dft_apply(8, CVector::Zero(3)).norm(), 0.0);
  EXPECT_EQ(partial_dft_adjoint(8, CVector::Zero(8), 3).norm(), 0.0);
}

TEST(PartialDft, MatchesDenseSlice) {
  std::mt19937_64 rng(11);
  const CVector v = oracle::random_complex(rng, 5);
  EXPECT_LT(rel_diff(partial_dft_apply(16, v), oracle::dft_slice(16, 5) * v), 1e-12);
  const CVector w = oracle::random_complex(rng, 16);
  EXPECT_LT(rel_diff(partial_dft_adjoint(16, w, 5), oracle::dft_slice(16, 5).adjoint() * w),
            1e-12);
}

TEST(PartialDft, UnitaryRoundTrip) {
  std::mt19937_64 rng(12);
  const CVector v = oracle::random_complex(rng, 8);
  EXPECT_LT(rel_diff(partial_dft_adjoint(8, partial_dft_apply(8, v), 8), v), 1e-12);
}

TEST(PartialDft, AdjointIdentity) {
  std::mt19937_64 rng(13);
  const CVector v = oracle::random_complex(rng, 4);
  const CVector w = oracle::random_complex(rng, 16);
  const cplx lhs = w.dot(partial_dft_apply(16, v));
  const cplx rhs = partial_dft_adjoint(16, w, 4).dot(v);
  EXPECT_LT(std::abs(lhs - rhs) / std::abs(lhs), 1e-12);
}

TEST(PartialDft, RejectsBadLengths) {
  EXPECT_THROW(partial_dft_apply(4, CVector::Zero(5)), InvalidArgument);
  EXPECT_THROW(partial_dft_adjoint(4, CVector::Zero(5), 2), InvalidArgument);
  EXPECT_THROW(partial_dft_adjoint(4, CVector::Zero(4), 5), InvalidArgument);
}

TEST(ForwardComponent, ImpulseChannelGivesSpectrumOfSignal) {
  const Dimensions d{16, 8, 4, 3, 1};
  const MeasurementEnsemble ens = all_ones_ensemble(d);
  CVector h = CVector::Zero(4);
  h[0] = 1.0;
  std::mt19937_64 rng(5);
  CVector x(3);
  for (int k = 0; k < 3; ++k)
    x[k] = std::normal_distribution<double>()(rng);
  const CVector s = ens.coding(0).cast<cplx>() * x;
  // sqrt(L) F_M e_1 is all ones
  const CVector expected = oracle::dft_slice(16, 8) * s;
  EXPECT_LT(rel_diff(forward_component(ens, 0, h, x), expected), 1e-12);
}

TEST(ForwardComponent, ZeroCoefficientsGiveZero) {
  const Dimensions d{16, 8, 4, 3, 1};
  std::mt19937_64 rng(6);
  const MeasurementEnsemble ens = oracle::random_ensemble(d, rng);
  EXPECT_EQ(forward_component(ens, 0, oracle::random_complex(rng, 4), CVector::Zero(3)).norm(),
            0.0);
}

TEST(ForwardComponent, MatchesDenseMatrix) {
  const Dimensions d{16, 8, 4, 3, 1};
  std::mt19937_64 rng(7);
  const MeasurementEnsemble ens = oracle::random_ensemble(d, rng);
  const CVector h = oracle::random_complex(rng, 4);
  const CVector x = oracle::random_complex(rng, 3);
  const CMatrix z = h * x.adjoint();
  const CVector expected = oracle::dense_matrix(ens, 0) * oracle::vec(z);
  EXPECT_LT(rel_diff(forward_component(ens, 0, h, x), expected), 1e-10);
  EXPECT_LT(rel_diff(forward_lifted(ens, 0, z), expected), 1e-10);
}

TEST(ForwardComponent, RejectsBadIndexAndShapes) {
  const Dimensions d{16, 8, 4, 3, 1};
  std::mt19937_64 rng(8);
  const MeasurementEnsemble ens = oracle::random_ensemble(d, rng);
  EXPECT_THROW(forward_component(ens, 1, CVector::Zero(4), CVector::Zero(3)), InvalidArgument);
  EXPECT_THROW(forward_component(ens, 0, CVector::Zero(5), CVector::Zero(3)), InvalidArgument);
  EXPECT_THROW(adjoint_component(ens, 0, CVector::Zero(15)), InvalidArgument);
}

TEST(ForwardMap, SingleComponentReducesToComponent) {
  const Dimensions d{16, 8, 4, 3, 1};
  std::mt19937_64 rng(9);
  const MeasurementEnsemble ens = oracle::random_ensemble(d, rng);
  const BlockFactorPair z = oracle::random_pair(d, rng);
  EXPECT_EQ((forward_map(ens, z) - forward_component(ens, 0, z.channels[0], z.coefficients[0]))
                .norm(),
            0.0);
}

TEST(ForwardMap, ZeroPairGivesZero) {
  const Dimensions d{16, 8, 4, 3, 2};
  std::mt19937_64 rng(10);
  const MeasurementEnsemble ens = oracle::random_ensemble(d, rng);
  EXPECT_EQ(forward_map(ens, BlockFactorPair::zeros(d)).norm(), 0.0);
}

TEST(ForwardMap, SumsComponents) {
  const Dimensions d{16, 8, 4, 3, 2};
  std::mt19937_64 rng(14);
  const MeasurementEnsemble ens = oracle::random_ensemble(d, rng);
  const BlockFactorPair z = oracle::random_pair(d, rng);
  const CVector sum = forward_component(ens, 0, z.channels[0], z.coefficients[0]) +
                      forward_component(ens, 1, z.channels[1], z.coefficients[1]);
  EXPECT_LT(rel_diff(forward_map(ens, z), sum), 1e-13);
  EXPECT_LT(rel_diff(forward_map(ens, z), oracle::measurement(ens, z)), 1e-12);
}

TEST(ForwardMap, ShapeMismatchRejected) {
  const Dimensions d{16, 8, 4, 3, 2};
  std::mt19937_64 rng(15);
  const MeasurementEnsemble ens = oracle::random_ensemble(d, rng);
  BlockFactorPair z = oracle::random_pair(d, rng);
  z.channels.pop_back();
  EXPECT_THROW(forward_map(ens, z), InvalidArgument);
}

TEST(ForwardMap, IsLinearInTheLiftedBlocks) {
  const Dimensions d{32, 16, 5, 4, 2};
  std::mt19937_64 rng(16);
  const MeasurementEnsemble ens = oracle::random_ensemble(d, rng);
  std::vector<CMatrix> z1;
  std::vector<CMatrix> z2;
  std::vector<CMatrix> mix;
  const cplx a(0.7, -1.3);
  const cplx b(-2.1, 0.4);
  for (int n = 0; n < d.N; ++n) {
    z1.push_back(oracle::random_block(rng, d.M, d.K));
    z2.push_back(oracle::random_block(rng, d.M, d.K));
    mix.push_back(a * z1.back() + b * z2.back());
  }
  const CVector lhs = forward_map_lifted(ens, mix);
  const CVector rhs = a * forward_map_lifted(ens, z1) + b * forward_map_lifted(ens, z2);
  EXPECT_LT(rel_diff(lhs, rhs), 1e-13);
}

TEST(AdjointComponent, ZeroInputGivesZeroMatrix) {
  const Dimensions d{16, 8, 4, 3, 1};
  std::mt19937_64 rng(17);
  const MeasurementEnsemble ens = oracle::random_ensemble(d, rng);
  const CMatrix a = adjoint_component(ens, 0, CVector::Zero(16));
  EXPECT_EQ(a.rows(), 4);
  EXPECT_EQ(a.cols(), 3);
  EXPECT_EQ(a.norm(), 0.0);
}

TEST(AdjointComponent, InnerProductIdentity) {
  const Dimensions d{24, 12, 5, 4, 1};
  std::mt19937_64 rng(18);
  const MeasurementEnsemble ens = oracle::random_ensemble(d, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const CVector h = oracle::random_complex(rng, d.M);
    const CVector x = oracle::random_complex(rng, d.K);
    const CVector w = oracle::random_complex(rng, d.L);
    const cplx lhs = w.dot(forward_component(ens, 0, h, x));
    const CMatrix back = adjoint_component(ens, 0, w);
    const cplx rhs = (back.conjugate().cwiseProduct(h * x.adjoint())).sum();
    EXPECT_LT(std::abs(lhs.real() - rhs.real()) / std::abs(lhs), 1e-10);
    EXPECT_LT(std::abs(lhs - rhs) / std::abs(lhs), 1e-10);
  }
}

TEST(AdjointComponent, MatchesDenseConjugateTranspose) {
  const Dimensions d{16, 8, 4, 3, 1};
  std::mt19937_64 rng(19);
  const MeasurementEnsemble ens = oracle::random_ensemble(d, rng);
  const CVector w = oracle::random_complex(rng, 16);
  const CMatrix expected = oracle::unvec(oracle::dense_matrix(ens, 0).adjoint() * w, 4, 3);
  EXPECT_LT(rel_diff(adjoint_component(ens, 0, w), expected), 1e-10);
}

TEST(AdjointComponent, MatrixFreeProductsAgree) {
  const Dimensions d{40, 24, 7, 5, 2};
  std::mt19937_64 rng(20);
  const MeasurementEnsemble ens = oracle::random_ensemble(d, rng);
  const CVector w = oracle::random_complex(rng, d.L);
  for (int n = 0; n < d.N; ++n) {
    const CVector h = oracle::random_complex(rng, d.M);
    const CVector x = oracle::random_complex(rng, d.K);
    const CMatrix a = adjoint_component(ens, n, w);
    const auto [ax, ah] = adjoint_products(ens, n, w, h, x);
    EXPECT_LT(rel_diff(ax, CVector(a * x)), 1e-12);
    EXPECT_LT(rel_diff(ah, CVector(a.adjoint() * h)), 1e-12);
  }
}

TEST(AdjointMap, BlockwiseAdjointOfSummedMap) {
  const Dimensions d{32, 16, 6, 4, 3};
  std::mt19937_64 rng(21);
  const MeasurementEnsemble ens = oracle::random_ensemble(d, rng);
  std::vector<CMatrix> z;
  for (int n = 0; n < d.N; ++n)
    z.push_back(oracle::random_block(rng, d.M, d.K));
  const CVector w = oracle::random_complex(rng, d.L);
  const cplx lhs = w.dot(forward_map_lifted(ens, z));
  const std::vector<CMatrix> back = adjoint_map(ens, w);
  cplx rhs(0.0, 0.0);
  for (int n = 0; n < d.N; ++n)
    rhs += (back[n].conjugate().cwiseProduct(z[n])).sum();
  EXPECT_LT(std::abs(lhs - rhs) / std::abs(lhs), 1e-10);
}

TEST(DenseOracle, ShapeAndFirstColumn) {
  const Dimensions d{16, 8, 4, 3, 1};
  std::mt19937_64 rng(22);
  const MeasurementEnsemble ens = oracle::random_ensemble(d, rng);
  const CMatrix a = dense_oracle(ens, 0);
  EXPECT_EQ(a.rows(), 16);
  EXPECT_EQ(a.cols(), 12);
  CVector e_m = CVector::Zero(4);
  e_m[0] = 1.0;
  CVector e_k = CVector::Zero(3);
  e_k[0] = 1.0;
  EXPECT_LT(rel_diff(CVector(a.col(0)), forward_component(ens, 0, e_m, e_k)), 1e-15);
  EXPECT_LT(rel_diff(a, oracle::dense_matrix(ens, 0)), 1e-12);
}

TEST(DenseOracle, RefusesHugeBlocks) {
  const Dimensions d{128, 128, 65, 64, 1};
  std::mt19937_64 rng(23);
  const MeasurementEnsemble ens = oracle::random_ensemble(d, rng);
  EXPECT_THROW(dense_oracle(ens, 0), InvalidArgument);
}

TEST(OperatorNorm, PowerIterationMatchesDenseSvd) {
  const Dimensions d{24, 12, 4, 3, 1};
  std::mt19937_64 rng(24);
  const MeasurementEnsemble ens = oracle::random_ensemble(d, rng);
  const Eigen::JacobiSVD<CMatrix> svd(oracle::dense_matrix(ens, 0));
  const double top = svd.singularValues()[0];
  const NormEstimate est = component_operator_norm(ens, 0);
  EXPECT_NEAR(est.value, top, 1e-6 * top);
}

TEST(OperatorNorm, SummedMapMatchesStackedDenseSvd) {
  const Dimensions d{24, 12, 3, 3, 2};
  std::mt19937_64 rng(25);
  const MeasurementEnsemble ens = oracle::random_ensemble(d, rng);
  CMatrix stacked(d.L, 2 * d.M * d.K);
  stacked << oracle::dense_matrix(ens, 0), oracle::dense_matrix(ens, 1);
  const double top = Eigen::JacobiSVD<CMatrix>(stacked).singularValues()[0];
  EXPECT_NEAR(operator_norm(ens).value, top, 1e-6 * top);
}

TEST(Isometry, ExhaustiveSignAverageIsFrobeniusNorm) {
  // all 2^(Q N) sign patterns for Q = 5, N = 2
  const Dimensions d{12, 5, 3, 2, 2};
  std::mt19937_64 rng(26);
  std::vector<RMatrix> coding{oracle::random_orthonormal(rng, 5, 2),
                              oracle::random_orthonormal(rng, 5, 2)};
  std::vector<CMatrix> w{oracle::random_block(rng, 3, 2), oracle::random_block(rng, 3, 2)};
  const double fro = w[0].squaredNorm() + w[1].squaredNorm();
  double sum = 0.0;
  const int patterns = 1 << 10;
  for (int mask = 0; mask < patterns; ++mask) {
    std::vector<RVector> signs(2, RVector(5));
    for (int n = 0; n < 2; ++n)
      for (int q = 0; q < 5; ++q)
        signs[n][q] = (mask >> (5 * n + q)) & 1 ? -1.0 : 1.0;
    sum += forward_map_lifted(MeasurementEnsemble(d, signs, coding), w).squaredNorm();
  }
  EXPECT_NEAR(sum / patterns / fro, 1.0, 1e-8);
}
