#include <doctest.h>

#include <cmath>
#include <numbers>

#include "squeeze/compression.hpp"
#include "squeeze/random.hpp"

using namespace squeeze;

namespace {

CMatrix diag(std::initializer_list<double> v) {
  CMatrix m = CMatrix::Zero(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) m(i, i) = x, ++i;
  return m;
}

double gap(const CMatrix& a, const CMatrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

CMatrix pauli_x() {
  CMatrix x(2, 2);
  x << 0, 1, 1, 0;
  return x;
}

// rho = I/2 with a_{0,1} = (I +- X/2)/2.
Povm squeezed_x() {
  const CMatrix i2 = CMatrix::Identity(2, 2);
  return Povm({0.5 * (i2 + 0.5 * pauli_x()), 0.5 * (i2 - 0.5 * pauli_x())});
}

WordIndexedSubPovm family(int l, int m, Eigen::Index d, std::vector<std::uint64_t> words, std::vector<CMatrix> ops) {
  WordIndexedSubPovm x;
  x.l = l;
  x.m = m;
  x.d = d;
  x.words = std::move(words);
  x.ops = std::move(ops);
  return x;
}

double binary_entropy(double p) { return -p * std::log2(p) - (1 - p) * std::log2(1 - p); }

}  // namespace

TEST_CASE("product_povm_element") {
  CHECK(gap(product_povm_element(Povm::trivial(2), {0, 0, 0}), CMatrix::Identity(8, 8)) == 0.0);
  CHECK(gap(product_povm_element(Povm::computational(2), {0, 1}), diag({0, 1, 0, 0})) == 0.0);
  Rng rng(3);
  const DensityMatrix rho = random_density(2, rng);
  const Povm a = random_povm(2, 2, rng);
  const double lambda1 = (rho.op() * a[1]).trace().real();
  const double p = (tensor_power(rho.op(), 2) * product_povm_element(a, {1, 1})).trace().real();
  CHECK(p == doctest::Approx(lambda1 * lambda1).epsilon(1e-12));
}

TEST_CASE("marginals of a product POVM reproduce the single-letter POVM") {
  Rng rng(5);
  for (int t = 0; t < 10; ++t) {
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.below(2));
    const DensityMatrix rho = random_density(d, rng);
    const Povm a = random_povm(d, 2 + rng.below(2), rng);
    const WordIndexedSubPovm x = product_povm(a.elements(), 3);
    const MarginalTable serial = marginal_povms(x, rho.op(), Exec::serial);
    const MarginalTable parallel = marginal_povms(x, rho.op(), Exec::parallel);
    for (int k = 0; k < 3; ++k) {
      for (std::size_t j = 0; j < a.size(); ++j) {
        CHECK(operator_norm(serial[k][j] - a[j]) <= 1e-10);
        CHECK(gap(serial[k][j], parallel[k][j]) == 0.0);
      }
    }
    const auto pair = k_subset_marginal(x, {0, 2}, rho.op(), 2);
    for (std::size_t key = 0; key < pair.size(); ++key) {
      CHECK(operator_norm(pair[key] - product_povm_element(a, decode_word(key, static_cast<int>(a.size()), 2))) <= 1e-9);
    }
    const auto single = k_subset_marginal(x, {1}, rho.op(), 2);
    const auto direct = marginal_povm(x, 1, rho.op());
    for (std::size_t j = 0; j < a.size(); ++j) CHECK(gap(single[j], direct[j]) < 1e-12);
  }
}

TEST_CASE("marginal of the trivial block POVM") {
  const WordIndexedSubPovm x = family(3, 1, 2, {0}, {CMatrix::Identity(8, 8)});
  const auto marg = marginal_povm(x, 2, diag({0.3, 0.7}));
  REQUIRE(marg.size() == 1);
  CHECK(gap(marg[0], CMatrix::Identity(2, 2)) < 1e-12);
}

TEST_CASE("marginal with merged words matches brute-force partial traces") {
  Rng rng(9);
  const CMatrix rho = random_density(2, rng).op();
  const Povm a = random_povm(2, 2, rng);
  // Words 00 and 11 merged with 01; 10 kept alone.
  const CMatrix merged = product_povm_element(a, {0, 0}) + product_povm_element(a, {1, 1}) + product_povm_element(a, {0, 1});
  const CMatrix alone = product_povm_element(a, {1, 0});
  const WordIndexedSubPovm x = family(2, 2, 2, {0, 2}, {merged, alone});
  const CMatrix s = op_sqrt(rho);
  const CMatrix w = op_inv_sqrt_on_support(rho);
  const CMatrix s2 = tensor_power(s, 2);
  for (int k = 0; k < 2; ++k) {
    const auto marg = marginal_povm(x, k, rho);
    // Word 00 carries letter 0 at both positions; word 10 has letter 1 at k = 0.
    const CMatrix for0 = k == 0 ? merged : CMatrix(merged + alone);
    const CMatrix for1 = k == 0 ? alone : CMatrix::Zero(4, 4);
    const std::vector<int> traced{1 - k};
    const CMatrix e0 = w * partial_trace(s2 * for0 * s2, {2, 2}, traced) * w;
    const CMatrix e1 = w * partial_trace(s2 * for1 * s2, {2, 2}, traced) * w;
    CHECK(gap(marg[0], e0) < 1e-10);
    CHECK(gap(marg[1], e1) < 1e-10);
  }
}

TEST_CASE("k_subset_marginal on a random l=3 family") {
  Rng rng(19);
  const CMatrix rho = random_density(2, rng).op();
  std::vector<std::uint64_t> words;
  std::vector<CMatrix> ops;
  for (std::uint64_t w = 0; w < 8; ++w) {
    const CMatrix g = random_ginibre(8, 8, rng);
    words.push_back(w);
    ops.push_back(0.01 * g * g.adjoint());
  }
  const WordIndexedSubPovm x = family(3, 2, 2, words, ops);
  const auto got = k_subset_marginal(x, {0, 2}, rho, 2);
  const CMatrix s3 = tensor_power(op_sqrt(rho), 3);
  const CMatrix w2 = tensor_power(op_inv_sqrt_on_support(rho), 2);
  for (std::uint64_t key = 0; key < 4; ++key) {
    CMatrix acc = CMatrix::Zero(4, 4);
    for (std::uint64_t w = 0; w < 8; ++w) {
      const Word letters = decode_word(w, 2, 3);
      if (static_cast<std::uint64_t>(letters[0] * 2 + letters[2]) != key) continue;
      acc += partial_trace(s3 * ops[w] * s3, {2, 2, 2}, {1});
    }
    CHECK(gap(got[key], w2 * acc * w2) < 1e-10);
  }
  CHECK_THROWS_AS(k_subset_marginal(x, {0, 1, 2}, rho, 2), DimensionError);
}

TEST_CASE("check_condition") {
  const CMatrix rho = CMatrix::Identity(2, 2) / 2.0;
  const Povm z = Povm::computational(2);
  const Ensemble ens({DensityMatrix(diag({1, 0})), DensityMatrix(diag({0, 1}))}, {0.5, 0.5});
  const FidelityMatrix f(Eigen::MatrixXd::Identity(2, 2));
  const ConditionInputs in{&ens, &f, 2};

  const WordIndexedSubPovm prod = product_povm(z.elements(), 3);
  for (Condition c : {Condition::C0, Condition::C1, Condition::C2, Condition::C2half, Condition::C3, Condition::C4, Condition::C5}) {
    CHECK(check_condition(c, prod, z.elements(), rho, in) <= 1e-9);
  }

  // {I} as the single word 000: every marginal is (I, 0).
  const WordIndexedSubPovm trivial = family(3, 2, 2, {0}, {CMatrix::Identity(8, 8)});
  CHECK(check_condition(Condition::C3, trivial, z.elements(), rho, in) == doctest::Approx(2.0));
  CHECK(check_condition(Condition::C4, trivial, z.elements(), rho, in) == doctest::Approx(6.0));
  CHECK(check_condition(Condition::C2half, trivial, z.elements(), rho, in) == doctest::Approx(2.0));
  CHECK(check_condition(Condition::C0, trivial, z.elements(), rho, in) == doctest::Approx(0.5));
  CHECK_THROWS(check_condition(Condition::C1, trivial, z.elements(), rho, ConditionInputs{}));
  CHECK_THROWS(check_condition(Condition::C0, trivial, z.elements(), rho, ConditionInputs{&ens, nullptr, 2}));
}

TEST_CASE("block_fidelity") {
  Rng rng(23);
  const Ensemble ens = random_ensemble(2, 3, rng, true);
  const CMatrix rho = ensemble_average(ens).op();
  const Povm a = random_povm(2, 2, rng);
  Eigen::MatrixXd fm(3, 2);
  fm << 0.9, -0.3, 0.2, 0.7, -0.5, 0.4;
  const FidelityMatrix f(fm);
  const WordIndexedSubPovm prod = product_povm(a.elements(), 2);
  CHECK(block_fidelity(marginal_povms(prod, rho), ens, f) == doctest::Approx(single_letter_fidelity(ens, f, a)).epsilon(1e-10));
  CHECK(block_fidelity(marginal_povms(prod, rho), ens, FidelityMatrix(Eigen::MatrixXd::Constant(3, 2, -0.4))) ==
        doctest::Approx(-0.4));

  // Handmade l = 2 POVM against the direct sum over state pairs and outcomes.
  const CMatrix p = 0.5 * (product_povm_element(a, {0, 0}) + product_povm_element(a, {1, 1}));
  const WordIndexedSubPovm x = family(2, 2, 2, {0, 1, 2, 3},
                                      {p, product_povm_element(a, {0, 1}), product_povm_element(a, {1, 0}), p});
  double direct = 0.0;
  for (std::size_t i1 = 0; i1 < 3; ++i1) {
    for (std::size_t i2 = 0; i2 < 3; ++i2) {
      const CMatrix state = tensor_product(ens.states()[i1].op(), ens.states()[i2].op());
      const double prob = ens.probs()[i1] * ens.probs()[i2];
      for (std::size_t mu = 0; mu < 4; ++mu) {
        const Word w = decode_word(x.words[mu], 2, 2);
        const double q = (state * x.ops[mu]).trace().real();
        direct += prob * q * 0.5 * (fm(i1, w[0]) + fm(i2, w[1]));
      }
    }
  }
  CHECK(block_fidelity(marginal_povms(x, rho), ens, f) == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("stage B examples and bounds") {
  SUBCASE("vacuous delta keeps the product POVM") {
    const Povm a = squeezed_x();
    const PipelineContext ctx = make_context(DensityMatrix::maximally_mixed(2), a, 2, 100.0);
    const WordIndexedSubPovm b = stage_B(ctx);
    for (std::size_t i = 0; i < b.size(); ++i) {
      CHECK(gap(b.ops[i], product_povm_element(a, decode_word(b.words[i], 2, 2))) < 1e-12);
    }
  }
  SUBCASE("pure canonical states give rank-one elements") {
    const PipelineContext ctx = make_context(DensityMatrix(diag({0.6, 0.4})), Povm::computational(2), 2, 1.0);
    const WordIndexedSubPovm b = stage_B(ctx);
    for (const auto& op : b.ops) CHECK(eigenvalues_hermitian(op)[1] < 1e-12);
  }
  SUBCASE("random qubit, l=2, delta=2") {
    Rng rng(29);
    const DensityMatrix rho = random_density(2, rng);
    const Povm a = random_povm(2, 2, rng);
    const PipelineContext ctx = make_context(rho, a, 2, 2.0);
    const WordIndexedSubPovm b = stage_B(ctx);
    const double md = 4.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      const CMatrix aw = product_povm_element(a, decode_word(b.words[i], 2, 2));
      CHECK(min_eigenvalue(b.ops[i]) >= -1e-9);
      CHECK(loewner_leq(b.ops[i], aw, 1e-9));
      const double tb = (ctx.rho_l * b.ops[i]).trace().real();
      const double ta = (ctx.rho_l * aw).trace().real();
      CHECK(tb >= (1.0 - md / 4.0) * ta - 1e-12);
    }
  }
}

TEST_CASE("stages C, D and E") {
  Rng rng(37);
  const DensityMatrix rho = random_density(2, rng);
  const Povm a = random_povm(2, 2, rng);
  const PipelineContext ctx = make_context(rho, a, 3, 3.0);
  const WordIndexedSubPovm b = stage_B(ctx);
  const WordIndexedSubPovm c = stage_C(b, ctx);
  for (std::size_t i = 0; i < b.size(); ++i) {
    CHECK((ctx.rho_l * c.ops[i]).trace().real() <= (ctx.rho_l * b.ops[i]).trace().real() + 1e-12);
  }
  const WordIndexedSubPovm d = stage_D(c, ctx);
  CHECK(d.words == ctx.tset.words);
  const Cutoff cut = cutoff_projector(d, ctx);
  CHECK(cut.trace_omega_pi >= 1.0 - 2.0 * cut.c - 1e-9);
  const WordIndexedSubPovm e = stage_E(d, cut, ctx);
  for (std::size_t i = 0; i < e.size(); ++i) {
    CHECK((ctx.rho_l * e.ops[i]).trace().real() <= (ctx.rho_l * d.ops[i]).trace().real() + 1e-12);
  }
  CHECK(is_sub_povm(e, 1e-9));

  SUBCASE("identity and zero cutoffs") {
    Cutoff all = cut;
    all.pi = CMatrix::Identity(8, 8);
    const WordIndexedSubPovm same = stage_E(d, all, ctx);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(gap(same.ops[i], d.ops[i]) < 1e-10);
    Cutoff none = cut;
    none.pi = CMatrix::Zero(8, 8);
    for (const auto& op : stage_E(d, none, ctx).ops) CHECK(op.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("typical projector orthogonal to B gives C = 0") {
    PipelineContext narrow = ctx;
    narrow.typical.dense = CMatrix::Zero(8, 8);
    for (const auto& op : stage_C(b, narrow).ops) CHECK(op.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("stage D on small typical sets") {
  SUBCASE("uniform weights, l=2, delta=1 keeps words 01 and 10") {
    const PipelineContext ctx = make_context(DensityMatrix::maximally_mixed(2), Povm::computational(2), 2, 1.0);
    const WordIndexedSubPovm c = stage_C(stage_B(ctx), ctx);
    const WordIndexedSubPovm d = stage_D(c, ctx);
    CHECK(d.words == std::vector<std::uint64_t>{1, 2});
    double discarded = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (!ctx.tset.contains(c.words[i])) discarded += (ctx.rho_l * c.ops[i]).trace().real();
    }
    CHECK(discarded <= 2.0 / 1.0);
  }
  SUBCASE("degenerate weights keep only the constant word") {
    const PipelineContext ctx = make_context(DensityMatrix(diag({1, 0})), Povm::computational(2), 3, 1.0);
    const WordIndexedSubPovm d = stage_D(stage_C(stage_B(ctx), ctx), ctx);
    CHECK(d.words == std::vector<std::uint64_t>{0});
  }
}

TEST_CASE("cutoff projector for a pure state") {
  const PipelineContext ctx = make_context(DensityMatrix(diag({1, 0})), Povm::trivial(2), 2, 5.0);
  const WordIndexedSubPovm d = stage_D(stage_C(stage_B(ctx), ctx), ctx);
  const Cutoff cut = cutoff_projector(d, ctx);
  CHECK(cut.rank <= 1);
}

TEST_CASE("choose_M") {
  CHECK(choose_M(1.0, 1.0, 1.0, 1.0) == 2);
  const double alpha = 0.01, c = 0.3, eta = 0.2;
  const std::uint64_t m1 = choose_M(alpha, 0.05, c, eta);
  const std::uint64_t m2 = choose_M(alpha, 0.10, c, eta);
  CHECK(std::abs(static_cast<double>(m2) - 2.0 * static_cast<double>(m1)) <= 2.0);
  const double raw = 2.0 * std::numbers::ln2 * (1.0 - std::log2(alpha)) / (eta * eta * c) * 0.05 / alpha;
  CHECK(m1 == static_cast<std::uint64_t>(std::floor(raw)) + 1);
  CHECK_THROWS_AS(choose_M(0.0, 1.0, 1.0, 1.0), NumericError);
  CHECK_THROWS_AS(choose_M(1e-30, 1.0, 1.0, 1e-3), CapExceeded);
}

TEST_CASE("distribute_remainder") {
  const Povm z = Povm::computational(2);
  const WordIndexedSubPovm full = family(1, 2, 2, {0, 1}, z.elements());
  const WordIndexedSubPovm same = distribute_remainder(full);
  for (std::size_t i = 0; i < 2; ++i) CHECK(gap(same.ops[i], z[i]) < 1e-15);

  const WordIndexedSubPovm zeros = family(2, 2, 2, {0, 1, 2, 3}, std::vector<CMatrix>(4, CMatrix::Zero(4, 4)));
  const WordIndexedSubPovm quarters = distribute_remainder(zeros);
  for (const auto& op : quarters.ops) CHECK(gap(op, CMatrix::Identity(4, 4) / 4.0) < 1e-15);

  const WordIndexedSubPovm weighted = distribute_remainder(family(1, 2, 2, {0, 1}, {diag({0.5, 0}), diag({0, 0})}), {3, 1});
  CHECK(gap(weighted.ops[0], diag({0.5 + 0.375, 0.75})) < 1e-15);
  CHECK(gap(weighted.sum(), CMatrix::Identity(2, 2)) < 1e-12);

  CHECK_THROWS_AS(distribute_remainder(family(1, 2, 2, {0, 1}, {diag({1, 0}), diag({1, 1})})), NumericError);
}

TEST_CASE("thm3_lower_bound") {
  const RateLowerBound zero = thm3_lower_bound(0.7, 0.5, 0.0, 2, 4);
  CHECK(zero.raw == doctest::Approx(2.8));
  const RateLowerBound tiny = thm3_lower_bound(0.7, 0.5, 1e-12, 2, 4);
  CHECK(tiny.raw == doctest::Approx(2.8).epsilon(1e-9));
  const RateLowerBound ex = thm3_lower_bound(1.0, 0.5, 1.0 / 16, 2, 4);
  CHECK(ex.raw == doctest::Approx(-2.0));
  CHECK(ex.bound == 0.0);
  CHECK(ex.applicable);
  CHECK_FALSE(thm3_lower_bound(1.0, 0.5, 0.1, 2, 4).applicable);
}

TEST_CASE("random_select") {
  SUBCASE("single typical word forces identical draws") {
    const PipelineContext ctx = make_context(DensityMatrix(diag({1, 0})), Povm::computational(2), 2, 1.0);
    const WordIndexedSubPovm d = stage_D(stage_C(stage_B(ctx), ctx), ctx);
    const Cutoff cut = cutoff_projector(d, ctx);
    const WordIndexedSubPovm e = stage_E(d, cut, ctx);
    const Selection sel = random_select(e, ctx, 5, 0.5, 42);
    CHECK(sel.success);
    CHECK(sel.success_attempt == 1);
    REQUIRE(sel.tilde.size() == 1);
    CHECK(sel.multiplicity[0] == 5);
    CHECK(gap(sel.tilde.ops[0], e.ops[0] / 1.5) < 1e-12);
  }
  SUBCASE("fixed seed is reproducible") {
    const PipelineContext ctx = make_context(DensityMatrix::maximally_mixed(2), squeezed_x(), 3, 3.0);
    const WordIndexedSubPovm d = stage_D(stage_C(stage_B(ctx), ctx), ctx);
    const WordIndexedSubPovm e = stage_E(d, cutoff_projector(d, ctx), ctx);
    const Selection a = random_select(e, ctx, 200, 1.0 / 9, 42);
    const Selection b = random_select(e, ctx, 200, 1.0 / 9, 42);
    CHECK(a.draws == b.draws);
    CHECK(a.draws.size() == 200);
    const Selection c = random_select(e, ctx, 200, 1.0 / 9, 43);
    CHECK(a.draws != c.draws);
  }
}

TEST_CASE("compress with the trivial POVM") {
  CompressionConfig cfg;
  cfg.l = 3;
  cfg.delta = 2.0;
  const CompressionResult r = compress(DensityMatrix(diag({0.3, 0.7})), Povm::trivial(2), cfg);
  CHECK(std::abs(r.entropy_defect) < 1e-12);
  CHECK(r.outcomes == 1);
  CHECK(r.rate == 0.0);
  REQUIRE(r.has_povm);
  CHECK(gap(r.povm.ops[0], CMatrix::Identity(8, 8)) < 1e-9);
  CHECK(r.conditions.c3 <= 1e-9);
  CHECK(r.conditions.c5 <= 1e-9);
}

TEST_CASE("compress the projective maximally mixed qubit, l=4, delta=3") {
  CompressionConfig cfg;
  cfg.l = 4;
  cfg.delta = 3.0;
  const CompressionResult r = compress(DensityMatrix::maximally_mixed(2), Povm::computational(2), cfg);
  CHECK(r.entropy_defect == doctest::Approx(1.0));
  REQUIRE(r.has_povm);
  CHECK(r.completeness_error <= 1e-9);
  CHECK(r.min_element_eigenvalue >= -1e-9);
  CHECK(r.conditions.c3 <= r.c3_budget);
  CHECK(r.stage_checks_pass());
  CHECK(r.typicality_pass());
  if (r.rate_bound.applicable) CHECK(std::log2(static_cast<double>(r.outcomes)) >= r.rate_bound.bound - 1e-9);
}

TEST_CASE("compress the reference squeezed-X problem") {
  const double defect = 1.0 - binary_entropy(0.75);
  for (int l = 2; l <= 4; ++l) {
    CompressionConfig cfg;
    cfg.l = l;
    cfg.delta = 3.0;
    cfg.seed = 42;
    const CompressionResult r = compress(DensityMatrix::maximally_mixed(2), squeezed_x(), cfg);
    CHECK(r.entropy_defect == doctest::Approx(defect).epsilon(1e-12));
    CHECK(r.eta == doctest::Approx(1.0 / 9));
    REQUIRE(r.has_povm);
    CHECK(r.success);
    CHECK(r.completeness_error <= 1e-9);
    CHECK(r.conditions.c3 <= r.c3_budget);
    CHECK(r.c3_within_budget);
    CHECK(r.stage_checks_pass());
    CHECK(r.typicality_pass());
    CHECK(r.rate == doctest::Approx(std::log2(static_cast<double>(r.outcomes)) / l));
  }
}

TEST_CASE("compress a mixed two-outcome POVM") {
  const CMatrix a0 = diag({0.7, 0.3});
  const Povm a({a0, CMatrix::Identity(2, 2) - a0});
  const double defect = 1.0 - binary_entropy(0.7);
  for (int l = 2; l <= 4; ++l) {
    CompressionConfig cfg;
    cfg.l = l;
    cfg.delta = 3.0;
    const CompressionResult r = compress(DensityMatrix::maximally_mixed(2), a, cfg);
    CHECK(r.entropy_defect == doctest::Approx(defect).epsilon(1e-12));
    CHECK(r.entropy_defect < 1.0);
    REQUIRE(r.has_povm);
    CHECK(r.completeness_error <= 1e-9);
  }
}

TEST_CASE("compress is deterministic and serial equals parallel") {
  CompressionConfig cfg;
  cfg.l = 3;
  cfg.delta = 3.0;
  cfg.seed = 7;
  Rng rng(47);
  const DensityMatrix rho = random_density(2, rng);
  const Povm a = random_povm(2, 2, rng);
  const CompressionResult s = compress(rho, a, cfg);
  cfg.exec = Exec::parallel;
  const CompressionResult p = compress(rho, a, cfg);
  CHECK(s.selected_draws == p.selected_draws);
  CHECK(s.povm.words == p.povm.words);
  REQUIRE(s.povm.size() == p.povm.size());
  for (std::size_t i = 0; i < s.povm.size(); ++i) CHECK(gap(s.povm.ops[i], p.povm.ops[i]) == 0.0);
  CHECK(s.conditions.c3 == p.conditions.c3);
  CHECK(s.alpha == p.alpha);
  CHECK(s.beta == p.beta);
}

TEST_CASE("compress validates its configuration") {
  CompressionConfig cfg;
  cfg.eta = 1.5;
  CHECK_THROWS(compress(DensityMatrix::maximally_mixed(2), Povm::computational(2), cfg));
  cfg.eta = std::nullopt;
  cfg.l = 13;
  CHECK_THROWS_AS(compress(DensityMatrix::maximally_mixed(2), Povm::computational(2), cfg), CapExceeded);
}

TEST_CASE("success rate of random selection over seeds") {
  int successes = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CompressionConfig cfg;
    cfg.l = 3;
    cfg.delta = 3.0;
    cfg.seed = seed;
    cfg.max_attempts = 1;
    cfg.diagnostics = false;
    const CompressionResult r = compress(DensityMatrix::maximally_mixed(2), squeezed_x(), cfg);
    successes += r.success ? 1 : 0;
  }
  CHECK(successes >= 19);
}
