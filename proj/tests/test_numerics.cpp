#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "support.hpp"
#include "uqimg/autodiff.hpp"
#include "uqimg/moments.hpp"
#include "uqimg/numerics.hpp"
#include "uqimg/rng.hpp"
#include "uqimg/tensor.hpp"

using namespace uqimg;

TEST_CASE("tensor construction and invariants") {
    Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK(t.size() == 6);
    CHECK(t.at2(1, 2) == 6);
    CHECK_THROWS(Tensor({2}, {1, 2, 3}));
    CHECK_THROWS(Tensor({2}, {1.0, std::nan("")}));
    CHECK_THROWS(Tensor({2}, {1.0, INFINITY}));
    CHECK_THROWS(Tensor::zeros({0, 3}));
}

TEST_CASE("logsumexp basics") {
    CHECK(logsumexp(std::vector<double>{0.0, 0.0}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(logsumexp(std::vector<double>{-1000.0}) == -1000.0);
    CHECK_THROWS_WITH(logsumexp(std::vector<double>{}), "logsumexp: empty reduction");
    CHECK_THROWS(logsumexp(std::vector<double>{0.0, std::nan("")}));

    // All-equal inputs reduce exactly to c + log(k).
    for (double c : {-3.5, 0.0, 17.25}) {
        std::vector<double> v(7, c);
        CHECK(logsumexp(v) == c + std::log(7.0));
    }
}

TEST_CASE("logsumexp extreme gap stays finite and matches long-double oracle") {
    std::vector<double> v{0.0, -746.0};
    double got = logsumexp(v);
    long double direct = std::log(std::exp(0.0L) + std::exp(-746.0L));
    CHECK(std::isfinite(got));
    CHECK(got >= 0.0);
    CHECK(got < std::log(2.0));
    CHECK(std::fabs(got - static_cast<double>(direct)) <= 1e-15);

    // Symmetric large-negative case that naively underflows to -inf.
    std::vector<double> w{-1000.0, -1000.0};
    CHECK(logsumexp(w) == doctest::Approx(-1000.0 + std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("logsumexp bounds property") {
    RngStream rng(41, 7);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 1 + rng.next_index(16);
        std::vector<double> v(n);
        double m = -INFINITY;
        for (auto& x : v) {
            x = (rng.next_uniform() - 0.5) * 2000.0;
            m = std::max(m, x);
        }
        double lse = logsumexp(v);
        CHECK(lse >= m);
        CHECK(lse <= m + std::log(static_cast<double>(n)) + 1e-12);
    }
}

TEST_CASE("moment accumulator hand examples") {
    MomentAccumulator acc;
    acc.accumulate(Tensor::vector({0.0}));
    acc.accumulate(Tensor::vector({2.0}));
    auto [mean_p, var_p] = acc.finalize(VarianceKind::Population);
    CHECK(mean_p[0] == 1.0);
    CHECK(var_p[0] == 1.0);
    auto [mean_u, var_u] = acc.finalize(VarianceKind::Unbiased);
    CHECK(var_u[0] == 2.0);

    MomentAccumulator a, b;
    a.accumulate(Tensor::vector({0.0}));
    b.accumulate(Tensor::vector({2.0}));
    a.merge(b);
    auto [mean_m, var_m] = a.finalize(VarianceKind::Population);
    CHECK(mean_m[0] == mean_p[0]);
    CHECK(var_m[0] == var_p[0]);
}

TEST_CASE("moment accumulator errors") {
    MomentAccumulator acc;
    CHECK_THROWS(acc.finalize(VarianceKind::Population));
    acc.accumulate(Tensor::vector({1.0}));
    CHECK_THROWS(acc.finalize(VarianceKind::Unbiased));
    CHECK_THROWS(acc.accumulate(Tensor::vector({1.0, 2.0})));
}

TEST_CASE("moment accumulator merge associativity and divisor relation") {
    RngStream rng(2024, 3);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Tensor> samples;
        std::size_t total = 6 + rng.next_index(30);
        for (std::size_t i = 0; i < total; ++i) samples.push_back(rng.draw_normal({5}));

        auto fill = [&](std::size_t lo, std::size_t hi) {
            MomentAccumulator acc;
            for (std::size_t i = lo; i < hi; ++i) acc.accumulate(samples[i]);
            return acc;
        };
        std::size_t c1 = 1 + rng.next_index(total - 2);
        std::size_t c2 = c1 + 1 + rng.next_index(total - c1 - 1);
        MomentAccumulator left = fill(0, c1);
        {
            MomentAccumulator mid = fill(c1, c2);
            left.merge(mid);
            MomentAccumulator right = fill(c2, total);
            left.merge(right);
        }
        MomentAccumulator nested = fill(c1, c2);
        {
            MomentAccumulator right = fill(c2, total);
            nested.merge(right);
        }
        MomentAccumulator other = fill(0, c1);
        other.merge(nested);

        auto [m1, v1] = left.finalize(VarianceKind::Population);
        auto [m2, v2] = other.finalize(VarianceKind::Population);
        for (std::size_t i = 0; i < m1.size(); ++i) {
            CHECK(testsupport::rel_err(m1[i], m2[i], 1e-12) <= 1e-12);
            CHECK(testsupport::rel_err(v1[i], v2[i], 1e-12) <= 1e-12);
        }

        auto [mu, vu] = left.finalize(VarianceKind::Unbiased);
        double t = static_cast<double>(total);
        for (std::size_t i = 0; i < v1.size(); ++i)
            CHECK(testsupport::rel_err(v1[i], vu[i] * (t - 1.0) / t, 1e-12) <= 1e-12);
    }
}

TEST_CASE("rng determinism and stream independence") {
    RngStream a(123, 5);
    RngStream b(123, 5);
    Tensor ta = a.draw_normal({64});
    Tensor tb = b.draw_normal({64});
    for (std::size_t i = 0; i < ta.size(); ++i) CHECK(ta[i] == tb[i]);
    CHECK(a.counter() == b.counter());

    // sub() must not disturb the parent and must be reproducible.
    RngStream parent(9, 1);
    RngStream c1 = parent.sub(7);
    RngStream c2 = parent.sub(7);
    CHECK(parent.counter() == 0);
    CHECK(c1.next_u64() == c2.next_u64());
    CHECK(parent.sub(7).next_u64() != parent.sub(8).next_u64());
}

TEST_CASE("rng normal moments") {
    RngStream s(77, 0);
    const int n = 100000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        double x = s.next_normal();
        sum += x;
        sq += x * x;
    }
    double mean = sum / n;
    double var = sq / n - mean * mean;
    CHECK(std::fabs(mean) < 0.02);
    CHECK(std::fabs(var - 1.0) < 0.03);
}

TEST_CASE("rng cross-stream correlation") {
    RngStream s0(424242, 0);
    RngStream s1(424242, 1);
    const int n = 100000;
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        double x = s0.next_normal();
        double y = s1.next_normal();
        sx += x; sy += y; sxx += x * x; syy += y * y; sxy += x * y;
    }
    double mx = sx / n, my = sy / n;
    double rho = (sxy / n - mx * my) /
                 std::sqrt((sxx / n - mx * mx) * (syy / n - my * my));
    CHECK(std::fabs(rho) < 0.02);
}

TEST_CASE("backward identity and product") {
    Tape t1;
    NodeId a = t1.leaf(Tensor::scalar(4.0), true);
    auto g1 = t1.backward(a);
    CHECK(g1.at(a)[0] == 1.0);

    Tape t2;
    NodeId x = t2.leaf(Tensor::scalar(2.0), true);
    NodeId y = t2.leaf(Tensor::scalar(3.0), true);
    NodeId p = t2.mul(x, y);
    auto g2 = t2.backward(p);
    CHECK(g2.at(x)[0] == 3.0);
    CHECK(g2.at(y)[0] == 2.0);
}

TEST_CASE("backward rejects non-scalar output and zeroes unreachable params") {
    Tape t;
    NodeId v = t.leaf(Tensor::vector({1.0, 2.0}), true);
    NodeId unused = t.leaf(Tensor::scalar(5.0), true);
    CHECK_THROWS(t.backward(v));
    NodeId s = t.sum(v);
    auto g = t.backward(s);
    CHECK(g.at(v)[0] == 1.0);
    CHECK(g.at(v)[1] == 1.0);
    CHECK(g.at(unused)[0] == 0.0);
}

TEST_CASE("tape replay reproduces stored values") {
    RngStream rng(5, 0);
    Tape t;
    NodeId x = t.leaf(rng.draw_normal({4}), true);
    NodeId w = t.leaf(rng.draw_normal({3, 4}), true);
    NodeId h = t.tanh(t.matmul(w, x));
    NodeId out = t.mean(t.square(h));
    (void)out;
    CHECK(t.max_replay_deviation() == 0.0);
}

namespace {

// One graph through every primitive, both matmul operand kinds included.
// abs() sees one always-positive and one always-negative argument so the
// finite-difference check never straddles the kink.
testsupport::TapeBuilder full_primitive_builder() {
    return [](Tape& t, const std::vector<Tensor>& leaves) {
        NodeId x = t.leaf(leaves[0], true);    // [m]
        NodeId w1 = t.leaf(leaves[1], true);   // [h,m]
        NodeId b1 = t.leaf(leaves[2], true);   // [h]
        NodeId w2 = t.leaf(leaves[3], true);   // [h,h]
        NodeId b2 = t.leaf(leaves[4], true);   // [h]
        NodeId ones = t.leaf(Tensor::full(leaves[2].shape(), 1.0));
        NodeId neg = t.leaf(Tensor::full(leaves[2].shape(), -0.5));

        NodeId h1 = t.tanh(t.add(t.matmul(w1, x), b1));           // [h]
        NodeId h2 = t.silu(t.add(t.matmul(w2, h1), b2));          // [h]
        NodeId row = t.matmul(h1, w2);                            // [k]x[k,n]
        NodeId mm = t.matmul(w2, w1);                             // [h,h]x[h,m]
        NodeId prod = t.mul(h1, t.tanh(h2));                      // bounded
        NodeId e = t.exp(prod);
        NodeId l = t.log(t.add(t.square(h2), ones));              // > 0
        NodeId pos = t.abs(t.add(t.square(row), ones));           // > 0
        NodeId negabs = t.abs(t.sub(neg, t.square(h1)));          // < 0
        NodeId mix = t.add(t.sub(e, l), t.mul(pos, negabs));
        NodeId s1 = t.mean(mix);
        NodeId s2 = t.sum(t.square(mm));
        NodeId s3 = t.mean(t.silu(row));
        return t.add(t.mul(s1, t.tanh(s2)), s3);
    };
}

}  // namespace

TEST_CASE("gradients match central finite differences on random tapes") {
    RngStream rng(31337, 0);
    auto build = full_primitive_builder();
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        RngStream tr = rng.sub(trial);
        std::size_t m = 2 + tr.next_index(9);
        std::size_t h = 2 + tr.next_index(9);
        if (trial == 0) { m = 30; h = 28; }  // ~1e3 parameters
        std::vector<Tensor> leaves;
        auto scaled = [&](std::vector<std::size_t> shape) {
            Tensor v = tr.draw_normal(std::move(shape));
            for (auto& e : v.data()) e *= 0.5;
            return v;
        };
        leaves.push_back(scaled({m}));
        leaves.push_back(scaled({h, m}));
        leaves.push_back(scaled({h}));
        leaves.push_back(scaled({h, h}));
        leaves.push_back(scaled({h}));

        Tape tape;
        NodeId out = build(tape, leaves);
        auto grads = tape.backward(out);
        auto params = tape.parameters();
        auto fd = testsupport::fd_gradients(build, leaves);
        REQUIRE(params.size() == fd.size());
        for (std::size_t p = 0; p < params.size(); ++p) {
            const Tensor& ad = grads.at(params[p]);
            for (std::size_t i = 0; i < ad.size(); ++i)
                worst = std::max(worst, testsupport::rel_err(ad[i], fd[p][i]));
        }
    }
    CHECK(worst < 1e-4);
}
