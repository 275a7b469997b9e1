#include <cmath>
#include <random>

#include "cclab/frames.hpp"
#include "support.hpp"

using namespace cclab;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Lie bracket of two vector fields given as callables, by central differences.
template <class A, class B>
Vec fd_bracket(const A& a, const B& b, const Vec& x, double h = 1e-4) {
  const int n = static_cast<int>(x.size());
  auto jac_times = [&](const auto& f, const Vec& v) {
    Vec out = Vec::Zero(n);
    for (int k = 0; k < n; ++k) {
      Vec xp = x, xm = x;
      xp[k] += h, xm[k] -= h;
      out += (f(xp) - f(xm)) / (2 * h) * v[k];
    }
    return out;
  };
  return jac_times(b, a(x)) - jac_times(a, b(x));
}

Vec random_point(std::mt19937_64& g, int n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec x(n);
  for (int k = 0; k < n; ++k) x[k] = u(g);
  return x;
}

}  // namespace

TEST_CASE("heisenberg commutator is 2 d3") {
  const Frame f = builtin_frame("heisenberg1");
  CHECK(f.m == 2);
  CHECK(f.p == 3);
  CHECK(f.step == 2);
  const Vec b = f.bracket(0, 1, vec({0.3, -0.7, 2.0}));
  CHECK(b[0] == 0.0);
  CHECK(b[1] == 0.0);
  CHECK(b[2] == 2.0);
  const Vec c = f.bracket(0, 1, vec({1.1, 0.4, -1.5}));
  CHECK((c - vec({0, 0, 2})).norm() == 0.0);
}

TEST_CASE("rototranslation bracket field and commutator") {
  const Frame f = builtin_frame("rototranslation");
  const Vec y3 = f.field(2, vec({0.3, 0.2, 0.0}));
  CHECK(y3[0] == doctest::Approx(0.0));
  CHECK(y3[1] == doctest::Approx(-1.0));
  CHECK(y3[2] == doctest::Approx(0.0));
  // [X,Y] = DY X - DX Y with X1 = cos d1 + sin d2, X2 = d_theta gives
  // sin d1 - cos d2, which is (1, 0, 0) at theta = pi/2.
  const Vec b = f.bracket(0, 1, vec({0.0, 0.0, kPi / 2}));
  CHECK(b[0] == doctest::Approx(1.0));
  CHECK(b[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(b[2] == doctest::Approx(0.0));
  // theta is periodic: the same field one turn later
  const Vec w = f.field(0, vec({0.0, 0.0, 0.5 + 2 * kPi - 0.1}));
  const Vec v = f.field(0, vec({0.0, 0.0, 0.4}));
  CHECK((w - v).norm() < 1e-12);
}

TEST_CASE("euclidean brackets vanish") {
  const Frame f = builtin_frame("euclidean3");
  CHECK(f.n == 3);
  for (int i = 0; i < f.m; ++i)
    for (int j = 0; j < f.m; ++j) CHECK(f.bracket(i, j, vec({0.1, -0.2, 0.3})).norm() == 0.0);
  CHECK(builtin_frame("euclidean(2)").n == 2);
}

TEST_CASE("unknown frame name") { CHECK_ERROR_KIND(builtin_frame("nonexistent"), UnsupportedFrame); }

TEST_CASE("bracket antisymmetry and closed forms against finite differences") {
  std::mt19937_64 g(7);
  for (const char* name : {"heisenberg1", "rototranslation", "grushin", "example32"}) {
    const Frame f = builtin_frame(name);
    for (int s = 0; s < 20; ++s) {
      Vec x = random_point(g, f.n, -1.5, 1.5);
      if (std::string(name) == "grushin" && std::abs(x[0]) < 0.05) x[0] = 0.5;
      for (int i = 0; i < f.p; ++i) {
        CHECK(f.bracket(i, i, x).norm() == 0.0);
        for (int j = 0; j < f.p; ++j) {
          CHECK((f.bracket(i, j, x) + f.bracket(j, i, x)).norm() == 0.0);
          CHECK((f.bracket_fd(i, j, x) + f.bracket_fd(j, i, x)).norm() <= 1e-8);
          CHECK((f.bracket(i, j, x) - f.bracket_fd(i, j, x)).norm() <= 1e-6);
        }
      }
    }
  }
}

TEST_CASE("Jacobi identity for step-2 built-ins") {
  std::mt19937_64 g(11);
  for (const char* name : {"heisenberg1", "rototranslation"}) {
    const Frame f = builtin_frame(name);
    auto field = [&f](int i) { return [&f, i](const Vec& x) { return f.field(i, x); }; };
    auto br = [&](int i, int j) { return [&f, i, j](const Vec& x) { return f.bracket(i, j, x); }; };
    double worst = 0.0;
    for (int s = 0; s < 100; ++s) {
      const Vec x = random_point(g, f.n, -1.0, 1.0);
      const Vec r = fd_bracket(field(0), br(1, 2), x) + fd_bracket(field(1), br(2, 0), x) +
                    fd_bracket(field(2), br(0, 1), x);
      worst = std::max(worst, r.norm());
    }
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("rank of [X1 | X2 | [X1,X2]]") {
  std::mt19937_64 g(3);
  const Frame h = builtin_frame("heisenberg1");
  const Frame r = builtin_frame("rototranslation");
  for (int s = 0; s < 50; ++s) {
    const Vec x = random_point(g, 3, -1.5, 1.5);
    Eigen::Matrix3d M;
    M << h.field(0, x), h.field(1, x), h.bracket(0, 1, x);
    CHECK(std::abs(M.determinant()) == doctest::Approx(2.0).epsilon(1e-14));
    // the rototranslation frame is orthonormal, so its determinant is 1
    M << r.field(0, x), r.field(1, x), r.bracket(0, 1, x);
    CHECK(std::abs(M.determinant()) == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("eps-weighted heisenberg frame") {
  const Frame f = builtin_frame("heisenberg1");
  const EpsFrame one(f, 1.0);
  CHECK(one.count() == 4);
  CHECK(one.eps_degree(0) == 1);
  CHECK(one.eps_degree(1) == 1);
  CHECK(one.eps_degree(2) == 1);
  CHECK(one.eps_degree(3) == 2);
  const Vec x = vec({0.4, -0.3, 0.2});
  CHECK((one.field(2, x) - one.field(3, x)).norm() == 0.0);

  const EpsFrame half(f, 0.5);
  CHECK((half.field(2, x) - vec({0, 0, 1})).norm() == 0.0);
  CHECK(half.q() == 3);

  const EpsFrame zero(f, 0.0);
  CHECK(zero.field(2, x).norm() == 0.0);
  CHECK(zero.q() == 2);
  CHECK(zero.is_horizontal_only());

  CHECK_ERROR_KIND(EpsFrame(f, -0.1), InvalidParameter);
}

TEST_CASE("weighted coefficients grow with eps") {
  std::mt19937_64 g(5);
  for (const char* name : {"heisenberg1", "rototranslation", "example32"}) {
    const Frame f = builtin_frame(name);
    const std::vector<double> eps{0.0, 0.05, 0.3, 0.7, 1.0};
    for (int s = 0; s < 10; ++s) {
      const Vec x = random_point(g, f.n, -1.0, 1.0);
      for (std::size_t k = 0; k + 1 < eps.size(); ++k) {
        FieldMatrix a, b;
        EpsFrame(f, eps[k]).fields(x, a);
        EpsFrame(f, eps[k + 1]).fields(x, b);
        CHECK((a.array().abs() <= b.array().abs()).all());
      }
    }
  }
}

TEST_CASE("horizontal gradient on the heisenberg frame") {
  const Lattice lat = Lattice::cube(3, -1, 1, 21);
  std::vector<double> x1(lat.size()), x3(lat.size()), c(lat.size(), 3.5);
  for (std::size_t z = 0; z < lat.size(); ++z) x1[z] = lat.coord(z, 0), x3[z] = lat.coord(z, 2);
  const std::size_t origin = lat.nearest(Vec::Zero(3));
  const Vec ab = vec({0.3, -0.4, 0.2});
  const std::size_t node = lat.nearest(ab);
  for (double eps : {0.0, 0.3, 1.0}) {
    const EpsFrame ef(builtin_frame("heisenberg1"), eps);
    const Control g1 = horizontal_gradient(ef, lat, x1, origin);
    CHECK(g1[0] == doctest::Approx(1.0));
    CHECK(g1[1] == doctest::Approx(0.0));
    CHECK(g1[2] == doctest::Approx(0.0));
    const Control g3 = horizontal_gradient(ef, lat, x3, node);
    CHECK(g3[0] == doctest::Approx(-ab[1]));
    CHECK(g3[1] == doctest::Approx(ab[0]));
    CHECK(g3[2] == doctest::Approx(2 * eps));
    CHECK(horizontal_gradient(ef, lat, c, node).norm() == 0.0);
  }
  const EpsFrame ef(builtin_frame("heisenberg1"), 1.0);
  CHECK_ERROR_KIND(horizontal_gradient(ef, lat, x1, 0), OutOfDomain);
}

TEST_CASE("frame file with generated brackets") {
  const Frame f = parse_frame(
      "name = h1copy\n"
      "dim = 3\n"
      "[generators]\n"
      "X1 = 1, 0, -x2\n"
      "X2 = 0, 1, x1\n");
  CHECK(f.n == 3);
  CHECK(f.m == 2);
  CHECK(f.p == 3);
  const Vec x = vec({0.2, 0.5, -0.1});
  CHECK((f.bracket(0, 1, x) - vec({0, 0, 2})).norm() < 1e-12);
}

TEST_CASE("frame file errors carry positions") {
  try {
    parse_frame("dim = 2\n[generators]\nX1 = 1, sin(\n");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ParseError);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}
