#include "cclab/frames.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "cclab/config.hpp"
#include "cclab/expr.hpp"

namespace cclab {

namespace {
constexpr double kPi = std::numbers::pi;

std::vector<Axis> cube_domain(int n, double half) {
  return std::vector<Axis>(static_cast<std::size_t>(n), Axis{-half, half, 3, false});
}
}  // namespace

// ---------------------------------------------------------------------------
// Frame

void Frame::fields(const Vec& x, FieldMatrix& out) const {
  out.resize(n, p);
  for (const auto& a : domain)
    if (a.periodic) {
      eval(wrap(x), out);
      return;
    }
  eval(x, out);
}

Vec Frame::field(int i, const Vec& x) const {
  FieldMatrix f;
  fields(x, f);
  return f.col(i);
}

Jacobian Frame::field_jacobian(int i, const Vec& x) const {
  Jacobian J(n, n);
  if (jacobian) {
    J.setZero();
    jacobian(wrap(x), i, J);
    return J;
  }
  const double h = 1e-5 * diameter();
  for (int b = 0; b < n; ++b) {
    Vec xp = x, xm = x;
    xp[b] += h;
    xm[b] -= h;
    J.col(b) = (field(i, xp) - field(i, xm)) / (2.0 * h);
  }
  return J;
}

Vec Frame::bracket(int i, int j, const Vec& x) const {
  if (i < 0 || j < 0 || i >= p || j >= p)
    fail(ErrorKind::InvalidParameter, "bracket index out of range");
  if (!in_domain(x)) fail(ErrorKind::OutOfDomain, "bracket point " + format_point(x) + " outside " + name + " domain");
  if (i == j) return Vec::Zero(n);
  if (!jacobian) return bracket_fd(i, j, x);
  const Vec yi = field(i, x), yj = field(j, x);
  const Vec r = field_jacobian(j, x) * yi - field_jacobian(i, x) * yj;
  return r;
}

Vec Frame::bracket_fd(int i, int j, const Vec& x) const {
  if (i == j) return Vec::Zero(n);
  const double h = 1e-5 * diameter();
  const Vec yi = field(i, x), yj = field(j, x);
  // Directional derivative of Y_j along Y_i minus that of Y_i along Y_j;
  // written symmetrically so that swapping i and j flips the sign exactly.
  const Vec a = (field(j, x + h * yi) - field(j, x - h * yi)) / (2.0 * h);
  const Vec b = (field(i, x + h * yj) - field(i, x - h * yj)) / (2.0 * h);
  return a - b;
}

double Frame::diameter() const {
  double s = 0.0;
  for (const auto& a : domain) s += (a.hi - a.lo) * (a.hi - a.lo);
  return std::sqrt(s);
}

bool Frame::in_domain(const Vec& x) const {
  if (x.size() != n) return false;
  for (int k = 0; k < n; ++k) {
    const auto& a = domain[static_cast<std::size_t>(k)];
    if (a.periodic) continue;
    const double tol = 1e-12 * (a.hi - a.lo);
    if (!(x[k] >= a.lo - tol && x[k] <= a.hi + tol)) return false;
  }
  return true;
}

Vec Frame::wrap(const Vec& x) const {
  Vec y = x;
  for (int k = 0; k < n && k < static_cast<int>(domain.size()); ++k) {
    const auto& a = domain[static_cast<std::size_t>(k)];
    if (!a.periodic) continue;
    double t = std::fmod(y[k] - a.lo, 2.0 * kPi);
    if (t < 0) t += 2.0 * kPi;
    y[k] = a.lo + t;
  }
  return y;
}

Lattice Frame::lattice(int nodes_per_axis) const {
  std::vector<Axis> axes = domain;
  for (auto& a : axes) a.nodes = nodes_per_axis;
  return Lattice(axes);
}

double Frame::rank_margin(const Vec& x) const {
  FieldMatrix f;
  fields(x, f);
  const Eigen::MatrixXd fm = f;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(fm);
  const auto& s = svd.singularValues();
  if (s.size() < n || s[0] == 0.0) return 0.0;
  return s[n - 1] / s[0];
}

void Frame::validate() const {
  if (n < 1 || n > kMaxDim) fail(ErrorKind::UnsupportedFrame, name + ": dimension must be 1..6");
  if (m < 1 || m > p) fail(ErrorKind::UnsupportedFrame, name + ": need 1 <= m <= p");
  if (2 * p - m > kMaxFields) fail(ErrorKind::UnsupportedFrame, name + ": too many fields");
  if (static_cast<int>(degree.size()) != p) fail(ErrorKind::UnsupportedFrame, name + ": degree table size");
  if (static_cast<int>(domain.size()) != n) fail(ErrorKind::UnsupportedFrame, name + ": domain size");
  for (int i = 0; i < m; ++i)
    if (degree[static_cast<std::size_t>(i)] != 1)
      fail(ErrorKind::UnsupportedFrame, name + ": horizontal fields must have degree 1");
  for (const auto& a : domain)
    if (a.periodic && std::abs(a.hi - a.lo - 2.0 * kPi) > 1e-12)
      fail(ErrorKind::UnsupportedFrame, name + ": periodic axes must span 2 pi");
}

// ---------------------------------------------------------------------------
// Built-ins

namespace {

Frame heisenberg1() {
  Frame f;
  f.name = "heisenberg1";
  f.n = 3, f.m = 2, f.p = 3, f.step = 2;
  f.degree = {1, 1, 2};
  f.domain = cube_domain(3, 2.0);
  f.eval = [](const Vec& x, FieldMatrix& o) {
    o << 1.0, 0.0, 0.0,  //
        0.0, 1.0, 0.0,   //
        -x[1], x[0], 2.0;
  };
  f.jacobian = [](const Vec&, int i, Jacobian& J) {
    if (i == 0) J(2, 1) = -1.0;
    if (i == 1) J(2, 0) = 1.0;
  };
  return f;
}

Frame rototranslation() {
  Frame f;
  f.name = "rototranslation";
  f.n = 3, f.m = 2, f.p = 3, f.step = 2;
  f.degree = {1, 1, 2};
  f.domain = {Axis{-2.0, 2.0, 3, false}, Axis{-2.0, 2.0, 3, false}, Axis{-kPi, kPi, 3, true}};
  f.eval = [](const Vec& x, FieldMatrix& o) {
    const double c = std::cos(x[2]), s = std::sin(x[2]);
    o << c, 0.0, s,  //
        s, 0.0, -c,  //
        0.0, 1.0, 0.0;
  };
  f.jacobian = [](const Vec& x, int i, Jacobian& J) {
    const double c = std::cos(x[2]), s = std::sin(x[2]);
    if (i == 0) J(0, 2) = -s, J(1, 2) = c;
    if (i == 2) J(0, 2) = c, J(1, 2) = s;
  };
  return f;
}

Frame grushin() {
  Frame f;
  f.name = "grushin";
  f.n = 2, f.m = 2, f.p = 3, f.step = 2;
  f.degree = {1, 1, 2};
  f.domain = cube_domain(2, 2.0);
  f.hormander_smooth = false;
  // X2 = |x1| d2 is only Lipschitz; its bracket sign(x1) d2 is enumerated
  // as d2 so the span condition holds off the singular line as well.
  f.eval = [](const Vec& x, FieldMatrix& o) {
    o << 1.0, 0.0, 0.0,  //
        0.0, std::abs(x[0]), 1.0;
  };
  f.jacobian = [](const Vec& x, int i, Jacobian& J) {
    if (i == 1) J(1, 0) = x[0] > 0 ? 1.0 : (x[0] < 0 ? -1.0 : 0.0);
  };
  return f;
}

// Coordinates (x1, x2, x3, x4, theta): a rototranslation factor and a
// two-step factor whose third stratum repeats +-X1.
Frame example32() {
  Frame f;
  f.name = "example32";
  f.n = 5, f.m = 4, f.p = 9, f.step = 3;
  f.degree = {1, 1, 1, 1, 2, 2, 3, 3, 3};
  f.domain = {Axis{-2.0, 2.0, 3, false}, Axis{-2.0, 2.0, 3, false}, Axis{-2.0, 2.0, 3, false},
              Axis{-2.0, 2.0, 3, false}, Axis{-kPi, kPi, 3, true}};
  f.eval = [](const Vec& x, FieldMatrix& o) {
    const double c = std::cos(x[4]), s = std::sin(x[4]);
    o.setZero();
    o(0, 0) = c, o(1, 0) = s;              // X1
    o(4, 1) = 1.0;                         // X2 = d_theta
    o(2, 2) = 1.0;                         // X3 = d_x3
    o(3, 3) = x[2] * x[2];                 // X4 = x3^2 d_x4
    o(0, 4) = s, o(1, 4) = -c;             // [X1,X2]
    o(3, 5) = 2.0 * x[2];                  // [X3,X4]
    o(0, 6) = c, o(1, 6) = s;              // [X2,[X1,X2]] = X1
    o(0, 7) = -c, o(1, 7) = -s;            // [[X1,X2],X2] = -X1
    o(3, 8) = 2.0;                         // [X3,[X3,X4]]
  };
  f.jacobian = [](const Vec& x, int i, Jacobian& J) {
    const double c = std::cos(x[4]), s = std::sin(x[4]);
    switch (i) {
      case 0: case 6: J(0, 4) = -s, J(1, 4) = c; break;
      case 7: J(0, 4) = s, J(1, 4) = -c; break;
      case 3: J(3, 2) = 2.0 * x[2]; break;
      case 4: J(0, 4) = c, J(1, 4) = s; break;
      case 5: J(3, 2) = 2.0; break;
      default: break;
    }
  };
  return f;
}

Frame euclidean(int n) {
  if (n < 1 || n > kMaxDim) fail(ErrorKind::UnsupportedFrame, "euclidean dimension must be 1..6");
  Frame f;
  f.name = "euclidean" + std::to_string(n);
  f.n = n, f.m = n, f.p = n, f.step = 1;
  f.degree.assign(static_cast<std::size_t>(n), 1);
  f.domain = cube_domain(n, 2.0);
  f.eval = [](const Vec&, FieldMatrix& o) { o.setIdentity(); };
  f.jacobian = [](const Vec&, int, Jacobian&) {};
  return f;
}

}  // namespace

Frame builtin_frame(const std::string& name) {
  Frame f;
  if (name == "heisenberg1") f = heisenberg1();
  else if (name == "rototranslation") f = rototranslation();
  else if (name == "grushin") f = grushin();
  else if (name == "example32") f = example32();
  else if (name.rfind("euclidean", 0) == 0) {
    std::string digits = name.substr(9);
    if (!digits.empty() && digits.front() == '(' && digits.back() == ')')
      digits = digits.substr(1, digits.size() - 2);
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
      fail(ErrorKind::UnsupportedFrame, "unknown frame '" + name + "'");
    f = euclidean(std::stoi(digits));
  } else {
    fail(ErrorKind::UnsupportedFrame, "unknown frame '" + name + "'");
  }
  f.validate();
  return f;
}

std::vector<std::string> builtin_frame_names() {
  return {"heisenberg1", "rototranslation", "grushin", "example32", "euclidean<n>"};
}

// ---------------------------------------------------------------------------
// Frame files

namespace {

struct SymbolicField {
  std::vector<Expr> coeff;
  int degree = 1;
};

std::vector<Expr> parse_components(const IniEntry& e, int n) {
  std::vector<Expr> out;
  int col = e.value_column;
  std::size_t start = 0;
  const std::string& v = e.value;
  // Split on top-level commas only; expressions never contain commas.
  for (std::size_t i = 0; i <= v.size(); ++i) {
    if (i == v.size() || v[i] == ',') {
      out.push_back(Expr::parse(v.substr(start, i - start), n, e.line, col + static_cast<int>(start)));
      start = i + 1;
    }
  }
  if (static_cast<int>(out.size()) != n)
    parse_error_at(e.line, e.value_column,
                   "field '" + e.key + "' has " + std::to_string(out.size()) + " components, expected " +
                       std::to_string(n));
  return out;
}

std::vector<Expr> symbolic_bracket(const std::vector<Expr>& a, const std::vector<Expr>& b) {
  const auto n = a.size();
  std::vector<Expr> r(n);
  for (std::size_t l = 0; l < n; ++l) {
    Expr s = Expr::constant(0.0);
    for (std::size_t k = 0; k < n; ++k)
      s = s + a[k] * b[l].derivative(static_cast<int>(k)) - b[k] * a[l].derivative(static_cast<int>(k));
    r[l] = s;
  }
  return r;
}

bool all_zero(const std::vector<Expr>& v) {
  for (const auto& e : v)
    if (!e.is_zero()) return false;
  return true;
}

std::string signature(const std::vector<Expr>& v) {
  std::string s;
  for (const auto& e : v) s += e.str() + ";";
  return s;
}

}  // namespace

Frame parse_frame(const std::string& text) {
  const IniDocument doc = IniDocument::parse(text);
  const IniSection& top = doc.sections.front();
  auto need = [&](const char* key) -> const IniEntry& {
    const IniEntry* e = top.find(key);
    if (!e) parse_error_at(1, 1, std::string("frame file is missing '") + key + "'");
    return *e;
  };
  Frame f;
  f.name = top.find("name") ? top.find("name")->value : "custom";
  const IniEntry& dim_e = need("dim");
  const long long n = entry_int(dim_e);
  if (n < 1 || n > kMaxDim) parse_error_at(dim_e.line, dim_e.value_column, "dim must be 1..6");
  f.n = static_cast<int>(n);

  std::vector<bool> periodic(static_cast<std::size_t>(n), false);
  if (const IniEntry* pe = top.find("periodic")) {
    for (double v : entry_doubles(*pe)) {
      const int k = static_cast<int>(v);
      if (k < 1 || k > n) parse_error_at(pe->line, pe->value_column, "periodic axis out of range");
      periodic[static_cast<std::size_t>(k - 1)] = true;
    }
  }
  if (const IniEntry* de = top.find("domain")) {
    const auto parts = split_list(de->value);
    if (static_cast<long long>(parts.size()) != n)
      parse_error_at(de->line, de->value_column, "domain needs one lo:hi pair per axis");
    for (std::size_t k = 0; k < parts.size(); ++k) {
      const auto lh = split_list(parts[k], ':');
      if (lh.size() != 2) parse_error_at(de->line, de->value_column, "domain entry '" + parts[k] + "' is not lo:hi");
      Axis a;
      try {
        a.lo = std::stod(lh[0]);
        a.hi = std::stod(lh[1]);
      } catch (const std::exception&) {
        parse_error_at(de->line, de->value_column, "domain entry '" + parts[k] + "' is not numeric");
      }
      a.periodic = periodic[k];
      if (a.periodic) {
        if (std::abs(a.hi - a.lo - 2.0 * kPi) > 1e-6)
          parse_error_at(de->line, de->value_column, "periodic axis must span 2 pi");
        a.hi = a.lo + 2.0 * kPi;
      }
      if (!(a.hi > a.lo)) parse_error_at(de->line, de->value_column, "empty domain interval");
      f.domain.push_back(a);
    }
  } else {
    for (long long k = 0; k < n; ++k)
      f.domain.push_back(periodic[static_cast<std::size_t>(k)] ? Axis{-kPi, kPi, 3, true} : Axis{-2.0, 2.0, 3, false});
  }

  const IniSection* gens = doc.section("generators");
  if (!gens || gens->entries.empty()) parse_error_at(gens ? gens->line : 1, 1, "no [generators] given");
  std::vector<SymbolicField> fields;
  for (const auto& e : gens->entries) fields.push_back({parse_components(e, f.n), 1});
  f.m = static_cast<int>(fields.size());

  int step = 2;
  if (const IniEntry* se = top.find("step")) step = static_cast<int>(entry_int(*se));

  if (const IniSection* br = doc.section("brackets")) {
    for (const auto& e : br->entries) {
      const auto colon = e.value.find(':');
      if (colon == std::string::npos)
        parse_error_at(e.line, e.value_column, "bracket entries read 'degree: c1, ..., cn'");
      IniEntry body = e;
      body.value = e.value.substr(colon + 1);
      body.value_column = e.value_column + static_cast<int>(colon) + 1;
      IniEntry deg = e;
      deg.value = trim(e.value.substr(0, colon));
      const int d = static_cast<int>(entry_int(deg));
      if (d < 2) parse_error_at(e.line, e.value_column, "bracket degree must be at least 2");
      fields.push_back({parse_components(body, f.n), d});
    }
  } else {
    // Commutators in lexicographic (degree, horizontal index, field index)
    // order, skipping structurally zero and repeated entries.
    std::vector<std::string> seen;
    for (const auto& fl : fields) seen.push_back(signature(fl.coeff));
    for (int k = 2; k <= step; ++k) {
      const std::size_t count = fields.size();
      for (int i = 0; i < f.m; ++i) {
        for (std::size_t j = 0; j < count; ++j) {
          if (fields[j].degree != k - 1) continue;
          if (k == 2 && j <= static_cast<std::size_t>(i)) continue;  // antisymmetry
          auto b = symbolic_bracket(fields[static_cast<std::size_t>(i)].coeff, fields[j].coeff);
          if (all_zero(b)) continue;
          const std::string sig = signature(b);
          bool dup = false;
          for (const auto& s : seen) dup = dup || s == sig;
          if (dup) continue;
          seen.push_back(sig);
          fields.push_back({b, k});
        }
      }
    }
  }
  f.p = static_cast<int>(fields.size());
  f.step = 1;
  for (const auto& fl : fields) {
    f.degree.push_back(fl.degree);
    f.step = std::max(f.step, fl.degree);
  }

  std::vector<std::vector<std::vector<Expr>>> jac(fields.size());
  for (std::size_t i = 0; i < fields.size(); ++i) {
    jac[i].resize(static_cast<std::size_t>(f.n));
    for (int a = 0; a < f.n; ++a)
      for (int b = 0; b < f.n; ++b)
        jac[i][static_cast<std::size_t>(a)].push_back(fields[i].coeff[static_cast<std::size_t>(a)].derivative(b));
  }
  f.eval = [fields](const Vec& x, FieldMatrix& o) {
    for (std::size_t i = 0; i < fields.size(); ++i)
      for (std::size_t a = 0; a < fields[i].coeff.size(); ++a)
        o(static_cast<int>(a), static_cast<int>(i)) = fields[i].coeff[a].eval(x);
  };
  f.jacobian = [jac](const Vec& x, int i, Jacobian& J) {
    const auto& ji = jac[static_cast<std::size_t>(i)];
    for (std::size_t a = 0; a < ji.size(); ++a)
      for (std::size_t b = 0; b < ji[a].size(); ++b)
        J(static_cast<int>(a), static_cast<int>(b)) = ji[a][b].eval(x);
  };
  f.validate();
  return f;
}

Frame load_frame_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open frame file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_frame(ss.str());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ParseError) fail(ErrorKind::ParseError, path + ": " + e.what());
    throw;
  }
}

Frame resolve_frame(const std::string& name_or_path) {
  if (name_or_path.find('/') != std::string::npos || name_or_path.find(".frame") != std::string::npos)
    return load_frame_file(name_or_path);
  return builtin_frame(name_or_path);
}

// ---------------------------------------------------------------------------
// EpsFrame

EpsFrame::EpsFrame(Frame base, double eps) : base_(std::move(base)), eps_(eps) {
  if (!(eps >= 0.0) || !std::isfinite(eps)) fail(ErrorKind::InvalidParameter, "eps must be finite and >= 0");
  const int p = base_.p, m = base_.m;
  weight_.assign(static_cast<std::size_t>(2 * p - m), 1.0);
  for (int i = m; i < p; ++i) {
    const int d = base_.degree[static_cast<std::size_t>(i)];
    weight_[static_cast<std::size_t>(i)] = d == 1 ? 1.0 : std::pow(eps, d - 1);
  }
  for (int i = 0; i < p; ++i)
    if (weight_[static_cast<std::size_t>(i)] != 0.0) active_.push_back(i);
  active_prefix_ = true;
  for (std::size_t a = 0; a < active_.size(); ++a) active_prefix_ = active_prefix_ && active_[a] == static_cast<int>(a);
}

int EpsFrame::eps_degree(int i) const {
  if (i < base_.p) return 1;
  return base_.degree[static_cast<std::size_t>(i - base_.p + base_.m)];
}

void EpsFrame::fields(const Vec& x, FieldMatrix& out) const {
  FieldMatrix y;
  base_.fields(x, y);
  const int p = base_.p, m = base_.m;
  out.resize(base_.n, count());
  for (int i = 0; i < p; ++i) out.col(i) = weight_[static_cast<std::size_t>(i)] * y.col(i);
  for (int i = p; i < count(); ++i) out.col(i) = y.col(i - p + m);
}

Vec EpsFrame::field(int i, const Vec& x) const {
  FieldMatrix f;
  fields(x, f);
  return f.col(i);
}

void EpsFrame::active_fields(const Vec& x, FieldMatrix& out) const {
  if (active_prefix_) {
    base_.fields(x, out);
    for (int a = base_.m; a < q(); ++a) out.col(a) *= weight_[static_cast<std::size_t>(a)];
    out.conservativeResize(base_.n, q());
    return;
  }
  FieldMatrix y;
  base_.fields(x, y);
  out.resize(base_.n, q());
  for (int a = 0; a < q(); ++a) {
    const int i = active_[static_cast<std::size_t>(a)];
    out.col(a) = weight_[static_cast<std::size_t>(i)] * y.col(i);
  }
}

Jacobian EpsFrame::active_jacobian(int a, const Vec& x) const {
  const int i = active_[static_cast<std::size_t>(a)];
  return weight_[static_cast<std::size_t>(i)] * base_.field_jacobian(i, x);
}

void EpsFrame::first_p_fields(const Vec& x, FieldMatrix& out) const {
  base_.fields(x, out);
  for (int i = 0; i < base_.p; ++i) out.col(i) *= weight_[static_cast<std::size_t>(i)];
}

EpsFrame make_eps_frame(const Frame& frame, double eps) { return EpsFrame(frame, eps); }

// ---------------------------------------------------------------------------
// Discrete gradients

namespace {

bool gradient_at(const EpsFrame& ef, const Lattice& lat, const std::vector<double>& u, std::size_t node,
                 Control& g) {
  const int n = lat.dim();
  Vec du(n);
  for (int k = 0; k < n; ++k) {
    const std::size_t up = lat.shift(node, k, 1), dn = lat.shift(node, k, -1);
    if (up == Lattice::npos || dn == Lattice::npos) return false;
    du[k] = (u[up] - u[dn]) / (2.0 * lat.h(k));
  }
  FieldMatrix f;
  ef.first_p_fields(lat.point(node), f);
  g = f.transpose() * du;
  return true;
}

}  // namespace

Control horizontal_gradient(const EpsFrame& ef, const Lattice& lat, const std::vector<double>& u,
                            std::size_t node) {
  if (lat.dim() != ef.n()) fail(ErrorKind::InvalidParameter, "lattice and frame dimensions differ");
  if (node >= lat.size()) fail(ErrorKind::OutOfDomain, "node index outside lattice");
  Control g;
  if (!gradient_at(ef, lat, u, node, g))
    fail(ErrorKind::OutOfDomain, "gradient stencil leaves the lattice at " + format_point(lat.point(node)));
  return g;
}

std::vector<std::vector<double>> gradient_field(const EpsFrame& ef, const Lattice& lat,
                                                const std::vector<double>& u) {
  const int p = ef.base().p;
  std::vector<std::vector<double>> out(static_cast<std::size_t>(p),
                                       std::vector<double>(lat.size(), std::numeric_limits<double>::quiet_NaN()));
  parallel_for(lat.size(), [&](std::size_t node) {
    Control g;
    if (!gradient_at(ef, lat, u, node, g)) return;
    for (int i = 0; i < p; ++i) out[static_cast<std::size_t>(i)][node] = g[i];
  }, 1024);
  return out;
}

}  // namespace cclab
