#pragma once

// Quantum f-divergences through the joint spectrum of the relative modular
// operator, operator convex functions in integral form, relative entropy and
// power traces.

#include "chanrev/linalg.hpp"
#include "chanrev/state.hpp"

#include <functional>
#include <numbers>
#include <optional>
#include <string>

namespace chanrev {

struct SpectrumPair {
  double ratio = 0.0;
  double weight = 0.0;
};

/// Joint spectral data of Delta_{sigma,rho} paired with rho^1/2.
struct DivergenceSpectrum {
  std::vector<SpectrumPair> pairs;
  /// Tr rho (I - supp sigma): the weight sitting at ratio 0.
  double zero_block_weight = 0.0;

  double total_weight() const {
    double s = zero_block_weight;
    for (const auto& p : pairs) s += p.weight;
    return s;
  }
};

/// Pairs (a_i / b_j, b_j Tr P_i Q_j) over sigma = sum a_i P_i, rho = sum b_j Q_j
/// restricted to supp rho, with a_i > 0. Weights below atol are dropped.
inline DivergenceSpectrum relative_modular_spectrum(const DensityOperator& sigma, const DensityOperator& rho,
                                                    double atol = defaults::atol) {
  require(sigma.dim() == rho.dim(), ErrorKind::DimensionMismatch, "sigma and rho dimensions differ");
  require(support_contained(sigma, rho), ErrorKind::SupportViolation, "supp sigma is not contained in supp rho");
  const auto& s = sigma.spectral();
  const auto& r = rho.spectral();
  const double s_threshold = sigma.support().cutoff * std::max(s.eigenvalues.front(), 0.0);
  const double r_threshold = rho.support().cutoff * std::max(r.eigenvalues.front(), 0.0);
  DivergenceSpectrum out;
  for (std::size_t j = 0; j < r.size(); ++j) {
    const double b = r.eigenvalues[j];
    if (b <= r_threshold) continue;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double overlap = (s.eigenvectors[i].adjoint() * r.eigenvectors[j]).squaredNorm();
      const double w = b * overlap;
      if (w <= atol) continue;
      const double a = s.eigenvalues[i];
      if (a <= s_threshold)
        out.zero_block_weight += w;
      else
        out.pairs.push_back({a / b, w});
    }
  }
  return out;
}

/// Operator convex f in the form
/// f(x) = f0 + a x + b x^2 + sum_k w_k (x/(1+t_k) - x/(x+t_k)).
/// `continuous_measure` marks functions whose exact measure has infinite
/// support; the atoms are then a quadrature of it (possibly empty).
struct OperatorConvexFunction {
  std::string tag;
  double f0 = 0.0;
  double a = 0.0;
  double b = 0.0;
  std::vector<std::pair<double, double>> atoms;  // (t_k, w_k), t_k increasing
  bool continuous_measure = false;
  std::function<double(double)> closed_form;

  double operator()(double x) const;
};

inline double eval_operator_convex(const OperatorConvexFunction& f, double x) {
  require(x >= 0.0, ErrorKind::DomainError, "operator convex functions are evaluated on x >= 0");
  double v = f.f0 + f.a * x + f.b * x * x;
  for (auto [t, w] : f.atoms) v += w * (x / (1.0 + t) - x / (x + t));
  return v;
}

inline double OperatorConvexFunction::operator()(double x) const {
  return closed_form ? closed_form(x) : eval_operator_convex(*this, x);
}

inline void validate(const OperatorConvexFunction& f) {
  require(f.b >= 0.0, ErrorKind::InvalidArgument, "b must be >= 0");
  for (std::size_t k = 0; k < f.atoms.size(); ++k) {
    require(f.atoms[k].first > 0.0 && f.atoms[k].second >= 0.0, ErrorKind::InvalidArgument,
            "atoms need t > 0 and w >= 0");
    if (k > 0)
      require(f.atoms[k].first > f.atoms[k - 1].first, ErrorKind::InvalidArgument, "atoms must be increasing in t");
  }
}

/// Number of support points of the representing measure (infinite for continuous tags).
inline double measure_support_size(const OperatorConvexFunction& f) {
  if (f.continuous_measure) return kInfinity;
  double n = 0;
  for (auto [t, w] : f.atoms)
    if (w > 0) n += 1;
  return n;
}

/// |supp mu_f| >= dim_h^2 + dim_k^2.
inline bool support_cardinality_ok(const OperatorConvexFunction& f, Eigen::Index dim_h, Eigen::Index dim_k) {
  return measure_support_size(f) >= static_cast<double>(dim_h * dim_h + dim_k * dim_k);
}

namespace catalog {

/// x log x: f0 = a = b = 0, mu = Lebesgue measure on (0, inf).
inline OperatorConvexFunction xlogx() {
  OperatorConvexFunction f;
  f.tag = "xlogx";
  f.continuous_measure = true;
  f.closed_form = [](double x) { return x > 0 ? x * std::log(x) : 0.0; };
  return f;
}

/// (1 + x)^-1: f0 = 1, a = -1/2, single atom t = 1 with weight 1.
inline OperatorConvexFunction inv_one_plus() {
  OperatorConvexFunction f;
  f.tag = "inv_one_plus";
  f.f0 = 1.0;
  f.a = -0.5;
  f.atoms = {{1.0, 1.0}};
  f.closed_form = [](double x) { return 1.0 / (1.0 + x); };
  return f;
}

/// 1 - x^s for s in (0, 1): f0 = 1, a = -1, density (sin(s pi)/pi) t^(s-1).
/// With atoms > 0 the density is discretized by the trapezoid rule in log t;
/// the neglected tails are folded into f0, a and b.
inline OperatorConvexFunction one_minus_power(double s, int atoms = 0) {
  require(s > 0.0 && s < 1.0, ErrorKind::InvalidArgument, "one_minus_power needs s in (0, 1)");
  OperatorConvexFunction f;
  f.tag = "one_minus_power(" + std::to_string(s) + ")";
  f.f0 = 1.0;
  f.a = -1.0;
  f.continuous_measure = true;
  f.closed_form = [s](double x) { return 1.0 - (x > 0 ? std::pow(x, s) : 0.0); };
  if (atoms <= 0) return f;
  require(atoms >= 2, ErrorKind::InvalidArgument, "need at least two atoms");
  const double c = std::sin(s * std::numbers::pi) / std::numbers::pi;
  // Truncation where the neglected tail mass is ~1e-6.
  const double u_lo = std::log(1e-6 * s / c) / s;
  const double u_hi = -std::log(1e-6 * (2.0 - s) / c) / (2.0 - s);
  const double h = (u_hi - u_lo) / (atoms - 1);
  for (int k = 0; k < atoms; ++k) {
    const double u = u_lo + k * h;
    const double end = (k == 0 || k == atoms - 1) ? 0.5 : 1.0;
    f.atoms.emplace_back(std::exp(u), end * h * c * std::exp(s * u));
  }
  // Small t: the kernel tends to x - 1. Large t: it behaves like x(x-1)/t^2.
  const double low_mass = c * std::exp(s * u_lo) / s;
  f.f0 -= low_mass;
  f.a += low_mass;
  const double high_mass = c * std::exp((s - 2.0) * u_hi) / (2.0 - s);
  f.b += high_mass;
  f.a -= high_mass;
  f.continuous_measure = false;
  f.closed_form = nullptr;
  return f;
}

inline OperatorConvexFunction by_tag(const std::string& tag) {
  if (tag == "xlogx") return xlogx();
  if (tag == "inv_one_plus") return inv_one_plus();
  const std::string prefix = "one_minus_power(";
  if (tag.rfind(prefix, 0) == 0 && tag.back() == ')') {
    const std::string arg = tag.substr(prefix.size(), tag.size() - prefix.size() - 1);
    std::size_t used = 0;
    double s = 0.0;
    try {
      s = std::stod(arg, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used == arg.size() && used > 0, ErrorKind::InvalidArgument, "bad exponent in " + tag);
    return one_minus_power(s);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown operator convex function '" + tag + "'");
}

}  // namespace catalog

/// S_f(sigma, rho) = sum f(ratio) weight + f(0) zero_block_weight.
template <class F>
  requires std::invocable<F, double>
double f_divergence(F&& f, const DensityOperator& sigma, const DensityOperator& rho) {
  const DivergenceSpectrum spec = relative_modular_spectrum(sigma, rho);
  double total = 0.0;
  auto checked = [&](double x) {
    const double v = f(x);
    require(std::isfinite(v), ErrorKind::DomainError, "f undefined at ratio " + std::to_string(x));
    return v;
  };
  for (const auto& p : spec.pairs) total += checked(p.ratio) * p.weight;
  if (spec.zero_block_weight > 0.0) total += checked(0.0) * spec.zero_block_weight;
  return total;
}

inline double f_divergence(const OperatorConvexFunction& f, const DensityOperator& sigma,
                           const DensityOperator& rho) {
  return f_divergence([&f](double x) { return f(x); }, sigma, rho);
}

/// Tr sigma (log sigma - log rho); +inf when supp sigma is not inside supp rho.
inline double relative_entropy(const DensityOperator& sigma, const DensityOperator& rho) {
  require(sigma.dim() == rho.dim(), ErrorKind::DimensionMismatch, "sigma and rho dimensions differ");
  if (!support_contained(sigma, rho)) return kInfinity;
  const auto& sp = sigma.eigenpairs();
  const double threshold = sigma.support().cutoff * std::max(sp.values(sp.values.size() - 1), 0.0);
  double entropy_part = 0.0;
  for (Eigen::Index i = 0; i < sp.values.size(); ++i)
    if (sp.values(i) > threshold) entropy_part += sp.values(i) * std::log(sp.values(i));
  const double cross = (sigma.matrix() * rho.log()).trace().real();
  return entropy_part - cross;
}

/// Tr sigma^s rho^(1-s) with x^0 = supp x.
inline double power_trace(const DensityOperator& sigma, const DensityOperator& rho, double s) {
  require(s >= 0.0 && s <= 1.0, ErrorKind::InvalidArgument, "power_trace needs s in [0, 1]");
  require(sigma.dim() == rho.dim(), ErrorKind::DimensionMismatch, "sigma and rho dimensions differ");
  return (sigma.power(s) * rho.power(1.0 - s)).trace().real();
}

}  // namespace chanrev
