#include "lipdp/accountant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "lipdp/quadrature.hpp"

namespace lipdp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_integer(double a) { return a == std::floor(a); }

double log_binomial(double n, double j) {
  return std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0);
}

// log((1-q) + q * exp(w)) without overflow for large |w|.
double log_mixture_ratio(double q, double w) {
  if (w >= 0.0) return w + std::log(q + (1.0 - q) * std::exp(-w));
  return std::log1p(q * std::expm1(w));
}

double integer_order_rdp(double q, double sigma, double alpha) {
  const double s2 = sigma * sigma;
  const long long a = static_cast<long long>(alpha);
  std::vector<double> log_terms;
  log_terms.reserve(static_cast<std::size_t>(a) + 1);
  for (long long j = 0; j <= a; ++j) {
    const double dj = static_cast<double>(j);
    log_terms.push_back(log_binomial(alpha, dj) +
                        (alpha - dj) * std::log1p(-q) + dj * std::log(q) +
                        dj * (dj - 1.0) / (2.0 * s2));
  }
  const double m = *std::max_element(log_terms.begin(), log_terms.end());
  double total = 0.0;
  for (double t : log_terms) total += std::exp(t - m);
  return (m + std::log(total)) / (alpha - 1.0);
}

// E_{z ~ N(0, sigma^2)} [((1-q) + q exp((2z-1)/(2 sigma^2)))^alpha],
// evaluated in shifted log space. The integrand is a pair of Gaussian
// humps of width sigma centered near 0 and alpha, so a window of
// +-16 sigma around both carries all mass to well below tolerance.
double fractional_order_rdp(double q, double sigma, double alpha) {
  const double s2 = sigma * sigma;
  const auto log_integrand = [&](double z) {
    return -z * z / (2.0 * s2) +
           alpha * log_mixture_ratio(q, (2.0 * z - 1.0) / (2.0 * s2));
  };
  const double lo = -16.0 * sigma;
  const double hi = alpha + 16.0 * sigma;
  double peak = log_integrand(0.0);
  const int scan = 512;
  for (int i = 0; i <= scan; ++i) {
    const double z = lo + (hi - lo) * i / scan;
    peak = std::max(peak, log_integrand(z));
  }
  const double shift = peak;
  const double integral = integrate(
      [&](double z) { return std::exp(log_integrand(z) - shift); }, lo, hi,
      1e-10 * std::max(sigma, 1e-3), 60);
  const double log_expectation =
      shift + std::log(integral) - std::log(sigma * std::sqrt(2.0 * M_PI));
  return log_expectation / (alpha - 1.0);
}

}  // namespace

std::vector<double> default_rdp_orders() {
  std::vector<double> orders = {1.25, 1.5};
  for (int a = 2; a <= 64; ++a) orders.push_back(static_cast<double>(a));
  return orders;
}

double gaussian_sigma_for(double epsilon, double delta, double sensitivity) {
  if (!(epsilon > 0.0))
    throw std::invalid_argument("gaussian_sigma_for: epsilon must be > 0");
  if (!(delta > 0.0) || !(delta < 1.0))
    throw std::invalid_argument("gaussian_sigma_for: delta must be in (0,1)");
  if (!(sensitivity >= 0.0))
    throw std::invalid_argument("gaussian_sigma_for: sensitivity must be >= 0");
  return sensitivity * std::sqrt(2.0 * std::log(1.25 / delta)) / epsilon;
}

double rdp_step(double q, double sigma, double alpha) {
  if (!(q > 0.0) || q > 1.0)
    throw std::invalid_argument("rdp_step: q must be in (0,1]");
  if (!(sigma >= 0.0))
    throw std::invalid_argument("rdp_step: sigma must be >= 0");
  if (!(alpha > 1.0))
    throw std::invalid_argument("rdp_step: alpha must be > 1");
  if (sigma == 0.0) return kInf;
  // Full-batch release is the plain Gaussian mechanism whose Renyi
  // divergence is exactly alpha / (2 sigma^2) at every order.
  if (q == 1.0) return alpha / (2.0 * sigma * sigma);
  if (is_integer(alpha)) return integer_order_rdp(q, sigma, alpha);
  return fractional_order_rdp(q, sigma, alpha);
}

RdpLedger::RdpLedger(double q, double sigma, std::vector<double> orders)
    : q_(q), sigma_(sigma), orders_(std::move(orders)) {
  if (orders_.empty())
    throw std::invalid_argument("RdpLedger: order grid is empty");
  per_step_.reserve(orders_.size());
  for (double a : orders_) per_step_.push_back(rdp_step(q_, sigma_, a));
}

void RdpLedger::add_steps(long long count) {
  if (count < 0) throw std::invalid_argument("RdpLedger: negative step count");
  steps_ += count;
}

std::vector<double> RdpLedger::eps_at_orders() const {
  std::vector<double> out(per_step_.size());
  for (std::size_t i = 0; i < per_step_.size(); ++i)
    out[i] = static_cast<double>(steps_) * per_step_[i];
  return out;
}

PrivacySpend RdpLedger::to_epsilon_delta(double delta) const {
  if (!(delta > 0.0) || !(delta < 1.0))
    throw std::invalid_argument("to_epsilon_delta: delta must be in (0,1)");
  PrivacySpend spend;
  spend.delta = delta;
  if (steps_ == 0) {
    // Nothing was released, so the spend is zero regardless of the grid.
    spend.epsilon = 0.0;
    spend.argmin_order = orders_.back();
    return spend;
  }
  const double log_inv_delta = std::log(1.0 / delta);
  double best = kInf;
  double best_order = orders_.front();
  const auto totals = eps_at_orders();
  for (std::size_t i = 0; i < orders_.size(); ++i) {
    const double candidate = totals[i] + log_inv_delta / (orders_[i] - 1.0);
    if (candidate < best) {
      best = candidate;
      best_order = orders_[i];
    }
  }
  spend.epsilon = best;
  spend.argmin_order = best_order;
  return spend;
}

std::string RdpLedger::to_json(double delta) const {
  const PrivacySpend spend = to_epsilon_delta(delta);
  nlohmann::json j;
  j["q"] = q_;
  j["sigma"] = sigma_;
  j["steps"] = steps_;
  j["orders"] = orders_;
  auto encode = [](double v) -> nlohmann::json {
    if (std::isinf(v)) return "inf";
    return v;
  };
  nlohmann::json eps = nlohmann::json::array();
  for (double v : eps_at_orders()) eps.push_back(encode(v));
  j["eps_at_order"] = eps;
  j["epsilon"] = encode(spend.epsilon);
  j["delta"] = delta;
  j["argmin_order"] = spend.argmin_order;
  return j.dump(2);
}

RdpLedger RdpLedger::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  RdpLedger ledger(j.at("q").get<double>(), j.at("sigma").get<double>(),
                   j.at("orders").get<std::vector<double>>());
  ledger.add_steps(j.at("steps").get<long long>());
  return ledger;
}

}  // namespace lipdp
